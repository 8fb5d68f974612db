//! Coupling sweeps comparing scan-model observables with the exact values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::fmt17;
use crate::onsager::exact_uh;
use crate::operator::{Representation, SolverOptions, TransferOperator};
use crate::pattern::{InteractionSpec, ModelParams};
use crate::scan::{ContextShape, Observables, ScanModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub j_min: f64,
    pub j_max: f64,
    pub steps: usize,
    pub widths: Vec<usize>,
    pub before: usize,
    pub after: usize,
    pub cyclic: bool,
    pub beta: f64,
    /// `None` picks by width.
    #[serde(default)]
    pub representation: Option<Representation>,
}

impl SweepSpec {
    pub fn new(j_min: f64, j_max: f64, steps: usize, widths: Vec<usize>) -> Self {
        SweepSpec {
            j_min,
            j_max,
            steps,
            widths,
            before: 3,
            after: 3,
            cyclic: true,
            beta: 1.0,
            representation: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j_min < self.j_max) || !self.j_min.is_finite() || !self.j_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "need j_min < j_max, got {} and {}",
                self.j_min, self.j_max
            )));
        }
        if self.steps < 2 {
            return Err(Error::InvalidArgument("steps must be >= 2".into()));
        }
        if self.widths.is_empty() {
            return Err(Error::InvalidArgument("no widths given".into()));
        }
        Ok(())
    }

    /// `steps` evenly spaced values including both ends.
    pub fn couplings(&self) -> Vec<f64> {
        let h = (self.j_max - self.j_min) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.j_max } else { self.j_min + h * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub j: f64,
    pub width: usize,
    pub u_merw: f64,
    pub h_merw: f64,
    pub u_exact: f64,
    pub h_exact: f64,
    /// MERW minus exact.
    pub err_u: f64,
    pub err_h: f64,
    /// "ok" or the failure message.
    pub status: String,
}

/// Observables of the scan model for one parameter set.
pub fn scan_observables(
    params: ModelParams,
    shape: ContextShape,
    representation: Representation,
) -> Result<Observables> {
    let op = TransferOperator::build(params, InteractionSpec::Ising, representation)?;
    let sol = op.dominant_eigenpair(&SolverOptions::default())?;
    ScanModel::derive(&op, &sol, shape)?.observables(&InteractionSpec::Ising)
}

fn evaluate(spec: &SweepSpec, j: f64, width: usize) -> SweepRow {
    let params = ModelParams::ising(width, j)
        .with_beta(spec.beta)
        .with_cyclic(spec.cyclic);
    let repr = spec
        .representation
        .unwrap_or_else(|| Representation::default_for_width(width));
    let shape = ContextShape::new(spec.before, spec.after);
    let nan = f64::NAN;
    let mut row = SweepRow {
        j,
        width,
        u_merw: nan,
        h_merw: nan,
        u_exact: nan,
        h_exact: nan,
        err_u: nan,
        err_h: nan,
        status: "ok".into(),
    };
    match exact_uh(j.abs(), spec.beta) {
        Ok(e) if j >= 0.0 => {
            row.u_exact = e.u;
            row.h_exact = e.h;
        }
        Ok(_) => {}
        Err(e) => row.status = e.to_string(),
    }
    match scan_observables(params, shape, repr) {
        Ok(obs) => {
            row.u_merw = obs.energy;
            row.h_merw = obs.entropy;
            row.err_u = row.u_merw - row.u_exact;
            row.err_h = row.h_merw - row.h_exact;
        }
        Err(e) => row.status = e.to_string(),
    }
    row
}

/// Rows ordered by J then width; failures are recorded per row.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let jobs: Vec<(f64, usize)> = spec
        .couplings()
        .into_iter()
        .flat_map(|j| spec.widths.iter().map(move |&w| (j, w)))
        .collect();
    Ok(jobs.par_iter().map(|&(j, w)| evaluate(spec, j, w)).collect())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("J,width,U_merw,H_merw,U_exact,H_exact,err_U,err_H,status\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt17(r.j),
            r.width,
            fmt17(r.u_merw),
            fmt17(r.h_merw),
            fmt17(r.u_exact),
            fmt17(r.h_exact),
            fmt17(r.err_u),
            fmt17(r.err_h),
            r.status.replace([',', '\n'], ";")
        ));
    }
    s
}

/// Row with the largest `|err_H|` among successful rows of one width.
pub fn max_entropy_error(rows: &[SweepRow], width: usize) -> Option<&SweepRow> {
    rows.iter()
        .filter(|r| r.width == width && r.err_h.is_finite())
        .max_by(|a, b| a.err_h.abs().total_cmp(&b.err_h.abs()))
}
