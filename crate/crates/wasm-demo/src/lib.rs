//! Browser bindings. Each export wraps a plain function that the native
//! tests exercise directly.

use merw_core::field::sample;
use merw_core::onsager::exact_uh;
use merw_core::tfim::tfim_joint;
use merw_core::{ContextShape, InteractionSpec, ModelParams, Representation, ScanModel, SolverOptions, TransferOperator};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest width offered in the page; dense w=12 needs 128 MiB.
pub const MAX_DEMO_WIDTH: usize = 12;

#[derive(Debug, Serialize)]
pub struct ModelSummary {
    pub width: usize,
    pub lambda: f64,
    pub u: f64,
    pub h: f64,
    pub mag: f64,
    pub u_exact: Option<f64>,
    pub h_exact: Option<f64>,
    pub before: usize,
    pub after: usize,
    /// `Pr(? = +1)` by context key.
    pub table: Vec<f64>,
}

fn derive(width: usize, j: f64, mu: f64, before: usize, after: usize) -> Result<(f64, ScanModel), String> {
    if !(1..=MAX_DEMO_WIDTH).contains(&width) {
        return Err(format!("width must be 1..={MAX_DEMO_WIDTH}"));
    }
    let params = ModelParams::ising(width, j).with_mu(mu);
    let op = TransferOperator::build(params, InteractionSpec::Ising, Representation::Implicit).map_err(|e| e.to_string())?;
    let sol = op.dominant_eigenpair(&SolverOptions::default()).map_err(|e| e.to_string())?;
    let m = ScanModel::derive(&op, &sol, ContextShape::new(before, after)).map_err(|e| e.to_string())?;
    Ok((sol.lambda, m))
}

pub fn scan_model_summary(width: usize, j: f64, mu: f64, before: usize, after: usize) -> Result<ModelSummary, String> {
    let (lambda, m) = derive(width, j, mu, before, after)?;
    let obs = m.observables(&InteractionSpec::Ising).map_err(|e| e.to_string())?;
    let exact = if mu == 0.0 && j >= 0.0 { exact_uh(j, 1.0).ok() } else { None };
    Ok(ModelSummary {
        width,
        lambda,
        u: obs.energy,
        h: obs.entropy,
        mag: obs.magnetization,
        u_exact: exact.as_ref().map(|e| e.u),
        h_exact: exact.as_ref().map(|e| e.h),
        before,
        after,
        table: m.table().to_vec(),
    })
}

/// Row-major 0/1 cells (1 = spin up).
pub fn sample_cells(width: usize, j: f64, mu: f64, rows: usize, cols: usize, seed: u64) -> Result<Vec<u8>, String> {
    if rows * cols > 1 << 20 {
        return Err("field limited to 2^20 cells".into());
    }
    let (_, m) = derive(width, j, mu, 3.min(width.div_ceil(2)), 3.min(width / 2))?;
    let f = sample(&m, &m.reduced_models(), rows, cols, seed).map_err(|e| e.to_string())?;
    Ok(f.cells.iter().map(|&s| u8::from(s > 0)).collect())
}

pub fn angle_joint(j: f64, h: f64, lat: usize) -> Result<Vec<f64>, String> {
    tfim_joint(j, h, lat).map(|d| d.probs).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn scan_model(width: usize, j: f64, mu: f64, before: usize, after: usize) -> Result<String, JsError> {
    let s = scan_model_summary(width, j, mu, before, after).map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&s).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn sample_field(width: usize, j: f64, mu: f64, rows: usize, cols: usize, seed: u32) -> Result<Vec<u8>, JsError> {
    sample_cells(width, j, mu, rows, cols, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = tfimJoint)]
pub fn tfim_joint_js(j: f64, h: f64, lat: usize) -> Result<Vec<f64>, JsError> {
    angle_joint(j, h, lat).map_err(|e| JsError::new(&e))
}
