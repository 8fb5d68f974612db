//! Boltzmann ensembles over sequences of layer states,
//! `Pr(g) ~ psiL[g1] M1[g1,g2] ... psiR[gl]`, with layer-dependent matrices
//! assembled from gates.

use serde::{Deserialize, Serialize};

use super::gate::{GateSpec, Placement};
use crate::error::{Error, Result};

/// Layer states are capped at this many wires.
pub const MAX_LAYER_WIDTH: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    In(usize),
    Out(usize),
}

/// One transition: every wire of both layers is touched by exactly one gate.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    in_width: usize,
    out_width: usize,
    placements: Vec<Placement>,
}

fn check_cover(wires: impl Iterator<Item = usize>, width: usize, side: &str) -> Result<()> {
    let mut seen = vec![false; width];
    for w in wires {
        if w >= width || seen[w] {
            return Err(Error::InvalidCircuit(format!("{side} wire {w} used twice or out of range")));
        }
        seen[w] = true;
    }
    if let Some(w) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidCircuit(format!("{side} wire {w} is not connected")));
    }
    Ok(())
}

impl Layer {
    pub fn new(in_width: usize, out_width: usize, placements: Vec<Placement>) -> Result<Self> {
        if in_width > MAX_LAYER_WIDTH || out_width > MAX_LAYER_WIDTH {
            return Err(Error::InvalidCircuit(format!(
                "layer width above {MAX_LAYER_WIDTH} wires"
            )));
        }
        check_cover(placements.iter().flat_map(|p| p.inputs.iter().copied()), in_width, "input")?;
        check_cover(placements.iter().flat_map(|p| p.outputs.iter().copied()), out_width, "output")?;
        Ok(Layer {
            in_width,
            out_width,
            placements,
        })
    }

    /// Infers the next layer width from the highest output wire.
    pub fn from_specs(in_width: usize, specs: &[GateSpec]) -> Result<Self> {
        let placements = specs.iter().map(GateSpec::to_placement).collect::<Result<Vec<_>>>()?;
        let out_width = placements
            .iter()
            .flat_map(|p| p.outputs.iter())
            .max()
            .map_or(0, |m| m + 1);
        Layer::new(in_width, out_width, placements)
    }

    pub fn in_width(&self) -> usize {
        self.in_width
    }

    pub fn out_width(&self) -> usize {
        self.out_width
    }

    /// `M[u, v]` as the product of gate entries.
    pub fn entry(&self, u: usize, v: usize) -> f64 {
        let gather = |state: usize, width: usize, wires: &[usize]| {
            wires
                .iter()
                .fold(0usize, |acc, &w| (acc << 1) | ((state >> (width - 1 - w)) & 1))
        };
        self.placements
            .iter()
            .map(|p| {
                p.gate.entry(
                    gather(u, self.in_width, &p.inputs),
                    gather(v, self.out_width, &p.outputs),
                )
            })
            .product()
    }

    /// `y_v = sum_u x_u M[u, v]`, contracting one gate at a time.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let gates: Vec<(&[usize], &[usize], _)> = self
            .placements
            .iter()
            .map(|p| (p.inputs.as_slice(), p.outputs.as_slice(), |i, o| p.gate.entry(i, o)))
            .collect();
        contract(x, self.in_width, self.out_width, &gates)
    }

    /// `y_u = sum_v M[u, v] x_v`.
    pub fn backward(&self, x: &[f64]) -> Vec<f64> {
        let gates: Vec<(&[usize], &[usize], _)> = self
            .placements
            .iter()
            .map(|p| (p.outputs.as_slice(), p.inputs.as_slice(), |o, i| p.gate.entry(i, o)))
            .collect();
        contract(x, self.out_width, self.in_width, &gates)
    }
}

fn contract<F: Fn(usize, usize) -> f64>(
    x: &[f64],
    in_width: usize,
    out_width: usize,
    gates: &[(&[usize], &[usize], F)],
) -> Vec<f64> {
    let mut slots: Vec<Slot> = (0..in_width).map(Slot::In).collect();
    let mut cur = x.to_vec();
    for (inputs, outputs, g) in gates {
        let n = slots.len();
        let pos: Vec<usize> = inputs
            .iter()
            .map(|&w| slots.iter().position(|&s| s == Slot::In(w)).expect("validated wire"))
            .collect();
        let rest: Vec<usize> = (0..n).filter(|k| !pos.contains(k)).collect();
        let no = outputs.len();
        let mut next = vec![0.0; 1 << (rest.len() + no)];
        for (idx, &val) in cur.iter().enumerate() {
            if val == 0.0 {
                continue;
            }
            let bit = |k: usize| (idx >> (n - 1 - k)) & 1;
            let gin = pos.iter().fold(0, |a, &k| (a << 1) | bit(k));
            let base = rest.iter().fold(0, |a, &k| (a << 1) | bit(k)) << no;
            for o in 0..1usize << no {
                let w = g(gin, o);
                if w != 0.0 {
                    next[base | o] += val * w;
                }
            }
        }
        slots = rest.iter().map(|&k| slots[k]).chain(outputs.iter().map(|&w| Slot::Out(w))).collect();
        cur = next;
    }
    // reorder slots into canonical output order
    let n = slots.len();
    debug_assert_eq!(n, out_width);
    let order: Vec<usize> = slots
        .iter()
        .map(|s| match s {
            Slot::Out(w) => *w,
            Slot::In(_) => unreachable!("all inputs consumed"),
        })
        .collect();
    let mut out = vec![0.0; 1 << out_width];
    for (idx, &val) in cur.iter().enumerate() {
        let v = (0..n).fold(0usize, |a, k| a | (((idx >> (n - 1 - k)) & 1) << (out_width - 1 - order[k])));
        out[v] = val;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayeredEnsemble {
    psi_l: Vec<f64>,
    psi_r: Vec<f64>,
    layers: Vec<Layer>,
}

fn check_boundary(psi: Vec<f64>, width: usize, side: &str) -> Result<Vec<f64>> {
    if psi.len() != 1 << width {
        return Err(Error::InvalidCircuit(format!(
            "{side} has {} entries, layer needs {}",
            psi.len(),
            1usize << width
        )));
    }
    if psi.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::InvalidCircuit(format!("{side} entries must be finite and >= 0")));
    }
    let norm = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::EmptyEnsemble);
    }
    Ok(psi.into_iter().map(|x| x / norm).collect())
}

impl LayeredEnsemble {
    /// Boundary amplitudes are rescaled to unit sum of squares.
    pub fn new(psi_l: Vec<f64>, layers: Vec<Layer>, psi_r: Vec<f64>) -> Result<Self> {
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_width != pair[1].in_width {
                return Err(Error::InvalidCircuit(format!(
                    "layer {i} outputs {} wires but layer {} takes {}",
                    pair[0].out_width,
                    i + 1,
                    pair[1].in_width
                )));
            }
        }
        let first = psi_l.len().trailing_zeros() as usize;
        let w0 = layers.first().map_or(first, |l| l.in_width);
        let wl = layers.last().map_or(w0, |l| l.out_width);
        Ok(LayeredEnsemble {
            psi_l: check_boundary(psi_l, w0, "psiL")?,
            psi_r: check_boundary(psi_r, wl, "psiR")?,
            layers,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn psi_l(&self) -> &[f64] {
        &self.psi_l
    }

    pub fn psi_r(&self) -> &[f64] {
        &self.psi_r
    }

    /// Wire count of every state layer, boundaries included.
    pub fn widths(&self) -> Vec<usize> {
        let w0 = self.psi_l.len().trailing_zeros() as usize;
        std::iter::once(w0).chain(self.layers.iter().map(|l| l.out_width)).collect()
    }

    /// Unnormalized weight of one state sequence.
    pub fn sequence_weight(&self, states: &[usize]) -> f64 {
        assert_eq!(states.len(), self.layers.len() + 1);
        let inner: f64 = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| l.entry(states[i], states[i + 1]))
            .product();
        self.psi_l[states[0]] * inner * self.psi_r[*states.last().unwrap()]
    }
}

/// Exact per-layer marginals and the log of the total weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMarginals {
    pub layers: Vec<Vec<f64>>,
    pub log_weight: f64,
}

fn normalize(v: &mut [f64]) -> Result<f64> {
    let s: f64 = v.iter().sum();
    if !(s > 0.0) {
        return Err(Error::EmptyEnsemble);
    }
    v.iter_mut().for_each(|x| *x /= s);
    Ok(s.ln())
}

/// Forward-backward with per-layer renormalization.
pub fn ensemble_distribution(e: &LayeredEnsemble) -> Result<EnsembleMarginals> {
    let n = e.layers.len();
    let mut alpha = vec![e.psi_l.clone()];
    let mut log_scale = normalize(&mut alpha[0])?;
    for layer in &e.layers {
        let mut next = layer.forward(alpha.last().unwrap());
        log_scale += normalize(&mut next)?;
        alpha.push(next);
    }
    let mut beta = vec![Vec::new(); n + 1];
    beta[n] = e.psi_r.clone();
    normalize(&mut beta[n])?;
    for i in (0..n).rev() {
        let mut prev = e.layers[i].backward(&beta[i + 1]);
        normalize(&mut prev)?;
        beta[i] = prev;
    }
    let closing: f64 = alpha[n].iter().zip(&e.psi_r).map(|(a, b)| a * b).sum();
    if !(closing > 0.0) {
        return Err(Error::EmptyEnsemble);
    }
    let mut layers = Vec::with_capacity(n + 1);
    for (a, b) in alpha.iter().zip(&beta) {
        let mut m: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        normalize(&mut m)?;
        layers.push(m);
    }
    Ok(EnsembleMarginals {
        layers,
        log_weight: log_scale + closing.ln(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub gates: Vec<GateSpec>,
}

/// Circuit JSON. Missing boundaries default to uniform amplitudes. With no
/// layers, `psiL` fixes the single layer's width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub layers: Vec<LayerSpec>,
    #[serde(rename = "psiL", default, skip_serializing_if = "Option::is_none")]
    pub psi_l: Option<Vec<f64>>,
    #[serde(rename = "psiR", default, skip_serializing_if = "Option::is_none")]
    pub psi_r: Option<Vec<f64>>,
}

impl CircuitSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<LayeredEnsemble> {
        let mut width = match (&self.layers.first(), &self.psi_l) {
            (Some(l), _) => l
                .gates
                .iter()
                .flat_map(|g| g.inputs.iter())
                .max()
                .map_or(0, |m| m + 1),
            (None, Some(p)) if p.len().is_power_of_two() => p.len().trailing_zeros() as usize,
            _ => return Err(Error::InvalidCircuit("cannot determine the first layer width".into())),
        };
        let w0 = width;
        let mut layers = Vec::with_capacity(self.layers.len());
        for spec in &self.layers {
            let layer = Layer::from_specs(width, &spec.gates)?;
            width = layer.out_width();
            layers.push(layer);
        }
        let uniform = |w: usize| vec![1.0; 1 << w];
        LayeredEnsemble::new(
            self.psi_l.clone().unwrap_or_else(|| uniform(w0)),
            layers,
            self.psi_r.clone().unwrap_or_else(|| uniform(width)),
        )
    }
}
