//! Three-wire ensemble whose pairwise agreement probabilities violate the
//! Mermin bound `Pr(A=B) + Pr(A=C) + Pr(B=C) >= 1`.

use serde::Serialize;

use super::gate::{Gate, Placement};
use super::layered::{ensemble_distribution, Layer, LayeredEnsemble};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MerminReport {
    pub ab: f64,
    pub ac: f64,
    pub bc: f64,
    pub sum: f64,
    pub violated: bool,
}

/// Zero on 000 and 111, equal weight elsewhere.
pub fn mermin_boundary() -> Vec<f64> {
    let a = 1.0 / 6f64.sqrt();
    (0..8).map(|s| if s == 0 || s == 7 { 0.0 } else { a }).collect()
}

/// Measures the two wires other than `mixed` by applying X to `mixed` and
/// identity elsewhere; returns `Pr(the two measured wires agree)`.
pub fn agreement(mixed: usize) -> Result<f64> {
    let placements = (0..3)
        .map(|w| {
            let g = if w == mixed { Gate::x() } else { Gate::wire(None) };
            Placement::new(g, vec![w], vec![w])
        })
        .collect::<Result<Vec<_>>>()?;
    let layer = Layer::new(3, 3, placements)?;
    let e = LayeredEnsemble::new(mermin_boundary(), vec![layer], mermin_boundary())?;
    let m = ensemble_distribution(&e)?;
    let (x, y): (usize, usize) = match mixed {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let bit = |s: usize, w: usize| (s >> (2 - w)) & 1;
    Ok((0..8).filter(|&s| bit(s, x) == bit(s, y)).map(|s| m.layers[0][s]).sum())
}

pub fn mermin_check() -> Result<MerminReport> {
    let ab = agreement(2)?;
    let ac = agreement(1)?;
    let bc = agreement(0)?;
    let sum = ab + ac + bc;
    Ok(MerminReport {
        ab,
        ac,
        bc,
        sum,
        violated: sum < 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_fifth_each() {
        let r = mermin_check().unwrap();
        for p in [r.ab, r.ac, r.bc] {
            assert!((p - 0.2).abs() <= 1e-12, "{p}");
        }
        assert!((r.sum - 0.6).abs() <= 1e-12 && r.violated);
    }
}
