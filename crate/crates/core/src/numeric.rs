//! Deterministic reductions and number formatting shared by the solvers.
//!
//! All reductions use a fixed-shape pairwise tree over fixed-size leaf blocks,
//! so a sum depends only on the input slice and never on thread scheduling.

use rayon::prelude::*;

const LEAF: usize = 256;

/// Pairwise sum of `f(i)` for `i in 0..n` over fixed leaf blocks.
pub fn tree_sum_by<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let blocks = n.div_ceil(LEAF);
    if blocks == 0 {
        return 0.0;
    }
    let leaf = |b: usize| {
        let lo = b * LEAF;
        let hi = (lo + LEAF).min(n);
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        acc
    };
    let mut partial: Vec<f64> = if n >= PAR_THRESHOLD {
        (0..blocks).into_par_iter().map(leaf).collect()
    } else {
        (0..blocks).map(leaf).collect()
    };
    while partial.len() > 1 {
        partial = partial
            .chunks(2)
            .map(|c| if c.len() == 2 { c[0] + c[1] } else { c[0] })
            .collect();
    }
    partial[0]
}

/// Below this length work stays on the calling thread.
pub const PAR_THRESHOLD: usize = 1 << 14;

pub fn tree_sum(xs: &[f64]) -> f64 {
    tree_sum_by(xs.len(), |i| xs[i])
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    tree_sum_by(a.len(), |i| a[i] * b[i])
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Formats with 17 significant digits, the round-trip width for f64.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{x:.16e}")
}

/// Binary entropy in bits, with h(0) = h(1) = 0.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    term(p) + term(1.0 - p)
}
