//! Boltzmann transfer operator over stripe patterns and its Perron eigenpair.
//!
//! `M_uv = exp(-beta (E_u/2 + E_uv + E_v/2))`. The implicit form factors this as
//! `D K D` with `D = diag(exp(-beta E_u / 2))` and `K` the Kronecker product of
//! one 2x2 factor `exp(-beta e(a, b))` per stripe position, which makes a
//! matvec cost `O(w 2^w)` instead of `O(4^w)`.
//!
//! From the normalized eigenvector `psi` the stationary laws are
//! `Pr(u) = psi_u^2` and `Pr(u, v) = psi_u M_uv psi_v / lambda`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{dot, norm2, tree_sum, tree_sum_by, PAR_THRESHOLD};
use crate::pattern::{interaction_energy_index, pattern_bit, pattern_energy_index, InteractionSpec, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    /// Materialized `2^w x 2^w` matrix.
    Dense,
    /// Diagonal node factor plus Kronecker-factored interaction kernel.
    Implicit,
}

impl Representation {
    /// Dense up to width 12, implicit above.
    pub fn default_for_width(width: usize) -> Self {
        if width <= 12 {
            Representation::Dense
        } else {
            Representation::Implicit
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperatorLimits {
    pub dense_max_width: usize,
    pub implicit_max_width: usize,
}

impl Default for OperatorLimits {
    fn default() -> Self {
        OperatorLimits {
            dense_max_width: 14,
            implicit_max_width: 26,
        }
    }
}

/// Irreducibility is checked by graph search up to this width.
pub const IRREDUCIBILITY_CHECK_MAX_WIDTH: usize = 14;

/// A square nonnegative operator that can be applied to a vector.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// `y = A x`
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

#[derive(Debug, Clone)]
pub struct TransferOperator {
    params: ModelParams,
    spec: InteractionSpec,
    representation: Representation,
    limits: OperatorLimits,
    node_weight: Vec<f64>,
    factors: Vec<[[f64; 2]; 2]>,
    dense: Option<Vec<f64>>,
}

impl TransferOperator {
    pub fn build(params: ModelParams, spec: InteractionSpec, representation: Representation) -> Result<Self> {
        Self::build_with_limits(params, spec, representation, OperatorLimits::default())
    }

    pub fn build_with_limits(
        params: ModelParams,
        spec: InteractionSpec,
        representation: Representation,
        limits: OperatorLimits,
    ) -> Result<Self> {
        params.validate()?;
        let w = params.width;
        match representation {
            Representation::Dense if w > limits.dense_max_width => {
                return Err(Error::Capacity {
                    width: w,
                    limit: limits.dense_max_width,
                    representation: "dense",
                    bytes: 8u128 << (2 * w),
                })
            }
            Representation::Implicit if w > limits.implicit_max_width => {
                return Err(Error::Capacity {
                    width: w,
                    limit: limits.implicit_max_width,
                    representation: "implicit",
                    bytes: 32u128 << w,
                })
            }
            _ => {}
        }
        let n = params.num_patterns();
        let beta = params.beta;
        let energies: Vec<f64> = (0..n).map(|u| pattern_energy_index(u, &params, &spec)).collect();
        let node_weight: Vec<f64> = energies.iter().map(|&e| (-beta * e / 2.0).exp()).collect();
        let factors = (0..w)
            .map(|_| {
                let mut f = [[0.0; 2]; 2];
                for (a, row) in f.iter_mut().enumerate() {
                    for (b, x) in row.iter_mut().enumerate() {
                        *x = (-beta * spec.vertical_energy(&params, a, b)).exp();
                    }
                }
                f
            })
            .collect();

        let dense = match representation {
            Representation::Dense => {
                let mut m = vec![0.0; n * n];
                let fill = |(u, row): (usize, &mut [f64])| {
                    for (v, x) in row.iter_mut().enumerate() {
                        let e = energies[u] / 2.0 + interaction_energy_index(u, v, &params, &spec) + energies[v] / 2.0;
                        *x = (-beta * e).exp();
                    }
                };
                if n * n >= PAR_THRESHOLD {
                    m.par_chunks_mut(n).enumerate().for_each(fill);
                } else {
                    m.chunks_mut(n).enumerate().for_each(fill);
                }
                Some(m)
            }
            Representation::Implicit => None,
        };

        Ok(TransferOperator {
            params,
            spec,
            representation,
            limits,
            node_weight,
            factors,
            dense,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn spec(&self) -> &InteractionSpec {
        &self.spec
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn limits(&self) -> OperatorLimits {
        self.limits
    }

    pub fn width(&self) -> usize {
        self.params.width
    }

    pub fn num_patterns(&self) -> usize {
        self.node_weight.len()
    }

    /// Whether pattern `u` has finite energy.
    pub fn is_allowed(&self, u: usize) -> bool {
        self.node_weight[u] > 0.0
    }

    /// `M_uv`, read from the dense matrix when present.
    pub fn entry(&self, u: usize, v: usize) -> f64 {
        match &self.dense {
            Some(m) => m[u * self.num_patterns() + v],
            None => self.factored_entry(u, v),
        }
    }

    /// `M_uv` evaluated from the `D K D` factorization.
    pub fn factored_entry(&self, u: usize, v: usize) -> f64 {
        let w = self.width();
        let mut k = 1.0;
        for (p, f) in self.factors.iter().enumerate() {
            k *= f[pattern_bit(u, w, p)][pattern_bit(v, w, p)];
        }
        self.node_weight[u] * k * self.node_weight[v]
    }

    fn apply_kernel(&self, z: &mut [f64]) {
        let n = z.len();
        let w = self.width();
        for (p, f) in self.factors.iter().enumerate() {
            let stride = 1usize << (w - 1 - p);
            let butterfly = |lo: &mut [f64], hi: &mut [f64]| {
                for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (x0, x1) = (*a, *b);
                    *a = f[0][0] * x0 + f[0][1] * x1;
                    *b = f[1][0] * x0 + f[1][1] * x1;
                }
            };
            if n < PAR_THRESHOLD {
                for chunk in z.chunks_mut(2 * stride) {
                    let (lo, hi) = chunk.split_at_mut(stride);
                    butterfly(lo, hi);
                }
            } else if 2 * stride <= n / 64 {
                z.par_chunks_mut(2 * stride).for_each(|chunk| {
                    let (lo, hi) = chunk.split_at_mut(stride);
                    butterfly(lo, hi);
                });
            } else {
                for chunk in z.chunks_mut(2 * stride) {
                    let (lo, hi) = chunk.split_at_mut(stride);
                    lo.par_chunks_mut(4096)
                        .zip(hi.par_chunks_mut(4096))
                        .for_each(|(l, h)| butterfly(l, h));
                }
            }
        }
    }

    /// Checks that the allowed patterns form one strongly connected class.
    ///
    /// Skipped (returns `Ok`) above [`IRREDUCIBILITY_CHECK_MAX_WIDTH`].
    pub fn check_irreducible(&self) -> Result<()> {
        let allowed: Vec<usize> = (0..self.num_patterns()).filter(|&u| self.is_allowed(u)).collect();
        if allowed.is_empty() {
            return Err(Error::EmptyOperator);
        }
        if self.width() > IRREDUCIBILITY_CHECK_MAX_WIDTH {
            return Ok(());
        }
        let all_positive = self.factors.iter().all(|f| f.iter().flatten().all(|&x| x > 0.0));
        if all_positive {
            return Ok(());
        }
        for transpose in [false, true] {
            let reached = self.reach_count(allowed[0], transpose);
            let self_loop_only = allowed.len() == 1 && self.factored_entry(allowed[0], allowed[0]) == 0.0;
            if reached < allowed.len() || self_loop_only {
                return Err(Error::Reducible {
                    reachable: if self_loop_only { 0 } else { reached },
                    allowed: allowed.len(),
                });
            }
        }
        Ok(())
    }

    fn reach_count(&self, start: usize, transpose: bool) -> usize {
        let w = self.width();
        let n = self.num_patterns();
        // next[p][a] = bits b with a nonzero factor entry at position p
        let next: Vec<[Vec<usize>; 2]> = self
            .factors
            .iter()
            .map(|f| {
                let get = |a: usize, b: usize| if transpose { f[b][a] } else { f[a][b] };
                [
                    (0..2).filter(|&b| get(0, b) > 0.0).collect(),
                    (0..2).filter(|&b| get(1, b) > 0.0).collect(),
                ]
            })
            .collect();
        let mut seen = vec![false; n];
        seen[start] = true;
        let mut stack = vec![start];
        let mut count = 1;
        let mut partial: Vec<(usize, usize)> = Vec::new();
        while let Some(u) = stack.pop() {
            partial.clear();
            partial.push((0, 0));
            while let Some((p, prefix)) = partial.pop() {
                if p == w {
                    if !seen[prefix] && self.is_allowed(prefix) {
                        seen[prefix] = true;
                        count += 1;
                        stack.push(prefix);
                    }
                    continue;
                }
                for &b in &next[p][pattern_bit(u, w, p)] {
                    partial.push((p + 1, (prefix << 1) | b));
                }
            }
        }
        count
    }

    /// Perron eigenpair by power iteration started from the uniform vector on
    /// allowed patterns.
    pub fn dominant_eigenpair(&self, opts: &SolverOptions) -> Result<SpectralSolution> {
        self.check_irreducible()?;
        let start: Vec<f64> = self.node_weight.iter().map(|&d| if d > 0.0 { 1.0 } else { 0.0 }).collect();
        power_iteration(self, start, opts)
    }
}

impl LinearOperator for TransferOperator {
    fn dim(&self) -> usize {
        self.num_patterns()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.num_patterns();
        match &self.dense {
            Some(m) => {
                let row = |(u, out): (usize, &mut f64)| {
                    let r = &m[u * n..(u + 1) * n];
                    let mut acc = 0.0;
                    for (a, b) in r.iter().zip(x) {
                        acc += a * b;
                    }
                    *out = acc;
                };
                if n * n >= PAR_THRESHOLD {
                    y.par_iter_mut().enumerate().for_each(row);
                } else {
                    y.iter_mut().enumerate().for_each(row);
                }
            }
            None => {
                for ((out, xi), d) in y.iter_mut().zip(x).zip(&self.node_weight) {
                    *out = xi * d;
                }
                self.apply_kernel(y);
                for (out, d) in y.iter_mut().zip(&self.node_weight) {
                    *out *= d;
                }
            }
        }
    }
}

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        DenseMatrix { n, data }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, out) in y.iter_mut().enumerate() {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            *out = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target for `||M psi - lambda psi|| / lambda`.
    pub tol: f64,
    pub max_iter: usize,
    /// Iterates on `M + shift I`; a positive shift damps negative eigenvalues.
    pub shift: f64,
    /// Give up early when the residual has not improved for this many iterations.
    pub stall_window: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-13,
            max_iter: 100_000,
            shift: 0.0,
            stall_window: 5_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSolution {
    pub lambda: f64,
    /// Entrywise nonnegative, unit sum of squares.
    pub psi: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl SpectralSolution {
    /// `Pr(u) = psi_u^2`.
    pub fn pattern_prob(&self) -> Vec<f64> {
        self.psi.iter().map(|x| x * x).collect()
    }
}

pub fn power_iteration<A: LinearOperator + ?Sized>(
    op: &A,
    start: Vec<f64>,
    opts: &SolverOptions,
) -> Result<SpectralSolution> {
    let n = op.dim();
    assert_eq!(start.len(), n, "start vector length must match operator dimension");
    let mut x = start;
    let nx = norm2(&x);
    if !(nx > 0.0) {
        return Err(Error::EmptyOperator);
    }
    x.iter_mut().for_each(|v| *v /= nx);
    let mut y = vec![0.0; n];
    let mut best = f64::INFINITY;
    let mut best_at = 0;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        op.apply(&x, &mut y);
        let lambda = dot(&x, &y);
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: f64::NAN,
            });
        }
        residual = tree_sum_by(n, |i| {
            let r = y[i] - lambda * x[i];
            r * r
        })
        .sqrt()
            / lambda;
        if residual <= opts.tol {
            return Ok(finish(x, lambda, it, residual));
        }
        if residual < best * 0.999 {
            best = residual;
            best_at = it;
        } else if it - best_at > opts.stall_window {
            break;
        }
        if opts.shift != 0.0 {
            for (yi, xi) in y.iter_mut().zip(&x) {
                *yi += opts.shift * xi;
            }
        }
        let ny = norm2(&y);
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter.min(best_at + opts.stall_window + 1),
        residual,
    })
}

fn finish(mut x: Vec<f64>, lambda: f64, iterations: usize, residual: f64) -> SpectralSolution {
    x.iter_mut().for_each(|v| *v = v.abs());
    let nx = norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    SpectralSolution {
        lambda,
        psi: x,
        iterations,
        residual,
    }
}

/// Dense table of `Pr(u, v)` for adjacent stripes (`u` first).
#[derive(Debug, Clone, PartialEq)]
pub struct PairDistribution {
    n: usize,
    probs: Vec<f64>,
}

impl PairDistribution {
    pub fn num_patterns(&self) -> usize {
        self.n
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.probs[u * self.n + v]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn row_sum(&self, u: usize) -> f64 {
        let n = self.n;
        tree_sum_by(n, |v| self.probs[u * n + v])
    }

    pub fn total(&self) -> f64 {
        tree_sum(&self.probs)
    }
}

pub fn pattern_prob(sol: &SpectralSolution) -> Vec<f64> {
    sol.pattern_prob()
}

/// Materializes `Pr(u, v)`; only available up to the operator's dense width limit.
pub fn pair_prob(sol: &SpectralSolution, op: &TransferOperator) -> Result<PairDistribution> {
    let w = op.width();
    if w > op.limits().dense_max_width {
        return Err(Error::Capacity {
            width: w,
            limit: op.limits().dense_max_width,
            representation: "dense pair distribution",
            bytes: 8u128 << (2 * w),
        });
    }
    let n = op.num_patterns();
    let lambda = sol.lambda;
    let psi = &sol.psi;
    let mut probs = vec![0.0; n * n];
    let fill = |(u, row): (usize, &mut [f64])| {
        for (v, x) in row.iter_mut().enumerate() {
            *x = psi[u] * op.entry(u, v) / lambda * psi[v];
        }
    };
    if n * n >= PAR_THRESHOLD {
        probs.par_chunks_mut(n).enumerate().for_each(fill);
    } else {
        probs.chunks_mut(n).enumerate().for_each(fill);
    }
    Ok(PairDistribution { n, probs })
}

fn check_positions(width: usize, positions: &[usize]) -> Result<()> {
    for (i, &p) in positions.iter().enumerate() {
        if p >= width {
            return Err(Error::InvalidArgument(format!("position {p} outside stripe of width {width}")));
        }
        if positions[..i].contains(&p) {
            return Err(Error::InvalidArgument(format!("position {p} listed twice")));
        }
    }
    Ok(())
}

/// Key formed by the bits at `positions` (first listed = most significant).
fn group_keys(width: usize, n: usize, positions: &[usize]) -> Vec<usize> {
    (0..n)
        .map(|u| positions.iter().fold(0, |k, &p| (k << 1) | pattern_bit(u, width, p)))
        .collect()
}

/// Joint law of the bits at `prev_positions` of a stripe and `next_positions`
/// of the following stripe.
///
/// The result has length `2^(|prev| + |next|)` and is indexed by
/// `prev_key << |next| | next_key`, each key MSB-first in the listed order.
/// Dense operators use [`pair_marginal_scan`], implicit ones use
/// [`pair_marginal_projected`].
pub fn pair_marginal(
    op: &TransferOperator,
    sol: &SpectralSolution,
    prev_positions: &[usize],
    next_positions: &[usize],
) -> Result<Vec<f64>> {
    match op.representation() {
        Representation::Dense => pair_marginal_scan(op, sol, prev_positions, next_positions),
        Representation::Implicit => pair_marginal_projected(op, sol, prev_positions, next_positions),
    }
}

/// Accumulates `psi_u M_uv psi_v / lambda` over all `(u, v)` pairs.
pub fn pair_marginal_scan(
    op: &TransferOperator,
    sol: &SpectralSolution,
    prev_positions: &[usize],
    next_positions: &[usize],
) -> Result<Vec<f64>> {
    let w = op.width();
    if w > op.limits().dense_max_width {
        return Err(Error::Capacity {
            width: w,
            limit: op.limits().dense_max_width,
            representation: "pair scan",
            bytes: 8u128 << (2 * w),
        });
    }
    check_positions(w, prev_positions)?;
    check_positions(w, next_positions)?;
    let n = op.num_patterns();
    let next_bits = next_positions.len();
    let size = 1usize << (prev_positions.len() + next_bits);
    let pk = group_keys(w, n, prev_positions);
    let nk = group_keys(w, n, next_positions);
    let psi = &sol.psi;

    const ROWS: usize = 64;
    let chunk = |c: usize| {
        let mut acc = vec![0.0; size];
        for u in c * ROWS..((c + 1) * ROWS).min(n) {
            if psi[u] == 0.0 {
                continue;
            }
            let base = pk[u] << next_bits;
            for v in 0..n {
                acc[base | nk[v]] += psi[u] * op.entry(u, v) * psi[v];
            }
        }
        acc
    };
    let chunks = n.div_ceil(ROWS);
    let partial: Vec<Vec<f64>> = if n * n >= PAR_THRESHOLD {
        (0..chunks).into_par_iter().map(chunk).collect()
    } else {
        (0..chunks).map(chunk).collect()
    };
    let mut out = vec![0.0; size];
    for part in partial {
        for (o, p) in out.iter_mut().zip(part) {
            *o += p;
        }
    }
    out.iter_mut().for_each(|x| *x /= sol.lambda);
    Ok(out)
}

/// Applies group-indicator projections as matvecs: one product `M (psi . 1_g)`
/// per value `g` of the next-stripe key, never forming `Pr(u, v)`.
pub fn pair_marginal_projected(
    op: &TransferOperator,
    sol: &SpectralSolution,
    prev_positions: &[usize],
    next_positions: &[usize],
) -> Result<Vec<f64>> {
    let w = op.width();
    check_positions(w, prev_positions)?;
    check_positions(w, next_positions)?;
    let n = op.num_patterns();
    let next_bits = next_positions.len();
    let size = 1usize << (prev_positions.len() + next_bits);
    let pk = group_keys(w, n, prev_positions);
    let nk = group_keys(w, n, next_positions);
    let psi = &sol.psi;
    let mut out = vec![0.0; size];
    let mut z = vec![0.0; n];
    let mut y = vec![0.0; n];
    for g in 0..1usize << next_bits {
        for v in 0..n {
            z[v] = if nk[v] == g { psi[v] } else { 0.0 };
        }
        op.apply(&z, &mut y);
        for u in 0..n {
            out[(pk[u] << next_bits) | g] += psi[u] * y[u];
        }
    }
    out.iter_mut().for_each(|x| *x /= sol.lambda);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{interaction_energy, pattern_energy, SpinPattern};

    fn solve(params: ModelParams, repr: Representation) -> (TransferOperator, SpectralSolution) {
        let op = TransferOperator::build(params, InteractionSpec::Ising, repr).unwrap();
        let sol = op.dominant_eigenpair(&SolverOptions::default()).unwrap();
        (op, sol)
    }

    #[test]
    fn zero_coupling_gives_all_ones() {
        for repr in [Representation::Dense, Representation::Implicit] {
            let op = TransferOperator::build(ModelParams::ising(3, 0.0), InteractionSpec::Ising, repr).unwrap();
            for u in 0..8 {
                for v in 0..8 {
                    assert_eq!(op.entry(u, v), 1.0);
                }
            }
        }
    }

    #[test]
    fn width_one_matrix() {
        let j = 0.7;
        let params = ModelParams::ising(1, j).with_cyclic(false);
        let op = TransferOperator::build(params, InteractionSpec::Ising, Representation::Dense).unwrap();
        assert_eq!(op.entry(0, 0), j.exp());
        assert_eq!(op.entry(1, 1), j.exp());
        assert_eq!(op.entry(0, 1), (-j).exp());
        assert_eq!(op.entry(1, 0), (-j).exp());
    }

    #[test]
    fn width_two_hand_table() {
        let params = ModelParams::ising(2, 0.3).with_mu(0.1).with_cyclic(false);
        let spec = InteractionSpec::Ising;
        for repr in [Representation::Dense, Representation::Implicit] {
            let op = TransferOperator::build(params, spec, repr).unwrap();
            for u in 0..4 {
                for v in 0..4 {
                    let (pu, pv) = (SpinPattern::new(u, 2).unwrap(), SpinPattern::new(v, 2).unwrap());
                    let (su, sv) = (pu.spins(), pv.spins());
                    // energies written out by hand from the spins
                    let eu = -0.3 * (su[0] * su[1]) as f64 - 0.1 * (su[0] + su[1]) as f64;
                    let ev = -0.3 * (sv[0] * sv[1]) as f64 - 0.1 * (sv[0] + sv[1]) as f64;
                    let euv = -0.3 * (su[0] * sv[0] + su[1] * sv[1]) as f64;
                    assert_eq!(eu, pattern_energy(pu, &params, &spec));
                    assert_eq!(euv, interaction_energy(pu, pv, &params, &spec));
                    let expected = (-(eu / 2.0 + euv + ev / 2.0)).exp();
                    let got = op.entry(u, v);
                    assert!((got - expected).abs() <= 1e-15 * expected, "{repr:?} {u} {v}");
                }
            }
        }
    }

    #[test]
    fn dense_and_factored_entries_agree() {
        let params = ModelParams::ising(7, 0.37).with_mu(-0.2).with_couplings(0.37, 0.81);
        let op = TransferOperator::build(params, InteractionSpec::Ising, Representation::Dense).unwrap();
        for u in (0..128).step_by(5) {
            for v in (0..128).step_by(3) {
                let (d, f) = (op.entry(u, v), op.factored_entry(u, v));
                assert!((d - f).abs() <= 1e-12 * d.abs(), "{u} {v}: {d} vs {f}");
            }
        }
    }

    #[test]
    fn all_ones_eigenpair() {
        let (_, sol) = solve(ModelParams::ising(3, 0.0), Representation::Dense);
        assert!((sol.lambda - 8.0).abs() < 1e-12);
        for x in &sol.psi {
            assert!((x - 1.0 / 8f64.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn one_dimensional_closed_form() {
        // 2x2 symmetric [[a, b], [b, a]] has top eigenvalue a + b
        for j in [0.1, 0.5, 1.0, 2.0] {
            for beta in [0.5, 1.0] {
                let params = ModelParams::ising(1, j).with_beta(beta).with_cyclic(false);
                let (_, sol) = solve(params, Representation::Implicit);
                let expected = (beta * j).exp() + (-beta * j).exp();
                assert!((sol.lambda - expected).abs() <= 1e-12 * expected);
                assert!((sol.lambda - 2.0 * (beta * j).cosh()).abs() <= 1e-12 * expected);
            }
        }
    }

    #[test]
    fn capacity_errors_name_the_bound() {
        let err = TransferOperator::build(ModelParams::ising(15, 0.1), InteractionSpec::Ising, Representation::Dense)
            .unwrap_err();
        assert!(matches!(err, Error::Capacity { width: 15, limit: 14, .. }));
        assert!(err.to_string().contains("bytes"));
        let err = TransferOperator::build(ModelParams::ising(27, 0.1), InteractionSpec::Ising, Representation::Implicit)
            .unwrap_err();
        assert!(matches!(err, Error::Capacity { width: 27, limit: 26, .. }));
    }

    #[test]
    fn reducible_operator_is_rejected() {
        use crate::pattern::CustomEnergies;
        // vertical bonds only allow equal bits: each pattern only reaches itself
        let inf = f64::INFINITY;
        let spec = InteractionSpec::Custom(CustomEnergies {
            node: [0.0, 0.0],
            horizontal: [[0.0, 0.0], [0.0, 0.0]],
            vertical: [[0.0, inf], [inf, 0.0]],
        });
        let op = TransferOperator::build(ModelParams::ising(3, 0.0), spec, Representation::Dense).unwrap();
        assert!(matches!(
            op.dominant_eigenpair(&SolverOptions::default()),
            Err(Error::Reducible { reachable: 1, allowed: 8 })
        ));
    }

    #[test]
    fn hard_square_is_irreducible_and_has_zero_entries() {
        let params = ModelParams::ising(6, 0.0);
        let op = TransferOperator::build(params, InteractionSpec::HardSquare, Representation::Implicit).unwrap();
        op.check_irreducible().unwrap();
        let sol = op.dominant_eigenpair(&SolverOptions::default()).unwrap();
        assert_eq!(op.entry(0b000011, 0), 0.0);
        assert_eq!(op.entry(0b000001, 0b000001), 0.0);
        assert_eq!(sol.psi[0b000011], 0.0);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let op = TransferOperator::build(ModelParams::ising(6, 0.44), InteractionSpec::Ising, Representation::Implicit)
            .unwrap();
        let opts = SolverOptions {
            max_iter: 3,
            ..Default::default()
        };
        match op.dominant_eigenpair(&opts) {
            Err(Error::NonConvergence { iterations: 3, residual }) => assert!(residual > 1e-13),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn uniform_pair_prob_at_zero_coupling() {
        let (op, sol) = solve(ModelParams::ising(2, 0.0), Representation::Dense);
        let pair = pair_prob(&sol, &op).unwrap();
        for &p in pair.as_slice() {
            assert!((p - 1.0 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn pair_marginal_routes_agree() {
        let params = ModelParams::ising(8, 0.31).with_mu(0.05).with_cyclic(false);
        let (op, sol) = solve(params, Representation::Dense);
        let a = pair_marginal_scan(&op, &sol, &[3, 4, 5], &[1, 2, 3]).unwrap();
        let b = pair_marginal_projected(&op, &sol, &[3, 4, 5], &[1, 2, 3]).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14, "{x} vs {y}");
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_marginal_rejects_bad_positions() {
        let (op, sol) = solve(ModelParams::ising(4, 0.2), Representation::Implicit);
        assert!(pair_marginal(&op, &sol, &[4], &[0]).is_err());
        assert!(pair_marginal(&op, &sol, &[1, 1], &[0]).is_err());
    }

    #[test]
    fn spin_flip_symmetry_of_pattern_prob() {
        let (_, sol) = solve(ModelParams::ising(9, 0.6), Representation::Implicit);
        let pr = sol.pattern_prob();
        for u in 0..512usize {
            assert!((pr[u] - pr[!u & 511]).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_monotone_in_couplings() {
        let mut prev_h = None;
        for jh in [0.0, 0.2, 0.4, 0.6] {
            let mut prev_v = None;
            for jv in [0.0, 0.2, 0.4, 0.6] {
                let params = ModelParams::ising(5, 0.0).with_couplings(jh, jv);
                let (_, sol) = solve(params, Representation::Implicit);
                if let Some(p) = prev_v {
                    assert!(sol.lambda >= p - 1e-12);
                }
                prev_v = Some(sol.lambda);
            }
            if let Some(p) = prev_h {
                assert!(prev_v.unwrap() >= p - 1e-12);
            }
            prev_h = prev_v;
        }
    }

    #[test]
    fn bit_reproducible_across_thread_counts() {
        let params = ModelParams::ising(14, 0.3);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| solve(params, Representation::Implicit).1)
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.lambda.to_bits(), b.lambda.to_bits());
        assert!(a.psi.iter().zip(&b.psi).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
