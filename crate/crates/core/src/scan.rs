//! Causal line-by-line scanning model derived from stripe-pair probabilities.
//!
//! The node being predicted (`?`) sits at column `mid` of the current stripe.
//! Its context is `before` cells to its left in the current stripe and `after`
//! cells of the previous stripe starting directly above it:
//!
//! ```text
//! previous:  . . . . . . a a a . . .
//! current:   . . . b b b ? . . . . .
//! ```
//!
//! Context key = `before_bits << after | after_bits`, each group read left to
//! right with the first cell as the most significant bit (bit = (spin+1)/2).

use std::fmt::Write as _;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numeric::{binary_entropy, fmt17};
use crate::operator::{pair_marginal, SpectralSolution, TransferOperator};
use crate::pattern::{InteractionSpec, ModelParams};

pub const BIT_ORDER: &str = "before-msb-first,then-after-msb-first";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ContextShape {
    pub before: usize,
    pub after: usize,
}

impl ContextShape {
    pub fn new(before: usize, after: usize) -> Self {
        ContextShape { before, after }
    }

    /// 0-based column of `?` inside a stripe of `width`.
    pub fn mid(width: usize) -> usize {
        width.div_ceil(2)
    }

    pub fn num_contexts(&self) -> usize {
        1 << (self.before + self.after)
    }

    pub fn check_fits(&self, width: usize) -> Result<()> {
        let mid = Self::mid(width);
        let (max_before, max_after) = if mid < width { (mid, width - mid) } else { (0, 0) };
        if mid >= width || self.before > max_before || self.after > max_after {
            return Err(Error::ShapeOverflow {
                width,
                before: self.before,
                after: self.after,
                max_before,
                max_after,
            });
        }
        Ok(())
    }
}

impl Default for ContextShape {
    fn default() -> Self {
        ContextShape::new(3, 3)
    }
}

/// Per-node averages implied by a scan model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub energy: f64,
    /// Bits per node.
    pub entropy: f64,
    pub magnetization: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanModel {
    params: ModelParams,
    shape: ContextShape,
    /// `Pr(ctx = k, ? = q)` at index `k << 1 | q`.
    joint: Vec<f64>,
    table: Vec<f64>,
    ctx_prob: Vec<f64>,
    unreachable: Vec<bool>,
}

impl ScanModel {
    /// Marginalizes `Pr(u, v)` over the cells outside the context.
    pub fn derive(op: &TransferOperator, sol: &SpectralSolution, shape: ContextShape) -> Result<Self> {
        let params = *op.params();
        let w = params.width;
        shape.check_fits(w)?;
        let mid = ContextShape::mid(w);
        let (b, a) = (shape.before, shape.after);
        let prev: Vec<usize> = (mid..mid + a).collect();
        let next: Vec<usize> = (mid - b..=mid).collect();
        let marginal = pair_marginal(op, sol, &prev, &next)?;
        let mut joint = vec![0.0; 2 << (b + a)];
        for after in 0..1usize << a {
            for before in 0..1usize << b {
                for q in 0..2 {
                    let src = (after << (b + 1)) | (before << 1) | q;
                    joint[(((before << a) | after) << 1) | q] = marginal[src];
                }
            }
        }
        Ok(Self::from_joint(params, shape, joint))
    }

    fn from_joint(params: ModelParams, shape: ContextShape, joint: Vec<f64>) -> Self {
        let k = shape.num_contexts();
        let mut table = vec![0.5; k];
        let mut ctx_prob = vec![0.0; k];
        let mut unreachable = vec![false; k];
        for key in 0..k {
            let (p0, p1) = (joint[key << 1], joint[(key << 1) | 1]);
            let c = p0 + p1;
            ctx_prob[key] = c;
            if c > 0.0 {
                table[key] = p1 / c;
            } else {
                unreachable[key] = true;
            }
        }
        ScanModel {
            params,
            shape,
            joint,
            table,
            ctx_prob,
            unreachable,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn shape(&self) -> ContextShape {
        self.shape
    }

    /// `Pr(? = +1 | ctx)` per context key.
    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn ctx_prob(&self) -> &[f64] {
        &self.ctx_prob
    }

    pub fn joint(&self) -> &[f64] {
        &self.joint
    }

    /// Contexts of probability zero; their table entry is a placeholder 0.5.
    pub fn is_unreachable(&self, key: usize) -> bool {
        self.unreachable[key]
    }

    pub fn context_key(&self, before_bits: &[u8], after_bits: &[u8]) -> usize {
        debug_assert_eq!(before_bits.len(), self.shape.before);
        debug_assert_eq!(after_bits.len(), self.shape.after);
        before_bits
            .iter()
            .chain(after_bits)
            .fold(0, |k, &b| (k << 1) | b as usize)
    }

    pub fn observables(&self, spec: &InteractionSpec) -> Result<Observables> {
        let (b, a) = (self.shape.before, self.shape.after);
        if b == 0 || a == 0 {
            return Err(Error::ShapeTooSmall { before: b, after: a });
        }
        let mut energy = 0.0;
        let mut entropy = 0.0;
        let mut magnetization = 0.0;
        for key in 0..self.shape.num_contexts() {
            let left = (key >> a) & 1;
            let above = (key >> (a - 1)) & 1;
            for q in 0..2 {
                let p = self.joint[(key << 1) | q];
                if p != 0.0 {
                    energy += p * spec.site_energy(&self.params, q, left, above);
                }
            }
            entropy += self.ctx_prob[key] * binary_entropy(self.table[key]);
            magnetization += self.joint[(key << 1) | 1] - self.joint[key << 1];
        }
        Ok(Observables {
            energy,
            entropy,
            magnetization,
        })
    }

    /// Marginalizes onto the `before` cells nearest `?` and the first `after`
    /// cells above it.
    pub fn reduced(&self, before: usize, after: usize) -> Result<ScanModel> {
        let (b, a) = (self.shape.before, self.shape.after);
        if before > b || after > a {
            return Err(Error::InvalidArgument(format!(
                "cannot reduce ({b}, {a}) context to larger ({before}, {after})"
            )));
        }
        let shape = ContextShape::new(before, after);
        let mut joint = vec![0.0; 2 << (before + after)];
        for key in 0..self.shape.num_contexts() {
            let bk = (key >> a) & ((1 << before) - 1);
            let ak = (key & ((1 << a) - 1)) >> (a - after);
            let rk = (bk << after) | ak;
            joint[rk << 1] += self.joint[key << 1];
            joint[(rk << 1) | 1] += self.joint[(key << 1) | 1];
        }
        Ok(ScanModel::from_joint(self.params, shape, joint))
    }

    /// Every `(b', a')` with `b' <= before`, `a' <= after`, including this model.
    pub fn reduced_models(&self) -> ReducedFamily {
        let (b, a) = (self.shape.before, self.shape.after);
        let mut models = Vec::with_capacity((b + 1) * (a + 1));
        for bb in 0..=b {
            for aa in 0..=a {
                models.push(self.reduced(bb, aa).expect("sub-shape of parent"));
            }
        }
        ReducedFamily::from_models(models)
    }

    /// JSON with a fixed key order and 17 significant digits per number.
    pub fn to_json(&self) -> String {
        let p = &self.params;
        let list = |xs: &[f64]| xs.iter().map(|&x| fmt17(x)).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        s.push_str("{\n");
        let _ = writeln!(s, "  \"width\": {},", p.width);
        let _ = writeln!(s, "  \"cyclic\": {},", p.cyclic);
        let _ = writeln!(s, "  \"beta\": {},", fmt17(p.beta));
        let _ = writeln!(s, "  \"mu\": {},", fmt17(p.mu));
        let _ = writeln!(s, "  \"jh\": {},", fmt17(p.jh));
        let _ = writeln!(s, "  \"jv\": {},", fmt17(p.jv));
        let _ = writeln!(s, "  \"before\": {},", self.shape.before);
        let _ = writeln!(s, "  \"after\": {},", self.shape.after);
        let _ = writeln!(s, "  \"table\": [{}],", list(&self.table));
        let _ = writeln!(s, "  \"ctx_prob\": [{}],", list(&self.ctx_prob));
        let _ = writeln!(s, "  \"bit_order\": \"{BIT_ORDER}\"");
        s.push('}');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            width: usize,
            cyclic: bool,
            beta: f64,
            mu: f64,
            jh: f64,
            jv: f64,
            before: usize,
            after: usize,
            table: Vec<f64>,
            ctx_prob: Vec<f64>,
            bit_order: String,
        }
        let raw: Raw = serde_json::from_str(text)?;
        if raw.bit_order != BIT_ORDER {
            return Err(Error::Parse(format!("unsupported bit_order {:?}", raw.bit_order)));
        }
        let params = ModelParams {
            beta: raw.beta,
            mu: raw.mu,
            jh: raw.jh,
            jv: raw.jv,
            width: raw.width,
            cyclic: raw.cyclic,
        };
        params.validate()?;
        let shape = ContextShape::new(raw.before, raw.after);
        if raw.before + raw.after > 24 {
            return Err(Error::Parse("context too large".into()));
        }
        let k = shape.num_contexts();
        if raw.table.len() != k || raw.ctx_prob.len() != k {
            return Err(Error::Parse(format!(
                "expected {k} table and ctx_prob entries, got {} and {}",
                raw.table.len(),
                raw.ctx_prob.len()
            )));
        }
        let mut joint = vec![0.0; 2 * k];
        for key in 0..k {
            let (p, c) = (raw.table[key], raw.ctx_prob[key]);
            if !(0.0..=1.0).contains(&p) || !(c >= 0.0) {
                return Err(Error::Parse(format!("context {key}: p={p}, ctx_prob={c} out of range")));
            }
            joint[key << 1] = c * (1.0 - p);
            joint[(key << 1) | 1] = c * p;
        }
        let mut model = ScanModel::from_joint(params, shape, joint);
        // keep the stored values verbatim
        model.table = raw.table;
        model.ctx_prob = raw.ctx_prob;
        Ok(model)
    }

    /// Short content hash used as field provenance.
    pub fn identity_hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

pub fn derive_model(op: &TransferOperator, sol: &SpectralSolution, shape: ContextShape) -> Result<ScanModel> {
    ScanModel::derive(op, sol, shape)
}

/// Scan models for all context sizes up to `(before, after)`.
#[derive(Debug, Clone)]
pub struct ReducedFamily {
    before: usize,
    after: usize,
    models: Vec<Option<ScanModel>>,
}

impl ReducedFamily {
    /// Collects models by shape; the family's extent is the largest shape given.
    pub fn from_models(models: Vec<ScanModel>) -> Self {
        let before = models.iter().map(|m| m.shape.before).max().unwrap_or(0);
        let after = models.iter().map(|m| m.shape.after).max().unwrap_or(0);
        let mut slots = vec![None; (before + 1) * (after + 1)];
        for m in models {
            let idx = m.shape.before * (after + 1) + m.shape.after;
            slots[idx] = Some(m);
        }
        ReducedFamily {
            before,
            after,
            models: slots,
        }
    }

    pub fn max_shape(&self) -> ContextShape {
        ContextShape::new(self.before, self.after)
    }

    pub fn get(&self, before: usize, after: usize) -> Option<&ScanModel> {
        if before > self.before || after > self.after {
            return None;
        }
        self.models[before * (self.after + 1) + after].as_ref()
    }

    /// Errors with the first missing shape `(b', a') <= (before, after)`.
    pub fn check_covers(&self, before: usize, after: usize) -> Result<()> {
        for b in 0..=before {
            for a in 0..=after {
                if self.get(b, a).is_none() {
                    return Err(Error::MissingReducedShape { before: b, after: a });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{Representation, SolverOptions};

    fn model(params: ModelParams, shape: ContextShape, repr: Representation) -> ScanModel {
        let op = TransferOperator::build(params, InteractionSpec::Ising, repr).unwrap();
        let sol = op.dominant_eigenpair(&SolverOptions::default()).unwrap();
        ScanModel::derive(&op, &sol, shape).unwrap()
    }

    #[test]
    fn mid_matches_ceiling_rule() {
        for w in 1..40usize {
            let expected = ((w as f64) / 2.0 + 1.0).ceil() as usize - 1;
            assert_eq!(ContextShape::mid(w), expected, "w={w}");
        }
    }

    #[test]
    fn shape_overflow_names_the_limit() {
        let err = ContextShape::new(3, 4).check_fits(6).unwrap_err();
        assert!(matches!(
            err,
            Error::ShapeOverflow {
                max_before: 3,
                max_after: 3,
                ..
            }
        ));
        assert!(ContextShape::new(3, 3).check_fits(6).is_ok());
        assert!(ContextShape::new(0, 0).check_fits(1).is_err());
    }

    #[test]
    fn independent_spins_give_fair_coins() {
        let m = model(ModelParams::ising(8, 0.0), ContextShape::new(2, 3), Representation::Dense);
        for (&p, &c) in m.table().iter().zip(m.ctx_prob()) {
            assert_eq!(p, 0.5);
            assert!((c - 1.0 / 32.0).abs() < 1e-15);
        }
        let obs = m.observables(&InteractionSpec::Ising).unwrap();
        assert_eq!(obs.energy, 0.0);
        assert!((obs.entropy - 1.0).abs() < 1e-14);
        assert!(obs.magnetization.abs() < 1e-15);
    }

    #[test]
    fn pure_field_gives_single_site_boltzmann() {
        let mu = 0.8;
        let params = ModelParams::ising(6, 0.0).with_mu(mu);
        let m = model(params, ContextShape::new(2, 2), Representation::Implicit);
        let expected = mu.exp() / (mu.exp() + (-mu).exp());
        for &p in m.table() {
            assert!((p - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn no_magnetization_without_field() {
        let m = model(ModelParams::ising(10, 1.0), ContextShape::new(3, 3), Representation::Dense);
        let obs = m.observables(&InteractionSpec::Ising).unwrap();
        assert!(obs.magnetization.abs() < 1e-9);
        let k = m.shape().num_contexts();
        for key in 0..k {
            assert!((m.table()[key] + m.table()[!key & (k - 1)] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn observables_need_both_neighbours() {
        let m = model(ModelParams::ising(6, 0.3), ContextShape::new(0, 2), Representation::Dense);
        assert!(matches!(
            m.observables(&InteractionSpec::Ising),
            Err(Error::ShapeTooSmall { before: 0, after: 2 })
        ));
    }

    #[test]
    fn larger_context_never_raises_entropy() {
        let params = ModelParams::ising(11, 0.35);
        let op = TransferOperator::build(params, InteractionSpec::Ising, Representation::Implicit).unwrap();
        let sol = op.dominant_eigenpair(&SolverOptions::default()).unwrap();
        let h = |b, a| {
            ScanModel::derive(&op, &sol, ContextShape::new(b, a))
                .unwrap()
                .observables(&InteractionSpec::Ising)
                .unwrap()
                .entropy
        };
        for b in 1..4 {
            for a in 1..4 {
                assert!(h(b, a) >= h(b + 1, a) - 1e-9);
                assert!(h(b, a) >= h(b, a + 1) - 1e-9);
            }
        }
    }

    #[test]
    fn energy_barely_depends_on_context() {
        let params = ModelParams::ising(13, 0.2);
        let op = TransferOperator::build(params, InteractionSpec::Ising, Representation::Implicit).unwrap();
        let sol = op.dominant_eigenpair(&SolverOptions::default()).unwrap();
        let u = |s| {
            ScanModel::derive(&op, &sol, s)
                .unwrap()
                .observables(&InteractionSpec::Ising)
                .unwrap()
                .energy
        };
        assert!((u(ContextShape::new(1, 1)) - u(ContextShape::new(3, 3))).abs() <= 1e-6);
    }

    #[test]
    fn parameters_stabilize_with_width_away_from_criticality() {
        let shape = ContextShape::new(2, 2);
        let diff = |j: f64| {
            let a = model(ModelParams::ising(13, j), shape, Representation::Implicit);
            let b = model(ModelParams::ising(12, j), shape, Representation::Implicit);
            a.table()
                .iter()
                .zip(b.table())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        };
        assert!(diff(0.1) < diff(0.44));
    }

    #[test]
    fn width_fourteen_parameters() {
        // a=b=2 at J=0.1: near 0.5, rising with the number of +1 context cells,
        // and consistent with the dense width-12 derivation
        let shape = ContextShape::new(2, 2);
        let wide = model(ModelParams::ising(14, 0.1), shape, Representation::Implicit);
        let narrow = model(ModelParams::ising(12, 0.1), shape, Representation::Dense);
        let mut by_count = [(0.0, 0); 5];
        for key in 0..16usize {
            let p = wide.table()[key];
            assert!((p - 0.5).abs() < 0.25);
            assert!((p - narrow.table()[key]).abs() < 1e-6);
            let c = key.count_ones() as usize;
            by_count[c].0 += p;
            by_count[c].1 += 1;
        }
        let means: Vec<f64> = by_count.iter().map(|(s, n)| s / *n as f64).collect();
        assert!(means.windows(2).all(|w| w[0] < w[1]), "{means:?}");
    }

    #[test]
    fn reductions_marginalize_the_parent() {
        let params = ModelParams::ising(9, 0.3).with_mu(0.1);
        let m = model(params, ContextShape::new(2, 2), Representation::Dense);
        let family = m.reduced_models();
        family.check_covers(2, 2).unwrap();
        let root = family.get(0, 0).unwrap();
        let overall: f64 = m.ctx_prob().iter().zip(m.table()).map(|(c, p)| c * p).sum();
        assert!((root.table()[0] - overall).abs() < 1e-12);
        let mag = |x: &ScanModel| x.joint().chunks(2).map(|c| c[1] - c[0]).sum::<f64>();
        assert!((mag(root) - m.observables(&InteractionSpec::Ising).unwrap().magnetization).abs() < 1e-12);
        for b in 0..=2 {
            for a in 0..=2 {
                let r = family.get(b, a).unwrap();
                assert!((r.ctx_prob().iter().sum::<f64>() - 1.0).abs() < 1e-10);
            }
        }
        // (1, 1): left neighbour is the last before cell, above is the first after cell
        let r = family.get(1, 1).unwrap();
        for key in 0..4usize {
            let (left, above) = (key >> 1, key & 1);
            let mut num = 0.0;
            let mut den = 0.0;
            for pk in 0..16usize {
                if (pk >> 2) & 1 == left && (pk >> 1) & 1 == above {
                    num += m.joint()[(pk << 1) | 1];
                    den += m.ctx_prob()[pk];
                }
            }
            assert!((r.table()[key] - num / den).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_coupling_reductions_are_fair() {
        let m = model(ModelParams::ising(8, 0.0), ContextShape::new(3, 3), Representation::Dense);
        for b in 0..=3 {
            for a in 0..=3 {
                assert!(m.reduced(b, a).unwrap().table().iter().all(|&p| p == 0.5));
            }
        }
    }

    #[test]
    fn missing_shape_is_detected() {
        let m = model(ModelParams::ising(8, 0.2), ContextShape::new(2, 2), Representation::Dense);
        let partial = ReducedFamily::from_models(vec![m.clone(), m.reduced(0, 0).unwrap()]);
        assert!(matches!(
            partial.check_covers(2, 2),
            Err(Error::MissingReducedShape { before: 0, after: 1 })
        ));
    }

    #[test]
    fn hard_square_flags_unreachable_contexts() {
        let params = ModelParams::ising(8, 0.0);
        let op = TransferOperator::build(params, InteractionSpec::HardSquare, Representation::Dense).unwrap();
        let sol = op.dominant_eigenpair(&SolverOptions::default()).unwrap();
        let m = ScanModel::derive(&op, &sol, ContextShape::new(2, 2)).unwrap();
        // before = (1, 1) is two adjacent ones
        let key = m.context_key(&[1, 1], &[0, 0]);
        assert!(m.is_unreachable(key));
        assert_eq!(m.table()[key], 0.5);
        // '?' next to a 1 on the left or above must be 0
        assert_eq!(m.table()[m.context_key(&[0, 1], &[0, 0])], 0.0);
        assert_eq!(m.table()[m.context_key(&[0, 0], &[1, 0])], 0.0);
        let obs = m.observables(&InteractionSpec::HardSquare).unwrap();
        assert_eq!(obs.energy, 0.0);
        assert!(obs.entropy > 0.55 && obs.entropy < 0.62);
    }

    #[test]
    fn dense_and_implicit_models_agree() {
        let shape = ContextShape::new(3, 3);
        let a = model(ModelParams::ising(10, 0.3), shape, Representation::Dense);
        let b = model(ModelParams::ising(10, 0.3), shape, Representation::Implicit);
        for (x, y) in a.table().iter().zip(b.table()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn json_layout_and_round_trip() {
        let m = model(ModelParams::ising(6, 0.25).with_mu(0.05), ContextShape::new(1, 2), Representation::Dense);
        let text = m.to_json();
        let keys = [
            "width", "cyclic", "beta", "mu", "jh", "jv", "before", "after", "table", "ctx_prob", "bit_order",
        ];
        let mut last = 0;
        for k in keys {
            let at = text.find(&format!("\"{k}\"")).unwrap();
            assert!(at >= last, "{k} out of order");
            last = at;
        }
        assert!(text.contains("\"beta\": 1.0000000000000000e0"));
        let back = ScanModel::from_json(&text).unwrap();
        assert_eq!(back.table(), m.table());
        assert_eq!(back.ctx_prob(), m.ctx_prob());
        assert_eq!(back.params(), m.params());
        assert_eq!(back.identity_hash(), m.identity_hash());
        assert!(ScanModel::from_json(&text.replace("before-msb", "after-msb")).is_err());
        assert!(ScanModel::from_json("{}").is_err());
    }
}
