//! Width-`w` stripe patterns over the spin alphabet {-1, +1} and their energies.
//!
//! A pattern is stored as an integer in `[0, 2^w)`. Position `p` (0 = leftmost)
//! is bit `w - 1 - p`; bit 1 is spin +1 and bit 0 is spin -1.
//!
//! Forbidden configurations carry energy `+inf`, which the transfer operator
//! turns into an exact zero weight.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard upper bound on stripe width; patterns are indexed by `usize`.
pub const MAX_WIDTH: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub mu: f64,
    /// Coupling between neighbours inside a stripe.
    pub jh: f64,
    /// Coupling between neighbouring stripes.
    pub jv: f64,
    pub width: usize,
    pub cyclic: bool,
}

impl ModelParams {
    /// Isotropic zero-field Ising model at `beta = 1` on a cyclic stripe.
    pub fn ising(width: usize, j: f64) -> Self {
        ModelParams {
            beta: 1.0,
            mu: 0.0,
            jh: j,
            jv: j,
            width,
            cyclic: true,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_couplings(mut self, jh: f64, jv: f64) -> Self {
        self.jh = jh;
        self.jv = jv;
        self
    }

    pub fn with_cyclic(mut self, cyclic: bool) -> Self {
        self.cyclic = cyclic;
        self
    }

    pub fn with_width(mut self, width: usize) -> Self {
        self.width = width;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.width > MAX_WIDTH {
            return Err(Error::InvalidParams(format!(
                "width must be in 1..={MAX_WIDTH}, got {}",
                self.width
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParams(format!("beta must be positive and finite, got {}", self.beta)));
        }
        for (name, v) in [("mu", self.mu), ("jh", self.jh), ("jv", self.jv)] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }

    pub fn num_patterns(&self) -> usize {
        1usize << self.width
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinPattern {
    index: usize,
    width: usize,
}

impl SpinPattern {
    pub fn new(index: usize, width: usize) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH || index >> width != 0 {
            return Err(Error::IndexOutOfRange { index, width });
        }
        Ok(SpinPattern { index, width })
    }

    /// Encodes spins given left to right. Every entry must be -1 or +1.
    pub fn from_spins(spins: &[i8]) -> Result<Self> {
        let width = spins.len();
        if width == 0 || width > MAX_WIDTH {
            return Err(Error::InvalidArgument(format!("pattern width {width} out of range")));
        }
        let mut index = 0usize;
        for &s in spins {
            let bit = match s {
                1 => 1,
                -1 => 0,
                other => return Err(Error::InvalidArgument(format!("spin must be -1 or +1, got {other}"))),
            };
            index = (index << 1) | bit;
        }
        Ok(SpinPattern { index, width })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn bit(&self, p: usize) -> usize {
        pattern_bit(self.index, self.width, p)
    }

    #[inline]
    pub fn spin(&self, p: usize) -> i8 {
        2 * self.bit(p) as i8 - 1
    }

    pub fn spins(&self) -> Vec<i8> {
        (0..self.width).map(|p| self.spin(p)).collect()
    }

    /// Global spin flip.
    pub fn flipped(&self) -> Self {
        SpinPattern {
            index: !self.index & ((1usize << self.width) - 1),
            width: self.width,
        }
    }
}

/// Bit at position `p` (0 = leftmost) of a width-`w` pattern index.
#[inline]
pub fn pattern_bit(index: usize, width: usize, p: usize) -> usize {
    (index >> (width - 1 - p)) & 1
}

/// Tabulated energies over the alphabet, indexed by bit (0 for spin -1, 1 for +1).
///
/// Entries may be `f64::INFINITY` for forbidden configurations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CustomEnergies {
    pub node: [f64; 2],
    /// `horizontal[left][right]` for neighbours inside a stripe.
    pub horizontal: [[f64; 2]; 2],
    /// `vertical[previous][next]` for the same position in consecutive stripes.
    pub vertical: [[f64; 2]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InteractionSpec {
    /// Energies from `mu`, `jh` and `jv` of [`ModelParams`].
    #[default]
    Ising,
    /// No two neighbouring `1`s (spin +1) anywhere; all allowed patterns weigh the same.
    /// Couplings and field are ignored.
    HardSquare,
    Custom(CustomEnergies),
}

impl InteractionSpec {
    #[inline]
    pub fn node_energy(&self, params: &ModelParams, bit: usize) -> f64 {
        match self {
            InteractionSpec::Ising => -params.mu * spin_of(bit),
            InteractionSpec::HardSquare => 0.0,
            InteractionSpec::Custom(c) => c.node[bit],
        }
    }

    #[inline]
    pub fn horizontal_energy(&self, params: &ModelParams, left: usize, right: usize) -> f64 {
        match self {
            InteractionSpec::Ising => -params.jh * spin_of(left) * spin_of(right),
            InteractionSpec::HardSquare => hard_core(left, right),
            InteractionSpec::Custom(c) => c.horizontal[left][right],
        }
    }

    #[inline]
    pub fn vertical_energy(&self, params: &ModelParams, prev: usize, next: usize) -> f64 {
        match self {
            InteractionSpec::Ising => -params.jv * spin_of(prev) * spin_of(next),
            InteractionSpec::HardSquare => hard_core(prev, next),
            InteractionSpec::Custom(c) => c.vertical[prev][next],
        }
    }

    /// Whether `E_uv = E_vu` for all pattern pairs.
    pub fn is_symmetric(&self) -> bool {
        match self {
            InteractionSpec::Custom(c) => c.vertical[0][1] == c.vertical[1][0],
            _ => true,
        }
    }

    /// Energy attributed to one node given its left and upper neighbours
    /// (the per-node share used for scan-model energy averages).
    pub fn site_energy(&self, params: &ModelParams, bit: usize, left: usize, above: usize) -> f64 {
        self.node_energy(params, bit) + self.horizontal_energy(params, left, bit) + self.vertical_energy(params, above, bit)
    }
}

#[inline]
fn spin_of(bit: usize) -> f64 {
    2.0 * bit as f64 - 1.0
}

#[inline]
fn hard_core(a: usize, b: usize) -> f64 {
    if a == 1 && b == 1 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Energy of a single stripe: node terms plus intra-stripe bonds.
///
/// With `cyclic` the bond from the last position back to the first is added
/// for every width, so at width 2 the single bond is counted twice and at
/// width 1 the site bonds with itself.
pub fn pattern_energy(p: SpinPattern, params: &ModelParams, spec: &InteractionSpec) -> f64 {
    pattern_energy_index(p.index, params, spec)
}

pub(crate) fn pattern_energy_index(index: usize, params: &ModelParams, spec: &InteractionSpec) -> f64 {
    let w = params.width;
    let bit = |p: usize| pattern_bit(index, w, p);
    let mut e = 0.0;
    for p in 0..w {
        e += spec.node_energy(params, bit(p));
    }
    for p in 0..w.saturating_sub(1) {
        e += spec.horizontal_energy(params, bit(p), bit(p + 1));
    }
    if params.cyclic {
        e += spec.horizontal_energy(params, bit(w - 1), bit(0));
    }
    e
}

/// Interaction energy between stripe `u` and the following stripe `v`.
pub fn interaction_energy(u: SpinPattern, v: SpinPattern, params: &ModelParams, spec: &InteractionSpec) -> f64 {
    interaction_energy_index(u.index, v.index, params, spec)
}

pub(crate) fn interaction_energy_index(u: usize, v: usize, params: &ModelParams, spec: &InteractionSpec) -> f64 {
    let w = params.width;
    (0..w)
        .map(|p| spec.vertical_energy(params, pattern_bit(u, w, p), pattern_bit(v, w, p)))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pat(spins: &[i8]) -> SpinPattern {
        SpinPattern::from_spins(spins).unwrap()
    }

    #[test]
    fn energy_open_and_cyclic() {
        let params = ModelParams::ising(3, 1.0).with_mu(0.5).with_cyclic(false);
        let up = pat(&[1, 1, 1]);
        assert_eq!(pattern_energy(up, &params, &InteractionSpec::Ising), -3.5);
        let cyclic = params.with_cyclic(true);
        assert_eq!(pattern_energy(up, &cyclic, &InteractionSpec::Ising), -4.5);
    }

    #[test]
    fn cyclic_width_two_doubles_the_bond() {
        let params = ModelParams::ising(2, 1.0);
        assert_eq!(pattern_energy(pat(&[1, -1]), &params, &InteractionSpec::Ising), 2.0);
        assert_eq!(pattern_energy(pat(&[1, -1]), &params.with_cyclic(false), &InteractionSpec::Ising), 1.0);
    }

    #[test]
    fn hard_square_energies() {
        let params = ModelParams::ising(2, 0.0).with_cyclic(false);
        let spec = InteractionSpec::HardSquare;
        assert_eq!(pattern_energy(pat(&[1, 1]), &params, &spec), f64::INFINITY);
        assert_eq!(pattern_energy(pat(&[1, -1]), &params, &spec), 0.0);
        let u = pat(&[1, -1]);
        assert_eq!(interaction_energy(u, u, &params, &spec), f64::INFINITY);
        assert_eq!(interaction_energy(u, pat(&[-1, 1]), &params, &spec), 0.0);
    }

    #[test]
    fn interaction_sign() {
        let params = ModelParams::ising(3, 1.0);
        let up = pat(&[1, 1, 1]);
        let down = pat(&[-1, -1, -1]);
        assert_eq!(interaction_energy(up, up, &params, &InteractionSpec::Ising), -3.0);
        assert_eq!(interaction_energy(up, down, &params, &InteractionSpec::Ising), 3.0);
    }

    #[test]
    fn encoding_examples() {
        assert_eq!(SpinPattern::new(5, 3).unwrap().spins(), vec![1, -1, 1]);
        assert_eq!(SpinPattern::new(0, 1).unwrap().spins(), vec![-1]);
        assert_eq!(pat(&[-1, -1, -1, -1]).index(), 0);
        assert!(matches!(SpinPattern::new(8, 3), Err(Error::IndexOutOfRange { index: 8, width: 3 })));
        assert!(SpinPattern::from_spins(&[1, 0]).is_err());
    }

    #[test]
    fn hard_square_allowed_counts() {
        // brute force: open stripes without adjacent 1s follow Fibonacci counts
        for (w, expected) in [(1, 2), (2, 3), (3, 5), (4, 8), (5, 13)] {
            let params = ModelParams::ising(w, 0.0).with_cyclic(false);
            let allowed = (0..1usize << w)
                .filter(|&i| pattern_energy_index(i, &params, &InteractionSpec::HardSquare).is_finite())
                .count();
            assert_eq!(allowed, expected, "w={w}");
        }
    }

    #[test]
    fn positive_weight_iff_no_forbidden_contact() {
        let params = ModelParams::ising(3, 0.0).with_cyclic(false);
        let spec = InteractionSpec::HardSquare;
        for u in 0..8usize {
            for v in 0..8usize {
                let e = pattern_energy_index(u, &params, &spec) / 2.0
                    + interaction_energy_index(u, v, &params, &spec)
                    + pattern_energy_index(v, &params, &spec) / 2.0;
                let weight = (-params.beta * e).exp();
                let ok = u & (u >> 1) == 0 && v & (v >> 1) == 0 && u & v == 0;
                assert_eq!(weight > 0.0, ok, "u={u} v={v}");
            }
        }
    }

    proptest! {
        #[test]
        fn decode_encode_identity(w in 1usize..16, raw in any::<usize>()) {
            let index = raw & ((1 << w) - 1);
            let p = SpinPattern::new(index, w).unwrap();
            prop_assert_eq!(SpinPattern::from_spins(&p.spins()).unwrap(), p);
            for q in 0..w {
                prop_assert_eq!(p.spin(q), 2 * ((index >> (w - 1 - q)) & 1) as i8 - 1);
            }
        }

        #[test]
        fn flip_invariance_without_field(w in 1usize..10, u in any::<usize>(), v in any::<usize>(),
                                         jh in -2.0f64..2.0, jv in -2.0f64..2.0, cyclic in any::<bool>()) {
            let params = ModelParams::ising(w, 0.0).with_couplings(jh, jv).with_cyclic(cyclic);
            let u = SpinPattern::new(u & ((1 << w) - 1), w).unwrap();
            let v = SpinPattern::new(v & ((1 << w) - 1), w).unwrap();
            let spec = InteractionSpec::Ising;
            prop_assert_eq!(pattern_energy(u, &params, &spec), pattern_energy(u.flipped(), &params, &spec));
            prop_assert_eq!(
                interaction_energy(u, v, &params, &spec),
                interaction_energy(u.flipped(), v.flipped(), &params, &spec)
            );
            prop_assert_eq!(interaction_energy(u, v, &params, &spec), interaction_energy(v, u, &params, &spec));
        }
    }
}
