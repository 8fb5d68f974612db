//! Exact per-node energy and entropy of the zero-field square-lattice Ising
//! model in the thermodynamic limit.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_kronrod, tanh_sinh, Quadrature};

const TOL: f64 = 1e-13;
const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactUH {
    pub u: f64,
    /// Bits per node.
    pub h: f64,
    pub j: f64,
    pub beta: f64,
    pub quadrature_error: f64,
    /// Set within 1e-8 of sinh(2 beta J) = 1, where accuracy is reduced.
    pub near_critical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    GaussKronrod,
    TanhSinh,
}

impl Integrator {
    fn run<F: Fn(f64) -> f64>(self, f: F, a: f64, b: f64) -> Quadrature {
        match self {
            Integrator::GaussKronrod => gauss_kronrod(f, a, b, TOL, MAX_INTERVALS),
            Integrator::TanhSinh => tanh_sinh(f, a, b, TOL),
        }
    }
}

struct Integrals {
    /// `(2 tanh^2 - 1) K`, the singular part of U.
    elliptic: Quadrature,
    /// Integral of the free-energy log term over [0, pi].
    free: Quadrature,
}

fn integrals(x: f64, with: Integrator) -> Integrals {
    let s = x.sinh();
    let k = 1.0 / (s * s);
    let t2 = x.tanh().powi(2);
    let coeff = 2.0 * t2 - 1.0;
    // 1 - m sin^2 = cos^2 + (1 - m) sin^2 with 1 - m = ((1-k)/(1+k))^2
    let one_minus_m = ((1.0 - k) / (1.0 + k)).powi(2);
    let elliptic = if coeff == 0.0 {
        Quadrature {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        }
    } else {
        let q = with.run(
            |th: f64| {
                let (sn, cs) = th.sin_cos();
                1.0 / (cs * cs + one_minus_m * sn * sn).sqrt()
            },
            0.0,
            PI / 2.0,
        );
        Quadrature {
            value: coeff * q.value,
            error: coeff.abs() * q.error,
            evaluations: q.evaluations,
        }
    };
    // ln(cosh^2 x + r/k) = 2 ln cosh x + ln(1 + r tanh^2 x), r = sqrt((1-k)^2 + 4k sin^2)
    let ln_cosh = x + (-2.0 * x).exp().ln_1p() - LN_2;
    let half = with.run(
        |th: f64| {
            let sn = th.sin();
            let r = ((1.0 - k).powi(2) + 4.0 * k * sn * sn).sqrt();
            2.0 * ln_cosh + (r * t2).ln_1p()
        },
        0.0,
        PI / 2.0,
    );
    let free = Quadrature {
        value: 2.0 * half.value,
        error: 2.0 * half.error,
        evaluations: half.evaluations,
    };
    Integrals { elliptic, free }
}

fn assemble(j: f64, beta: f64, x: f64, q: &Integrals) -> (f64, f64) {
    let u = -j / x.tanh() * (1.0 + 2.0 / PI * q.elliptic.value);
    let f = -LN_2 / (2.0 * beta) - q.free.value / (2.0 * PI * beta);
    (u, beta * (u - f) / LN_2)
}

fn check(j: f64, beta: f64) -> Result<()> {
    if !(j >= 0.0 && j.is_finite()) {
        return Err(Error::InvalidArgument(format!("J must be finite and >= 0, got {j}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta must be finite and > 0, got {beta}")));
    }
    if 2.0 * beta * j > 300.0 {
        return Err(Error::InvalidArgument(format!(
            "beta*J = {} is beyond the representable range",
            beta * j
        )));
    }
    Ok(())
}

/// Evaluates with a single integrator; the error is that rule's own estimate.
pub fn exact_uh_with(j: f64, beta: f64, with: Integrator) -> Result<ExactUH> {
    check(j, beta)?;
    if j == 0.0 {
        return Ok(ExactUH {
            u: 0.0,
            h: 1.0,
            j,
            beta,
            quadrature_error: 0.0,
            near_critical: false,
        });
    }
    let x = 2.0 * beta * j;
    let q = integrals(x, with);
    let (u, h) = assemble(j, beta, x, &q);
    let eu = j / x.tanh() * 2.0 / PI * q.elliptic.error;
    let ef = q.free.error / (2.0 * PI * beta);
    Ok(ExactUH {
        u,
        h,
        j,
        beta,
        quadrature_error: eu.max(beta * (eu + ef) / LN_2),
        near_critical: (x.sinh() - 1.0).abs() < 1e-8,
    })
}

/// Adaptive Gauss–Kronrod value; the reported error also covers the
/// disagreement with tanh-sinh.
pub fn exact_uh(j: f64, beta: f64) -> Result<ExactUH> {
    let primary = exact_uh_with(j, beta, Integrator::GaussKronrod)?;
    let check = exact_uh_with(j, beta, Integrator::TanhSinh)?;
    let spread = (primary.u - check.u).abs().max((primary.h - check.h).abs());
    Ok(ExactUH {
        quadrature_error: primary.quadrature_error.max(spread),
        ..primary
    })
}

/// Root of sinh(2 beta J) = 1 by bisection.
pub fn critical_coupling(beta: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0 / beta);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (2.0 * beta * mid).sinh() < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::elliptic_k;

    #[test]
    fn zero_coupling_is_exact() {
        let r = exact_uh(0.0, 1.0).unwrap();
        assert_eq!((r.u, r.h, r.quadrature_error), (0.0, 1.0, 0.0));
    }

    #[test]
    fn integrators_agree() {
        for j in [0.05, 0.2, 0.35, 0.43, 0.45, 0.6, 1.0, 2.0] {
            let a = exact_uh_with(j, 1.0, Integrator::GaussKronrod).unwrap();
            let b = exact_uh_with(j, 1.0, Integrator::TanhSinh).unwrap();
            assert!((a.u - b.u).abs() <= 1e-10, "J={j}: {} vs {}", a.u, b.u);
            assert!((a.h - b.h).abs() <= 1e-10, "J={j}: {} vs {}", a.h, b.h);
        }
    }

    #[test]
    fn elliptic_term_matches_agm() {
        for j in [0.2f64, 0.42, 0.5] {
            let x = 2.0 * j;
            let k = 1.0 / x.sinh().powi(2);
            let m = 4.0 * k / (1.0 + k).powi(2);
            let coeff = 2.0 * x.tanh().powi(2) - 1.0;
            let q = integrals(x, Integrator::GaussKronrod);
            assert!((q.elliptic.value - coeff * elliptic_k(m)).abs() < 1e-12);
        }
    }

    #[test]
    fn critical_point() {
        let jc = critical_coupling(1.0);
        assert!((jc - 1f64.asinh() / 2.0).abs() < 1e-15);
        assert!((jc - 0.4407).abs() < 1e-4);
        let r = exact_uh(jc, 1.0).unwrap();
        assert!(r.near_critical);
        // U_c = -sqrt(2) J_c; beta F_c = -(ln 2 / 2 + 2G/pi), G = Catalan's constant
        let catalan = 0.915_965_594_177_219;
        assert!((r.u + 2f64.sqrt() * jc).abs() < 1e-8, "{}", r.u);
        let h = (-(2f64.sqrt()) * jc + LN_2 / 2.0 + 2.0 * catalan / PI) / LN_2;
        assert!((r.h - h).abs() < 1e-8, "{} vs {h}", r.h);
        assert!(!exact_uh(0.3, 1.0).unwrap().near_critical);
    }

    #[test]
    fn near_critical_stays_accurate() {
        let jc = critical_coupling(1.0);
        for d in [-1e-3, -1e-6, 1e-6, 1e-3] {
            let a = exact_uh_with(jc + d, 1.0, Integrator::GaussKronrod).unwrap();
            let b = exact_uh_with(jc + d, 1.0, Integrator::TanhSinh).unwrap();
            assert!((a.u - b.u).abs() < 1e-8 && (a.h - b.h).abs() < 1e-8, "d={d}");
        }
    }

    #[test]
    fn weak_coupling_series() {
        // high-temperature expansion: ln Z / N = ln 2 + 2 ln cosh J + t^4 + 2t^6 + O(t^8), t = tanh J
        let j: f64 = 0.01;
        let t = j.tanh();
        let r = exact_uh(j, 1.0).unwrap();
        let u = -2.0 * j * t - (4.0 * t.powi(3) + 12.0 * t.powi(5)) * j * (1.0 - t * t);
        let h = (LN_2 + 2.0 * j.cosh().ln() + t.powi(4) + 2.0 * t.powi(6) + u) / LN_2;
        assert!((r.u - u).abs() < 1e-11, "{}", r.u);
        assert!((r.h - h).abs() < 1e-11, "{}", r.h);
    }

    #[test]
    fn monotone_and_bounded() {
        let mut last = f64::INFINITY;
        for i in 0..=200 {
            let r = exact_uh(i as f64 * 0.01, 1.0).unwrap();
            assert!(r.h <= last + 1e-12, "J={}", r.j);
            assert!((0.0..=1.0).contains(&r.h) && r.u <= 0.0);
            last = r.h;
        }
    }

    #[test]
    fn strong_coupling_limit() {
        let r = exact_uh(3.0, 1.0).unwrap();
        assert!((r.u / -6.0 - 1.0).abs() <= 1e-3);
        assert!(r.h >= 0.0 && r.h < 1e-6);
    }

    #[test]
    fn beta_scaling() {
        // only beta*J matters, with U scaling as J
        let a = exact_uh(0.3, 1.0).unwrap();
        let b = exact_uh(0.6, 0.5).unwrap();
        assert!((b.u - 2.0 * a.u).abs() < 1e-12 && (a.h - b.h).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(exact_uh(-0.1, 1.0).is_err());
        assert!(exact_uh(0.1, 0.0).is_err());
        assert!(exact_uh(f64::NAN, 1.0).is_err());
    }
}
