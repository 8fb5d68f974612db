//! Chain of planar spin angles with bond energy
//! `-J sin a sin b - h (cos a + cos b) / 2`, discretized onto a uniform grid
//! and solved with the same dominant-eigenpair machinery as the lattice
//! models. Temperature is folded into `J` and `h`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{fmt17, tree_sum};
use crate::operator::{power_iteration, DenseMatrix, SolverOptions};

pub const MAX_LAT: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    pub lat: usize,
    /// `2 pi k / lat` for `k = 1..=lat`.
    pub angles: Vec<f64>,
}

impl AngleGrid {
    pub fn new(lat: usize) -> Result<Self> {
        if !(4..=MAX_LAT).contains(&lat) {
            return Err(Error::InvalidArgument(format!("lat must be in 4..={MAX_LAT}, got {lat}")));
        }
        let step = std::f64::consts::TAU / lat as f64;
        Ok(AngleGrid {
            lat,
            angles: (1..=lat).map(|k| step * k as f64).collect(),
        })
    }

    /// Index of the angle `2 pi - alpha_i` (the last point maps to itself).
    pub fn reflect(&self, i: usize) -> usize {
        let k = i + 1;
        if k == self.lat {
            i
        } else {
            self.lat - k - 1
        }
    }
}

pub fn bond_energy(j: f64, h: f64, a: f64, b: f64) -> f64 {
    -j * a.sin() * b.sin() - h * (a.cos() + b.cos()) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointAngleDistribution {
    pub j: f64,
    pub h: f64,
    pub lat: usize,
    pub lambda: f64,
    /// Row-major `Pr(alpha_i, alpha_{i+1})`.
    pub probs: Vec<f64>,
}

pub fn tfim_joint(j: f64, h: f64, lat: usize) -> Result<JointAngleDistribution> {
    if !j.is_finite() || !h.is_finite() {
        return Err(Error::InvalidArgument("J and h must be finite".into()));
    }
    let grid = AngleGrid::new(lat)?;
    let (sin, cos): (Vec<f64>, Vec<f64>) = grid.angles.iter().map(|a| a.sin_cos()).unzip();
    let m = DenseMatrix::from_fn(lat, |a, b| (j * sin[a] * sin[b] + h * (cos[a] + cos[b]) / 2.0).exp());
    let sol = power_iteration(&m, vec![1.0; lat], &SolverOptions::default())?;
    let psi = &sol.psi;
    let probs = (0..lat * lat)
        .map(|k| {
            let (a, b) = (k / lat, k % lat);
            psi[a] * m.get(a, b) * psi[b] / sol.lambda
        })
        .collect();
    Ok(JointAngleDistribution {
        j,
        h,
        lat,
        lambda: sol.lambda,
        probs,
    })
}

impl JointAngleDistribution {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.probs[a * self.lat + b]
    }

    pub fn total(&self) -> f64 {
        tree_sum(&self.probs)
    }

    /// Row sums, i.e. `Pr(alpha_i)`.
    pub fn marginal(&self) -> Vec<f64> {
        self.probs.chunks(self.lat).map(tree_sum).collect()
    }

    pub fn column_marginal(&self) -> Vec<f64> {
        (0..self.lat)
            .map(|b| (0..self.lat).map(|a| self.get(a, b)).sum())
            .collect()
    }

    /// `Pr(alpha_{i+1} | alpha_i = a)`.
    pub fn conditional(&self, a: usize) -> Vec<f64> {
        let row = &self.probs[a * self.lat..(a + 1) * self.lat];
        let s = tree_sum(row);
        row.iter().map(|x| x / s).collect()
    }

    /// Stationary chain of grid indices: the first from the marginal, the
    /// rest from the conditionals, one draw each.
    pub fn sample_chain(&self, len: usize, seed: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |w: &[f64], rng: &mut ChaCha8Rng| {
            let u: f64 = rng.random::<f64>() * w.iter().sum::<f64>();
            let mut acc = 0.0;
            for (i, &p) in w.iter().enumerate() {
                acc += p;
                if u < acc {
                    return i;
                }
            }
            w.iter().rposition(|&p| p > 0.0).unwrap_or(0)
        };
        let mut out = Vec::with_capacity(len);
        if len == 0 {
            return out;
        }
        let mut cur = draw(&self.marginal(), &mut rng);
        out.push(cur);
        for _ in 1..len {
            cur = draw(&self.probs[cur * self.lat..(cur + 1) * self.lat], &mut rng);
            out.push(cur);
        }
        out
    }

    /// Projects onto the grid of half the resolution. Each coarse angle takes
    /// its coincident fine point fully and half of each fine neighbour, so the
    /// coarse grid is not shifted relative to the fine one.
    pub fn coarsen_by_two(&self) -> Result<JointAngleDistribution> {
        if self.lat % 2 != 0 || self.lat < 8 {
            return Err(Error::InvalidArgument(format!("cannot halve lat={}", self.lat)));
        }
        let n = self.lat / 2;
        let fine = self.lat;
        // coarse index c (angle 2 pi (c+1)/n) coincides with fine index 2c+1
        let taps = |c: usize| [(2 * c, 0.5), (2 * c + 1, 1.0), ((2 * c + 2) % fine, 0.5)];
        let mut probs = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for (fa, wa) in taps(a) {
                    for (fb, wb) in taps(b) {
                        s += wa * wb * self.get(fa, fb);
                    }
                }
                probs[a * n + b] = s;
            }
        }
        Ok(JointAngleDistribution {
            j: self.j,
            h: self.h,
            lat: n,
            lambda: f64::NAN,
            probs,
        })
    }

    pub fn total_variation(&self, other: &JointAngleDistribution) -> Result<f64> {
        if self.lat != other.lat {
            return Err(Error::InvalidArgument("grids differ".into()));
        }
        Ok(0.5 * self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }

    /// `lat` lines of `lat` comma-separated values.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in self.probs.chunks(self.lat) {
            let cells: Vec<String> = row.iter().map(|&x| fmt17(x)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn header_json(&self) -> String {
        serde_json::json!({ "J": self.j, "h": self.h, "lat": self.lat }).to_string()
    }
}
