//! Line-by-line field generation from a scan model, plus empirical block
//! statistics and PBM output.
//!
//! One uniform draw per cell in row-major order from `ChaCha8Rng` seeded with
//! `seed_from_u64(seed)`; the cell is +1 when the draw is below the model's
//! `Pr(+1 | context)`. Near the left and top edges the context is truncated and
//! the matching reduced model is used.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::{InteractionSpec, ModelParams};
use crate::scan::{ReducedFamily, ScanModel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub rows: usize,
    pub cols: usize,
    /// Row-major spins, each +1 or -1.
    pub cells: Vec<i8>,
    pub seed: u64,
    pub model_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub model_hash: String,
}

impl Field {
    pub fn from_cells(rows: usize, cols: usize, cells: Vec<i8>) -> Result<Self> {
        if cells.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "{} cells for a {rows}x{cols} field",
                cells.len()
            )));
        }
        if cells.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidArgument("spins must be +1 or -1".into()));
        }
        Ok(Field {
            rows,
            cols,
            cells,
            seed: 0,
            model_hash: String::new(),
        })
    }

    pub fn get(&self, r: usize, c: usize) -> i8 {
        self.cells[r * self.cols + c]
    }

    fn bit(&self, r: usize, c: usize) -> usize {
        usize::from(self.get(r, c) > 0)
    }

    pub fn magnetization(&self) -> f64 {
        self.cells.iter().map(|&s| f64::from(s)).sum::<f64>() / self.cells.len() as f64
    }

    /// Mean site energy (field term plus the left and upper bonds) over cells
    /// that have both neighbours, so no wrap-around is assumed.
    pub fn energy_per_node(&self, params: &ModelParams, spec: &InteractionSpec) -> f64 {
        if self.rows < 2 || self.cols < 2 {
            return f64::NAN;
        }
        let mut total = 0.0;
        for r in 1..self.rows {
            for c in 1..self.cols {
                total += spec.site_energy(params, self.bit(r, c), self.bit(r, c - 1), self.bit(r - 1, c));
            }
        }
        total / ((self.rows - 1) * (self.cols - 1)) as f64
    }

    pub fn sidecar(&self) -> FieldSidecar {
        FieldSidecar {
            seed: self.seed,
            rows: self.rows,
            cols: self.cols,
            model_hash: self.model_hash.clone(),
        }
    }

    /// Plain PBM with +1 written as 1.
    pub fn to_pbm(&self) -> String {
        let mut s = format!("P1\n{} {}\n", self.cols, self.rows);
        for row in self.cells.chunks(self.cols.max(1)) {
            let line: Vec<&str> = row.iter().map(|&x| if x > 0 { "1" } else { "0" }).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_pbm(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        if tokens.next() != Some("P1") {
            return Err(Error::Parse("not a plain PBM (P1) file".into()));
        }
        let mut dim = || -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| Error::Parse("missing PBM dimensions".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("PBM dimension: {e}")))
        };
        let cols = dim()?;
        let rows = dim()?;
        let mut cells = Vec::with_capacity(rows * cols);
        for t in tokens {
            // P1 allows pixels without separators
            for ch in t.chars() {
                match ch {
                    '1' => cells.push(1),
                    '0' => cells.push(-1),
                    _ => return Err(Error::Parse(format!("bad PBM pixel {ch:?}"))),
                }
            }
        }
        Field::from_cells(rows, cols, cells)
    }
}

/// Generates a `rows x cols` field. The family must cover every reduced
/// shape up to the model's own.
pub fn sample(model: &ScanModel, family: &ReducedFamily, rows: usize, cols: usize, seed: u64) -> Result<Field> {
    let shape = model.shape();
    family.check_covers(shape.before, shape.after)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits = vec![0u8; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let b = shape.before.min(c);
            let a = if r > 0 { shape.after.min(cols - c) } else { 0 };
            let sub = if (b, a) == (shape.before, shape.after) {
                model
            } else {
                family.get(b, a).expect("checked above")
            };
            let mut key = 0usize;
            for cc in c - b..c {
                key = (key << 1) | bits[r * cols + cc] as usize;
            }
            for cc in c..c + a {
                key = (key << 1) | bits[(r - 1) * cols + cc] as usize;
            }
            let u: f64 = rng.random();
            bits[r * cols + c] = u8::from(u < sub.table()[key]);
        }
    }
    Ok(Field {
        rows,
        cols,
        cells: bits.iter().map(|&b| if b == 1 { 1 } else { -1 }).collect(),
        seed,
        model_hash: model.identity_hash(),
    })
}

/// Independent fields, one per seed, generated concurrently.
pub fn sample_batch(
    model: &ScanModel,
    family: &ReducedFamily,
    rows: usize,
    cols: usize,
    seeds: &[u64],
) -> Result<Vec<Field>> {
    seeds
        .par_iter()
        .map(|&s| sample(model, family, rows, cols, s))
        .collect()
}

/// Block frequencies indexed MSB-first: a `1 x k` block reads left to right;
/// a `2 x k` block reads the upper row then the lower row.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockFrequencies {
    pub k: usize,
    pub one_row: Vec<f64>,
    pub two_row: Vec<f64>,
}

/// Counts every block lying fully inside the field.
pub fn empirical_pattern_distribution(field: &Field, k: usize) -> Result<BlockFrequencies> {
    if !(1..=4).contains(&k) {
        return Err(Error::InvalidArgument(format!("block width must be 1..=4, got {k}")));
    }
    if field.rows < 2 || field.cols < k {
        return Err(Error::InvalidArgument(format!(
            "{}x{} field too small for 2x{k} blocks",
            field.rows, field.cols
        )));
    }
    let mut one = vec![0u64; 1 << k];
    let mut two = vec![0u64; 1 << (2 * k)];
    let row_key = |r: usize, c: usize| (c..c + k).fold(0usize, |acc, cc| (acc << 1) | field.bit(r, cc));
    for r in 0..field.rows {
        for c in 0..=field.cols - k {
            let top = row_key(r, c);
            one[top] += 1;
            if r + 1 < field.rows {
                two[(top << k) | row_key(r + 1, c)] += 1;
            }
        }
    }
    let normalize = |v: Vec<u64>| {
        let n: u64 = v.iter().sum();
        v.into_iter().map(|x| x as f64 / n as f64).collect()
    };
    Ok(BlockFrequencies {
        k,
        one_row: normalize(one),
        two_row: normalize(two),
    })
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pbm_round_trip() {
        let f = Field::from_cells(2, 3, vec![1, -1, 1, -1, -1, 1]).unwrap();
        let text = f.to_pbm();
        assert_eq!(text, "P1\n3 2\n1 0 1\n0 0 1\n");
        assert_eq!(Field::from_pbm(&text).unwrap().cells, f.cells);
        assert_eq!(Field::from_pbm("P1 # c\n3 1\n101").unwrap().cells, vec![1, -1, 1]);
        assert!(Field::from_pbm("P4\n1 1\n1").is_err());
        assert!(Field::from_pbm("P1\n2 2\n1 0 1").is_err());
    }

    #[test]
    fn all_plus_block() {
        let f = Field::from_cells(4, 5, vec![1; 20]).unwrap();
        let d = empirical_pattern_distribution(&f, 2).unwrap();
        assert_eq!(d.one_row[3], 1.0);
        assert_eq!(d.two_row[15], 1.0);
        assert_eq!(d.two_row.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn block_indexing() {
        // rows: + - / - -
        let f = Field::from_cells(2, 2, vec![1, -1, -1, -1]).unwrap();
        let d = empirical_pattern_distribution(&f, 2).unwrap();
        assert_eq!(d.two_row[0b10_00], 1.0);
        assert!(empirical_pattern_distribution(&f, 3).is_err());
        assert!(empirical_pattern_distribution(&f, 5).is_err());
    }

    #[test]
    fn energy_counts_left_and_upper_bonds() {
        let params = ModelParams::ising(4, 1.0).with_mu(0.5);
        let f = Field::from_cells(2, 2, vec![1, 1, 1, -1]).unwrap();
        // only (1,1): s=-1, left=+1, up=+1 -> -0.5*(-1) - 1*(-1) - 1*(-1)
        assert_eq!(f.energy_per_node(&params, &InteractionSpec::Ising), 2.5);
    }
}
