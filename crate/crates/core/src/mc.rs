//! Single-site random-scan Metropolis on a torus, used as an independent
//! check of scan-model statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::numeric::fmt17;
use crate::pattern::ModelParams;

pub const BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub rows: usize,
    pub cols: usize,
    /// `width` and `cyclic` are ignored.
    pub params: ModelParams,
    pub sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(rows: usize, cols: usize, params: ModelParams, sweeps: usize, seed: u64) -> Self {
        McConfig {
            rows,
            cols,
            params,
            sweeps,
            burn_in: sweeps / 10,
            thin: 1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::InvalidArgument(format!(
                "torus must be at least 2x2, got {}x{}",
                self.rows, self.cols
            )));
        }
        if self.sweeps <= self.burn_in {
            return Err(Error::InvalidArgument(format!(
                "sweeps ({}) must exceed burn_in ({})",
                self.sweeps, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidArgument("thin must be >= 1".into()));
        }
        let p = &self.params;
        if ![p.beta, p.mu, p.jh, p.jv].iter().all(|x| x.is_finite()) || p.beta <= 0.0 {
            return Err(Error::InvalidParams("beta must be > 0 and all couplings finite".into()));
        }
        Ok(())
    }
}

/// Energy change from flipping spin `s` whose horizontal and vertical
/// neighbour sums are `h` and `v`.
pub fn flip_delta(s: i8, h: i32, v: i32, params: &ModelParams) -> f64 {
    2.0 * f64::from(s) * (params.mu + params.jh * f64::from(h) + params.jv * f64::from(v))
}

pub fn acceptance_probability(delta: f64, beta: f64) -> f64 {
    if delta <= 0.0 {
        1.0
    } else {
        (-beta * delta).exp()
    }
}

/// Chain state. Energy is tracked through integer sums so it never drifts.
pub struct McChain {
    cfg: McConfig,
    spins: Vec<i8>,
    rng: ChaCha8Rng,
    mag: i64,
    bonds_h: i64,
    bonds_v: i64,
    sweeps_done: usize,
    accepted: u64,
    proposed: u64,
}

impl McChain {
    /// Starts from independent fair coins drawn from the chain's own stream.
    pub fn new(cfg: McConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let spins: Vec<i8> = (0..cfg.rows * cfg.cols)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        let mut chain = McChain {
            cfg,
            spins,
            rng,
            mag: 0,
            bonds_h: 0,
            bonds_v: 0,
            sweeps_done: 0,
            accepted: 0,
            proposed: 0,
        };
        chain.recount();
        Ok(chain)
    }

    fn recount(&mut self) {
        let (rows, cols) = (self.cfg.rows, self.cfg.cols);
        self.mag = self.spins.iter().map(|&s| i64::from(s)).sum();
        self.bonds_h = 0;
        self.bonds_v = 0;
        for r in 0..rows {
            for c in 0..cols {
                let s = i64::from(self.spins[r * cols + c]);
                self.bonds_h += s * i64::from(self.spins[r * cols + (c + 1) % cols]);
                self.bonds_v += s * i64::from(self.spins[((r + 1) % rows) * cols + c]);
            }
        }
    }

    fn neighbours(&self, r: usize, c: usize) -> (i32, i32) {
        let (rows, cols) = (self.cfg.rows, self.cfg.cols);
        let at = |r: usize, c: usize| i32::from(self.spins[r * cols + c]);
        (
            at(r, (c + cols - 1) % cols) + at(r, (c + 1) % cols),
            at((r + rows - 1) % rows, c) + at((r + 1) % rows, c),
        )
    }

    /// `rows * cols` proposals at uniformly random sites.
    pub fn sweep(&mut self) {
        let (rows, cols) = (self.cfg.rows, self.cfg.cols);
        let n = rows * cols;
        let params = self.cfg.params;
        for _ in 0..n {
            let i = self.rng.random_range(0..n);
            let u: f64 = self.rng.random();
            let (r, c) = (i / cols, i % cols);
            let s = self.spins[i];
            let (h, v) = self.neighbours(r, c);
            let delta = flip_delta(s, h, v, &params);
            if u < acceptance_probability(delta, params.beta) {
                self.spins[i] = -s;
                self.accepted += 1;
                let s = i64::from(s);
                self.mag -= 2 * s;
                self.bonds_h -= 2 * s * i64::from(h);
                self.bonds_v -= 2 * s * i64::from(v);
            }
        }
        self.proposed += n as u64;
        self.sweeps_done += 1;
    }

    pub fn sweeps_done(&self) -> usize {
        self.sweeps_done
    }

    pub fn energy_per_node(&self) -> f64 {
        let p = &self.cfg.params;
        let e = -p.mu * self.mag as f64 - p.jh * self.bonds_h as f64 - p.jv * self.bonds_v as f64;
        e / self.spins.len() as f64
    }

    pub fn magnetization(&self) -> f64 {
        self.mag as f64 / self.spins.len() as f64
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn field(&self) -> Field {
        Field {
            rows: self.cfg.rows,
            cols: self.cfg.cols,
            cells: self.spins.clone(),
            seed: self.cfg.seed,
            model_hash: String::new(),
        }
    }

    /// Adds counts of all 2x2 torus blocks, indexed upper row then lower
    /// row, MSB first, bit 1 = +1.
    fn count_blocks(&self, counts: &mut [u64; 16]) {
        let (rows, cols) = (self.cfg.rows, self.cfg.cols);
        let bit = |r: usize, c: usize| usize::from(self.spins[(r % rows) * cols + c % cols] > 0);
        for r in 0..rows {
            for c in 0..cols {
                let key = (bit(r, c) << 3) | (bit(r, c + 1) << 2) | (bit(r + 1, c) << 1) | bit(r + 1, c + 1);
                counts[key] += 1;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunningEstimate {
    pub sweep_index: usize,
    pub u: f64,
    pub mag: f64,
    /// NaN until there are enough samples for the batch means.
    pub stderr_u: f64,
}

#[derive(Debug, Clone)]
pub struct McReport {
    pub running: Vec<RunningEstimate>,
    pub u: f64,
    pub u_stderr: f64,
    pub mag: f64,
    pub mag_stderr: f64,
    pub block_freq: [f64; 16],
    pub acceptance_rate: f64,
    pub final_field: Field,
}

/// Batch-means standard error of the mean over `BATCHES` equal batches.
/// A remainder at the start of the series is dropped.
pub fn batch_means_stderr(series: &[f64]) -> f64 {
    let size = series.len() / BATCHES;
    if size == 0 {
        return f64::NAN;
    }
    let skip = series.len() - size * BATCHES;
    let means: Vec<f64> = series[skip..]
        .chunks(size)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / BATCHES as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    (var / BATCHES as f64).sqrt()
}

fn prefix_stderr(prefix: &[f64], n: usize) -> f64 {
    // prefix[i] = sum of the first i samples
    let size = n / BATCHES;
    if size == 0 {
        return f64::NAN;
    }
    let skip = n - size * BATCHES;
    let means: Vec<f64> = (0..BATCHES)
        .map(|b| (prefix[skip + (b + 1) * size] - prefix[skip + b * size]) / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / BATCHES as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    (var / BATCHES as f64).sqrt()
}

/// Runs the chain, sampling every `thin` sweeps after `burn_in`.
pub fn mh_run(cfg: &McConfig) -> Result<McReport> {
    mh_run_with(cfg, |_| {})
}

/// Like [`mh_run`], calling `observe` on the chain at every recorded sample.
pub fn mh_run_with(cfg: &McConfig, mut observe: impl FnMut(&McChain)) -> Result<McReport> {
    let mut chain = McChain::new(*cfg)?;
    let mut us = Vec::new();
    let mut mags = Vec::new();
    let mut prefix = vec![0.0];
    let mut running = Vec::new();
    let mut blocks = [0u64; 16];
    for sweep in 1..=cfg.sweeps {
        chain.sweep();
        if sweep <= cfg.burn_in || (sweep - cfg.burn_in) % cfg.thin != 0 {
            continue;
        }
        let u = chain.energy_per_node();
        us.push(u);
        mags.push(chain.magnetization());
        prefix.push(prefix.last().unwrap() + u);
        chain.count_blocks(&mut blocks);
        let n = us.len();
        running.push(RunningEstimate {
            sweep_index: sweep,
            u: prefix[n] / n as f64,
            mag: mags.iter().sum::<f64>() / n as f64,
            stderr_u: prefix_stderr(&prefix, n),
        });
        observe(&chain);
    }
    let n = us.len() as f64;
    let total: u64 = blocks.iter().sum();
    let mut block_freq = [0.0; 16];
    for (f, &c) in block_freq.iter_mut().zip(&blocks) {
        *f = c as f64 / total as f64;
    }
    Ok(McReport {
        u: us.iter().sum::<f64>() / n,
        u_stderr: batch_means_stderr(&us),
        mag: mags.iter().sum::<f64>() / n,
        mag_stderr: batch_means_stderr(&mags),
        block_freq,
        acceptance_rate: chain.accepted as f64 / chain.proposed as f64,
        running,
        final_field: chain.field(),
    })
}

pub fn running_csv(report: &McReport) -> String {
    let mut s = String::from("sweep_index,U,mag,stderr_U\n");
    for r in &report.running {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.sweep_index,
            fmt17(r.u),
            fmt17(r.mag),
            fmt17(r.stderr_u)
        ));
    }
    s
}
