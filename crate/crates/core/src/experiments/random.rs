//! Hidden-basis recovery on rotated sparse 0/1 matrices.
//!
//! Each `M_k` has `o` ones placed uniformly at random; the observed matrices
//! are `A_k = U·M_k·Vᵀ` for Haar-random `U`, `V`. A candidate basis is scored
//! by `Σ_ijk c_ijk⁴ / s₀` with `s₀ = Σ_ijk (M_k)_ij⁴`: 1 means the sparse
//! structure was recovered, and the ratio can never exceed `o`.

use std::cmp::Ordering;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ExperimentError, Result};
use crate::csvd::{csvd, BasisPair, CsvdConfig, MatrixSet, Normalization};
use crate::matkit::{random_orthogonal, Mat};

pub const DEFAULT_P_GRID: [f64; 8] = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0];
pub const DEFAULT_O_RANGE: [usize; 6] = [1, 2, 3, 4, 8, 16];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomExpConfig {
    pub n: usize,
    pub k: usize,
    /// Ones per matrix.
    pub o: usize,
    pub p_grid: Vec<f64>,
    pub trials: usize,
    pub normalization: Normalization,
    pub seed: u64,
}

impl Default for RandomExpConfig {
    fn default() -> Self {
        Self {
            n: 10,
            k: 10,
            o: 3,
            p_grid: DEFAULT_P_GRID.to_vec(),
            trials: 10,
            normalization: Normalization::None,
            seed: 0,
        }
    }
}

impl RandomExpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ExperimentError::InvalidConfig(msg));
        if self.n == 0 || self.k == 0 {
            return bad(format!("n and K must be positive (n={}, K={})", self.n, self.k));
        }
        if self.o == 0 || self.o > self.n * self.n {
            return bad(format!("o must lie in 1..={}, got {}", self.n * self.n, self.o));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.p_grid.is_empty() {
            return bad("p grid is empty".into());
        }
        for &p in &self.p_grid {
            CsvdConfig::new(p, 1.0, self.normalization)?;
        }
        Ok(())
    }
}

/// One generated problem: originals, hidden bases, observations.
#[derive(Debug, Clone)]
pub struct SparseInstance {
    pub originals: MatrixSet,
    pub true_u: Mat,
    pub true_v: Mat,
    pub transformed: MatrixSet,
}

impl SparseInstance {
    pub fn true_basis(&self) -> BasisPair {
        BasisPair { u: self.true_u.clone(), v: self.true_v.clone() }
    }
}

pub fn gen_sparse_set<R: Rng + ?Sized>(cfg: &RandomExpConfig, rng: &mut R) -> Result<SparseInstance> {
    let n = cfg.n;
    if cfg.o == 0 || cfg.o > n * n {
        return Err(ExperimentError::InvalidConfig(format!("o must lie in 1..={}, got {}", n * n, cfg.o)));
    }
    let mut originals = Vec::with_capacity(cfg.k);
    for _ in 0..cfg.k {
        let mut m = Mat::zeros(n, n);
        for pos in sample(rng, n * n, cfg.o) {
            m[(pos / n, pos % n)] = 1.0;
        }
        originals.push(m);
    }
    let true_u = random_orthogonal(n, rng)?;
    let true_v = random_orthogonal(n, rng)?;
    let vt = true_v.transpose();
    let transformed = originals
        .iter()
        .map(|m| true_u.matmul(m).and_then(|x| x.matmul(&vt)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(SparseInstance {
        originals: MatrixSet::uniform(originals)?,
        true_u,
        true_v,
        transformed: MatrixSet::uniform(transformed)?,
    })
}

fn fourth_power_sum(m: &Mat) -> f64 {
    m.as_slice().iter().map(|x| (x * x) * (x * x)).sum()
}

/// `Σ_ijk ((uᵀ A_k v)_ij)⁴ / s₀`, always on the raw (unnormalized) `A_k`.
pub fn eval_ratio(originals: &MatrixSet, transformed: &MatrixSet, basis: &BasisPair) -> Result<f64> {
    let s0: f64 = originals.matrices().iter().map(fourth_power_sum).sum();
    if s0 <= 0.0 {
        return Err(ExperimentError::ZeroReference);
    }
    let mut total = 0.0;
    for a in transformed.matrices() {
        total += fourth_power_sum(&basis.rotate(a)?);
    }
    Ok(total / s0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub o: usize,
    pub p: f64,
    pub trial: usize,
    pub normalized: Normalization,
    pub ratio: f64,
}

fn record_order(a: &ExperimentRecord, b: &ExperimentRecord) -> Ordering {
    a.o.cmp(&b.o)
        .then(a.p.total_cmp(&b.p))
        .then(a.trial.cmp(&b.trial))
        .then(a.normalized.cmp(&b.normalized))
}

/// Generator for one trial, independent of how trials are scheduled.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// For every trial a fresh instance; for every `p` a CSVD basis (`q = 1`,
/// unit weights) scored by [`eval_ratio`]. Sorted by `(o, p, trial)`.
pub fn run_random_experiment(cfg: &RandomExpConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let mut records = Vec::with_capacity(cfg.trials * cfg.p_grid.len());
    for trial in 0..cfg.trials {
        let inst = gen_sparse_set(cfg, &mut trial_rng(cfg.seed, trial))?;
        for &p in &cfg.p_grid {
            let csvd_cfg = CsvdConfig::new(p, 1.0, cfg.normalization)?;
            let basis = csvd(&inst.transformed, &csvd_cfg)?;
            let ratio = eval_ratio(&inst.originals, &inst.transformed, &basis)?;
            records.push(ExperimentRecord { o: cfg.o, p, trial, normalized: cfg.normalization, ratio });
        }
    }
    records.sort_by(record_order);
    Ok(records)
}

/// Runs [`run_random_experiment`] for every `o` and normalization in turn.
pub fn run_sweep(base: &RandomExpConfig, o_values: &[usize], modes: &[Normalization]) -> Result<Vec<ExperimentRecord>> {
    let mut all = Vec::new();
    for &o in o_values {
        for &normalization in modes {
            let cfg = RandomExpConfig { o, normalization, ..base.clone() };
            all.extend(run_random_experiment(&cfg)?);
        }
    }
    all.sort_by(record_order);
    Ok(all)
}

/// Per `(o, normalization, p)` summary over trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub o: usize,
    pub normalized: Normalization,
    pub p: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

pub fn aggregate(records: &[ExperimentRecord]) -> Vec<AggregateRow> {
    let mut sorted: Vec<&ExperimentRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        a.o.cmp(&b.o)
            .then(a.normalized.cmp(&b.normalized))
            .then(a.p.total_cmp(&b.p))
            .then(a.trial.cmp(&b.trial))
    });
    let mut rows = Vec::new();
    for group in sorted.chunk_by(|a, b| a.o == b.o && a.normalized == b.normalized && a.p == b.p) {
        let mut ratios: Vec<f64> = group.iter().map(|r| r.ratio).collect();
        ratios.sort_by(f64::total_cmp);
        let len = ratios.len();
        let median = if len % 2 == 1 { ratios[len / 2] } else { 0.5 * (ratios[len / 2 - 1] + ratios[len / 2]) };
        rows.push(AggregateRow {
            o: group[0].o,
            normalized: group[0].normalized,
            p: group[0].p,
            median,
            min: ratios[0],
            max: ratios[len - 1],
            count: len,
        });
    }
    rows
}
