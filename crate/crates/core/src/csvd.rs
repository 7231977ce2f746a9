//! Common SVD: one basis pair `(U, V)` for a whole weighted matrix set.
//!
//! `U` is built from the eigenvectors of `Σ_k w_k^q (Ã_k Ã_kᵀ)^p` and `V`
//! from those of `Σ_k w_k^q (Ã_kᵀ Ã_k)^p`, where `Ã_k` is `A_k` after the
//! configured marginal normalization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matkit::{psd_power, svd, sym_eigen, LinalgError, Mat};

const ORTHO_TOL: f64 = 1e-10;
const ZERO_SUM: f64 = 1e-12;
const DEGENERATE_AVERAGE_REL: f64 = 1e-12;
const MAX_POWER: f64 = 16.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CsvdError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid matrix set: {0}")]
    InvalidSet(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("total sum {sum:e} is too close to zero for scaled rc normalization")]
    ZeroTotalSum { sum: f64 },
    #[error("weighted average is numerically zero (norm {norm:e}); its SVD basis is meaningless")]
    DegenerateAverage { norm: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("basis matrix {which} is not orthogonal (error {error:e})")]
    NotOrthogonal { which: &'static str, error: f64 },
}

pub type Result<T> = std::result::Result<T, CsvdError>;

/// Marginal removal applied to each matrix before anything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    #[default]
    None,
    /// `A − r·cᵀ` with row sums `r` and column sums `c`.
    Rc,
    /// `A − r·cᵀ / s` with `s = Σ a_ij`; zeroes every row and column sum.
    RcScaled,
}

impl Normalization {
    pub const ALL: [Normalization; 3] = [Normalization::None, Normalization::Rc, Normalization::RcScaled];

    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::None => "none",
            Normalization::Rc => "rc",
            Normalization::RcScaled => "rc-scaled",
        }
    }

    /// Normalizes one matrix. The scaled variant falls back to plain `rc`
    /// when the total sum vanishes.
    pub fn apply(self, a: &Mat) -> Mat {
        match self {
            Normalization::None => a.clone(),
            Normalization::Rc => normalize_rc(a, false).expect("unscaled rc cannot fail"),
            Normalization::RcScaled => normalize_rc(a, true)
                .unwrap_or_else(|_| normalize_rc(a, false).expect("unscaled rc cannot fail")),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Normalization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(Normalization::None),
            "rc" => Ok(Normalization::Rc),
            "rc-scaled" | "rc_scaled" => Ok(Normalization::RcScaled),
            other => Err(format!("unknown normalization '{other}' (expected none, rc or rc-scaled)")),
        }
    }
}

/// Subtracts the outer product of row sums and column sums.
///
/// With `scaled`, the outer product is divided by the total sum first, which
/// makes all row and column sums of the result vanish.
pub fn normalize_rc(a: &Mat, scaled: bool) -> Result<Mat> {
    let r = a.row_sums();
    let c = a.col_sums();
    let factor = if scaled {
        let s = a.sum();
        if s.abs() <= ZERO_SUM {
            return Err(CsvdError::ZeroTotalSum { sum: s });
        }
        1.0 / s
    } else {
        1.0
    };
    let mut out = a.clone();
    for (i, ri) in r.iter().enumerate() {
        for (j, cj) in c.iter().enumerate() {
            out[(i, j)] -= factor * ri * cj;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsvdConfig {
    /// Power applied to each Gram matrix.
    pub p: f64,
    /// Power applied to each weight.
    pub q: f64,
    pub normalization: Normalization,
}

impl Default for CsvdConfig {
    fn default() -> Self {
        Self { p: 1.0, q: 1.0, normalization: Normalization::None }
    }
}

impl CsvdConfig {
    pub fn new(p: f64, q: f64, normalization: Normalization) -> Result<Self> {
        let cfg = Self { p, q, normalization };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("p", self.p), ("q", self.q)] {
            if !(value > 0.0 && value <= MAX_POWER) {
                return Err(CsvdError::InvalidConfig(format!("{name} must lie in (0, 16], got {value}")));
            }
        }
        Ok(())
    }
}

/// `K ≥ 1` matrices of a common shape with non-negative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSet {
    matrices: Vec<Mat>,
    weights: Vec<f64>,
}

impl MatrixSet {
    pub fn new(matrices: Vec<Mat>, weights: Vec<f64>) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| CsvdError::InvalidSet("at least one matrix is required".into()))?;
        let shape = first.shape();
        if let Some(k) = matrices.iter().position(|m| m.shape() != shape) {
            return Err(CsvdError::InvalidSet(format!(
                "matrix {k} is {}x{}, expected {}x{}",
                matrices[k].rows(),
                matrices[k].cols(),
                shape.0,
                shape.1
            )));
        }
        if weights.len() != matrices.len() {
            return Err(CsvdError::InvalidSet(format!(
                "{} weights for {} matrices",
                weights.len(),
                matrices.len()
            )));
        }
        if let Some(k) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(CsvdError::InvalidSet(format!("weight {k} is {} (must be >= 0)", weights[k])));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(CsvdError::InvalidSet("at least one weight must be positive".into()));
        }
        Ok(Self { matrices, weights })
    }

    /// All weights set to one.
    pub fn uniform(matrices: Vec<Mat>) -> Result<Self> {
        let k = matrices.len();
        Self::new(matrices, vec![1.0; k])
    }

    pub fn matrices(&self) -> &[Mat] {
        &self.matrices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(n, m)` shared by every matrix.
    pub fn shape(&self) -> (usize, usize) {
        self.matrices[0].shape()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Mat, f64)> {
        self.matrices.iter().zip(self.weights.iter().copied())
    }

    /// Copy with every matrix normalized; weights are kept.
    pub fn normalized(&self, mode: Normalization) -> MatrixSet {
        match mode {
            Normalization::None => self.clone(),
            _ => MatrixSet {
                matrices: self.matrices.iter().map(|a| mode.apply(a)).collect(),
                weights: self.weights.clone(),
            },
        }
    }

    /// Reorders matrices and weights together.
    pub fn permuted(&self, order: &[usize]) -> MatrixSet {
        MatrixSet {
            matrices: order.iter().map(|&k| self.matrices[k].clone()).collect(),
            weights: order.iter().map(|&k| self.weights[k]).collect(),
        }
    }
}

/// Orthogonal `u` (`n×n`) and `v` (`m×m`).
#[derive(Debug, Clone, PartialEq)]
pub struct BasisPair {
    pub u: Mat,
    pub v: Mat,
}

impl BasisPair {
    pub fn new(u: Mat, v: Mat) -> Result<Self> {
        for (which, m) in [("u", &u), ("v", &v)] {
            if !m.is_square() {
                return Err(CsvdError::NotOrthogonal { which, error: f64::INFINITY });
            }
            let error = m.orthogonality_error();
            if error > ORTHO_TOL {
                return Err(CsvdError::NotOrthogonal { which, error });
            }
        }
        Ok(Self { u, v })
    }

    pub fn identity(n: usize, m: usize) -> Self {
        Self { u: Mat::identity(n), v: Mat::identity(m) }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.u.rows(), self.v.rows())
    }

    /// `uᵀ · a · v`.
    pub fn rotate(&self, a: &Mat) -> Result<Mat> {
        let (n, m) = self.shape();
        if a.shape() != (n, m) {
            return Err(CsvdError::DimensionMismatch(format!(
                "basis is for {n}x{m} matrices, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        Ok(self.u.t_matmul(&a.matmul(&self.v)?)?)
    }
}

/// `c_ijk = (uᵀ Ã_k v)_ij`, stored as one `n×m` matrix per `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensor {
    mats: Vec<Mat>,
}

impl CoefficientTensor {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.mats[k][(i, j)]
    }

    pub fn matrix(&self, k: usize) -> &Mat {
        &self.mats[k]
    }

    pub fn matrices(&self) -> &[Mat] {
        &self.mats
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    /// `Σ_ij c_ijk²`.
    pub fn energy(&self, k: usize) -> f64 {
        self.mats[k].frobenius_sq()
    }

    /// Share of matrix `k`'s energy held by its largest coefficient.
    pub fn compaction(&self, k: usize) -> f64 {
        let m = &self.mats[k];
        let total = m.frobenius_sq();
        if total == 0.0 {
            return 0.0;
        }
        m.as_slice().iter().fold(0.0f64, |a, x| a.max(x * x)) / total
    }
}

pub fn coefficients(set: &MatrixSet, basis: &BasisPair, normalization: Normalization) -> Result<CoefficientTensor> {
    let mats = set
        .matrices()
        .iter()
        .map(|a| basis.rotate(&normalization.apply(a)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoefficientTensor { mats })
}

/// Basis together with the spectra of the two weighted sums.
#[derive(Debug, Clone)]
pub struct CsvdOutput {
    pub basis: BasisPair,
    /// Eigenvalues of `Σ_k w_k^q (Ã_k Ã_kᵀ)^p`, descending.
    pub u_eigenvalues: Vec<f64>,
    /// Eigenvalues of `Σ_k w_k^q (Ã_kᵀ Ã_k)^p`, descending.
    pub v_eigenvalues: Vec<f64>,
}

pub(crate) fn weight_power(w: f64, q: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w.powf(q)
    }
}

/// `Σ_k w_k^q (Ã_k Ã_kᵀ)^p` and `Σ_k w_k^q (Ã_kᵀ Ã_k)^p`, accumulated in
/// ascending `k`.
pub(crate) fn weighted_gram_sums(set: &MatrixSet, cfg: &CsvdConfig) -> Result<(Mat, Mat)> {
    let (n, m) = set.shape();
    let mut su = Mat::zeros(n, n);
    let mut sv = Mat::zeros(m, m);
    for (a, w) in set.iter() {
        let wq = weight_power(w, cfg.q);
        if wq == 0.0 {
            continue;
        }
        let a = cfg.normalization.apply(a);
        su.add_scaled(wq, &psd_power(&a.gram_rows(), cfg.p)?)?;
        sv.add_scaled(wq, &psd_power(&a.gram_cols(), cfg.p)?)?;
    }
    Ok((su, sv))
}

pub fn csvd_detailed(set: &MatrixSet, cfg: &CsvdConfig) -> Result<CsvdOutput> {
    cfg.validate()?;
    let (su, sv) = weighted_gram_sums(set, cfg)?;
    let eu = sym_eigen(&su)?;
    let ev = sym_eigen(&sv)?;
    Ok(CsvdOutput {
        basis: BasisPair { u: eu.vectors, v: ev.vectors },
        u_eigenvalues: eu.values,
        v_eigenvalues: ev.values,
    })
}

/// Common SVD basis of a weighted matrix set.
pub fn csvd(set: &MatrixSet, cfg: &CsvdConfig) -> Result<BasisPair> {
    Ok(csvd_detailed(set, cfg)?.basis)
}

/// Baseline: plain SVD of the weighted average `Σ_k w_k A_k`.
pub fn mean_svd(set: &MatrixSet) -> Result<BasisPair> {
    let (n, m) = set.shape();
    let mut avg = Mat::zeros(n, m);
    let mut largest: f64 = 0.0;
    for (a, w) in set.iter() {
        avg.add_scaled(w, a)?;
        largest = largest.max(a.frobenius());
    }
    let norm = avg.frobenius();
    if norm <= DEGENERATE_AVERAGE_REL * largest {
        return Err(CsvdError::DegenerateAverage { norm });
    }
    let r = svd(&avg)?;
    Ok(BasisPair { u: r.u, v: r.v })
}

/// Split of `Σ_{k,k'} w̄_k w̄_k' Σ_i u_iᵀ B_k B_k' u_i` into the `k = k'`
/// part and the cross-matrix part, with `B_k = (Ã_k Ã_kᵀ)^p`, `w̄_k = w_k^q`.
///
/// The total equals `Tr(S²)` for `S = Σ_k w̄_k B_k` and any orthogonal `u`.
/// When `u` diagonalizes `S` (the CSVD basis) it also equals `diagonal_term`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingDiagnostic {
    pub self_term: f64,
    pub mixing_term: f64,
    /// `Σ_i (u_iᵀ S u_i)²`.
    pub diagonal_term: f64,
}

pub fn mixing_diagnostic(set: &MatrixSet, basis: &BasisPair, cfg: &CsvdConfig) -> Result<MixingDiagnostic> {
    cfg.validate()?;
    let (n, m) = set.shape();
    if basis.shape() != (n, m) {
        return Err(CsvdError::DimensionMismatch(format!(
            "basis is for {}x{} matrices, set holds {n}x{m}",
            basis.shape().0,
            basis.shape().1
        )));
    }
    let u = &basis.u;
    let mut s = Mat::zeros(n, n);
    // (B_k U, w̄_k) per matrix
    let mut projected: Vec<(Mat, f64)> = Vec::with_capacity(set.len());
    for (a, w) in set.iter() {
        let wq = weight_power(w, cfg.q);
        let b = psd_power(&cfg.normalization.apply(a).gram_rows(), cfg.p)?;
        s.add_scaled(wq, &b)?;
        projected.push((b.matmul(u)?, wq));
    }

    let column_dot = |x: &Mat, y: &Mat| -> f64 { x.as_slice().iter().zip(y.as_slice()).map(|(a, b)| a * b).sum() };

    let mut self_term = 0.0;
    let mut mixing_term = 0.0;
    for (k, (yk, wk)) in projected.iter().enumerate() {
        self_term += wk * wk * column_dot(yk, yk);
        for (yl, wl) in &projected[k + 1..] {
            mixing_term += 2.0 * wk * wl * column_dot(yk, yl);
        }
    }

    let su = u.t_matmul(&s.matmul(u)?)?;
    let diagonal_term = su.diagonal().iter().map(|x| x * x).sum();
    Ok(MixingDiagnostic { self_term, mixing_term, diagonal_term })
}
