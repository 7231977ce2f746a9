//! Gradient descent over pairs of orthogonal matrices.
//!
//! Minimizes `g = Σ_ijk w_k f(c_ijk)` with `c_ijk = (Uᵀ A_k V)_ij`. Steps are
//! taken along antisymmetric generators, `U → U(I − εG)`, `V → V(I − εH)`,
//! followed by Gram-Schmidt to return to the orthogonal group. The step size
//! is picked from a fixed candidate set by direct evaluation, with `ε = 0`
//! always on the list so the objective can never increase.
//!
//! Matrices are used as given; any normalization is the caller's job.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csvd::{coefficients, csvd, BasisPair, CoefficientTensor, CsvdConfig, CsvdError, MatrixSet, Normalization, Result};
use crate::matkit::{gram_schmidt, random_orthogonal, Mat};

/// Length of the window used by the relative-improvement stopping test.
pub const STOP_WINDOW: usize = 10;

pub const DEFAULT_STEPS: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];

/// Coordinate-wise evaluation function `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalFunction {
    /// `|x|`, with subgradient 0 at 0.
    Abs,
    /// `−x⁴`; minimizing it maximizes fourth-power contrast.
    NegPow4,
    /// `x²`. Rotation invariant, useful only as a sanity check.
    Square,
}

impl EvalFunction {
    #[inline]
    pub fn value(self, x: f64) -> f64 {
        match self {
            EvalFunction::Abs => x.abs(),
            EvalFunction::NegPow4 => -(x * x) * (x * x),
            EvalFunction::Square => x * x,
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            EvalFunction::Abs => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            EvalFunction::NegPow4 => -4.0 * x * x * x,
            EvalFunction::Square => 2.0 * x,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EvalFunction::Abs => "abs",
            EvalFunction::NegPow4 => "pow4",
            EvalFunction::Square => "square",
        }
    }
}

impl fmt::Display for EvalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvalFunction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "abs" => Ok(EvalFunction::Abs),
            "pow4" | "neg-pow4" | "neg_pow4" => Ok(EvalFunction::NegPow4),
            "square" => Ok(EvalFunction::Square),
            other => Err(format!("unknown evaluation function '{other}' (expected abs, pow4 or square)")),
        }
    }
}

/// Starting point of the descent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Init {
    Identity,
    Csvd(CsvdConfig),
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradOptConfig {
    pub eval: EvalFunction,
    /// Positive step sizes tried every iteration (0 is always added).
    pub step_candidates: Vec<f64>,
    pub max_iters: usize,
    /// Stop once the objective improves by less than this fraction over
    /// [`STOP_WINDOW`] iterations.
    pub rel_tol: f64,
    /// Optimize a single `U = V` (square matrices only).
    pub symmetric: bool,
    pub init: Init,
}

impl Default for GradOptConfig {
    fn default() -> Self {
        Self {
            eval: EvalFunction::NegPow4,
            step_candidates: DEFAULT_STEPS.to_vec(),
            max_iters: 5000,
            rel_tol: 1e-9,
            symmetric: false,
            init: Init::Identity,
        }
    }
}

impl GradOptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.step_candidates.is_empty() {
            return Err(CsvdError::InvalidConfig("at least one step candidate is required".into()));
        }
        if let Some(e) = self.step_candidates.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(CsvdError::InvalidConfig(format!("step candidates must be positive, got {e}")));
        }
        if self.max_iters == 0 {
            return Err(CsvdError::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(CsvdError::InvalidConfig(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if let Init::Csvd(c) = &self.init {
            c.validate()?;
        }
        Ok(())
    }
}

/// Antisymmetric generators for `U` (`g`) and `V` (`h`).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorPair {
    pub g: Mat,
    pub h: Mat,
}

impl GeneratorPair {
    pub fn max_abs(&self) -> f64 {
        self.g.max_abs().max(self.h.max_abs())
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs() == 0.0
    }
}

/// Antisymmetric matrix whose `(a, b)` entry for `a < b` is `upper(a, b)`.
fn antisymmetric(n: usize, upper: impl Fn(usize, usize) -> f64) -> Mat {
    let mut g = Mat::zeros(n, n);
    for a in 0..n {
        for b in a + 1..n {
            let x = upper(a, b);
            g[(a, b)] = x;
            g[(b, a)] = -x;
        }
    }
    g
}

fn check_shape(set: &MatrixSet, basis: &BasisPair) -> Result<()> {
    if set.shape() != basis.shape() {
        let (n, m) = set.shape();
        let (bn, bm) = basis.shape();
        return Err(CsvdError::DimensionMismatch(format!("basis is for {bn}x{bm}, set holds {n}x{m}")));
    }
    Ok(())
}

fn objective_from(set: &MatrixSet, coeffs: &CoefficientTensor, eval: EvalFunction) -> f64 {
    set.weights()
        .iter()
        .zip(coeffs.matrices())
        .map(|(&w, c)| w * c.as_slice().iter().map(|&x| eval.value(x)).sum::<f64>())
        .sum()
}

/// `g = Σ_ijk w_k f(c_ijk)`.
pub fn objective(set: &MatrixSet, basis: &BasisPair, eval: EvalFunction) -> Result<f64> {
    check_shape(set, basis)?;
    let coeffs = coefficients(set, basis, Normalization::None)?;
    Ok(objective_from(set, &coeffs, eval))
}

/// Derivatives of `g` with respect to the generator coordinates `G_ab`, `H_ab`
/// (`a < b`) for the step `U → U(I + εG)`, `V → V(I + εH)`:
///
/// ```text
/// ∂g/∂G_ab = Σ_jk w_k (f'(c_bjk) c_ajk − f'(c_ajk) c_bjk)
/// ∂g/∂H_ab = Σ_ik w_k (f'(c_ibk) c_iak − f'(c_iak) c_ibk)
/// ```
///
/// In symmetric mode (`U = V`) both movements share one generator and its
/// derivative is the sum of the two, returned in both `g` and `h`.
pub fn gradient(set: &MatrixSet, basis: &BasisPair, eval: EvalFunction, symmetric: bool) -> Result<GeneratorPair> {
    check_shape(set, basis)?;
    let (n, m) = set.shape();
    if symmetric && n != m {
        return Err(CsvdError::DimensionMismatch(format!("symmetric mode needs square matrices, got {n}x{m}")));
    }
    let coeffs = coefficients(set, basis, Normalization::None)?;
    // left[a][b] = Σ_jk w_k c_ajk f'(c_bjk), right[a][b] = Σ_ik w_k c_iak f'(c_ibk)
    let mut left = Mat::zeros(n, n);
    let mut right = Mat::zeros(m, m);
    for (&w, c) in set.weights().iter().zip(coeffs.matrices()) {
        if w == 0.0 {
            continue;
        }
        let d = Mat::new(n, m, c.as_slice().iter().map(|&x| eval.derivative(x)).collect())?;
        left.add_scaled(w, &c.matmul(&d.transpose())?)?;
        right.add_scaled(w, &c.t_matmul(&d)?)?;
    }
    let g = antisymmetric(n, |a, b| left[(a, b)] - left[(b, a)]);
    let h = antisymmetric(m, |a, b| right[(a, b)] - right[(b, a)]);
    if symmetric {
        let both = g.add(&h)?;
        return Ok(GeneratorPair { g: both.clone(), h: both });
    }
    Ok(GeneratorPair { g, h })
}

/// One accepted row of the descent trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub iter: usize,
    pub objective: f64,
    /// Step size that produced this row; 0 for the starting point.
    pub accepted_eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// The gradient vanished exactly.
    Stationary,
    /// No candidate step improved on `ε = 0`.
    NoImprovingStep,
    /// Relative improvement over the window fell below `rel_tol`.
    Converged,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct Descent {
    pub basis: BasisPair,
    pub trace: Vec<TraceStep>,
    pub iterations: usize,
    pub stop: StopReason,
}

impl Descent {
    pub fn objectives(&self) -> Vec<f64> {
        self.trace.iter().map(|t| t.objective).collect()
    }

    pub fn initial_objective(&self) -> f64 {
        self.trace[0].objective
    }

    pub fn final_objective(&self) -> f64 {
        self.trace.last().expect("trace has the starting row").objective
    }
}

/// Starting basis for the configured init.
pub fn initial_basis(set: &MatrixSet, cfg: &GradOptConfig) -> Result<BasisPair> {
    let (n, m) = set.shape();
    let mut basis = match &cfg.init {
        Init::Identity => BasisPair::identity(n, m),
        Init::Csvd(c) => csvd(set, c)?,
        Init::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let u = random_orthogonal(n, &mut rng)?;
            let v = random_orthogonal(m, &mut rng)?;
            BasisPair { u, v }
        }
    };
    if cfg.symmetric {
        basis.v = basis.u.clone();
    }
    Ok(basis)
}

fn step(basis: &BasisPair, gen: &GeneratorPair, eps: f64, symmetric: bool) -> Result<BasisPair> {
    let advance = |x: &Mat, g: &Mat| -> Result<Mat> {
        let n = g.rows();
        let mut rot = Mat::identity(n);
        rot.add_scaled(-eps, g)?;
        Ok(gram_schmidt(&x.matmul(&rot)?)?)
    };
    let u = advance(&basis.u, &gen.g)?;
    let v = if symmetric { u.clone() } else { advance(&basis.v, &gen.h)? };
    Ok(BasisPair { u, v })
}

/// Runs gradient descent from the configured starting basis.
///
/// The trace starts with the initial objective and gains one row per
/// accepted step, so it is non-increasing by construction.
pub fn descend(set: &MatrixSet, cfg: &GradOptConfig) -> Result<Descent> {
    cfg.validate()?;
    let (n, m) = set.shape();
    if cfg.symmetric && n != m {
        return Err(CsvdError::DimensionMismatch(format!("symmetric mode needs square matrices, got {n}x{m}")));
    }
    let mut steps = cfg.step_candidates.clone();
    steps.sort_by(f64::total_cmp);
    steps.dedup();

    let mut basis = initial_basis(set, cfg)?;
    let mut current = objective(set, &basis, cfg.eval)?;
    let mut trace = vec![TraceStep { iter: 0, objective: current, accepted_eps: 0.0 }];
    let mut stop = StopReason::MaxIters;
    let mut iterations = 0;

    for iter in 1..=cfg.max_iters {
        iterations = iter;
        let gen = gradient(set, &basis, cfg.eval, cfg.symmetric)?;
        if gen.is_zero() {
            stop = StopReason::Stationary;
            break;
        }
        // ascending ε with strict improvement: ties go to the smaller step
        let mut best: Option<(f64, f64, BasisPair)> = None;
        for &eps in &steps {
            let candidate = step(&basis, &gen, eps, cfg.symmetric)?;
            let value = objective(set, &candidate, cfg.eval)?;
            let threshold = best.as_ref().map_or(current, |b| b.1);
            if value < threshold {
                best = Some((eps, value, candidate));
            }
        }
        let Some((eps, value, next)) = best else {
            stop = StopReason::NoImprovingStep;
            break;
        };
        basis = next;
        current = value;
        trace.push(TraceStep { iter, objective: value, accepted_eps: eps });

        if trace.len() > STOP_WINDOW {
            let old = trace[trace.len() - 1 - STOP_WINDOW].objective;
            let scale = old.abs().max(f64::MIN_POSITIVE);
            if (old - current) < cfg.rel_tol * scale {
                stop = StopReason::Converged;
                break;
            }
        }
    }
    Ok(Descent { basis, trace, iterations, stop })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(a: Mat) -> MatrixSet {
        MatrixSet::uniform(vec![a]).unwrap()
    }

    fn sample() -> Mat {
        Mat::from_rows(&[[1.0, -2.0], [0.0, 0.0]]).unwrap()
    }

    #[test]
    fn eval_functions() {
        assert_eq!(EvalFunction::Abs.derivative(0.0), 0.0);
        assert_eq!(EvalFunction::Abs.derivative(-3.0), -1.0);
        assert_eq!(EvalFunction::NegPow4.value(2.0), -16.0);
        assert_eq!(EvalFunction::NegPow4.derivative(2.0), -32.0);
        assert_eq!("pow4".parse::<EvalFunction>().unwrap(), EvalFunction::NegPow4);
        assert!("cube".parse::<EvalFunction>().is_err());
    }

    #[test]
    fn objective_by_hand() {
        let set = single(sample());
        let id = BasisPair::identity(2, 2);
        assert_eq!(objective(&set, &id, EvalFunction::Abs).unwrap(), 3.0);
        assert_eq!(objective(&set, &id, EvalFunction::NegPow4).unwrap(), -17.0);
        assert_eq!(objective(&set, &id, EvalFunction::Square).unwrap(), 5.0);
    }

    #[test]
    fn square_objective_is_basis_free() {
        let set = MatrixSet::new(vec![sample(), Mat::from_diag(&[2.0, 1.0])], vec![2.0, 0.5]).unwrap();
        let (c, s) = (0.28, 0.96);
        let r = Mat::from_rows(&[[c, -s], [s, c]]).unwrap();
        let basis = BasisPair::new(r.clone(), r.transpose()).unwrap();
        let g = objective(&set, &basis, EvalFunction::Square).unwrap();
        assert!((g - (2.0 * 5.0 + 0.5 * 5.0)).abs() < 1e-12);
    }

    #[test]
    fn square_has_zero_gradient() {
        let set = single(Mat::from_rows(&[[1.0, 2.0, 0.3], [0.4, -1.0, 2.0]]).unwrap());
        let gen = gradient(&set, &BasisPair::identity(2, 3), EvalFunction::Square, false).unwrap();
        assert!(gen.max_abs() < 1e-14);
    }

    #[test]
    fn diagonal_matrix_is_critical() {
        let set = single(Mat::from_diag(&[2.0, 1.0]));
        let gen = gradient(&set, &BasisPair::identity(2, 2), EvalFunction::NegPow4, false).unwrap();
        assert!(gen.is_zero());
    }

    #[test]
    fn generators_are_antisymmetric() {
        let set = single(Mat::from_rows(&[[1.0, 2.0, 0.3], [0.4, -1.0, 2.0], [0.0, 0.5, 1.5]]).unwrap());
        for symmetric in [false, true] {
            let gen = gradient(&set, &BasisPair::identity(3, 3), EvalFunction::NegPow4, symmetric).unwrap();
            assert_eq!(gen.g.transpose(), gen.g.scale(-1.0));
            assert_eq!(gen.h.transpose(), gen.h.scale(-1.0));
            if symmetric {
                assert_eq!(gen.g, gen.h);
            }
        }
    }

    #[test]
    fn symmetric_needs_square() {
        let set = single(Mat::zeros(2, 3));
        let id = BasisPair::identity(2, 3);
        assert!(gradient(&set, &id, EvalFunction::Abs, true).is_err());
        let cfg = GradOptConfig { symmetric: true, ..Default::default() };
        assert!(descend(&set, &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        let base = GradOptConfig::default();
        assert!(base.validate().is_ok());
        assert!(GradOptConfig { max_iters: 0, ..base.clone() }.validate().is_err());
        assert!(GradOptConfig { step_candidates: vec![], ..base.clone() }.validate().is_err());
        assert!(GradOptConfig { step_candidates: vec![0.1, -1.0], ..base.clone() }.validate().is_err());
        assert!(GradOptConfig { rel_tol: 0.0, ..base }.validate().is_err());
    }

    #[test]
    fn stationary_start_returns_init() {
        let set = single(Mat::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap());
        let cfg = GradOptConfig { eval: EvalFunction::Square, ..Default::default() };
        let d = descend(&set, &cfg).unwrap();
        assert_eq!(d.trace.len(), 1);
        assert_eq!(d.stop, StopReason::Stationary);
        assert_eq!(d.basis, BasisPair::identity(2, 2));
    }

    #[test]
    fn diagonal_start_keeps_objective() {
        let set = single(Mat::from_diag(&[3.0, 1.0, 0.5]));
        let d = descend(&set, &GradOptConfig::default()).unwrap();
        assert_eq!(d.final_objective(), d.initial_objective());
        assert_eq!(d.initial_objective(), -(81.0 + 1.0 + 0.0625));
    }

    #[test]
    fn descent_improves_rotated_diagonal() {
        // a rotated diagonal matrix is brought back towards diagonal form
        let (c, s) = (0.8, 0.6);
        let r = Mat::from_rows(&[[c, -s], [s, c]]).unwrap();
        let a = r.matmul(&Mat::from_diag(&[2.0, 1.0])).unwrap().matmul(&r.transpose()).unwrap();
        let set = single(a);
        let d = descend(&set, &GradOptConfig::default()).unwrap();
        assert!(d.final_objective() < d.initial_objective());
        assert!((d.final_objective() + 17.0).abs() < 1e-6, "{}", d.final_objective());
        assert!(d.objectives().windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn symmetric_mode_keeps_u_equal_v() {
        let a = Mat::from_rows(&[[2.0, 1.0, 0.0], [1.0, 1.0, 0.5], [0.0, 0.5, 3.0]]).unwrap();
        let cfg = GradOptConfig { symmetric: true, max_iters: 50, init: Init::Random { seed: 5 }, ..Default::default() };
        let d = descend(&single(a), &cfg).unwrap();
        assert_eq!(d.basis.u, d.basis.v);
        assert!(d.final_objective() <= d.initial_objective());
    }
}
