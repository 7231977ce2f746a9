//! Common orthonormal bases for weighted sets of matrices.
//!
//! Given matrices `A_1..A_K` (all `n×m`) with weights `w_k`, find orthogonal
//! `U` and `V` such that the rotated set `Uᵀ·A_k·V` is as simple as possible.
//! Two routes are provided:
//!
//! * [`csvd`](csvd::csvd): eigenvectors of weighted sums of powered Gram
//!   matrices. Cheap and deterministic.
//! * [`descend`](orthopt::descend): direct gradient descent over the
//!   orthogonal group for a coordinate-wise objective.
//!
//! [`experiments`] holds the reproducible harnesses (random 0/1 recovery
//! sweeps and the image-block KLT vs DCT-II comparison).

pub mod csvd;
pub mod experiments;
pub mod matkit;
pub mod orthopt;

pub use csvd::{
    coefficients, csvd, csvd_detailed, mean_svd, mixing_diagnostic, normalize_rc, BasisPair,
    CoefficientTensor, CsvdConfig, CsvdError, CsvdOutput, MatrixSet, MixingDiagnostic,
    Normalization,
};
pub use matkit::{LinalgError, Mat};
pub use orthopt::{descend, gradient, objective, EvalFunction, GeneratorPair, GradOptConfig, Init};
