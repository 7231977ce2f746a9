//! Reproducible experiment harnesses.
//!
//! * [`random`]: recover hidden bases from rotated sparse 0/1 matrices and
//!   score the recovery by fourth-power contrast.
//! * [`blocks`] and [`dct`]: KLT of image blocks turned into a matrix set,
//!   then compared against the DCT-II basis.

pub mod blocks;
pub mod dct;
pub mod pgm;
pub mod random;

use thiserror::Error;

use crate::csvd::CsvdError;
use crate::matkit::LinalgError;

pub use blocks::{block_pca, extract_blocks, synthetic_ar1_image, BlockPcaResult, GrayImage};
pub use dct::{align_bases, dct2_basis, run_dct_experiment, BasisAlignment, DctReport};
pub use random::{
    aggregate, eval_ratio, gen_sparse_set, run_random_experiment, run_sweep, AggregateRow, ExperimentRecord,
    RandomExpConfig, SparseInstance,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Csvd(#[from] CsvdError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid image: {0}")]
    Image(String),
    #[error("reference sum s0 is zero; the evaluation ratio is undefined")]
    ZeroReference,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<LinalgError> for ExperimentError {
    fn from(e: LinalgError) -> Self {
        ExperimentError::Csvd(CsvdError::Linalg(e))
    }
}

pub type Result<T> = std::result::Result<T, ExperimentError>;
