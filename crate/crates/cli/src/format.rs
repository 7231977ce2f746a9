//! JSON matrix-set files.
//!
//! ```json
//! { "version": "1", "n": 2, "m": 3, "K": 1,
//!   "weights": [1.0],
//!   "matrices": [[[1, 0, 0], [0, 1, 0]]] }
//! ```
//!
//! `weights` may be omitted, in which case every matrix weighs 1. Numbers are
//! written in shortest round-trip form, so reading a written file back gives
//! bit-identical values.

use serde::{Deserialize, Serialize};

use cobasis::{Mat, MatrixSet};

use crate::error::CliError;

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSetFile {
    pub version: String,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub matrices: Vec<Vec<Vec<f64>>>,
}

/// A validated file plus whether the weights were defaulted.
#[derive(Debug)]
pub struct LoadedSet {
    pub set: MatrixSet,
    pub weights_defaulted: bool,
}

impl MatrixSetFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| {
            CliError::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    pub fn from_mats(mats: &[Mat], weights: Option<Vec<f64>>) -> Self {
        let (n, m) = mats[0].shape();
        Self {
            version: FORMAT_VERSION.to_string(),
            n,
            m,
            k: mats.len(),
            weights,
            matrices: mats.iter().map(Mat::to_rows).collect(),
        }
    }

    pub fn from_set(set: &MatrixSet) -> Self {
        Self::from_mats(set.matrices(), Some(set.weights().to_vec()))
    }

    pub fn single(m: &Mat) -> Self {
        Self::from_mats(std::slice::from_ref(m), None)
    }

    /// Checks declared sizes against the arrays and builds the set.
    pub fn validate(&self) -> Result<LoadedSet, CliError> {
        let field = |path: String, msg: String| CliError::Input(format!("field `{path}`: {msg}"));
        if self.version != FORMAT_VERSION {
            return Err(field("version".into(), format!("unsupported version '{}'", self.version)));
        }
        if self.n == 0 || self.m == 0 || self.k == 0 {
            return Err(field("n/m/K".into(), "dimensions must be positive".into()));
        }
        if self.matrices.len() != self.k {
            return Err(field("matrices".into(), format!("K = {} but {} matrices present", self.k, self.matrices.len())));
        }
        let mut mats = Vec::with_capacity(self.k);
        for (k, rows) in self.matrices.iter().enumerate() {
            if rows.len() != self.n {
                return Err(field(format!("matrices[{k}]"), format!("{} rows, expected n = {}", rows.len(), self.n)));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != self.m {
                    return Err(field(
                        format!("matrices[{k}][{i}]"),
                        format!("{} entries, expected m = {}", row.len(), self.m),
                    ));
                }
            }
            mats.push(Mat::from_rows(rows).map_err(|e| field(format!("matrices[{k}]"), e.to_string()))?);
        }
        let (weights, weights_defaulted) = match &self.weights {
            Some(w) if w.len() != self.k => {
                return Err(field("weights".into(), format!("{} weights for K = {}", w.len(), self.k)));
            }
            Some(w) => (w.clone(), false),
            None => (vec![1.0; self.k], true),
        };
        let set = MatrixSet::new(mats, weights).map_err(|e| CliError::Input(e.to_string()))?;
        Ok(LoadedSet { set, weights_defaulted })
    }
}
