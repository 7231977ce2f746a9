use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::blocks::{block_pca, extract_blocks, BlockPcaResult, GrayImage};
use super::{ExperimentError, Result};
use crate::csvd::{coefficients, csvd, BasisPair, CsvdConfig, MatrixSet};
use crate::matkit::{dot, Mat};

/// Orthonormal DCT-II basis; column `k` samples `cos(π (x + ½) k / N)`.
pub fn dct2_basis(n: usize) -> Mat {
    assert!(n > 0, "DCT size must be positive");
    let mut m = Mat::zeros(n, n);
    let nf = n as f64;
    for k in 0..n {
        let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        for x in 0..n {
            m[(x, k)] = scale * (PI * (x as f64 + 0.5) * k as f64 / nf).cos();
        }
    }
    m
}

/// Greedy column matching of a candidate basis onto a reference basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisAlignment {
    /// `matching[r]` is the candidate column assigned to reference column `r`.
    pub matching: Vec<usize>,
    /// Sign of the matched inner product.
    pub signs: Vec<f64>,
    /// `|⟨candidate, reference⟩|` per reference column.
    pub scores: Vec<f64>,
}

impl BasisAlignment {
    pub fn mean_score(&self) -> f64 {
        self.scores.iter().sum::<f64>() / self.scores.len() as f64
    }
}

/// Reference columns are taken in order; each grabs the unused candidate
/// column with the largest `|inner product|` (lowest index on ties).
pub fn align_bases(candidate: &Mat, reference: &Mat) -> Result<BasisAlignment> {
    if candidate.shape() != reference.shape() || !candidate.is_square() {
        return Err(ExperimentError::InvalidConfig(format!(
            "cannot align {}x{} against {}x{}",
            candidate.rows(),
            candidate.cols(),
            reference.rows(),
            reference.cols()
        )));
    }
    let n = candidate.cols();
    let cand: Vec<Vec<f64>> = (0..n).map(|j| candidate.column(j)).collect();
    let mut used = vec![false; n];
    let mut out = BasisAlignment { matching: Vec::with_capacity(n), signs: Vec::with_capacity(n), scores: Vec::with_capacity(n) };
    for r in 0..n {
        let refcol = reference.column(r);
        let mut best: Option<(usize, f64)> = None;
        for (c, col) in cand.iter().enumerate() {
            if used[c] {
                continue;
            }
            let d = dot(col, &refcol);
            if best.is_none_or(|(_, b)| d.abs() > b.abs()) {
                best = Some((c, d));
            }
        }
        let (c, d) = best.expect("an unused column remains");
        used[c] = true;
        out.matching.push(c);
        out.signs.push(if d < 0.0 { -1.0 } else { 1.0 });
        out.scores.push(d.abs());
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct DctReport {
    pub pca: BlockPcaResult,
    pub basis: BasisPair,
    pub u_alignment: BasisAlignment,
    pub v_alignment: BasisAlignment,
    /// `|cos|` between the leading CSVD vector and the constant vector.
    pub u_dc_cosine: f64,
    pub v_dc_cosine: f64,
    /// Per eigen-matrix share of energy in its largest coefficient, CSVD basis.
    pub csvd_compaction: Vec<f64>,
    /// Same, DCT-II basis.
    pub dct_compaction: Vec<f64>,
}

impl DctReport {
    /// Product scores for the 2D basis functions, `grid[a][b]` pairing
    /// reference row function `a` with column function `b`.
    pub fn product_scores(&self) -> Vec<Vec<f64>> {
        self.u_alignment
            .scores
            .iter()
            .map(|su| self.v_alignment.scores.iter().map(|sv| su * sv).collect())
            .collect()
    }
}

fn dc_cosine(basis: &Mat) -> f64 {
    let n = basis.rows();
    let c = 1.0 / (n as f64).sqrt();
    basis.column(0).iter().map(|x| x * c).sum::<f64>().abs()
}

/// Block PCA over every image, then CSVD of the reshaped eigenvectors with
/// the eigenvalues as weights, compared against DCT-II.
pub fn run_dct_experiment(images: &[GrayImage], block: usize, cfg: &CsvdConfig) -> Result<DctReport> {
    if images.is_empty() {
        return Err(ExperimentError::InvalidConfig("no images supplied".into()));
    }
    let mut blocks = Vec::new();
    for img in images {
        blocks.extend(extract_blocks(img, block)?);
    }
    let pca = block_pca(&blocks)?;
    let set = MatrixSet::new(pca.eigen_matrices.clone(), pca.eigenvalues.clone())?;
    let basis = csvd(&set, cfg)?;
    let reference = dct2_basis(block);
    let u_alignment = align_bases(&basis.u, &reference)?;
    let v_alignment = align_bases(&basis.v, &reference)?;

    let compaction = |b: &BasisPair| -> Result<Vec<f64>> {
        let c = coefficients(&set, b, cfg.normalization)?;
        Ok((0..c.len()).map(|k| c.compaction(k)).collect())
    };
    let csvd_compaction = compaction(&basis)?;
    let dct_compaction = compaction(&BasisPair { u: reference.clone(), v: reference })?;

    Ok(DctReport {
        u_dc_cosine: dc_cosine(&basis.u),
        v_dc_cosine: dc_cosine(&basis.v),
        pca,
        basis,
        u_alignment,
        v_alignment,
        csvd_compaction,
        dct_compaction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dct_small_sizes() {
        assert_eq!(dct2_basis(1), Mat::identity(1));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expected = Mat::from_rows(&[[h, h], [h, -h]]).unwrap();
        assert!(dct2_basis(2).max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn dct_is_orthogonal() {
        for n in 1..=64 {
            assert!(dct2_basis(n).orthogonality_error() < 1e-12, "N={n}");
        }
    }

    #[test]
    fn self_alignment() {
        let d = dct2_basis(8);
        let a = align_bases(&d, &d).unwrap();
        assert_eq!(a.matching, (0..8).collect::<Vec<_>>());
        assert!(a.scores.iter().all(|&s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn swapped_and_negated_columns() {
        let d = dct2_basis(4);
        let mut c = d.clone();
        c.swap_columns(1, 2);
        c.negate_column(1);
        let a = align_bases(&c, &d).unwrap();
        assert_eq!(a.matching, vec![0, 2, 1, 3]);
        assert_eq!(a.signs, vec![1.0, 1.0, -1.0, 1.0]);
        assert!(a.scores.iter().all(|&s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn shape_mismatch() {
        assert!(align_bases(&Mat::identity(3), &Mat::identity(4)).is_err());
    }

    #[test]
    fn one_pixel_blocks() {
        let img = GrayImage::new(4, 4, (0..16).map(|x| x * 10).collect()).unwrap();
        let r = run_dct_experiment(&[img], 1, &CsvdConfig::default()).unwrap();
        assert_eq!(r.u_alignment.scores, vec![1.0]);
        assert_eq!(r.v_alignment.scores, vec![1.0]);
    }
}
