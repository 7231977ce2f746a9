use super::{gram_schmidt, norm, sym_eigen, Mat, Result};

/// Relative gap below which two singular values are treated as one cluster.
const CLUSTER_GAP_REL: f64 = 1e-6;
/// Singular values below this fraction of the largest are treated as zero.
const ZERO_REL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `n×n` orthogonal.
    pub u: Mat,
    /// `min(n, m)` values, descending, non-negative.
    pub singular: Vec<f64>,
    /// `m×m` orthogonal.
    pub v: Mat,
}

/// Full SVD `m = u · diag(σ) · vᵀ` via the eigenvectors of `m·mᵀ` and `mᵀ·m`.
///
/// Columns of `v` are signed so that `diag(uᵀ·m·v) ≥ 0`. Two independent
/// eigensolves cannot pair vectors inside a repeated singular value, so for
/// such clusters the right vectors are rebuilt as `mᵀ·u_i` and
/// re-orthonormalized.
pub fn svd(m: &Mat) -> Result<SvdResult> {
    let (n, cols) = m.shape();
    let left = sym_eigen(&m.gram_rows())?;
    let right = sym_eigen(&m.gram_cols())?;
    let k = n.min(cols);
    let source = if n <= cols { &left.values } else { &right.values };
    let singular: Vec<f64> = source[..k].iter().map(|&l| l.max(0.0).sqrt()).collect();

    let u = left.vectors;
    let mut v = right.vectors;
    let sigma_max = singular[0];
    let zero_floor = ZERO_REL * sigma_max;
    let mt = m.transpose();

    let mut rebuilt = false;
    let mut start = 0;
    while start < k {
        let mut end = start + 1;
        while end < k && singular[end - 1] - singular[end] <= CLUSTER_GAP_REL * sigma_max {
            end += 1;
        }
        let active = singular[start] > zero_floor;
        if active && end - start > 1 {
            for i in start..end {
                let mut w = mt.matmul(&column_mat(&u, i))?.into_vec();
                let len = norm(&w);
                w.iter_mut().for_each(|x| *x /= len);
                v.set_column(i, &w);
            }
            rebuilt = true;
        } else if active {
            let ui = column_mat(&u, start);
            let d = ui.t_matmul(&m.matmul(&column_mat(&v, start))?)?[(0, 0)];
            if d < 0.0 {
                v.negate_column(start);
            }
        }
        start = end;
    }
    if rebuilt {
        v = gram_schmidt(&v)?;
    }
    Ok(SvdResult { u, singular, v })
}

fn column_mat(a: &Mat, j: usize) -> Mat {
    Mat::new(a.rows(), 1, a.column(j)).expect("finite column")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(m: &Mat) -> SvdResult {
        let r = svd(m).unwrap();
        assert!(r.u.orthogonality_error() < 1e-10);
        assert!(r.v.orthogonality_error() < 1e-10);
        let d = r.u.t_matmul(&m.matmul(&r.v).unwrap()).unwrap();
        let scale = r.singular[0].max(f64::MIN_POSITIVE);
        assert!(d.max_abs_off_diagonal() <= 1e-8 * scale, "{d:?}");
        for (i, s) in r.singular.iter().enumerate() {
            assert!(d[(i, i)] >= -1e-12, "negative diagonal at {i}");
            assert!((d[(i, i)] - s).abs() <= 1e-8 * scale);
        }
        r
    }

    #[test]
    fn diagonal_input() {
        let r = check(&Mat::from_diag(&[5.0, 2.0]));
        assert_eq!(r.singular, vec![5.0, 2.0]);
        assert_eq!(r.u, Mat::identity(2));
        assert_eq!(r.v, Mat::identity(2));
    }

    #[test]
    fn zero_matrix() {
        let r = check(&Mat::zeros(3, 2));
        assert_eq!(r.singular, vec![0.0, 0.0]);
    }

    #[test]
    fn rotation_has_repeated_singular_values() {
        let (c, s) = (0.6, 0.8);
        let m = Mat::from_rows(&[[c, -s], [s, c]]).unwrap();
        let r = check(&m);
        assert!((r.singular[0] - 1.0).abs() < 1e-14);
        assert!((r.singular[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn negative_diagonal_gets_flipped() {
        let m = Mat::from_diag(&[-3.0, 1.0]);
        let r = check(&m);
        assert_eq!(r.singular, vec![3.0, 1.0]);
    }

    #[test]
    fn wide_and_tall() {
        let wide = Mat::from_rows(&[[1.0, 2.0, 0.5], [-0.3, 0.7, 2.2]]).unwrap();
        check(&wide);
        check(&wide.transpose());
    }

    #[test]
    fn rank_one() {
        let m = Mat::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
        let r = check(&m);
        assert!((r.singular[0] - (14.0f64 * 5.0).sqrt()).abs() < 1e-12);
        assert!(r.singular[1] < 1e-7);
    }
}
