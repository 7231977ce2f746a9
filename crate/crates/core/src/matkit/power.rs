use super::{sym_eigen, LinalgError, Mat, Result};

const NEGATIVE_REL: f64 = 1e-9;

/// Fractional power `b^p` of a symmetric positive semi-definite matrix.
///
/// Negative eigenvalues down to `-1e-9 · λ_max` are treated as roundoff and
/// clamped to zero. `p == 1` returns the symmetrized input rather than a
/// reconstruction, so it is exact.
pub fn psd_power(b: &Mat, p: f64) -> Result<Mat> {
    if !(p.is_finite() && p > 0.0) {
        return Err(LinalgError::InvalidArgument(format!("power must be positive, got {p}")));
    }
    let e = sym_eigen(b)?;
    let top = e.values.first().copied().unwrap_or(0.0).max(0.0);
    let bottom = *e.values.last().expect("non-empty");
    if bottom < -NEGATIVE_REL * top || (top == 0.0 && bottom < 0.0) {
        return Err(LinalgError::NotPsd { eigenvalue: bottom });
    }
    if p == 1.0 {
        return Ok(b.symmetrized());
    }
    Ok(e.reconstruct_with(|l| if l > 0.0 { l.powf(p) } else { 0.0 }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_a_fixed_point() {
        for p in [0.25, 0.5, 2.0, 3.7] {
            assert!(psd_power(&Mat::identity(3), p).unwrap().max_abs_diff(&Mat::identity(3)) < 1e-14);
        }
    }

    #[test]
    fn square_root_of_diagonal() {
        let r = psd_power(&Mat::from_diag(&[4.0, 9.0]), 0.5).unwrap();
        assert!(r.max_abs_diff(&Mat::from_diag(&[2.0, 3.0])) < 1e-14);
    }

    #[test]
    fn unit_power_returns_input() {
        let b = Mat::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        assert_eq!(psd_power(&b, 1.0).unwrap(), b);
    }

    #[test]
    fn square_matches_product() {
        let b = Mat::from_rows(&[[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]]).unwrap();
        let sq = psd_power(&b, 2.0).unwrap();
        let direct = b.matmul(&b).unwrap();
        assert!(sq.max_abs_diff(&direct) < 1e-12);
    }

    #[test]
    fn roundoff_negatives_are_clamped() {
        // rank-one Gram matrix: its zero eigenvalue may come out slightly negative
        let a = Mat::from_rows(&[[0.3, 0.7, -1.1]]).unwrap();
        let g = a.gram_cols();
        let half = psd_power(&g, 0.5).unwrap();
        let back = half.matmul(&half).unwrap();
        assert!(back.max_abs_diff(&g) < 1e-12);
    }

    #[test]
    fn indefinite_input_is_rejected() {
        let b = Mat::from_diag(&[1.0, -0.5]);
        assert!(matches!(psd_power(&b, 0.5), Err(LinalgError::NotPsd { .. })));
        assert!(matches!(psd_power(&b, 1.0), Err(LinalgError::NotPsd { .. })));
        assert!(psd_power(&b, 0.0).is_err());
    }
}
