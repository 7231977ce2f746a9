use rand::Rng;
use rand_distr::StandardNormal;

use super::{dot, norm, LinalgError, Mat, Result};

const RESIDUAL_FLOOR: f64 = 1e-12;

/// Orthonormalizes the columns of a square matrix by modified Gram-Schmidt.
///
/// Column `i` of the result spans the same flag as the first `i` input
/// columns. Each column is swept twice against its predecessors, which keeps
/// `QᵀQ = I` at roundoff level even for mildly ill-conditioned inputs.
pub fn gram_schmidt(m: &Mat) -> Result<Mat> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(LinalgError::NotSquare { rows, cols });
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut v = m.column(j);
        for _pass in 0..2 {
            for q in &basis {
                let proj = dot(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let r = norm(&v);
        if r <= RESIDUAL_FLOOR {
            return Err(LinalgError::RankDeficient { column: j, residual: r });
        }
        v.iter_mut().for_each(|x| *x /= r);
        basis.push(v);
    }
    Mat::from_columns(&basis)
}

/// Haar-distributed random orthogonal `n×n` matrix.
///
/// Draws a standard Gaussian matrix and orthonormalizes it. Gram-Schmidt
/// yields the QR factor with a positive `R` diagonal, which is exactly the
/// sign correction that makes the distribution uniform on O(n).
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Mat> {
    if n == 0 {
        return Err(LinalgError::InvalidArgument("random_orthogonal needs n >= 1".into()));
    }
    loop {
        let data: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
        let g = Mat::new(n, n, data)?;
        match gram_schmidt(&g) {
            Ok(q) => return Ok(q),
            // measure-zero event; redraw
            Err(LinalgError::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
}
