use super::{LinalgError, Mat, Result};

const MAX_SWEEPS: usize = 100;
const CONVERGENCE_REL: f64 = 1e-14;
const SYMMETRY_REL: f64 = 1e-9;

/// Eigendecomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues, non-increasing.
    pub values: Vec<f64>,
    /// Unit eigenvectors as columns, in the order of `values`.
    pub vectors: Mat,
}

impl SymEigen {
    /// `Q · diag(f(λ)) · Qᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Mat {
        let n = self.values.len();
        let q = &self.vectors;
        let scaled: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for (l, s) in scaled.iter().enumerate() {
                    acc += q[(i, l)] * s * q[(j, l)];
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc;
            }
        }
        out
    }
}

fn off_diagonal_norm(a: &Mat) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)] * a[(i, j)];
            }
        }
    }
    acc.sqrt()
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// The input is symmetrized as `(a + aᵀ)/2` before iterating, so asymmetry
/// up to `1e-9 · max|a_ij|` is accepted. Output is canonical: eigenvalues are
/// sorted descending (stable on ties) and each eigenvector is signed so that
/// its largest-magnitude entry is positive, the lowest index winning ties.
pub fn sym_eigen(a: &Mat) -> Result<SymEigen> {
    let (rows, cols) = a.shape();
    if rows != cols {
        return Err(LinalgError::NotSquare { rows, cols });
    }
    let asym = a.max_asymmetry();
    if asym > SYMMETRY_REL * a.max_abs() {
        return Err(LinalgError::NotSymmetric { asymmetry: asym });
    }
    let n = rows;
    let mut w = a.symmetrized();
    let mut q = Mat::identity(n);
    let threshold = CONVERGENCE_REL * w.frobenius();

    let mut converged = false;
    let mut off = off_diagonal_norm(&w);
    for _ in 0..MAX_SWEEPS {
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                rotate(&mut w, &mut q, p, r);
            }
        }
        off = off_diagonal_norm(&w);
    }
    if !converged && off > threshold {
        return Err(LinalgError::NoConvergence { sweeps: MAX_SWEEPS, off_norm: off });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag = w.diagonal();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &q.column(src));
    }
    canonicalize_signs(&mut vectors);
    Ok(SymEigen { values, vectors })
}

/// Applies one Jacobi rotation in the (p, r) plane, zeroing `w[p][r]`.
fn rotate(w: &mut Mat, q: &mut Mat, p: usize, r: usize) {
    let apr = w[(p, r)];
    if apr == 0.0 {
        return;
    }
    let app = w[(p, p)];
    let arr = w[(r, r)];
    let theta = (arr - app) / (2.0 * apr);
    let t = if theta.is_infinite() {
        // |apr| negligible next to the diagonal gap
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = w.rows();

    for k in 0..n {
        if k == p || k == r {
            continue;
        }
        let wkp = w[(k, p)];
        let wkr = w[(k, r)];
        let new_kp = c * wkp - s * wkr;
        let new_kr = s * wkp + c * wkr;
        w[(k, p)] = new_kp;
        w[(p, k)] = new_kp;
        w[(k, r)] = new_kr;
        w[(r, k)] = new_kr;
    }
    w[(p, p)] = app - t * apr;
    w[(r, r)] = arr + t * apr;
    w[(p, r)] = 0.0;
    w[(r, p)] = 0.0;

    for k in 0..n {
        let qkp = q[(k, p)];
        let qkr = q[(k, r)];
        q[(k, p)] = c * qkp - s * qkr;
        q[(k, r)] = s * qkp + c * qkr;
    }
}

/// Flip each column so its largest-|x| entry (lowest index on ties) is positive.
pub(crate) fn canonicalize_signs(vectors: &mut Mat) {
    for j in 0..vectors.cols() {
        let mut best = 0;
        let mut best_abs = -1.0;
        for i in 0..vectors.rows() {
            let a = vectors[(i, j)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if vectors[(best, j)] < 0.0 {
            vectors.negate_column(j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_unit_eigenvalues() {
        let e = sym_eigen(&Mat::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        assert!(e.vectors.orthogonality_error() < 1e-15);
    }

    #[test]
    fn diagonal_is_sorted() {
        let e = sym_eigen(&Mat::from_diag(&[1.0, 3.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert_eq!(e.vectors, Mat::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap());
    }

    #[test]
    fn two_by_two_closed_form() {
        // λ² − 4λ + 3 = 0 → λ ∈ {3, 1}
        let a = Mat::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let e = sym_eigen(&a).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // sign convention: first entry wins the tie and is positive
        let expected = Mat::from_rows(&[[h, h], [h, -h]]).unwrap();
        assert!(e.vectors.max_abs_diff(&expected) < 1e-14, "{:?}", e.vectors);
    }

    #[test]
    fn zero_matrix_converges_immediately() {
        let e = sym_eigen(&Mat::zeros(4, 4)).unwrap();
        assert_eq!(e.values, vec![0.0; 4]);
        assert_eq!(e.vectors, Mat::identity(4));
    }

    #[test]
    fn rejects_non_square_and_asymmetric() {
        assert!(matches!(sym_eigen(&Mat::zeros(2, 3)), Err(LinalgError::NotSquare { .. })));
        let a = Mat::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eigen(&a), Err(LinalgError::NotSymmetric { .. })));
        // roundoff-level asymmetry is tolerated
        let b = Mat::from_rows(&[[1.0, 2.0], [2.0 + 1e-12, 1.0]]).unwrap();
        assert!(sym_eigen(&b).is_ok());
    }

    #[test]
    fn reconstructs_dense_input() {
        let a = Mat::from_rows(&[
            [4.0, 1.0, -2.0, 0.5],
            [1.0, 3.0, 0.0, 1.5],
            [-2.0, 0.0, 5.0, -1.0],
            [0.5, 1.5, -1.0, 2.0],
        ])
        .unwrap();
        let e = sym_eigen(&a).unwrap();
        let back = e.reconstruct_with(|l| l);
        assert!(back.sub(&a).unwrap().frobenius() <= 1e-12 * a.frobenius());
        assert!(e.vectors.orthogonality_error() < 1e-13);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        assert!((e.values.iter().sum::<f64>() - a.trace()).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let a = Mat::from_rows(&[[2.0, -1.0, 0.3], [-1.0, 2.0, -1.0], [0.3, -1.0, 2.0]]).unwrap();
        let e1 = sym_eigen(&a).unwrap();
        let e2 = sym_eigen(&a).unwrap();
        assert_eq!(e1.values, e2.values);
        assert_eq!(e1.vectors, e2.vectors);
    }
}
