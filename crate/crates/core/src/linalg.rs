//! Dense symmetric linear algebra for the small matrices used throughout:
//! cyclic Jacobi eigendecomposition, spectral matrix functions, the
//! isometric `vech` chart and condition-checked inversion.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Condition number above which a matrix is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Tolerance for symmetry checks, relative to `max(1, max |a_ij|)`.
pub const SYMMETRY_TOL: f64 = 1e-12;

const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub values: DVector<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: DMatrix<f64>,
}

impl SymmetricEigen {
    /// `V f(Λ) Vᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.values.len();
        let mut out = DMatrix::zeros(n, n);
        for k in 0..n {
            let fk = f(self.values[k]);
            let v = self.vectors.column(k);
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += fk * v[i] * v[j];
                }
            }
        }
        symmetrize(&out)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigendecomposition. The input is symmetrized first; sweeps
/// continue until the off-diagonal Frobenius norm is at most `1e-13` times
/// `max(1, ‖A‖_F)`.
pub fn symmetric_eigen(input: &DMatrix<f64>) -> SymmetricEigen {
    assert!(input.is_square(), "symmetric_eigen needs a square matrix");
    let n = input.nrows();
    let mut a = symmetrize(input);
    let mut v = DMatrix::<f64>::identity(n, n);
    let threshold = JACOBI_TOL * a.norm().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    SymmetricEigen { values, vectors }
}

/// `(A + Aᵀ) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Largest `|a_ij - a_ji|`.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

pub fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let scale = a.amax().max(1.0);
    let asym = asymmetry(a);
    if asym > SYMMETRY_TOL * scale || !asym.is_finite() {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

/// Eigendecomposition of an SPD matrix, rejecting matrices whose smallest
/// eigenvalue is at most `1e-14` times the largest.
pub fn spd_eigen(a: &DMatrix<f64>) -> Result<SymmetricEigen> {
    check_symmetric(a)?;
    let eig = symmetric_eigen(a);
    let (lo, hi) = (eig.min(), eig.max());
    if !(hi > 0.0) || lo <= 1e-14 * hi {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: lo });
    }
    Ok(eig)
}

/// Principal matrix logarithm of an SPD matrix.
pub fn spd_logm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(spd_eigen(a)?.map(f64::ln))
}

/// Matrix exponential of a symmetric matrix.
pub fn spd_expm(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(b)?;
    Ok(symmetric_eigen(b).map(f64::exp))
}

/// Side length `p` of a symmetric matrix with `len = p(p+1)/2` free entries.
pub fn vech_side(len: usize) -> Option<usize> {
    let mut p = 0;
    while p * (p + 1) / 2 < len {
        p += 1;
    }
    (p * (p + 1) / 2 == len).then_some(p)
}

/// Isometric half-vectorization: diagonal first, then the strict upper
/// triangle row-major scaled by `√2`, so `‖vech(B)‖ = ‖B‖_F`.
pub fn vech(b: &DMatrix<f64>) -> DVector<f64> {
    let p = b.nrows();
    let mut out = Vec::with_capacity(p * (p + 1) / 2);
    out.extend((0..p).map(|i| b[(i, i)]));
    for i in 0..p {
        for j in (i + 1)..p {
            out.push(std::f64::consts::SQRT_2 * 0.5 * (b[(i, j)] + b[(j, i)]));
        }
    }
    DVector::from_vec(out)
}

/// Inverse of [`vech`].
pub fn unvech(x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let p = vech_side(x.len()).ok_or_else(|| {
        Error::InvalidArgument(format!("{} is not a triangular number", x.len()))
    })?;
    let mut b = DMatrix::zeros(p, p);
    for i in 0..p {
        b[(i, i)] = x[i];
    }
    let mut k = p;
    for i in 0..p {
        for j in (i + 1)..p {
            let v = x[k] / std::f64::consts::SQRT_2;
            b[(i, j)] = v;
            b[(j, i)] = v;
            k += 1;
        }
    }
    Ok(b)
}

/// Result of inverting a symmetric matrix through its eigendecomposition.
#[derive(Debug, Clone)]
pub struct SpectralInverse {
    pub inverse: DMatrix<f64>,
    /// `max |λ| / min |λ|`; infinite when an eigenvalue is exactly zero.
    pub condition: f64,
    pub positive_definite: bool,
}

impl SpectralInverse {
    pub fn is_well_conditioned(&self) -> bool {
        self.condition.is_finite() && self.condition <= MAX_CONDITION
    }
}

pub fn spectral_inverse(a: &DMatrix<f64>) -> SpectralInverse {
    let n = a.nrows();
    if n == 0 {
        return SpectralInverse {
            inverse: DMatrix::zeros(0, 0),
            condition: 1.0,
            positive_definite: true,
        };
    }
    let eig = symmetric_eigen(a);
    let abs_max = eig.values.amax();
    let abs_min = eig.values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let condition = if abs_min > 0.0 {
        abs_max / abs_min
    } else {
        f64::INFINITY
    };
    let inverse = if abs_min > 0.0 {
        eig.map(|l| 1.0 / l)
    } else {
        DMatrix::from_element(n, n, f64::NAN)
    };
    SpectralInverse {
        inverse,
        condition,
        positive_definite: eig.min() > 0.0,
    }
}

/// Quadratic form `vᵀ M v`.
pub fn quad_form(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (v.transpose() * m * v)[(0, 0)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(e: &SymmetricEigen) -> DMatrix<f64> {
        e.map(|l| l)
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let e = symmetric_eigen(&a);
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        assert!((reconstruct(&e) - &a).norm() < 1e-14);
    }

    #[test]
    fn jacobi_eigenvectors_are_orthonormal() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                4.0, 1.0, -2.0, 2.0, 1.0, 2.0, 0.0, 1.0, -2.0, 0.0, 3.0, -2.0, 2.0, 1.0, -2.0, -1.0,
            ],
        );
        let e = symmetric_eigen(&a);
        let vtv = e.vectors.transpose() * &e.vectors;
        assert!((vtv - DMatrix::identity(4, 4)).norm() < 1e-13);
        assert!((reconstruct(&e) - &a).norm() < 1e-12);
    }

    #[test]
    fn logm_of_diag_and_identity() {
        let e = std::f64::consts::E;
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![e, 1.0, 1.0]));
        let l = spd_logm(&a).unwrap();
        let want = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 0.0]));
        assert!((l - want).norm() < 1e-14);
        assert!(spd_logm(&DMatrix::identity(3, 3)).unwrap().norm() < 1e-15);
    }

    #[test]
    fn logm_of_two_by_two() {
        // Eigenpairs (3, (1,1)/√2) and (1, (1,-1)/√2) give (ln 3 / 2) * ones.
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let l = spd_logm(&a).unwrap();
        let c = 3f64.ln() / 2.0;
        assert!((l - DMatrix::from_element(2, 2, c)).norm() < 1e-14);
        assert!((c - 0.5493).abs() < 1e-4);
    }

    #[test]
    fn logm_rejects_indefinite_and_asymmetric() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            spd_logm(&a),
            Err(Error::NotPositiveDefinite { .. })
        ));
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(spd_logm(&b), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn vech_ordering_and_isometry() {
        let v = vech(&DMatrix::identity(3, 3));
        assert_eq!(v.as_slice(), &[1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);

        let mut b = DMatrix::zeros(3, 3);
        b[(0, 1)] = 1.0;
        b[(1, 0)] = 1.0;
        let v = vech(&b);
        assert!((v[3] - 2f64.sqrt()).abs() < 1e-15);
        assert!((v.norm() - b.norm()).abs() < 1e-15);
        assert_eq!(unvech(&v).unwrap(), b);
    }

    #[test]
    fn unvech_rejects_bad_length() {
        assert!(unvech(&DVector::zeros(5)).is_err());
        assert_eq!(vech_side(6), Some(3));
        assert_eq!(vech_side(1), Some(1));
        assert_eq!(vech_side(7), None);
    }

    #[test]
    fn spectral_inverse_reports_condition() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
        let inv = spectral_inverse(&a);
        assert!((inv.condition - 2.0).abs() < 1e-15);
        assert!(inv.positive_definite);
        assert!((inv.inverse[(0, 0)] - 0.5).abs() < 1e-15);

        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        let inv = spectral_inverse(&s);
        assert!(!inv.is_well_conditioned());
    }
}
