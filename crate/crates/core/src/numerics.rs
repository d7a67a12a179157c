//! Dense complex matrices, the Hermitian eigensolver, fractional powers and
//! the canonical PSD factorization.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Entrywise Hermiticity tolerance, scaled by `1 + max|entry|`.
pub const HERMITIAN_TOL: f64 = 1e-9;
/// Eigenvalues in `[-EIG_CLAMP, 0)` are treated as exact zeros.
pub const EIG_CLAMP: f64 = 1e-10;
/// Eigenvalues below `-NEG_EIG_ERROR` make a fractional power an error.
pub const NEG_EIG_ERROR: f64 = 1e-8;
/// Relative size below which an eigenvalue is rounding noise. Fractional
/// powers amplify noise (1e-17^0.1 is about 0.02), so these count as zero.
pub const EIG_NOISE_FLOOR: f64 = 1e-13;
/// Jacobi stops once the off-diagonal Frobenius norm drops below this
/// fraction of the matrix norm.
pub const JACOBI_OFF_TOL: f64 = 1e-14;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Magnitudes within this relative distance of the column maximum count as
/// ties when fixing eigenvector phases.
const PHASE_TIE_TOL: f64 = 1e-12;

/// Square complex matrix, dimension at least one.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        ComplexMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        ComplexMatrix(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        ComplexMatrix(DMatrix::from_fn(dim, dim, f))
    }

    /// Builds a matrix from rows, rejecting ragged, empty or non-finite input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::NotSquare { rows: 0, cols: 0 });
        }
        for row in rows {
            if row.len() != dim {
                return Err(Error::NotSquare {
                    rows: dim,
                    cols: row.len(),
                });
            }
        }
        for (i, row) in rows.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// The matrix unit `E_ij = |i><j|` (0-based).
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim);
        m.0[(i, j)] = C64::new(1.0, 0.0);
        m
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.0[(i, j)] = value;
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        ComplexMatrix(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, factor: C64) -> Self {
        ComplexMatrix(&self.0 * factor)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |M_ij - conj(M_ji)|`.
    pub fn hermitian_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(M + M^dag) / 2`.
    pub fn hermitian_part(&self) -> Self {
        ComplexMatrix((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol * (1.0 + self.max_abs())
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        let d = self.dim();
        assert_eq!(v.len(), d, "vector length must match matrix dimension");
        (0..d)
            .map(|i| (0..d).map(|j| self.0[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim(), self.dim())?;
        for row in self.rows() {
            let cells: Vec<String> = row
                .iter()
                .map(|z| format!("{:+.6}{:+.6}i", z.re, z.im))
                .collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in product");
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in sum");
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in difference");
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

pub fn pauli_x() -> ComplexMatrix {
    let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    ComplexMatrix::from_fn(2, |i, j| if i != j { l } else { o })
}

pub fn pauli_y() -> ComplexMatrix {
    let rows = [
        [C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
        [C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
    ];
    ComplexMatrix::from_fn(2, |i, j| rows[i][j])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real_diag(&[1.0, -1.0])
}

/// Eigenvalues sorted descending; eigenvectors are the columns of `vectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// `U diag(f(lambda)) U^dag`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let d = self.values.len();
        let u = &self.vectors;
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(d, |i, j| {
            (0..d)
                .map(|k| u.get(i, k) * u.get(j, k).conj() * mapped[k])
                .sum()
        })
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
///
/// Each column of the eigenvector matrix is rotated so that its entry of
/// largest magnitude is real and nonnegative (lowest row wins ties).
pub fn herm_eig(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    let residual = m.hermitian_residual();
    if residual > HERMITIAN_TOL * (1.0 + m.max_abs()) {
        return Err(Error::NotHermitian { residual });
    }
    let n = m.dim();
    let mut a = m.hermitian_part().0;
    let mut v = DMatrix::<C64>::identity(n, n);
    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    let off_norm = |a: &DMatrix<C64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&a) <= JACOBI_OFF_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g < f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / g;
                let phase_conj = phase.conj();
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // A <- A G with G = [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * c - akq * phase_conj * s;
                    a[(k, q)] = akp * s + akq * phase_conj * c;
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * c - vkq * phase_conj * s;
                    v[(k, q)] = vkp * s + vkq * phase_conj * c;
                }
                // A <- G^dag A
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = apk * c - aqk * phase * s;
                    a[(q, k)] = apk * s + aqk * phase * c;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
            }
        }
    }
    if !converged {
        let off = off_norm(&a);
        if off > JACOBI_OFF_TOL * scale {
            return Err(Error::NoConvergence {
                sweeps: JACOBI_MAX_SWEEPS,
                off_norm: off,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let max_mag = (0..n).map(|r| v[(r, src)].norm()).fold(0.0, f64::max);
        let pivot = (0..n)
            .find(|&r| v[(r, src)].norm() >= max_mag * (1.0 - PHASE_TIE_TOL))
            .unwrap_or(0);
        let z = v[(pivot, src)];
        let rot = if z.norm() > 0.0 {
            z.conj() / z.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for r in 0..n {
            vectors[(r, col)] = v[(r, src)] * rot;
        }
        vectors[(pivot, col)] = C64::new(vectors[(pivot, col)].norm(), 0.0);
    }
    Ok(EigenDecomposition {
        values,
        vectors: ComplexMatrix(vectors),
    })
}

/// `rho^p` for a positive semidefinite Hermitian matrix and `p` in `(0, 1]`.
pub fn mat_pow(rho: &ComplexMatrix, p: f64) -> Result<ComplexMatrix> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::BadExponent { p });
    }
    let eig = herm_eig(rho)?;
    mat_pow_from_eig(&eig, p)
}

pub(crate) fn mat_pow_from_eig(eig: &EigenDecomposition, p: f64) -> Result<ComplexMatrix> {
    let min = eig.min_value();
    if min < -NEG_EIG_ERROR {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    Ok(eig
        .reconstruct_with(|l| denoise_eigenvalue(l, eig.spectral_radius()).powf(p))
        .hermitian_part())
}

/// Clamps negative eigenvalues and those within the noise floor of `scale` to zero.
pub fn denoise_eigenvalue(l: f64, scale: f64) -> f64 {
    if l <= EIG_NOISE_FLOOR * scale.max(1.0) {
        0.0
    } else {
        l
    }
}

pub fn commutator(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    x.check_same_dim(y)?;
    Ok(&(x * y) - &(y * x))
}

/// Hilbert-Schmidt inner product `Tr(X^dag Y)`.
pub fn hs_inner(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<C64> {
    x.check_same_dim(y)?;
    Ok(x.0.iter().zip(y.0.iter()).map(|(a, b)| a.conj() * b).sum())
}

/// Canonical factor `C = diag(sqrt(max(lambda, 0))) U^dag` with `C^dag C = G`.
pub fn psd_sqrt_factor(g: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(g)?;
    psd_sqrt_factor_from_eig(&eig)
}

pub(crate) fn psd_sqrt_factor_from_eig(eig: &EigenDecomposition) -> Result<ComplexMatrix> {
    let min = eig.min_value();
    if min < -NEG_EIG_ERROR * (1.0 + eig.spectral_radius()) {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    let u = &eig.vectors;
    let roots: Vec<f64> = eig.values.iter().map(|l| l.max(0.0).sqrt()).collect();
    Ok(ComplexMatrix::from_fn(eig.values.len(), |i, j| {
        u.get(j, i).conj() * roots[i]
    }))
}
