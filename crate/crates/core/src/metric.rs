//! States, observables and the Wigner-Yanase-Dyson metric.
//!
//! The Gram matrix `Gamma` is indexed by row-major matrix units: the unit
//! `E_ij` (0-based) sits at index `d * i + j`. For an observable `A` with
//! row-major coordinate vector `a`, the skew information is `a^dag Gamma a`
//! and the correlation of `A` and `B` is `a^dag Gamma b`.

use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::numerics::{
    self, commutator, herm_eig, hs_inner, pauli_x, pauli_y, pauli_z, ComplexMatrix,
    EigenDecomposition, C64, EIG_CLAMP, HERMITIAN_TOL, NEG_EIG_ERROR,
};

/// Default tolerance for density-matrix validation.
pub const DENSITY_TOL: f64 = 1e-9;
/// Allowed disagreement between the two Gamma constructions.
pub const GAMMA_CROSS_CHECK_TOL: f64 = 1e-8;

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            matrix: ComplexMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)),
        }
    }

    /// Stable hash of the matrix bits.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.dim().hash(&mut h);
        for row in self.matrix.rows() {
            for z in row {
                z.re.to_bits().hash(&mut h);
                z.im.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}

/// Hermitian matrix with a display label.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    name: String,
    matrix: ComplexMatrix,
}

impl Observable {
    pub fn new(name: impl Into<String>, matrix: ComplexMatrix) -> Result<Self> {
        let residual = matrix.hermitian_residual();
        if residual > HERMITIAN_TOL * (1.0 + matrix.max_abs()) {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Observable {
            name: name.into(),
            matrix: matrix.hermitian_part(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Observable {
            name: self.name.clone(),
            matrix: self.matrix.scale(C64::new(factor, 0.0)),
        }
    }
}

/// WYD exponent `p`, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricParam(f64);

impl MetricParam {
    pub fn new(p: f64) -> Result<Self> {
        if p > 0.0 && p < 1.0 {
            Ok(MetricParam(p))
        } else {
            Err(Error::BadMetricParam { p })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> f64 {
        1.0 - self.0
    }
}

/// Row-major coordinates of a matrix in the `E_ij` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateVector(pub Vec<C64>);

/// Nonnegative sampled coordinates `x_i = |(C vec A)_i|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledVector(Vec<f64>);

impl SampledVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = entries
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::BadCoordinate { index, value });
        }
        Ok(SampledVector(entries))
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }
}

/// The Gram matrix of the metric together with its canonical factor.
#[derive(Debug, Clone)]
pub struct GammaFactorization {
    gamma: ComplexMatrix,
    factor_c: ComplexMatrix,
    p: MetricParam,
    state_dim: usize,
    state_fingerprint: u64,
}

impl GammaFactorization {
    pub fn gamma(&self) -> &ComplexMatrix {
        &self.gamma
    }

    pub fn factor_c(&self) -> &ComplexMatrix {
        &self.factor_c
    }

    pub fn p(&self) -> MetricParam {
        self.p
    }

    /// Dimension `d` of the underlying Hilbert space.
    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn state_fingerprint(&self) -> u64 {
        self.state_fingerprint
    }

    fn check_dim(&self, a: &Observable) -> Result<()> {
        if a.dim() != self.state_dim {
            return Err(Error::DimensionMismatch {
                expected: self.state_dim,
                found: a.dim(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GammaOptions {
    /// Build Gamma a second time from the eigenbasis kernel and compare.
    pub cross_check: bool,
}

impl Default for GammaOptions {
    fn default() -> Self {
        GammaOptions {
            cross_check: cfg!(debug_assertions),
        }
    }
}

pub fn validate_density(m: &ComplexMatrix, tol: f64) -> Result<DensityMatrix> {
    let residual = m.hermitian_residual();
    if residual > tol {
        return Err(Error::NotHermitian { residual });
    }
    let trace = m.trace();
    let residual = (trace - C64::new(1.0, 0.0)).norm();
    if residual > tol {
        return Err(Error::TraceNotOne { residual });
    }
    let matrix = m.hermitian_part();
    let eig = herm_eig(&matrix)?;
    if eig.min_value() < -EIG_CLAMP {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.min_value(),
        });
    }
    Ok(DensityMatrix { matrix })
}

/// Qubit state `(I + r . sigma) / 2`.
pub fn bloch_state(r: [f64; 3]) -> Result<DensityMatrix> {
    let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    if !(norm <= 1.0 + 1e-12) {
        return Err(Error::BlochNormExceeded { norm });
    }
    let half = |x: f64| C64::new(0.5 * x, 0.0);
    let m = &(&ComplexMatrix::identity(2).scale(half(1.0)) + &pauli_x().scale(half(r[0])))
        + &(&pauli_y().scale(half(r[1])) + &pauli_z().scale(half(r[2])));
    validate_density(&m, DENSITY_TOL)
}

/// Rank-one projector `|psi><psi|`; with `normalize` the amplitudes are
/// rescaled first, otherwise their norm must already be one.
pub fn pure_state(amplitudes: &[C64], normalize: bool) -> Result<DensityMatrix> {
    let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if amplitudes.is_empty() || !norm.is_finite() || norm == 0.0 {
        return Err(Error::NotNormalized { norm });
    }
    let scale = if normalize {
        1.0 / norm
    } else {
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { norm });
        }
        1.0
    };
    let psi: Vec<C64> = amplitudes.iter().map(|z| z * scale).collect();
    let m = ComplexMatrix::from_fn(psi.len(), |i, j| psi[i] * psi[j].conj());
    validate_density(&m, DENSITY_TOL)
}

/// Row-major vectorization: entry `d * i + j` is `A[i][j]`.
pub fn vec_coords(a: &Observable) -> CoordinateVector {
    let d = a.dim();
    CoordinateVector(
        (0..d * d)
            .map(|idx| a.matrix().get(idx / d, idx % d))
            .collect(),
    )
}

/// `h(x, y) = (x^p - y^p)(x^{1-p} - y^{1-p}) / 2`, the WYD Morozova-Chentsov
/// function multiplied by `m(c) (x - y)^2 / 2`. Finite on the whole closed
/// quadrant, so coincident and zero eigenvalues need no special casing.
pub fn wyd_kernel(x: f64, y: f64, p: MetricParam) -> f64 {
    let (a, b) = (p.value(), p.complement());
    0.5 * ((x.powf(a) - y.powf(a)) * (x.powf(b) - y.powf(b)))
}

struct StatePowers {
    eig: EigenDecomposition,
    rho_p: ComplexMatrix,
    rho_q: ComplexMatrix,
}

fn state_powers(rho: &DensityMatrix, p: MetricParam) -> Result<StatePowers> {
    let eig = herm_eig(rho.matrix())?;
    if eig.min_value() < -NEG_EIG_ERROR {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.min_value(),
        });
    }
    let rho_p = numerics::mat_pow_from_eig(&eig, p.value())?;
    let rho_q = numerics::mat_pow_from_eig(&eig, p.complement())?;
    Ok(StatePowers { eig, rho_p, rho_q })
}

/// `Gamma_{ij,kl} = 1/2 <[rho^p, E_ij], [rho^{1-p}, E_kl]>`.
pub fn gamma_commutator_form(rho: &DensityMatrix, p: MetricParam) -> Result<ComplexMatrix> {
    let powers = state_powers(rho, p)?;
    gamma_from_powers(&powers, rho.dim())
}

fn gamma_from_powers(powers: &StatePowers, d: usize) -> Result<ComplexMatrix> {
    let n = d * d;
    let left: Vec<ComplexMatrix> = (0..n)
        .map(|idx| commutator(&powers.rho_p, &ComplexMatrix::unit(d, idx / d, idx % d)))
        .collect::<Result<_>>()?;
    let right: Vec<ComplexMatrix> = (0..n)
        .map(|idx| commutator(&powers.rho_q, &ComplexMatrix::unit(d, idx / d, idx % d)))
        .collect::<Result<_>>()?;
    let mut gamma = ComplexMatrix::zeros(n);
    for a in 0..n {
        for b in 0..n {
            gamma.set(a, b, hs_inner(&left[a], &right[b])? * 0.5);
        }
    }
    Ok(gamma)
}

/// Gamma from the eigenbasis of `rho`:
/// `Gamma_{ij,kl} = sum_ab h(l_a, l_b) U_ia conj(U_jb) conj(U_ka) U_lb`.
pub fn gamma_kernel_form(rho: &DensityMatrix, p: MetricParam) -> Result<ComplexMatrix> {
    let eig = herm_eig(rho.matrix())?;
    if eig.min_value() < -NEG_EIG_ERROR {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.min_value(),
        });
    }
    Ok(gamma_from_eig(&eig, p))
}

fn gamma_from_eig(eig: &EigenDecomposition, p: MetricParam) -> ComplexMatrix {
    let d = eig.values.len();
    let n = d * d;
    let scale = eig.spectral_radius();
    let lambda: Vec<f64> = eig.values.iter().map(|&l| numerics::denoise_eigenvalue(l, scale)).collect();
    let h: Vec<f64> = (0..n)
        .map(|ab| wyd_kernel(lambda[ab / d], lambda[ab % d], p))
        .collect();
    let u = &eig.vectors;
    // w[ij][ab] = conj((U^dag E_ij U)_ab) = U_ia conj(U_jb)
    let w: Vec<Vec<C64>> = (0..n)
        .map(|ij| {
            let (i, j) = (ij / d, ij % d);
            (0..n)
                .map(|ab| u.get(i, ab / d) * u.get(j, ab % d).conj())
                .collect()
        })
        .collect();
    ComplexMatrix::from_fn(n, |x, y| {
        (0..n)
            .filter(|&ab| h[ab] != 0.0)
            .map(|ab| w[x][ab] * w[y][ab].conj() * h[ab])
            .sum()
    })
}

/// Builds Gamma and its canonical factor, cross-checking the commutator and
/// eigenbasis constructions in debug builds.
pub fn gamma_matrix(rho: &DensityMatrix, p: MetricParam) -> Result<GammaFactorization> {
    gamma_matrix_with(rho, p, GammaOptions::default())
}

pub fn gamma_matrix_with(
    rho: &DensityMatrix,
    p: MetricParam,
    options: GammaOptions,
) -> Result<GammaFactorization> {
    let d = rho.dim();
    let powers = state_powers(rho, p)?;
    let raw = gamma_from_powers(&powers, d)?;
    if options.cross_check {
        let kernel = gamma_from_eig(&powers.eig, p);
        let diff = (&raw - &kernel).max_abs();
        if diff > GAMMA_CROSS_CHECK_TOL * (1.0 + raw.max_abs()) {
            return Err(Error::CrossCheckFailed { residual: diff });
        }
    }
    let residual = raw.hermitian_residual();
    if residual > HERMITIAN_TOL * (1.0 + raw.max_abs()) {
        return Err(Error::NotHermitian { residual });
    }
    let gamma = raw.hermitian_part();
    let factor_c = numerics::psd_sqrt_factor(&gamma)?;
    Ok(GammaFactorization {
        gamma,
        factor_c,
        p,
        state_dim: d,
        state_fingerprint: rho.fingerprint(),
    })
}

fn check_dims(rho: &DensityMatrix, a: &Observable) -> Result<()> {
    if rho.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: a.dim(),
        });
    }
    Ok(())
}

fn wyd_trace(powers: &StatePowers, a: &Observable, b: &Observable) -> Result<C64> {
    let left = commutator(&powers.rho_p, a.matrix())?;
    let right = commutator(&powers.rho_q, b.matrix())?;
    Ok((&left * &right).trace() * -0.5)
}

/// `I(A) = -1/2 Tr([rho^p, A][rho^{1-p}, A])`.
pub fn skew_info_direct(rho: &DensityMatrix, a: &Observable, p: MetricParam) -> Result<f64> {
    check_dims(rho, a)?;
    let powers = state_powers(rho, p)?;
    let t = wyd_trace(&powers, a, a)?;
    debug_assert!(t.im.abs() < 1e-10 * (1.0 + t.re.abs()), "imaginary skew information {t}");
    Ok(t.re)
}

/// `I(A) = vec(A)^dag Gamma vec(A)`.
pub fn skew_info_quadratic(gf: &GammaFactorization, a: &Observable) -> Result<f64> {
    Ok(correlation_quadratic(gf, a, a)?.re)
}

/// Metric-adjusted correlation `-1/2 Tr([rho^p, A][rho^{1-p}, B])`.
pub fn correlation(
    rho: &DensityMatrix,
    a: &Observable,
    b: &Observable,
    p: MetricParam,
) -> Result<C64> {
    check_dims(rho, a)?;
    check_dims(rho, b)?;
    let powers = state_powers(rho, p)?;
    wyd_trace(&powers, a, b)
}

/// `vec(A)^dag Gamma vec(B)`.
pub fn correlation_quadratic(gf: &GammaFactorization, a: &Observable, b: &Observable) -> Result<C64> {
    gf.check_dim(a)?;
    gf.check_dim(b)?;
    let va = vec_coords(a).0;
    let gb = gf.gamma.mul_vec(&vec_coords(b).0);
    Ok(va.iter().zip(&gb).map(|(x, y)| x.conj() * y).sum())
}

/// `C vec(A)` before taking magnitudes.
pub fn transformed_coords(gf: &GammaFactorization, a: &Observable) -> Result<Vec<C64>> {
    gf.check_dim(a)?;
    Ok(gf.factor_c.mul_vec(&vec_coords(a).0))
}

pub fn sampled_coords(gf: &GammaFactorization, a: &Observable) -> Result<SampledVector> {
    let alpha = transformed_coords(gf, a)?;
    SampledVector::new(alpha.iter().map(|z| z.norm()).collect())
}

/// `Tr(rho A^2) - Tr(rho A)^2`.
pub fn variance(rho: &DensityMatrix, a: &Observable) -> Result<f64> {
    check_dims(rho, a)?;
    let ra = rho.matrix() * a.matrix();
    let mean = ra.trace().re;
    let second = (&ra * a.matrix()).trace().re;
    Ok(second - mean * mean)
}

/// `|Tr(rho [A, B])|^2 / 4`, reported alongside the product of skew
/// informations but never asserted as a bound.
pub fn heisenberg_diagnostic(rho: &DensityMatrix, a: &Observable, b: &Observable) -> Result<f64> {
    check_dims(rho, a)?;
    check_dims(rho, b)?;
    let comm = commutator(a.matrix(), b.matrix())?;
    Ok(0.25 * (rho.matrix() * &comm).trace().norm_sqr())
}
