//! Bargmann transform into the space of entire functions square-integrable
//! against the Gaussian measure, weighted norms there, Toeplitz operators,
//! and the intertwining identity with the canonical diagonal operators.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::gamma;
use crate::grid::GridFunction;
use crate::hermite::HermiteCoeffs;
use crate::operators::localization_matrix;
use crate::weights::RadialWeight;

const PI: f64 = std::f64::consts::PI;

/// An entire function in its expansion over the normalized monomials
/// `e_n(z) = (pi^n / n!)^{1/2} z^n`, which the transform sends the Hermite
/// basis to; the coefficient l2 norm equals the Gaussian-measure L2 norm.
#[derive(Debug, Clone)]
pub struct FockFunction {
    pub coeffs: Vec<Complex64>,
}

impl FockFunction {
    /// The transform of a Hermite expansion keeps the same coefficients.
    pub fn from_hermite(c: &HermiteCoeffs) -> Self {
        Self { coeffs: c.coeffs.clone() }
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    /// Pointwise value `sum a_n (pi^n / n!)^{1/2} z^n`; the monomial terms
    /// are built by a stable multiplicative recurrence.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for (n, a) in self.coeffs.iter().enumerate() {
            acc += a * term;
            term *= z * (PI / (n as f64 + 1.0)).sqrt();
        }
        acc
    }
}

/// Integral route to the transform:
/// `B f(z) = 2^{1/4} e^{-pi z^2 / 2} int f(t) e^{-pi t^2} e^{2 pi t z} dt`
/// evaluated by Riemann sum with all exponents combined before
/// exponentiation, so large `Re z` cannot overflow the intermediate factors.
pub fn bargmann_grid(f: &GridFunction, z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (t, &fv) in f.grid.points().zip(&f.samples) {
        let exponent = Complex64::new(-PI * t * t, 0.0) + 2.0 * PI * t * z
            - PI * z * z / 2.0;
        acc += fv * exponent.exp();
    }
    acc * 2.0_f64.powf(0.25) * f.grid.spacing
}

/// Weighted mixed-norm of `F` against the Gaussian measure on a square grid
/// over `[-half_width, half_width]^2` in `(Re z, Im z)`: inner p-norm along
/// the real axis, outer q-norm along the imaginary one.
pub fn fock_norm(
    fock: &FockFunction,
    p: f64,
    q: f64,
    m: &RadialWeight,
    half_width: f64,
    spacing: f64,
) -> Result<f64> {
    if p < 1.0 || q < 1.0 {
        return Err(CoreError::InvalidParameter(format!(
            "norm exponents must be >= 1 or inf, got p={p}, q={q}"
        )));
    }
    let n = (2.0 * half_width / spacing).round() as usize;
    let coord = |i: usize| -half_width + i as f64 * spacing;
    // the integrand |F| m e^{-pi |z|^2 / 2} at every grid point, with a
    // boundary-decay check before the norm is trusted
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut peak = 0.0_f64;
    let mut edge = 0.0_f64;
    for j in 0..n {
        let y = coord(j);
        let mut row = Vec::with_capacity(n);
        for i in 0..n {
            let x = coord(i);
            let z = Complex64::new(x, y);
            let lm = m.log_eval(&[x, y]);
            let v = fock.eval(z).norm() * (lm - PI * (x * x + y * y) / 2.0).exp();
            peak = peak.max(v);
            if i == 0 || i == n - 1 || j == 0 || j == n - 1 {
                edge = edge.max(v);
            }
            row.push(v);
        }
        rows.push(row);
    }
    if edge > 1e-8 * peak.max(f64::MIN_POSITIVE) {
        return Err(CoreError::UnderResolved(format!(
            "integrand has not decayed at the grid edge ({:.3e} of peak)",
            edge / peak
        )));
    }
    let inner: Vec<f64> = rows
        .iter()
        .map(|row| {
            if p.is_finite() {
                (row.iter().map(|v| v.powf(p)).sum::<f64>() * spacing).powf(1.0 / p)
            } else {
                row.iter().cloned().fold(0.0, f64::max)
            }
        })
        .collect();
    Ok(if q.is_finite() {
        (inner.iter().map(|v| v.powf(q)).sum::<f64>() * spacing).powf(1.0 / q)
    } else {
        inner.iter().cloned().fold(0.0, f64::max)
    })
}

/// Toeplitz operator by the eigenvalue route: for radial symbols the
/// normalized monomials are eigenfunctions with eigenvalues `tau_n(m)`.
pub fn toeplitz_radial(m: &RadialWeight, fock: &FockFunction) -> Result<FockFunction> {
    let coeffs = fock
        .coeffs
        .iter()
        .enumerate()
        .map(|(n, a)| Ok(a * gamma::tau(m, &[n], 1.0)?))
        .collect::<Result<_>>()?;
    Ok(FockFunction { coeffs })
}

/// Toeplitz operator by discretizing the defining integral: matrix entries
/// `<T_m e_a, e_b> = int m e_a conj(e_b) e^{-pi |z|^2} dA` in polar
/// quadrature. These are the complex conjugates of the localization-matrix
/// entries (the monomials carry the opposite angular orientation from the
/// shifted-Gaussian transforms), which is invisible for real symbols up to
/// transposition.
pub fn toeplitz_quadrature(m: &RadialWeight, fock: &FockFunction) -> Result<FockFunction> {
    let cutoff = fock.coeffs.len().saturating_sub(1);
    let loc = localization_matrix(m, cutoff)?;
    let n = fock.coeffs.len();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for b in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..n {
            acc += loc.matrix[(b, a)].conj() * fock.coeffs[a];
        }
        coeffs[b] = acc;
    }
    Ok(FockFunction { coeffs })
}

/// Maximum relative residual of the intertwining identity
/// `B (J_m f) = T_m (B f)` over the probe points: the left side goes through
/// the weighted-gamma diagonal, the right through quadrature of the Toeplitz
/// integral, so agreement exercises both routes.
pub fn intertwine_check(
    m: &RadialWeight,
    f: &HermiteCoeffs,
    points: &[Complex64],
) -> Result<f64> {
    let diag = crate::operators::canonical_diagonal(m, f.cutoff)?;
    let lhs = FockFunction::from_hermite(&diag.apply(f)?);
    let rhs = toeplitz_quadrature(m, &FockFunction::from_hermite(f))?;
    let bf = FockFunction::from_hermite(f);
    let scale = points
        .iter()
        .map(|&z| bf.eval(z).norm())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut worst = 0.0_f64;
    for &z in points {
        worst = worst.max((lhs.eval(z) - rhs.eval(z)).norm() / scale);
    }
    Ok(worst)
}

/// Quadrature orthonormality defect of the normalized monomials: the largest
/// deviation of `<e_a, e_b>` from the identity under polar integration
/// against the Gaussian measure.
pub fn monomial_gram_deviation(cutoff: usize) -> Result<f64> {
    let loc = localization_matrix(&RadialWeight::constant(1), cutoff)?;
    let mut worst = 0.0_f64;
    for i in 0..=cutoff {
        for j in 0..=cutoff {
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((loc.matrix[(i, j)] - Complex64::new(expect, 0.0)).norm());
        }
    }
    Ok(worst)
}
