//! Conditioning experiments behind the isomorphism statements: the diagonal
//! ratio rho, two-sided lifting ratios of localization operators between
//! weighted norms, and preconditioned inversion of Gabor multipliers.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::gabor::GaborSystem;
use crate::gamma;
use crate::grid::GridFunction;
use crate::hermite::{HermiteBasis, HermiteCoeffs};
use crate::operators::{gabor_multiplier_apply, localization_matrix};
use crate::phase_space::{mod_norm_grid, PhaseGrid};
use crate::weights::RadialWeight;

/// Per-index conditioning data for a diagonal operator pair.
#[derive(Debug, Clone, Serialize)]
pub struct IsoReport {
    pub weight: String,
    pub cutoff: usize,
    pub rho: Vec<f64>,
    pub sup: f64,
    pub inf: f64,
    /// sup / inf
    pub ratio: f64,
    /// (sup, inf) over the first half of the index range, for refinement
    /// comparisons
    pub half_sup: f64,
    pub half_inf: f64,
}

fn extremes(values: &[f64]) -> (f64, f64) {
    let sup = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let inf = values.iter().cloned().fold(f64::INFINITY, f64::min);
    (sup, inf)
}

/// `rho_n = tau_n(theta)^2 / tau_n(theta^2)`: the squared norm of the
/// canonical diagonal operator's action on `h_n`, measured from the weighted
/// coefficient norm into the unweighted one. Always in `(0, 1]`; bounded
/// below away from zero exactly when the diagonal map is an isomorphism.
pub fn iso_condition(theta: &RadialWeight, cutoff: usize) -> Result<IsoReport> {
    if theta.dimension != 1 {
        return Err(CoreError::InvalidParameter(
            "iso_condition supports dimension 1 only".into(),
        ));
    }
    let theta2 = theta.pow(2.0);
    let rho: Vec<f64> = (0..=cutoff)
        .into_par_iter()
        .map(|n| -> Result<f64> {
            let t = gamma::tau(theta, &[n], 1.0)?;
            Ok(t * t / gamma::tau(&theta2, &[n], 1.0)?)
        })
        .collect::<Result<_>>()?;
    let (sup, inf) = extremes(&rho);
    let (half_sup, half_inf) = extremes(&rho[..=cutoff / 2]);
    Ok(IsoReport {
        weight: theta.describe(),
        cutoff,
        rho,
        sup,
        inf,
        ratio: sup / inf,
        half_sup,
        half_inf,
    })
}

/// Ratio statistics of `||A_m f||_{M^p_{mu/m}} / ||f||_{M^p_mu}` over a test
/// family.
#[derive(Debug, Clone, Serialize)]
pub struct RatioStats {
    pub weight: String,
    pub cutoff: usize,
    pub p: f64,
    pub seed: u64,
    pub ratios: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// max / min: the observed two-sided equivalence constant
    pub spread: f64,
}

/// Pointwise quotient `mu / m` as a weight usable in grid norms.
pub fn weight_quotient(mu: &RadialWeight, m: &RadialWeight) -> RadialWeight {
    let mu = mu.clone();
    let m = m.clone();
    RadialWeight::from_log_profile(1, move |r| mu.log_radial(r) - m.log_radial(r))
}

/// Deterministic family of test functions: the first Hermite functions
/// followed by seeded random coefficient mixes with a mild decay profile.
pub fn test_family(cutoff: usize, count: usize, seed: u64) -> Vec<HermiteCoeffs> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_pure = count.min(10);
    let mut out: Vec<HermiteCoeffs> =
        (0..n_pure).map(|n| HermiteCoeffs::unit(cutoff, n)).collect();
    for _ in n_pure..count {
        let mut c = HermiteCoeffs::zeros(cutoff);
        for (n, a) in c.coeffs.iter_mut().enumerate() {
            let decay = (-(n as f64) / 8.0).exp();
            *a = Complex64::new(
                rng.gen_range(-1.0..1.0) * decay,
                rng.gen_range(-1.0..1.0) * decay,
            );
        }
        let norm = c.norm_l2();
        for a in c.coeffs.iter_mut() {
            *a /= norm;
        }
        out.push(c);
    }
    out
}

/// Measures the two-sided norm equivalence realized by `A_m` between
/// `M^p_mu` and `M^p_{mu/m}` on a family of test functions.
///
/// Refuses symbols whose moderateness envelope fails the
/// sub-exponential-growth condition: for those the underlying bounded
/// invertibility claim is not made, so the experiment would measure nothing.
pub fn lifting_ratio(
    m: &RadialWeight,
    mu: &RadialWeight,
    p: f64,
    cutoff: usize,
    pg: &PhaseGrid,
    count: usize,
    seed: u64,
) -> Result<RatioStats> {
    let env = m.envelope().ok_or_else(|| {
        CoreError::GrsViolation(format!(
            "no moderateness envelope available for {}",
            m.describe()
        ))
    })?;
    if !env.grs_pass() {
        return Err(CoreError::GrsViolation(format!(
            "envelope of {} grows exponentially; the lifting claim requires \
             sub-exponential (GRS) growth",
            m.describe()
        )));
    }
    let op = localization_matrix(m, cutoff)?;
    let target = weight_quotient(mu, m);
    let grid = crate::grid::Grid1d::new(12.0, 1.0 / 64.0)?;
    let basis = HermiteBasis::new(cutoff, grid);
    basis.resolution_check()?;
    let family = test_family(cutoff, count, seed);
    let ratios: Vec<f64> = family
        .par_iter()
        .map(|c| -> Result<f64> {
            let f = basis.synthesize(c);
            let denom = mod_norm_grid(&f, p, p, mu, pg)?.value;
            let af = basis.synthesize(&op.apply(c)?);
            let numer = mod_norm_grid(&af, p, p, &target, pg)?.value;
            Ok(numer / denom)
        })
        .collect::<Result<_>>()?;
    let (max, min) = extremes(&ratios);
    Ok(RatioStats {
        weight: m.describe(),
        cutoff,
        p,
        seed,
        ratios,
        min,
        max,
        spread: max / min,
    })
}

/// Two-sided bounds of the quadratic form `<A f, f>` against the weighted
/// coefficient norm `||f||^2_{M^2_theta}`, `theta = m^{1/2}`: the extreme
/// generalized eigenvalues of the operator matrix against the diagonal
/// `tau_alpha(theta^2)`.
pub fn hilbert_iso_pair_check(
    op: &crate::operators::DenseOperator,
    m: &RadialWeight,
    cutoff: usize,
) -> Result<(f64, f64)> {
    if op.dim() != cutoff + 1 {
        return Err(CoreError::DimensionMismatch(format!(
            "operator of size {} does not match cutoff {cutoff}",
            op.dim()
        )));
    }
    let theta2 = m.pow(0.5).pow(2.0);
    let diag: Vec<f64> = (0..=cutoff)
        .map(|n| gamma::tau(&theta2, &[n], 1.0))
        .collect::<Result<_>>()?;
    let n = cutoff + 1;
    let mut scaled = op.matrix.clone();
    for i in 0..n {
        for j in 0..n {
            scaled[(i, j)] /= (diag[i] * diag[j]).sqrt();
        }
    }
    let wrapped =
        crate::operators::DenseOperator { matrix: scaled, provenance: "scaled".into() };
    Ok(wrapped.eigen_extremes())
}

/// Iteration record of a Krylov solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveTrace {
    pub preconditioner: String,
    /// true relative residuals `||G_m f - b|| / ||b||`, one per iteration
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
}

struct Vecs;
impl Vecs {
    fn dot(a: &GridFunction, b: &GridFunction) -> f64 {
        a.inner(b).re
    }
}

/// Solves `G_m f = b` by conjugate gradients preconditioned with the
/// reciprocal-symbol multiplier `G_{1/m}`: the composition `G_{1/m} G_m` is a
/// bounded invertible perturbation of the identity, so the preconditioned
/// spectrum clusters and the iteration count stays flat as `m` grows.
pub fn precond_solve(
    system: &GaborSystem,
    m: &RadialWeight,
    b: &GridFunction,
    tol: f64,
) -> Result<(GridFunction, SolveTrace)> {
    let apply = |f: &GridFunction| gabor_multiplier_apply(system, m, f);
    let m_inv = m.pow(-1.0);
    let precond = |f: &GridFunction| gabor_multiplier_apply(system, &m_inv, f);
    let b_norm = b.norm_l2();
    let mut x = GridFunction::zeros(b.grid);
    let mut r = b.clone();
    let mut z = precond(&r)?;
    let mut p = z.clone();
    let mut rz = Vecs::dot(&r, &z);
    let mut residuals = Vec::new();
    let max_iter = 500;
    for _ in 0..max_iter {
        let rel = r.norm_l2() / b_norm;
        residuals.push(rel);
        if rel <= tol {
            let trace = SolveTrace {
                preconditioner: "reciprocal-multiplier".into(),
                iterations: residuals.len() - 1,
                final_residual: rel,
                converged: true,
                residuals,
            };
            return Ok((x, trace));
        }
        let ap = apply(&p)?;
        let alpha = rz / Vecs::dot(&p, &ap);
        let ac = Complex64::new(alpha, 0.0);
        x = x.add(&p.scale(ac));
        r = r.sub(&ap.scale(ac));
        z = precond(&r)?;
        let rz_new = Vecs::dot(&r, &z);
        p = z.add(&p.scale(Complex64::new(rz_new / rz, 0.0)));
        rz = rz_new;
    }
    Err(CoreError::SolverFailure(format!(
        "preconditioned solve did not reach {tol:.1e} in {max_iter} iterations \
         (last residual {:.3e})",
        residuals.last().unwrap()
    )))
}

/// Baseline: conjugate gradients on the normal equations
/// `G_m^2 f = G_m b`, reporting the true residual of the original system at
/// every step.
pub fn normal_solve(
    system: &GaborSystem,
    m: &RadialWeight,
    b: &GridFunction,
    tol: f64,
) -> Result<(GridFunction, SolveTrace)> {
    let apply = |f: &GridFunction| gabor_multiplier_apply(system, m, f);
    let b_norm = b.norm_l2();
    let bp = apply(b)?;
    let mut x = GridFunction::zeros(b.grid);
    // residual of the normal system; the true residual is recomputed per step
    let mut r = bp.clone();
    let mut p = r.clone();
    let mut rs = Vecs::dot(&r, &r);
    let mut residuals = Vec::new();
    let max_iter = 500;
    for _ in 0..max_iter {
        let true_rel = apply(&x)?.sub(b).norm_l2() / b_norm;
        residuals.push(true_rel);
        if true_rel <= tol {
            let trace = SolveTrace {
                preconditioner: "none (normal equations)".into(),
                iterations: residuals.len() - 1,
                final_residual: true_rel,
                converged: true,
                residuals,
            };
            return Ok((x, trace));
        }
        let ap = apply(&apply(&p)?)?;
        let alpha = rs / Vecs::dot(&p, &ap);
        let ac = Complex64::new(alpha, 0.0);
        x = x.add(&p.scale(ac));
        r = r.sub(&ap.scale(ac));
        let rs_new = Vecs::dot(&r, &r);
        p = r.add(&p.scale(Complex64::new(rs_new / rs, 0.0)));
        rs = rs_new;
    }
    Err(CoreError::SolverFailure(format!(
        "normal-equation solve did not reach {tol:.1e} in {max_iter} iterations \
         (last residual {:.3e})",
        residuals.last().unwrap()
    )))
}
