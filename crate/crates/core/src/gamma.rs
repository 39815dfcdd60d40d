//! Weighted gamma functions `tau_{alpha,s}(theta)`: integrals of `theta^s`
//! against the Gamma(alpha+1) product density. These are exactly the
//! eigenvalues of the canonical localization operator `J_{theta^s}` on the
//! Hermite basis, and the raw material of the inequality suites.

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{CoreError, Result};
use crate::quad::{self, log_sum_exp};
use crate::weights::RadialWeight;

const BASE_NODES: usize = 200;
const MAX_NODES: usize = 1600;
const SELF_CHECK_TOL: f64 = 1e-11;
/// Degree threshold above which the windowed Gauss-Legendre route replaces
/// the exp-sinh rule (the Gamma density concentrates at `n + O(sqrt n)`, and
/// a window there needs far fewer nodes than a whole-line rule).
const EXPSINH_MAX_DEGREE: usize = 64;

/// One-coordinate rule for the normalized density `u^n e^{-u} / n!`:
/// nodes plus log-domain weights. Exp-sinh rather than Gauss-Laguerre, so
/// profiles with fractional-power growth (branch point at the origin after
/// the `r = sqrt(u/pi)` substitution) still converge to full precision.
fn coordinate_rule(n: usize, k: usize) -> (Vec<f64>, Vec<f64>) {
    if n <= EXPSINH_MAX_DEGREE {
        let rule = quad::expsinh_rule(n as f64, k);
        (rule.nodes.clone(), rule.log_weights.clone())
    } else {
        windowed_rule(n, k)
    }
}

/// Gauss-Legendre on `[max(0, mu - 12 sigma), mu + 12 sigma]`, `mu = n+1`,
/// `sigma = sqrt(n+1)`, with the density folded into the log weights.
fn windowed_rule(n: usize, k: usize) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    let mu = nf + 1.0;
    let sigma = mu.sqrt();
    let a = (mu - 12.0 * sigma).max(0.0);
    let b = mu + 12.0 * sigma;
    let half = (b - a) / 2.0;
    let mid = (a + b) / 2.0;
    let rule = quad::legendre_rule(k);
    let lg = ln_gamma(nf + 1.0);
    let mut nodes = Vec::with_capacity(k);
    let mut logw = Vec::with_capacity(k);
    for (t, lw) in rule.nodes.iter().zip(&rule.log_weights) {
        let x = mid + half * t;
        nodes.push(x);
        let log_density = if x > 0.0 { nf * x.ln() - x - lg } else { f64::NEG_INFINITY };
        logw.push(lw + half.ln() + log_density);
    }
    (nodes, logw)
}

fn tau_at_resolution(theta: &RadialWeight, alpha: &[usize], s: f64, k: usize) -> f64 {
    let d = alpha.len();
    let rules: Vec<(Vec<f64>, Vec<f64>)> =
        alpha.iter().map(|&n| coordinate_rule(n, k)).collect();
    let pi = std::f64::consts::PI;
    match d {
        1 => {
            let (nodes, logw) = &rules[0];
            let terms: Vec<f64> = nodes
                .iter()
                .zip(logw)
                .map(|(&u, &lw)| lw + s * theta.log_radial(&[(u / pi).sqrt()]))
                .collect();
            log_sum_exp(&terms).exp()
        }
        2 => {
            let (n0, w0) = &rules[0];
            let (n1, w1) = &rules[1];
            let mut terms = Vec::with_capacity(n0.len() * n1.len());
            for (&u0, &lw0) in n0.iter().zip(w0) {
                let r0 = (u0 / pi).sqrt();
                for (&u1, &lw1) in n1.iter().zip(w1) {
                    terms.push(lw0 + lw1 + s * theta.log_radial(&[r0, (u1 / pi).sqrt()]));
                }
            }
            log_sum_exp(&terms).exp()
        }
        _ => unreachable!("dimension checked by caller"),
    }
}

fn check_dims(theta: &RadialWeight, alpha: &[usize]) -> Result<()> {
    if alpha.len() != theta.dimension {
        return Err(CoreError::DimensionMismatch(format!(
            "weight has dimension {}, multi-index has {} entries",
            theta.dimension,
            alpha.len()
        )));
    }
    if !(1..=2).contains(&alpha.len()) {
        return Err(CoreError::InvalidParameter("tau supports d in {1, 2}".into()));
    }
    Ok(())
}

/// `tau_{alpha,s}(theta)` with a Richardson-style self check: node counts are
/// doubled until two successive values agree to relative 1e-11.
/// Returns the value and the final relative change.
pub fn tau_with_error(theta: &RadialWeight, alpha: &[usize], s: f64) -> Result<(f64, f64)> {
    check_dims(theta, alpha)?;
    if s == 0.0 {
        return Ok((1.0, 0.0));
    }
    let mut k = BASE_NODES;
    let mut prev = tau_at_resolution(theta, alpha, s, k);
    loop {
        k *= 2;
        let cur = tau_at_resolution(theta, alpha, s, k);
        let rel = (cur - prev).abs() / cur.abs().max(f64::MIN_POSITIVE);
        if rel <= SELF_CHECK_TOL {
            return Ok((cur, rel));
        }
        if k >= MAX_NODES {
            return Err(CoreError::QuadratureFailure(format!(
                "tau_{{{:?},{s}}}({}) stalled at relative change {rel:.3e} with {k} nodes",
                alpha,
                theta.describe()
            )));
        }
        prev = cur;
    }
}

/// `tau_{alpha,s}(theta)` (value only).
pub fn tau(theta: &RadialWeight, alpha: &[usize], s: f64) -> Result<f64> {
    tau_with_error(theta, alpha, s).map(|(v, _)| v)
}

/// Windowed Gauss-Legendre evaluation regardless of degree; the independent
/// cross-validation route for the Laguerre rule.
pub fn tau_windowed(theta: &RadialWeight, alpha: &[usize], s: f64, k: usize) -> Result<f64> {
    check_dims(theta, alpha)?;
    let pi = std::f64::consts::PI;
    let rules: Vec<(Vec<f64>, Vec<f64>)> = alpha.iter().map(|&n| windowed_rule(n, k)).collect();
    let value = match alpha.len() {
        1 => {
            let (nodes, logw) = &rules[0];
            let terms: Vec<f64> = nodes
                .iter()
                .zip(logw)
                .map(|(&u, &lw)| lw + s * theta.log_radial(&[(u / pi).sqrt()]))
                .collect();
            log_sum_exp(&terms).exp()
        }
        _ => {
            let (n0, w0) = &rules[0];
            let (n1, w1) = &rules[1];
            let mut terms = Vec::with_capacity(n0.len() * n1.len());
            for (&u0, &lw0) in n0.iter().zip(w0) {
                let r0 = (u0 / pi).sqrt();
                for (&u1, &lw1) in n1.iter().zip(w1) {
                    terms.push(lw0 + lw1 + s * theta.log_radial(&[r0, (u1 / pi).sqrt()]));
                }
            }
            log_sum_exp(&terms).exp()
        }
    };
    Ok(value)
}

/// Eigenvalue vector of `J_{theta^s}` over all multi-indices `alpha <= N`
/// (per coordinate), with quadrature metadata.
#[derive(Debug, Clone, Serialize)]
pub struct TauSpectrum {
    pub weight: String,
    pub s: f64,
    pub dimension: usize,
    pub cutoff: usize,
    /// row-major over multi-indices for d = 2; plain degree order for d = 1
    pub values: Vec<f64>,
    pub max_rel_error: f64,
}

impl TauSpectrum {
    pub fn value(&self, alpha: &[usize]) -> f64 {
        match self.dimension {
            1 => self.values[alpha[0]],
            _ => self.values[alpha[0] * (self.cutoff + 1) + alpha[1]],
        }
    }

    pub fn multi_indices(dimension: usize, cutoff: usize) -> Vec<Vec<usize>> {
        match dimension {
            1 => (0..=cutoff).map(|n| vec![n]).collect(),
            _ => (0..=cutoff)
                .flat_map(|m| (0..=cutoff).map(move |n| vec![m, n]))
                .collect(),
        }
    }
}

/// All `tau_{alpha,s}` for `alpha <= N`; scans parallelize over indices.
pub fn tau_spectrum(theta: &RadialWeight, s: f64, cutoff: usize) -> Result<TauSpectrum> {
    let d = theta.dimension;
    let indices = TauSpectrum::multi_indices(d, cutoff);
    let computed: Result<Vec<(f64, f64)>> =
        indices.par_iter().map(|alpha| tau_with_error(theta, alpha, s)).collect();
    let computed = computed?;
    Ok(TauSpectrum {
        weight: theta.describe(),
        s,
        dimension: d,
        cutoff,
        values: computed.iter().map(|c| c.0).collect(),
        max_rel_error: computed.iter().map(|c| c.1).fold(0.0, f64::max),
    })
}

/// The triple-product scan `gamma(alpha) = tau_{alpha,s} tau_{alpha,t} tau_{alpha,-s-t}`
/// with running sup/inf to exhibit the almost-multiplicativity plateau.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityScan {
    pub weight: String,
    pub s: f64,
    pub t: f64,
    pub cutoff: usize,
    pub gammas: Vec<f64>,
    pub running_sup: Vec<f64>,
    pub running_inf: Vec<f64>,
    pub sup: f64,
    pub inf: f64,
}

pub fn product_inequality_scan(
    theta: &RadialWeight,
    s: f64,
    t: f64,
    cutoff: usize,
) -> Result<InequalityScan> {
    if cutoff < 1 {
        return Err(CoreError::InvalidParameter("scan needs cutoff >= 1".into()));
    }
    let a = tau_spectrum(theta, s, cutoff)?;
    let b = tau_spectrum(theta, t, cutoff)?;
    let c = tau_spectrum(theta, -s - t, cutoff)?;
    let gammas: Vec<f64> = a
        .values
        .iter()
        .zip(&b.values)
        .zip(&c.values)
        .map(|((x, y), z)| x * y * z)
        .collect();
    let mut running_sup = Vec::with_capacity(gammas.len());
    let mut running_inf = Vec::with_capacity(gammas.len());
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    for &g in &gammas {
        sup = sup.max(g);
        inf = inf.min(g);
        running_sup.push(sup);
        running_inf.push(inf);
    }
    Ok(InequalityScan {
        weight: theta.describe(),
        s,
        t,
        cutoff,
        gammas,
        running_sup,
        running_inf,
        sup,
        inf,
    })
}

/// Condition number `sup gamma / inf gamma` of the truncated
/// `V_{s,t} = J_{theta^s} J_{theta^t} J_{theta^{-s-t}}`.
pub fn vst_condition(theta: &RadialWeight, s: f64, t: f64, cutoff: usize) -> Result<f64> {
    let scan = product_inequality_scan(theta, s, t, cutoff)?;
    Ok(scan.sup / scan.inf)
}
