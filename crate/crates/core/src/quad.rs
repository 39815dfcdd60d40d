//! Gaussian quadrature rules via the Golub-Welsch eigenvalue method, with a
//! global cache keyed by rule family and size.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use once_cell::sync::Lazy;
use std::sync::Mutex;

/// Quadrature nodes with log-domain weights.
///
/// For the generalized Laguerre rule with parameter `alpha`, the weights are
/// normalized against the Gamma(alpha+1) probability density
/// `x^alpha e^{-x} / Gamma(alpha+1)`, so `sum exp(log_w) = 1`.
/// For the Legendre rule on `[-1, 1]`, `sum exp(log_w) = 2`.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub log_weights: Vec<f64>,
}

fn golub_welsch(diag: &[f64], off: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    let mut j = DMatrix::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = diag[i];
    }
    for i in 0..n - 1 {
        j[(i, i + 1)] = off[i];
        j[(i + 1, i)] = off[i];
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)]))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let nodes = pairs.iter().map(|p| p.0).collect();
    let first_components = pairs.iter().map(|p| p.1).collect();
    (nodes, first_components)
}

fn build_laguerre(alpha: f64, n: usize) -> QuadRule {
    // Jacobi matrix of the generalized Laguerre polynomials:
    // a_k = 2k + alpha + 1, b_k = sqrt(k (k + alpha)).
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
    let off: Vec<f64> = (1..n).map(|k| (k as f64 * (k as f64 + alpha)).sqrt()).collect();
    let (nodes, phi) = golub_welsch(&diag, &off);
    // normalized weight = phi_i^2 (total mass Gamma(alpha+1) divided out)
    let log_weights = phi.iter().map(|p| 2.0 * p.abs().max(f64::MIN_POSITIVE).ln()).collect();
    QuadRule { nodes, log_weights }
}

fn build_legendre(n: usize) -> QuadRule {
    let diag = vec![0.0; n];
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let kf = k as f64;
            kf / (4.0 * kf * kf - 1.0).sqrt()
        })
        .collect();
    let (nodes, phi) = golub_welsch(&diag, &off);
    // weights w_i = 2 phi_i^2
    let log_weights = phi
        .iter()
        .map(|p| 2.0_f64.ln() + 2.0 * p.abs().max(f64::MIN_POSITIVE).ln())
        .collect();
    QuadRule { nodes, log_weights }
}

/// Trapezoid rule under the exp-sinh map `u = exp((pi/2) sinh t)`, with the
/// normalized density `u^alpha e^{-u} / Gamma(alpha+1)` folded into the log
/// weights. Node spacing shrinks double-exponentially toward `u = 0`, so
/// integrands with a branch point at the origin (fractional powers of `u`)
/// still converge at machine precision; Gauss-Laguerre stalls on those.
fn build_expsinh(alpha: f64, n: usize) -> QuadRule {
    use statrs::function::gamma::ln_gamma;
    let t_max = 4.2;
    let m = (n / 2).max(8);
    let h = t_max / m as f64;
    let lg = ln_gamma(alpha + 1.0);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut nodes = Vec::with_capacity(2 * m + 1);
    let mut log_weights = Vec::with_capacity(2 * m + 1);
    for j in -(m as i64)..=(m as i64) {
        let t = j as f64 * h;
        let log_u = half_pi * t.sinh();
        let u = log_u.exp();
        nodes.push(u);
        let log_jac = h.ln() + half_pi.ln() + t.cosh().ln() + log_u;
        log_weights.push(log_jac + alpha * log_u - u - lg);
    }
    QuadRule { nodes, log_weights }
}

static LAGUERRE_CACHE: Lazy<Mutex<HashMap<(u64, usize), Arc<QuadRule>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));
static EXPSINH_CACHE: Lazy<Mutex<HashMap<(u64, usize), Arc<QuadRule>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));
static LEGENDRE_CACHE: Lazy<Mutex<HashMap<usize, Arc<QuadRule>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Generalized Gauss-Laguerre rule for the normalized density
/// `x^alpha e^{-x} / Gamma(alpha+1)`. `alpha` is cached at a resolution of
/// half-integers (the only values used here).
pub fn laguerre_rule(alpha: f64, n: usize) -> Arc<QuadRule> {
    let key = ((alpha * 2.0).round() as u64, n);
    let mut cache = LAGUERRE_CACHE.lock().unwrap();
    cache
        .entry(key)
        .or_insert_with(|| Arc::new(build_laguerre(key.0 as f64 / 2.0, n)))
        .clone()
}

/// Exp-sinh trapezoid rule for the normalized density
/// `u^alpha e^{-u} / Gamma(alpha+1)` on `(0, inf)`; `sum exp(log_w) = 1`
/// up to the trapezoid error. Robust against branch points at the origin.
pub fn expsinh_rule(alpha: f64, n: usize) -> Arc<QuadRule> {
    let key = ((alpha * 2.0).round() as u64, n);
    let mut cache = EXPSINH_CACHE.lock().unwrap();
    cache
        .entry(key)
        .or_insert_with(|| Arc::new(build_expsinh(key.0 as f64 / 2.0, n)))
        .clone()
}

/// Gauss-Legendre rule on `[-1, 1]`.
pub fn legendre_rule(n: usize) -> Arc<QuadRule> {
    let mut cache = LEGENDRE_CACHE.lock().unwrap();
    cache.entry(n).or_insert_with(|| Arc::new(build_legendre(n))).clone()
}

/// Log-sum-exp of `terms`; returns `f64::NEG_INFINITY` for an empty slice.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = terms.iter().map(|t| (t - m).exp()).sum();
    m + s.ln()
}
