//! Orthonormal Hermite functions in the `e^{-pi x^2}` Gaussian scaling,
//! tensor products, and the closed-form STFT of Hermite pairs against the
//! Gaussian window.

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{CoreError, Result};
use crate::grid::{Grid1d, GridFunction};

/// `h_0(x) = 2^{1/4} e^{-pi x^2}`, unit L2 norm.
pub fn gaussian_window(grid: Grid1d) -> GridFunction {
    let c = 2.0_f64.powf(0.25);
    grid.sample_real(|x| c * (-std::f64::consts::PI * x * x).exp())
}

/// Values of the orthonormal Hermite function `h_n` at the given points.
///
/// Three-term recurrence seeded by `h_0 = 2^{1/4} e^{-pi x^2}`:
/// `h_{n+1}(x) = 2 sqrt(pi/(n+1)) x h_n(x) - sqrt(n/(n+1)) h_{n-1}(x)`.
pub fn hermite_eval(n: usize, xs: &[f64]) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    let c0 = 2.0_f64.powf(0.25);
    xs.iter()
        .map(|&x| {
            let mut prev = 0.0;
            let mut cur = c0 * (-pi * x * x).exp();
            for k in 0..n {
                let kf = k as f64;
                let next = 2.0 * (pi / (kf + 1.0)).sqrt() * x * cur
                    - (kf / (kf + 1.0)).sqrt() * prev;
                prev = cur;
                cur = next;
            }
            cur
        })
        .collect()
}

/// All of `h_0 .. h_{n_max}` at the given points, one row per degree.
pub fn hermite_all(n_max: usize, xs: &[f64]) -> Vec<Vec<f64>> {
    let pi = std::f64::consts::PI;
    let c0 = 2.0_f64.powf(0.25);
    let mut rows = vec![vec![0.0; xs.len()]; n_max + 1];
    for (i, &x) in xs.iter().enumerate() {
        let mut prev = 0.0;
        let mut cur = c0 * (-pi * x * x).exp();
        rows[0][i] = cur;
        for k in 0..n_max {
            let kf = k as f64;
            let next =
                2.0 * (pi / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
            rows[k + 1][i] = cur;
        }
    }
    rows
}

/// Tensor Hermite function `h_alpha(x) = prod_j h_{alpha_j}(x_j)` at one point.
pub fn hermite_tensor(alpha: &[usize], point: &[f64]) -> Result<f64> {
    if alpha.len() != point.len() {
        return Err(CoreError::DimensionMismatch(format!(
            "multi-index has {} entries, point has {}",
            alpha.len(),
            point.len()
        )));
    }
    Ok(alpha
        .iter()
        .zip(point)
        .map(|(&n, &x)| hermite_eval(n, &[x])[0])
        .product())
}

/// Closed-form STFT of `h_alpha` against the Gaussian window at the
/// phase-space point `z = ((x_1, xi_1), ..., (x_d, xi_d))`:
///
/// `V_h h_alpha(z) = e^{-pi i x.xi} (pi^{|alpha|}/alpha!)^{1/2} conj(z)^alpha e^{-pi|z|^2/2}`.
///
/// The phase convention matches `V_g f(x, xi) = \int f(t) conj(g(t-x)) e^{-2 pi i xi t} dt`,
/// which is verified against grid quadrature in the tests. The modulus is
/// convention independent.
pub fn stft_hermite_analytic(alpha: &[usize], z: &[(f64, f64)]) -> Result<Complex64> {
    if alpha.len() != z.len() {
        return Err(CoreError::DimensionMismatch(format!(
            "multi-index has {} entries, phase point has {}",
            alpha.len(),
            z.len()
        )));
    }
    let pi = std::f64::consts::PI;
    let mut log_mod = 0.0;
    let mut phase = 0.0;
    for (&n, &(x, xi)) in alpha.iter().zip(z) {
        let r2 = x * x + xi * xi;
        let nf = n as f64;
        log_mod += 0.5 * (nf * pi.ln() - ln_gamma(nf + 1.0)) - pi * r2 / 2.0;
        if n > 0 {
            if r2 == 0.0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            log_mod += nf * 0.5 * r2.ln();
            phase += nf * (-xi).atan2(x); // arg of conj(z)
        }
        phase -= pi * x * xi;
    }
    Ok(Complex64::from_polar(log_mod.exp(), phase))
}

/// Finite Hermite coefficient vector `c_n`, `n <= cutoff`, in `d = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteCoeffs {
    pub cutoff: usize,
    pub coeffs: Vec<Complex64>,
}

impl HermiteCoeffs {
    pub fn zeros(cutoff: usize) -> Self {
        Self { cutoff, coeffs: vec![Complex64::new(0.0, 0.0); cutoff + 1] }
    }

    pub fn unit(cutoff: usize, n: usize) -> Self {
        let mut c = Self::zeros(cutoff);
        c.coeffs[n] = Complex64::new(1.0, 0.0);
        c
    }

    pub fn norm_l2(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Sampled Hermite basis `h_0 .. h_N` in `d = 1` on a fixed grid.
#[derive(Debug, Clone)]
pub struct HermiteBasis {
    pub cutoff: usize,
    pub grid: Grid1d,
    table: Vec<Vec<f64>>,
}

impl HermiteBasis {
    pub fn new(cutoff: usize, grid: Grid1d) -> Self {
        let xs: Vec<f64> = grid.points().collect();
        let table = hermite_all(cutoff, &xs);
        Self { cutoff, grid, table }
    }

    /// Default grid `L = max(6, 2 sqrt(N/pi))`, `dx = L/1024`; covers the
    /// classically allowed region plus Gaussian tails below 1e-12.
    pub fn with_default_grid(cutoff: usize) -> Self {
        let grid = Self::default_grid(cutoff);
        Self::new(cutoff, grid)
    }

    pub fn default_grid(cutoff: usize) -> Grid1d {
        let l = (2.0 * (cutoff as f64 / std::f64::consts::PI).sqrt()).max(6.0);
        Grid1d::new(l, l / 1024.0).expect("default grid parameters are valid")
    }

    pub fn function(&self, n: usize) -> GridFunction {
        GridFunction {
            grid: self.grid,
            samples: self.table[n].iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn values(&self, n: usize) -> &[f64] {
        &self.table[n]
    }

    /// Max deviation of the grid Gram matrix from the identity.
    pub fn gram_deviation(&self) -> f64 {
        let dx = self.grid.spacing;
        let mut worst = 0.0_f64;
        for m in 0..=self.cutoff {
            for n in m..=self.cutoff {
                let s: f64 = self.table[m].iter().zip(&self.table[n]).map(|(a, b)| a * b).sum();
                let target = if m == n { 1.0 } else { 0.0 };
                worst = worst.max((s * dx - target).abs());
            }
        }
        worst
    }

    pub fn resolution_check(&self) -> Result<()> {
        let dx = self.grid.spacing;
        for &n in &[self.cutoff, self.cutoff / 2] {
            let s: f64 = self.table[n].iter().map(|a| a * a).sum();
            if (s * dx - 1.0).abs() > 1e-8 {
                return Err(CoreError::UnderResolved(format!(
                    "grid norm of h_{n} deviates from 1 by {:.3e}",
                    (s * dx - 1.0).abs()
                )));
            }
        }
        Ok(())
    }

    /// Coefficients `c_n = <f, h_n>` by grid quadrature.
    pub fn analyze(&self, f: &GridFunction) -> Result<HermiteCoeffs> {
        f.check_same_grid(&self.function(0))?;
        self.resolution_check()?;
        let dx = self.grid.spacing;
        let coeffs = (0..=self.cutoff)
            .map(|n| {
                let s: Complex64 = f
                    .samples
                    .iter()
                    .zip(&self.table[n])
                    .map(|(a, &b)| a * b)
                    .sum();
                s * dx
            })
            .collect();
        Ok(HermiteCoeffs { cutoff: self.cutoff, coeffs })
    }

    /// Pointwise `sum_n c_n h_n(x)`.
    pub fn synthesize(&self, c: &HermiteCoeffs) -> GridFunction {
        let mut out = GridFunction::zeros(self.grid);
        for (n, cn) in c.coeffs.iter().enumerate() {
            if cn.norm_sqr() == 0.0 {
                continue;
            }
            for (o, &v) in out.samples.iter_mut().zip(&self.table[n]) {
                *o += cn * v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn h0_at_origin() {
        let v = hermite_eval(0, &[0.0]);
        assert_abs_diff_eq!(v[0], 2.0_f64.powf(0.25), epsilon = 1e-14);
    }

    #[test]
    fn h3_unit_norm_by_quadrature() {
        let basis = HermiteBasis::with_default_grid(3);
        let h3 = basis.function(3);
        assert_abs_diff_eq!(h3.norm_l2(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn odd_degree_is_odd() {
        let xs: Vec<f64> = (1..100).map(|k| k as f64 * 0.05).collect();
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        let plus = hermite_eval(5, &xs);
        let minus = hermite_eval(5, &neg);
        for (a, b) in plus.iter().zip(&minus) {
            assert_abs_diff_eq!(*a, -*b, epsilon = 1e-12);
        }
    }

    #[test]
    fn tensor_at_origin() {
        let v = hermite_tensor(&[0, 0], &[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(v, 2.0_f64.sqrt(), epsilon = 1e-13);
        // h_1(0) = 0, so (1,0) vanishes on the axis x_1 = 0
        let v = hermite_tensor(&[1, 0], &[0.0, 0.7]).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-13);
        assert!(hermite_tensor(&[1, 0], &[0.0]).is_err());
    }

    #[test]
    fn tensor_orthogonality_on_grid() {
        // <h_{(1,2)}, h_{(2,1)}> = 0 by separability of the product quadrature
        let grid = Grid1d::new(6.0, 6.0 / 256.0).unwrap();
        let xs: Vec<f64> = grid.points().collect();
        let rows = hermite_all(2, &xs);
        let dx = grid.spacing;
        let mut s = 0.0;
        // sum over the tensor grid factorizes into 1-D sums
        let i11: f64 = rows[1].iter().zip(&rows[2]).map(|(a, b)| a * b).sum::<f64>() * dx;
        let i22: f64 = rows[2].iter().zip(&rows[1]).map(|(a, b)| a * b).sum::<f64>() * dx;
        s += i11 * i22;
        assert!(s.abs() < 1e-10);
    }

    #[test]
    fn stft_analytic_base_cases() {
        let v = stft_hermite_analytic(&[0], &[(0.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-14);

        // d=1, alpha=1, real z=1: modulus sqrt(pi) e^{-pi/2}
        let v = stft_hermite_analytic(&[1], &[(1.0, 0.0)]).unwrap();
        let expect = std::f64::consts::PI.sqrt() * (-std::f64::consts::PI / 2.0).exp();
        assert_abs_diff_eq!(v.norm(), expect, epsilon = 1e-12);
    }

    #[test]
    fn stft_modulus_peaks_at_classical_radius() {
        // |V_h h_n| along a ray is r^n e^{-pi r^2/2}, maximal at r = sqrt(n/pi)
        let n = 7;
        let peak = (n as f64 / std::f64::consts::PI).sqrt();
        let at = |r: f64| stft_hermite_analytic(&[n], &[(r, 0.0)]).unwrap().norm();
        let center = at(peak);
        assert!(center > at(peak * 0.9));
        assert!(center > at(peak * 1.1));
    }

    #[test]
    fn stft_analytic_matches_quadrature_with_phase() {
        // fixes the phase convention against the defining integral
        let grid = Grid1d::new(8.0, 1.0 / 128.0).unwrap();
        let basis = HermiteBasis::new(6, grid);
        for &(n, x, xi) in &[(0usize, 0.7, -0.3), (1, 1.0, 0.5), (4, -0.8, 1.2), (6, 0.3, 0.9)] {
            let f = basis.function(n);
            // V_g f(x, xi) = dx * sum f(t) g(t-x) e^{-2 pi i xi t}
            let mut s = Complex64::new(0.0, 0.0);
            for (k, t) in grid.points().enumerate() {
                let gv = 2.0_f64.powf(0.25)
                    * (-std::f64::consts::PI * (t - x) * (t - x)).exp();
                let ph = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * xi * t);
                s += f.samples[k] * gv * ph;
            }
            s *= grid.spacing;
            let a = stft_hermite_analytic(&[n], &[(x, xi)]).unwrap();
            assert!((a - s).norm() < 1e-10, "n={n}: analytic {a} vs quadrature {s}");
        }
    }

    #[test]
    fn analyze_synthesize_round_trip() {
        let basis = HermiteBasis::with_default_grid(8);
        // f = h_2 -> unit vector at 2
        let c = basis.analyze(&basis.function(2)).unwrap();
        for (n, cn) in c.coeffs.iter().enumerate() {
            let expect = if n == 2 { 1.0 } else { 0.0 };
            assert!((cn.re - expect).abs() < 1e-8 && cn.im.abs() < 1e-12);
        }
        // f = (h_0 + h_1)/sqrt(2)
        let f = basis
            .function(0)
            .add(&basis.function(1))
            .scale(Complex64::new(1.0 / 2.0_f64.sqrt(), 0.0));
        let c = basis.analyze(&f).unwrap();
        assert_abs_diff_eq!(c.coeffs[0].re, 1.0 / 2.0_f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(c.coeffs[1].re, 1.0 / 2.0_f64.sqrt(), epsilon = 1e-9);

        // round trip on a mixed element of the span
        let mut c = HermiteCoeffs::zeros(8);
        c.coeffs[0] = Complex64::new(0.3, 0.1);
        c.coeffs[5] = Complex64::new(-0.7, 0.2);
        c.coeffs[8] = Complex64::new(0.05, -0.4);
        let f = basis.synthesize(&c);
        let back = basis.synthesize(&basis.analyze(&f).unwrap());
        assert!(back.sub(&f).norm_l2() < 1e-8);
    }

    #[test]
    fn shifted_gaussian_coeffs_match_analytic_stft() {
        // c_n = <T_1 h, h_n> = conj(V_{h_n} ... ) relates to Eq-free check:
        // |c_n| = |V_h h_n(1, 0)| since <T_x h, h_n> = conj(<h_n, T_x h>)
        let basis = HermiteBasis::with_default_grid(12);
        let shifted = basis.grid.sample_real(|x| {
            2.0_f64.powf(0.25) * (-std::f64::consts::PI * (x - 1.0) * (x - 1.0)).exp()
        });
        let c = basis.analyze(&shifted).unwrap();
        for n in 0..=12 {
            let expect = stft_hermite_analytic(&[n], &[(1.0, 0.0)]).unwrap().norm();
            assert!(
                (c.coeffs[n].norm() - expect).abs() < 1e-9,
                "n={n}: {} vs {}",
                c.coeffs[n].norm(),
                expect
            );
        }
    }

    #[test]
    fn gram_deviation_small() {
        let basis = HermiteBasis::with_default_grid(32);
        assert!(basis.gram_deviation() < 1e-10);
    }

    #[test]
    fn recurrence_stable_up_to_256() {
        let basis = HermiteBasis::with_default_grid(256);
        for n in [0, 64, 128, 255, 256] {
            let f = basis.function(n);
            assert!(f.samples.iter().all(|v| v.re.is_finite()));
            assert!((f.norm_l2() - 1.0).abs() < 1e-8, "norm of h_{n}");
        }
    }
}
