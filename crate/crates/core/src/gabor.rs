//! Gabor systems on separable lattices `aZ x bZ`: analysis and synthesis,
//! frame operator, frame-bound estimates, and the dual window.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::grid::{Grid1d, GridFunction};
use crate::hermite::HermiteBasis;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// How far beyond the lattice the sampling grid extends, so that shifted
/// windows are not clipped.
const GRID_MARGIN: f64 = 4.0;

/// A truncated Gabor system `{pi(ka, lb) g}` with `|ka|, |lb| <= lattice_half`.
///
/// The grid spacing is snapped to an exact divisor of `a`, so every time
/// shift lands on grid points and analysis/synthesis are free of
/// interpolation error.
#[derive(Debug, Clone)]
pub struct GaborSystem {
    pub grid: Grid1d,
    /// unit L2 norm window on `grid`
    pub window: GridFunction,
    pub a: f64,
    pub b: f64,
    pub lattice_half: f64,
    time_indices: Vec<i64>,
    mod_indices: Vec<i64>,
    samples_per_a: i64,
    /// `e^{2 pi i l b t_k}` per modulation index
    mod_vecs: Vec<Vec<Complex64>>,
}

impl GaborSystem {
    /// Builds the system without any frame check; `window_profile` is
    /// sampled on the snapped grid and normalized.
    pub fn build(
        window_profile: impl Fn(f64) -> Complex64,
        a: f64,
        b: f64,
        lattice_half: f64,
        target_dx: f64,
    ) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "lattice parameters must be positive, got a={a}, b={b}"
            )));
        }
        let per_a = (a / target_dx).round().max(1.0);
        let dx = a / per_a;
        let half_width = dx * ((lattice_half + GRID_MARGIN) / dx).ceil();
        let grid = Grid1d::new(half_width, dx)?;
        let mut window = grid.sample_complex(window_profile);
        let norm = window.norm_l2();
        if norm == 0.0 {
            return Err(CoreError::InvalidParameter("window is identically zero".into()));
        }
        window = window.scale(Complex64::new(1.0 / norm, 0.0));
        let k_max = (lattice_half / a + 1e-9).floor() as i64;
        let l_max = (lattice_half / b + 1e-9).floor() as i64;
        let time_indices: Vec<i64> = (-k_max..=k_max).collect();
        let mod_indices: Vec<i64> = (-l_max..=l_max).collect();
        let mod_vecs = mod_indices
            .iter()
            .map(|&l| {
                grid.points()
                    .map(|t| Complex64::from_polar(1.0, TWO_PI * l as f64 * b * t))
                    .collect()
            })
            .collect();
        Ok(Self {
            grid,
            window,
            a,
            b,
            lattice_half,
            time_indices,
            mod_indices,
            samples_per_a: per_a as i64,
            mod_vecs,
        })
    }

    /// Gaussian-window system with the default truncation, checked to be a
    /// frame; the classical density obstruction (`ab >= 1`) surfaces here as
    /// a collapsing lower bound.
    pub fn gaussian(a: f64, b: f64) -> Result<Self> {
        let sys = Self::build(
            |t| Complex64::new(2.0_f64.powf(0.25) * (-std::f64::consts::PI * t * t).exp(), 0.0),
            a,
            b,
            8.0,
            1.0 / 32.0,
        )?;
        sys.frame_check()?;
        Ok(sys)
    }

    /// As [`GaborSystem::gaussian`] but skipping the frame check, for scans
    /// across the density threshold.
    pub fn gaussian_unchecked(a: f64, b: f64) -> Result<Self> {
        Self::build(
            |t| Complex64::new(2.0_f64.powf(0.25) * (-std::f64::consts::PI * t * t).exp(), 0.0),
            a,
            b,
            8.0,
            1.0 / 32.0,
        )
    }

    pub fn lattice_len(&self) -> usize {
        self.time_indices.len() * self.mod_indices.len()
    }

    /// Lattice points in coefficient order (time-major).
    pub fn lattice_points(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.lattice_len());
        for &k in &self.time_indices {
            for &l in &self.mod_indices {
                out.push((k as f64 * self.a, l as f64 * self.b));
            }
        }
        out
    }

    /// `c_lambda = <f, pi(lambda) g>` over the truncated lattice.
    pub fn coeffs(&self, f: &GridFunction) -> Result<Vec<Complex64>> {
        self.coeffs_with_window(f, &self.window)
    }

    fn coeffs_with_window(&self, f: &GridFunction, g: &GridFunction) -> Result<Vec<Complex64>> {
        f.check_same_grid(g)?;
        let nt = self.grid.len as i64;
        let dx = self.grid.spacing;
        let rows: Vec<Vec<Complex64>> = self
            .time_indices
            .par_iter()
            .map(|&k| {
                let s = k * self.samples_per_a;
                // w_t = f(t) conj(g(t - ka)) restricted to the overlap
                let mut w = vec![Complex64::new(0.0, 0.0); self.grid.len];
                for t in 0..nt {
                    let j = t - s;
                    if (0..nt).contains(&j) {
                        w[t as usize] = f.samples[t as usize] * g.samples[j as usize].conj();
                    }
                }
                self.mod_vecs
                    .iter()
                    .map(|mv| {
                        let acc: Complex64 =
                            mv.iter().zip(&w).map(|(e, w)| e.conj() * w).sum();
                        acc * dx
                    })
                    .collect()
            })
            .collect();
        Ok(rows.into_iter().flatten().collect())
    }

    /// `sum_lambda weight_lambda c_lambda pi(lambda) g_syn`; the synthesis half
    /// shared by the frame operator, multipliers, and reconstruction.
    pub fn weighted_synthesis(
        &self,
        coeffs: &[Complex64],
        weights: Option<&[f64]>,
        g_syn: &GridFunction,
    ) -> Result<GridFunction> {
        if coeffs.len() != self.lattice_len() {
            return Err(CoreError::DimensionMismatch(format!(
                "expected {} coefficients, got {}",
                self.lattice_len(),
                coeffs.len()
            )));
        }
        if let Some(w) = weights {
            if w.len() != coeffs.len() {
                return Err(CoreError::DimensionMismatch(
                    "weight array length != lattice size".into(),
                ));
            }
        }
        let nt = self.grid.len as i64;
        let nl = self.mod_indices.len();
        let columns: Vec<Vec<Complex64>> = self
            .time_indices
            .par_iter()
            .enumerate()
            .map(|(ki, &k)| {
                let s = k * self.samples_per_a;
                let mut mods = vec![Complex64::new(0.0, 0.0); self.grid.len];
                for (li, mv) in self.mod_vecs.iter().enumerate() {
                    let idx = ki * nl + li;
                    let mut c = coeffs[idx];
                    if let Some(w) = weights {
                        c *= w[idx];
                    }
                    if c.norm_sqr() > 0.0 {
                        for (acc, e) in mods.iter_mut().zip(mv) {
                            *acc += c * e;
                        }
                    }
                }
                let mut col = vec![Complex64::new(0.0, 0.0); self.grid.len];
                for t in 0..nt {
                    let j = t - s;
                    if (0..nt).contains(&j) {
                        col[t as usize] = mods[t as usize] * g_syn.samples[j as usize];
                    }
                }
                col
            })
            .collect();
        let mut out = GridFunction::zeros(self.grid);
        for col in &columns {
            for (acc, v) in out.samples.iter_mut().zip(col) {
                *acc += v;
            }
        }
        Ok(out)
    }

    /// Frame operator `S f = sum <f, pi(lambda) g> pi(lambda) g`.
    pub fn frame_apply(&self, f: &GridFunction) -> Result<GridFunction> {
        let c = self.coeffs(f)?;
        self.weighted_synthesis(&c, None, &self.window)
    }

    /// Extreme Rayleigh quotients of the frame operator over the span of the
    /// first `cutoff + 1` Hermite functions: the usable frame-bound estimate
    /// on the truncation.
    pub fn frame_bounds_restricted(&self, cutoff: usize) -> Result<(f64, f64)> {
        let basis = HermiteBasis::new(cutoff, self.grid);
        let images: Vec<GridFunction> =
            (0..=cutoff).map(|j| self.frame_apply(&basis.function(j))).collect::<Result<_>>()?;
        let n = cutoff + 1;
        let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for (j, sf) in images.iter().enumerate() {
            for i in 0..n {
                m[(i, j)] = sf.inner(&basis.function(i));
            }
        }
        // Hermitize away quadrature asymmetry before the eigensolve
        let mh = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = mh.symmetric_eigen();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in eig.eigenvalues.iter() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok((lo, hi))
    }

    /// Frame bounds with the collapse diagnostic: the lower bound must stay
    /// away from zero and must not keep sinking as the probed subspace grows,
    /// otherwise the system is declared not a frame.
    pub fn frame_check(&self) -> Result<(f64, f64)> {
        let (a_small, _) = self.frame_bounds_restricted(24)?;
        let (a_big, b_big) = self.frame_bounds_restricted(40)?;
        let collapsed = a_big <= 1e-6 * b_big || a_big <= 0.0;
        let sinking = a_big < 0.5 * a_small;
        if collapsed || sinking {
            return Err(CoreError::NotAFrame(format!(
                "not a frame: lower bound {a_big:.3e} vs upper {b_big:.3e} \
                 (was {a_small:.3e} on the smaller subspace); lattice a={}, b={}",
                self.a, self.b
            )));
        }
        Ok((a_big, b_big))
    }

    /// Dual window `S^{-1} g` by conjugate gradients on the positive
    /// definite frame operator.
    pub fn dual_window(&self) -> Result<GridFunction> {
        let (a, b) = self.frame_check()?;
        let tol = 1e-12;
        let max_iter = 40 + (4.0 * (b / a).sqrt()) as usize;
        let mut gamma = GridFunction::zeros(self.grid);
        let mut r = self.window.clone();
        let mut p = r.clone();
        let mut rs = r.inner(&r).re;
        let b_norm = self.window.norm_l2();
        for _ in 0..max_iter {
            if rs.sqrt() <= tol * b_norm {
                return Ok(gamma);
            }
            let sp = self.frame_apply(&p)?;
            let alpha = rs / p.inner(&sp).re;
            let ac = Complex64::new(alpha, 0.0);
            gamma = gamma.add(&p.scale(ac));
            r = r.sub(&sp.scale(ac));
            let rs_new = r.inner(&r).re;
            p = r.add(&p.scale(Complex64::new(rs_new / rs, 0.0)));
            rs = rs_new;
        }
        if rs.sqrt() <= tol * b_norm {
            Ok(gamma)
        } else {
            Err(CoreError::SolverFailure(format!(
                "dual window CG stalled at residual {:.3e}",
                rs.sqrt() / b_norm
            )))
        }
    }

    /// `sum <f, pi(lambda) g> pi(lambda) dual`: identity to truncation
    /// accuracy when `dual` is the dual window.
    pub fn reconstruct(&self, f: &GridFunction, dual: &GridFunction) -> Result<GridFunction> {
        let c = self.coeffs(f)?;
        self.weighted_synthesis(&c, None, dual)
    }
}
