//! Acceptance gate: one test per top-level claim, each printing a single
//! pass/fail line (run with `-- --nocapture` to see them on success).

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use tfloc_core::gamma::{product_inequality_scan, tau, tau_spectrum};
use tfloc_core::hermite::hermite_all;
use tfloc_core::lifting::{iso_condition, lifting_ratio, normal_solve, precond_solve};
use tfloc_core::operators::{
    envelope_check, gabor_multiplier_apply, localization_matrix, tf_kernel,
};
use tfloc_core::phase_space::PhaseGrid;
use tfloc_core::{
    bargmann, DenseOperator, GaborSystem, Grid1d, HermiteBasis, HermiteCoeffs,
    RadialWeight,
};

const PI: f64 = std::f64::consts::PI;

fn verdict(name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {name}: {detail}");
    assert!(pass, "{name}: {detail}");
}

fn working_grid() -> Grid1d {
    Grid1d::new(12.0, 1.0 / 64.0).unwrap()
}

fn suite_weights() -> Vec<RadialWeight> {
    vec![
        RadialWeight::polynomial(1, 2.0),
        RadialWeight::subexponential(1, 1.0, 0.5).unwrap(),
        RadialWeight::subexponential(1, 1.0, 0.75).unwrap(),
        RadialWeight::loglin(1, 1.0).unwrap(),
    ]
}

#[test]
fn criterion_01_hermite_orthonormality() {
    let basis = HermiteBasis::new(64, working_grid());
    let dev = basis.gram_deviation();
    verdict(
        "criterion 1 Hermite orthonormality to degree 64",
        dev < 1e-10,
        &format!("worst Gram deviation {dev:.3e}"),
    );
}

#[test]
fn criterion_02_transform_magnitude_closed_form() {
    // direct Riemann-sum transform of h_n against the closed-form magnitude
    // (pi^n / n!)^{1/2} |z|^n e^{-pi |z|^2 / 2}, sup-relative per degree
    let grid = working_grid();
    let xs: Vec<f64> = grid.points().collect();
    let table = hermite_all(16, &xs);
    let mut points = Vec::new();
    for &r in &[0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0] {
        for k in 0..12 {
            let phi = k as f64 * PI / 6.0 + 0.13;
            points.push((r * phi.cos(), r * phi.sin()));
        }
    }
    let mut worst = 0.0_f64;
    for n in 0..=16 {
        let mut err = 0.0_f64;
        let mut sup = 0.0_f64;
        for &(x, xi) in &points {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &t) in xs.iter().enumerate() {
                let g = 2.0_f64.powf(0.25) * (-PI * (t - x) * (t - x)).exp();
                acc += table[n][k] * g * Complex64::from_polar(1.0, -2.0 * PI * xi * t);
            }
            let numeric = (acc * grid.spacing).norm();
            let z2 = x * x + xi * xi;
            let closed = if z2 == 0.0 && n > 0 {
                0.0
            } else {
                (0.5 * (n as f64 * PI.ln() - ln_gamma(n as f64 + 1.0))
                    + 0.5 * n as f64 * z2.max(f64::MIN_POSITIVE).ln()
                    - PI * z2 / 2.0)
                    .exp()
            };
            err = err.max((numeric - closed).abs());
            sup = sup.max(closed);
        }
        worst = worst.max(err / sup);
    }
    verdict(
        "criterion 2 transform magnitudes match the closed form",
        worst < 1e-6,
        &format!("worst sup-relative error {worst:.3e} over degrees <= 16, |z| <= 3"),
    );
}

#[test]
fn criterion_03_exact_spectra() {
    let theta = RadialWeight::from_log_profile(1, |r| (PI * r[0] * r[0]).ln_1p());
    let spectrum = tau_spectrum(&theta, 1.0, 512).unwrap();
    let mut worst = 0.0_f64;
    for (n, &v) in spectrum.values.iter().enumerate() {
        let exact = n as f64 + 2.0;
        worst = worst.max((v - exact).abs() / exact);
    }
    let one = RadialWeight::constant(1);
    let trivial = tau_spectrum(&one, 3.0, 512).unwrap();
    let worst_one = trivial
        .values
        .iter()
        .fold(0.0_f64, |acc, &v| acc.max((v - 1.0).abs()));
    verdict(
        "criterion 3 exactly solvable spectra",
        worst < 1e-10 && worst_one < 1e-11,
        &format!(
            "linear-profile error {worst:.3e} (tol 1e-10), unit-weight error \
             {worst_one:.3e} (tol 1e-11), degrees <= 512"
        ),
    );
}

#[test]
fn criterion_04_reciprocal_products() {
    let mut detail = String::new();
    let mut pass = true;
    for theta in suite_weights() {
        let plus = tau_spectrum(&theta, 1.0, 500).unwrap();
        let minus = tau_spectrum(&theta, -1.0, 500).unwrap();
        let products: Vec<f64> =
            plus.values.iter().zip(&minus.values).map(|(a, b)| a * b).collect();
        let min = products.iter().cloned().fold(f64::INFINITY, f64::min);
        let sup_at = |k: usize| products[..=k].iter().cloned().fold(0.0, f64::max);
        let drift = (sup_at(500) - sup_at(400)) / sup_at(500);
        pass &= min >= 1.0 - 1e-9 && drift < 1e-3;
        detail.push_str(&format!(
            "{}: min {:.9}, sup drift {:.2e}; ",
            theta.describe(),
            min,
            drift
        ));
    }
    verdict("criterion 4 reciprocal-exponent products", pass, detail.trim_end());
}

#[test]
fn criterion_05_three_factor_products() {
    let mut detail = String::new();
    let mut pass = true;
    for theta in suite_weights() {
        for (s, t) in [(1.0, -1.0), (2.0, -1.0), (1.0, 1.0)] {
            let scan = product_inequality_scan(&theta, s, t, 500).unwrap();
            let drift = (scan.sup - scan.running_sup[400]) / scan.sup;
            let ok = scan.inf > 0.0 && scan.sup.is_finite() && drift < 1e-3;
            pass &= ok;
            if !ok {
                detail.push_str(&format!(
                    "{} (s={s}, t={t}): inf {:.3e}, sup {:.3e}, drift {:.2e}; ",
                    theta.describe(),
                    scan.inf,
                    scan.sup,
                    drift
                ));
            }
        }
    }
    if detail.is_empty() {
        detail = "bounded with a plateaued sup for every weight and exponent pair".into();
    }
    verdict("criterion 5 three-factor product scans", pass, detail.trim_end());
}

#[test]
fn criterion_06_localization_matrix_diagonality() {
    let m = RadialWeight::subexponential(1, 1.0, 0.5).unwrap();
    let op = localization_matrix(&m, 48).unwrap();
    let offdiag = op.offdiag_ratio();
    let mut worst = 0.0_f64;
    for n in 0..=48 {
        let exact = tau(&m, &[n], 1.0).unwrap();
        worst = worst.max((op.matrix[(n, n)].re - exact).abs() / exact);
    }
    verdict(
        "criterion 6 radial localization matrix is diagonal",
        offdiag < 1e-6 && worst < 1e-6,
        &format!("off-diagonal ratio {offdiag:.3e}, diagonal error {worst:.3e}"),
    );
}

#[test]
fn criterion_07_iso_condition_stability() {
    let mut detail = String::new();
    let mut pass = true;
    for theta in
        [RadialWeight::polynomial(1, 2.0), RadialWeight::subexponential(1, 1.0, 0.5).unwrap()]
    {
        let report = iso_condition(&theta, 300).unwrap();
        let in_range = report.rho.iter().all(|&r| r > 0.0 && r <= 1.0 + 1e-12);
        let sup_drift = (report.sup - report.half_sup).abs() / report.sup;
        let inf_drift = (report.inf - report.half_inf).abs() / report.inf;
        pass &= in_range && sup_drift < 0.01 && inf_drift < 0.01;
        detail.push_str(&format!(
            "{}: inf {:.4}, sup {:.4}, drifts {:.2e}/{:.2e}; ",
            theta.describe(),
            report.inf,
            report.sup,
            sup_drift,
            inf_drift
        ));
    }
    verdict("criterion 7 norm-equivalence ratios", pass, detail.trim_end());
}

#[test]
fn criterion_08_gabor_frame_and_refusal() {
    let system = GaborSystem::gaussian(0.5, 0.5).unwrap();
    let dual = system.dual_window().unwrap();
    let basis = HermiteBasis::new(19, system.grid);
    let mut worst = 0.0_f64;
    for n in 0..=19 {
        let f = basis.function(n);
        let rec = system.reconstruct(&f, &dual).unwrap();
        worst = worst.max(rec.sub(&f).norm_l2() / f.norm_l2());
    }
    let refused = GaborSystem::gaussian(1.1, 1.1).is_err();
    verdict(
        "criterion 8 frame reconstruction and density refusal",
        worst < 1e-8 && refused,
        &format!(
            "worst reconstruction residual {worst:.3e} over degrees <= 19, \
             sparse lattice rejected: {refused}"
        ),
    );
}

#[test]
fn criterion_09_preconditioned_inversion() {
    let m = RadialWeight::polynomial(1, 1.0);
    let system = GaborSystem::gaussian(0.5, 0.5).unwrap();
    let basis = HermiteBasis::new(8, system.grid);
    let target = basis.function(2);
    let b = gabor_multiplier_apply(&system, &m, &target).unwrap();
    let (xp, tp) = precond_solve(&system, &m, &b, 1e-8).unwrap();
    let (_, tn) = normal_solve(&system, &m, &b, 1e-8).unwrap();
    let recovery = xp.sub(&target).norm_l2() / target.norm_l2();
    verdict(
        "criterion 9 reciprocal-symbol preconditioning",
        tp.converged && tn.converged && tp.iterations < tn.iterations && recovery < 1e-7,
        &format!(
            "{} vs {} iterations to 1e-8, recovery error {recovery:.3e}",
            tp.iterations, tn.iterations
        ),
    );
}

#[test]
fn criterion_10_lifting_ratio_refinement() {
    let coarse = PhaseGrid::new(8.0, 1.0 / 8.0).unwrap();
    let fine = PhaseGrid::new(8.0, 1.0 / 16.0).unwrap();
    let mut detail = String::new();
    let mut pass = true;
    for m in
        [RadialWeight::polynomial(1, 1.0), RadialWeight::subexponential(1, 0.5, 0.5).unwrap()]
    {
        let mu = m.pow(2.0);
        let base = lifting_ratio(&m, &mu, 2.0, 32, &coarse, 30, 7).unwrap();
        let deeper = lifting_ratio(&m, &mu, 2.0, 64, &coarse, 30, 7).unwrap();
        let finer = lifting_ratio(&m, &mu, 2.0, 64, &fine, 30, 7).unwrap();
        let n_drift = (deeper.spread - base.spread).abs() / base.spread;
        let g_drift = (finer.spread - deeper.spread).abs() / deeper.spread;
        pass &= n_drift < 0.05 && g_drift < 0.05;
        detail.push_str(&format!(
            "{}: spread {:.4}, truncation drift {:.2e}, grid drift {:.2e}; ",
            m.describe(),
            finer.spread,
            n_drift,
            g_drift
        ));
    }
    verdict("criterion 10 lifting-ratio stability", pass, detail.trim_end());
}

#[test]
fn criterion_11_toeplitz_intertwining() {
    let mut f = HermiteCoeffs::zeros(24);
    f.coeffs[0] = Complex64::new(1.0, 0.0);
    f.coeffs[1] = Complex64::new(1.0, 0.0);
    let mut points = Vec::new();
    for &r in &[0.0, 0.75, 1.5, 2.25, 3.0] {
        for k in 0..8 {
            points.push(Complex64::from_polar(r, k as f64 * PI / 4.0 + 0.3));
        }
    }
    let mut detail = String::new();
    let mut pass = true;
    for m in [
        RadialWeight::constant(1),
        RadialWeight::polynomial(1, 2.0),
        RadialWeight::subexponential(1, 1.0, 0.5).unwrap(),
    ] {
        let res = bargmann::intertwine_check(&m, &f, &points).unwrap();
        pass &= res < 1e-6;
        detail.push_str(&format!("{}: {res:.3e}; ", m.describe()));
    }
    verdict("criterion 11 intertwining residuals", pass, detail.trim_end());
}

#[test]
fn criterion_12_kernel_envelope_domination() {
    let m = RadialWeight::polynomial(1, 2.0);
    let v = m.envelope().unwrap();
    let a = localization_matrix(&m, 40).unwrap();
    let id = tf_kernel(&DenseOperator::identity(41, "identity"), 1.5, 0.25).unwrap();

    let k_a = tf_kernel(&a, 1.5, 0.25).unwrap();
    let rep_a = envelope_check(&k_a, &id, &v).unwrap();

    let a_inv = localization_matrix(&m.pow(-1.0), 40).unwrap();
    let t = a_inv.compose(&a).unwrap();
    let k_t = tf_kernel(&t, 1.5, 0.25).unwrap();
    let rep_t = envelope_check(&k_t, &id, &v).unwrap();

    verdict(
        "criterion 12 kernel envelope domination",
        rep_a.dominated && rep_a.tail_decreasing && rep_t.dominated && rep_t.tail_decreasing,
        &format!(
            "multiplier tails {:.2e}, composed tails {:.2e}, far/near ratios {:.3}/{:.3}",
            rep_a.tail_ratio,
            rep_t.tail_ratio,
            rep_a.ratio_far / rep_a.ratio_near.max(f64::MIN_POSITIVE),
            rep_t.ratio_far / rep_t.ratio_near.max(f64::MIN_POSITIVE)
        ),
    );
}
