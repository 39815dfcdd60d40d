//! Moderate weights on phase space, radial in each time-frequency coordinate,
//! with declared submultiplicative envelopes, moderateness diagnostics, and
//! the GRS growth condition.
//!
//! All evaluation is done in the log domain; exponentiation is deferred to
//! the boundary so that subexponential families cannot overflow.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Serializable weight description: `{family, params, dimension}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub family: String,
    pub params: Vec<f64>,
    pub dimension: usize,
}

impl WeightSpec {
    pub fn new(family: &str, params: &[f64], dimension: usize) -> Self {
        Self { family: family.to_string(), params: params.to_vec(), dimension }
    }

    /// Parse the CLI shorthand `family:p1,p2` (dimension 1).
    pub fn parse_shorthand(text: &str) -> Result<Self> {
        let (family, rest) = match text.split_once(':') {
            Some((f, r)) => (f, r),
            None => (text, ""),
        };
        let params: Vec<f64> = if rest.is_empty() {
            vec![]
        } else {
            rest.split(',')
                .map(|p| {
                    p.trim().parse::<f64>().map_err(|_| {
                        CoreError::InvalidParameter(format!("bad weight parameter `{p}`"))
                    })
                })
                .collect::<Result<_>>()?
        };
        Ok(Self { family: family.trim().to_string(), params, dimension: 1 })
    }
}

type LogProfile = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    /// `(1 + |z|^2)^{s/2}`
    Polynomial { s: f64 },
    /// `c (1 + |z|)^s` with `log c` stored; the Peetre envelope family
    PolyPeetre { s: f64, log_c: f64 },
    /// `e^{a |z|^b}`, `0 < b < 1`
    Subexponential { a: f64, b: f64 },
    /// `e^{a |z| / log(e + |z|)}`
    Loglin { a: f64 },
    /// `e^{a |z|}`; constructible but fails the GRS condition
    Exponential { a: f64 },
    /// product of per-coordinate one-dimensional radial profiles
    Product(Vec<RadialWeight>),
    /// raw log-profile `log m_0` on the radii
    Profile(LogProfile),
}

/// A positive continuous weight on `R^{2d}`, radial in each time-frequency
/// coordinate: `m(z) = m_0(|z_1|, ..., |z_d|)`.
#[derive(Clone)]
pub struct RadialWeight {
    pub dimension: usize,
    kind: Kind,
    /// overall exponent: the weight is `base^power`
    power: f64,
}

impl fmt::Debug for RadialWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RadialWeight({}, power={})", self.describe(), self.power)
    }
}

impl RadialWeight {
    pub fn polynomial(dimension: usize, s: f64) -> Self {
        Self { dimension, kind: Kind::Polynomial { s }, power: 1.0 }
    }

    pub fn subexponential(dimension: usize, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && b < 1.0) {
            return Err(CoreError::InvalidParameter(format!(
                "subexponential weight needs a > 0 and b in (0,1), got a={a}, b={b}"
            )));
        }
        Ok(Self { dimension, kind: Kind::Subexponential { a, b }, power: 1.0 })
    }

    pub fn loglin(dimension: usize, a: f64) -> Result<Self> {
        if a <= 0.0 {
            return Err(CoreError::InvalidParameter(format!("loglin weight needs a > 0, got {a}")));
        }
        Ok(Self { dimension, kind: Kind::Loglin { a }, power: 1.0 })
    }

    pub fn exponential(dimension: usize, a: f64) -> Result<Self> {
        if a <= 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "exponential weight needs a > 0, got {a}"
            )));
        }
        Ok(Self { dimension, kind: Kind::Exponential { a }, power: 1.0 })
    }

    pub fn constant(dimension: usize) -> Self {
        Self::polynomial(dimension, 0.0)
    }

    /// `c (1 + |z|)^s`; used for Peetre-type envelopes and in tests.
    pub fn poly_peetre(dimension: usize, s: f64, c: f64) -> Self {
        Self { dimension, kind: Kind::PolyPeetre { s, log_c: c.ln() }, power: 1.0 }
    }

    /// Product of per-coordinate 1-D radial profiles (`d = factors.len()`).
    pub fn product(factors: Vec<RadialWeight>) -> Result<Self> {
        if factors.is_empty() || factors.iter().any(|f| f.dimension != 1) {
            return Err(CoreError::InvalidParameter(
                "product weight needs one 1-D factor per coordinate".into(),
            ));
        }
        let dimension = factors.len();
        Ok(Self { dimension, kind: Kind::Product(factors), power: 1.0 })
    }

    /// Weight from a raw log-profile `log m_0(r_1, ..., r_d)`.
    pub fn from_log_profile(
        dimension: usize,
        profile: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { dimension, kind: Kind::Profile(Arc::new(profile)), power: 1.0 }
    }

    pub fn from_spec(spec: &WeightSpec) -> Result<Self> {
        let d = spec.dimension;
        let need = |n: usize| -> Result<()> {
            if spec.params.len() != n {
                Err(CoreError::InvalidParameter(format!(
                    "weight family `{}` takes {n} parameter(s), got {}",
                    spec.family,
                    spec.params.len()
                )))
            } else {
                Ok(())
            }
        };
        match spec.family.as_str() {
            "polynomial" | "poly" => {
                need(1)?;
                Ok(Self::polynomial(d, spec.params[0]))
            }
            "subexponential" | "subexp" => {
                need(2)?;
                Self::subexponential(d, spec.params[0], spec.params[1])
            }
            "loglin" => {
                need(1)?;
                Self::loglin(d, spec.params[0])
            }
            "exponential" | "exp" => {
                need(1)?;
                Self::exponential(d, spec.params[0])
            }
            "constant" | "one" => {
                need(0)?;
                Ok(Self::constant(d))
            }
            other => Err(CoreError::InvalidParameter(format!("unknown weight family `{other}`"))),
        }
    }

    pub fn describe(&self) -> String {
        let base = match &self.kind {
            Kind::Polynomial { s } => format!("polynomial({s})"),
            Kind::PolyPeetre { s, log_c } => format!("peetre({s}, c=e^{log_c:.3})"),
            Kind::Subexponential { a, b } => format!("subexponential({a}, {b})"),
            Kind::Loglin { a } => format!("loglin({a})"),
            Kind::Exponential { a } => format!("exponential({a})"),
            Kind::Product(fs) => {
                let inner: Vec<String> = fs.iter().map(|f| f.describe()).collect();
                format!("product[{}]", inner.join(", "))
            }
            Kind::Profile(_) => "profile".into(),
        };
        if self.power == 1.0 {
            base
        } else {
            format!("{base}^{}", self.power)
        }
    }

    /// `weight^t`.
    pub fn pow(&self, t: f64) -> Self {
        Self { dimension: self.dimension, kind: self.kind.clone(), power: self.power * t }
    }

    /// `log m_0` on the vector of radii (`len = d`).
    pub fn log_radial(&self, r: &[f64]) -> f64 {
        debug_assert_eq!(r.len(), self.dimension);
        let norm = || r.iter().map(|x| x * x).sum::<f64>().sqrt();
        let base = match &self.kind {
            Kind::Polynomial { s } => {
                let n2: f64 = r.iter().map(|x| x * x).sum();
                s / 2.0 * n2.ln_1p()
            }
            Kind::PolyPeetre { s, log_c } => log_c + s * norm().ln_1p(),
            Kind::Subexponential { a, b } => a * norm().powf(*b),
            Kind::Loglin { a } => {
                let n = norm();
                a * n / (std::f64::consts::E + n).ln()
            }
            Kind::Exponential { a } => a * norm(),
            Kind::Product(fs) => fs.iter().zip(r).map(|(f, &rj)| f.log_radial(&[rj])).sum(),
            Kind::Profile(p) => p(r),
        };
        self.power * base
    }

    /// `log m(z)` for a phase-space point `z in R^{2d}` given as
    /// `(x_1, xi_1, ..., x_d, xi_d)`.
    pub fn log_eval(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), 2 * self.dimension);
        let r: Vec<f64> = z.chunks_exact(2).map(|c| c[0].hypot(c[1])).collect();
        self.log_radial(&r)
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.log_eval(z).exp()
    }

    pub fn eval_radial(&self, r: &[f64]) -> f64 {
        self.log_radial(r).exp()
    }

    /// The declared submultiplicative envelope `v` with
    /// `m(z + y) <= v(y) m(z)`.
    ///
    /// Raising to a power `p` maps the envelope to `v^{|p|}` by the two-sided
    /// moderate bounds. Raw profiles carry no declared envelope.
    pub fn envelope(&self) -> Option<RadialWeight> {
        let p = self.power.abs();
        let env = match &self.kind {
            Kind::Polynomial { s } => {
                // (1+|z+y|^2)^{s/2} <= 2^{|s|/2} (1+|y|)^{|s|} (1+|z|^2)^{s/2}
                let sa = s.abs();
                RadialWeight::poly_peetre(self.dimension, sa, 2.0_f64.powf(sa / 2.0))
            }
            Kind::PolyPeetre { s, .. } => RadialWeight::poly_peetre(self.dimension, s.abs(), 1.0),
            Kind::Subexponential { a, b } => RadialWeight {
                dimension: self.dimension,
                kind: Kind::Subexponential { a: *a, b: *b },
                power: 1.0,
            },
            Kind::Loglin { a } => {
                RadialWeight { dimension: self.dimension, kind: Kind::Loglin { a: *a }, power: 1.0 }
            }
            Kind::Exponential { a } => RadialWeight {
                dimension: self.dimension,
                kind: Kind::Exponential { a: *a },
                power: 1.0,
            },
            Kind::Product(fs) => {
                let envs: Option<Vec<RadialWeight>> = fs.iter().map(|f| f.envelope()).collect();
                RadialWeight::product(envs?).ok()?
            }
            Kind::Profile(_) => return None,
        };
        Some(env.pow(p))
    }

    /// Whether the declared envelope family satisfies the GRS condition
    /// `v(nz)^{1/n} -> 1`. Exponential envelopes fail; all other built-in
    /// families pass.
    pub fn grs_pass(&self) -> bool {
        match &self.kind {
            Kind::Exponential { .. } => self.power == 0.0,
            Kind::Product(fs) => fs.iter().all(|f| f.grs_pass()),
            _ => true,
        }
    }
}

/// Outcome of a moderateness scan: the supremum over probe pairs of
/// `log(m(z+y) / (v(y) m(z)))` (positive means the envelope is violated).
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    pub max_log_ratio: f64,
    pub pass: bool,
    pub worst_z: Vec<f64>,
    pub worst_y: Vec<f64>,
    pub probes: usize,
}

/// Scan `m(z+y) <= v(y) m(z)` over a probe grid (`n_probe` points per axis on
/// `[-half_width, half_width]^2` in each coordinate pair).
pub fn moderateness_report(
    m: &RadialWeight,
    v: &RadialWeight,
    half_width: f64,
    n_probe: usize,
) -> EnvelopeReport {
    let d = m.dimension;
    let axis: Vec<f64> = (0..n_probe)
        .map(|k| -half_width + 2.0 * half_width * k as f64 / (n_probe - 1) as f64)
        .collect();
    let mut max_log_ratio = f64::NEG_INFINITY;
    let mut worst_z = vec![0.0; 2 * d];
    let mut worst_y = vec![0.0; 2 * d];
    let mut probes = 0usize;

    // probe each coordinate pair with the other coordinates held at zero
    for coord in 0..d {
        for &zx in &axis {
            for &zxi in &axis {
                for &yx in &axis {
                    for &yxi in &axis {
                        let mut z = vec![0.0; 2 * d];
                        let mut y = vec![0.0; 2 * d];
                        z[2 * coord] = zx;
                        z[2 * coord + 1] = zxi;
                        y[2 * coord] = yx;
                        y[2 * coord + 1] = yxi;
                        let zy: Vec<f64> = z.iter().zip(&y).map(|(a, b)| a + b).collect();
                        let log_ratio = m.log_eval(&zy) - v.log_eval(&y) - m.log_eval(&z);
                        probes += 1;
                        if log_ratio > max_log_ratio {
                            max_log_ratio = log_ratio;
                            worst_z = z;
                            worst_y = y;
                        }
                    }
                }
            }
        }
    }
    EnvelopeReport { max_log_ratio, pass: max_log_ratio <= 1e-9, worst_z, worst_y, probes }
}

/// The GRS diagnostic sequence `v(nz)^{1/n}` with a trend verdict.
#[derive(Debug, Clone, Serialize)]
pub struct GrsDiagnostic {
    pub samples: Vec<(usize, f64)>,
    pub converges_to_one: bool,
}

/// Evaluate `v(nz)^{1/n}` on a log-spaced subset of `1..=n_max` and decide
/// whether the sequence trends to 1 or stays bounded away from it.
pub fn grs_diagnostic(v: &RadialWeight, z: &[f64], n_max: usize) -> Result<GrsDiagnostic> {
    if n_max < 10 {
        return Err(CoreError::InvalidParameter("grs diagnostic needs n_max >= 10".into()));
    }
    let value = |n: usize| -> f64 {
        let nz: Vec<f64> = z.iter().map(|x| x * n as f64).collect();
        (v.log_eval(&nz) / n as f64).exp()
    };
    let mut samples = Vec::new();
    let mut n = 1usize;
    while n < n_max {
        samples.push((n, value(n)));
        n = (n * 2).min(n_max);
    }
    samples.push((n_max, value(n_max)));
    let v_end = value(n_max);
    let v_earlier = value((n_max / 10).max(1));
    let converges_to_one =
        v_end < 1.0 + 1e-6 || (v_end - 1.0) <= 0.9 * (v_earlier - 1.0) + 1e-12;
    Ok(GrsDiagnostic { samples, converges_to_one })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn family_point_values() {
        let one = RadialWeight::polynomial(1, 0.0);
        assert_abs_diff_eq!(one.eval(&[3.0, -4.0]), 1.0, epsilon = 1e-15);

        let se = RadialWeight::subexponential(1, 1.0, 0.5).unwrap();
        // |z| = 4 -> e^2
        assert_abs_diff_eq!(se.eval(&[4.0, 0.0]), std::f64::consts::E.powi(2), epsilon = 1e-12);

        let ll = RadialWeight::loglin(1, 1.0).unwrap();
        assert_abs_diff_eq!(ll.eval(&[0.0, 0.0]), 1.0, epsilon = 1e-15);

        let p2 = RadialWeight::polynomial(1, 2.0);
        assert_abs_diff_eq!(p2.eval(&[1.0, 0.0]), 2.0, epsilon = 1e-14);

        let ex = RadialWeight::exponential(1, 1.0).unwrap();
        assert_abs_diff_eq!(ex.eval(&[0.6, 0.8]), std::f64::consts::E, epsilon = 1e-12);
    }

    #[test]
    fn product_weight_factorizes() {
        let f1 = RadialWeight::polynomial(1, 2.0);
        let f2 = RadialWeight::subexponential(1, 1.0, 0.5).unwrap();
        let prod = RadialWeight::product(vec![f1.clone(), f2.clone()]).unwrap();
        let z = [1.0, 0.0, 4.0, 0.0];
        let expect = f1.eval(&[1.0, 0.0]) * f2.eval(&[4.0, 0.0]);
        assert_abs_diff_eq!(prod.eval(&z), expect, epsilon = 1e-12);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(RadialWeight::subexponential(1, 1.0, 1.5).is_err());
        assert!(RadialWeight::subexponential(1, -1.0, 0.5).is_err());
        assert!(RadialWeight::loglin(1, 0.0).is_err());
        assert!(WeightSpec::parse_shorthand("subexp:1,0.5").is_ok());
        assert!(RadialWeight::from_spec(&WeightSpec::new("nosuch", &[], 1)).is_err());
    }

    #[test]
    fn peetre_weight_is_self_moderate() {
        let m = RadialWeight::poly_peetre(1, 2.0, 1.0);
        let report = moderateness_report(&m, &m, 8.0, 21);
        assert!(report.pass, "max log ratio {}", report.max_log_ratio);
    }

    #[test]
    fn exponential_is_self_moderate() {
        let m = RadialWeight::exponential(1, 1.0).unwrap();
        let report = moderateness_report(&m, &m, 8.0, 21);
        assert!(report.pass);
    }

    #[test]
    fn builtin_families_pass_against_declared_envelope() {
        for m in [
            RadialWeight::polynomial(1, 2.0),
            RadialWeight::polynomial(1, -3.0),
            RadialWeight::subexponential(1, 1.0, 0.5).unwrap(),
            RadialWeight::subexponential(1, 2.0, 0.75).unwrap(),
            RadialWeight::loglin(1, 1.0).unwrap(),
        ] {
            let v = m.envelope().unwrap();
            let report = moderateness_report(&m, &v, 8.0, 21);
            assert!(report.pass, "{}: max log ratio {}", m.describe(), report.max_log_ratio);
            // theta = m^{1/2} passes against v^{1/2}
            let report = moderateness_report(&m.pow(0.5), &v.pow(0.5), 8.0, 21);
            assert!(report.pass, "{} sqrt: {}", m.describe(), report.max_log_ratio);
        }
    }

    #[test]
    fn gaussian_growth_fails_every_linear_envelope() {
        let m = RadialWeight::from_log_profile(1, |r| r[0] * r[0]);
        let v = RadialWeight::exponential(1, 10.0).unwrap();
        let report = moderateness_report(&m, &v, 8.0, 21);
        assert!(!report.pass);
    }

    #[test]
    fn grs_diagnostic_values() {
        // v = (1+|z|)^3 at |z|=1, n = 10^4: (1+10^4)^{3/10^4}
        let v = RadialWeight::poly_peetre(1, 3.0, 1.0);
        let d = grs_diagnostic(&v, &[1.0, 0.0], 10_000).unwrap();
        let last = d.samples.last().unwrap().1;
        assert_abs_diff_eq!(last, (1.0 + 1e4_f64).powf(3.0 / 1e4), epsilon = 1e-10);
        assert_abs_diff_eq!(last, 1.00277, epsilon = 1e-5);
        assert!(d.converges_to_one);

        // v = e^{|z|^{1/2}} at |z|=1: e^{10^{-2}}
        let v = RadialWeight::subexponential(1, 1.0, 0.5).unwrap();
        let d = grs_diagnostic(&v, &[1.0, 0.0], 10_000).unwrap();
        assert_abs_diff_eq!(d.samples.last().unwrap().1, 1.0_f64.exp().powf(0.01), epsilon = 1e-9);
        assert!(d.converges_to_one);

        // v = e^{|z|}: constant e, FAIL
        let v = RadialWeight::exponential(1, 1.0).unwrap();
        let d = grs_diagnostic(&v, &[1.0, 0.0], 10_000).unwrap();
        assert_abs_diff_eq!(d.samples.last().unwrap().1, std::f64::consts::E, epsilon = 1e-12);
        assert!(!d.converges_to_one);
        assert!(!v.grs_pass());
    }

    #[test]
    fn spec_round_trip() {
        let spec = WeightSpec::new("subexponential", &[1.0, 0.5], 1);
        let json = serde_json::to_string(&spec).unwrap();
        let back: WeightSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        // unknown fields rejected
        let bad = r#"{"family":"poly","params":[2],"dimension":1,"extra":1}"#;
        assert!(serde_json::from_str::<WeightSpec>(bad).is_err());
    }

    proptest! {
        // both bounds of the two-sided moderate inequality hold on sampled pairs
        #[test]
        fn two_sided_moderate_bounds(
            zx in -8.0..8.0f64, zxi in -8.0..8.0f64,
            yx in -8.0..8.0f64, yxi in -8.0..8.0f64,
        ) {
            let m = RadialWeight::subexponential(1, 1.0, 0.5).unwrap();
            let v = m.envelope().unwrap();
            let z1 = [zx, zxi];
            let z2 = [yx, yxi];
            let diff = [zx - yx, zxi - yxi];
            let log_ratio = m.log_eval(&z1) - m.log_eval(&z2);
            let log_v = v.log_eval(&diff);
            prop_assert!(log_ratio <= log_v + 1e-9);
            prop_assert!(log_ratio >= -log_v - 1e-9);
        }
    }
}
