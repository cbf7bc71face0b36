//! Built-in transcendental entire function families and overflow-safe evaluation.
//!
//! Every family has nonnegative Taylor coefficients, so the maximum modulus on
//! `|z| = r` is attained at `z = r` and `log M(e^t) = log f(e^t)` in closed form.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extmag::{WideReal, LN_HUGE};

pub type ComplexPoint = Complex64;

/// Beyond this modulus the float argument of an iterate no longer determines
/// the argument of the next iterate; orbits switch to the flagged path.
pub const EXACT_LIMIT: f64 = 1e10;

/// A member of one of the built-in families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum FunctionSpec {
    /// `c·z·e^z`; `c = 1/2` is the default laboratory map.
    HalfExp {
        #[serde(default = "default_half")]
        coefficient: f64,
    },
    /// `λ·e^z`.
    ScaledExp { lambda: f64 },
    /// `e^z`.
    PureExp {},
    /// `C·z²·∏_{k=1}^{K} (1 + z/a_k)` with `a_k = a1·ratio^(k-1)`.
    BakerProduct {
        c: f64,
        a1: f64,
        ratio: f64,
        terms: usize,
    },
}

fn default_half() -> f64 {
    0.5
}

/// `ln|z|` paired with `arg z ∈ (-π, π]`. `log_modulus = -inf` encodes `z = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogPolar {
    pub log_modulus: WideReal,
    pub argument: f64,
    /// Set once a dominant-term expansion was used anywhere upstream.
    pub approximate: bool,
}

impl LogPolar {
    pub fn from_complex(z: ComplexPoint) -> Self {
        let (a, b) = (z.re.abs().max(z.im.abs()), z.re.abs().min(z.im.abs()));
        // ln|z| without overflowing |z|
        let log_modulus = if a == 0.0 {
            f64::NEG_INFINITY
        } else {
            a.ln() + 0.5 * (b / a).powi(2).ln_1p()
        };
        Self {
            log_modulus: WideReal::real(log_modulus),
            argument: if a == 0.0 { 0.0 } else { z.arg() },
            approximate: false,
        }
    }

    /// Back to a float complex number, if the modulus fits.
    pub fn to_complex(&self) -> Option<ComplexPoint> {
        let l = self.log_modulus.to_f64();
        (l <= LN_HUGE).then(|| Complex64::from_polar(l.exp(), self.argument))
    }
}

/// Reduces an angle to `(-π, π]`.
pub fn normalize_angle(a: f64) -> f64 {
    if !a.is_finite() {
        return 0.0;
    }
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

fn softplus(u: f64) -> f64 {
    if u > 35.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

impl FunctionSpec {
    pub fn half_exp() -> Self {
        Self::HalfExp { coefficient: 0.5 }
    }

    pub fn pure_exp() -> Self {
        Self::PureExp {}
    }

    pub fn scaled_exp(lambda: f64) -> Self {
        Self::ScaledExp { lambda }
    }

    /// Default Baker-style product used for loop experiments.
    pub fn baker_default() -> Self {
        Self::BakerProduct {
            c: 0.25,
            a1: 2.0,
            ratio: 4.0,
            terms: 6,
        }
    }

    /// All built-in families with their default parameters.
    pub fn builtins() -> Vec<(&'static str, FunctionSpec)> {
        vec![
            ("half_exp", Self::half_exp()),
            ("scaled_exp", Self::scaled_exp(0.25)),
            ("pure_exp", Self::pure_exp()),
            ("baker_product", Self::baker_default()),
        ]
    }

    /// Looks up a built-in family by name with default parameters.
    pub fn by_name(name: &str) -> Result<Self> {
        Self::builtins()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| f)
            .ok_or_else(|| Error::Parse(format!("unknown function family `{name}`")))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::HalfExp { .. } => "half_exp",
            Self::ScaledExp { .. } => "scaled_exp",
            Self::PureExp {} => "pure_exp",
            Self::BakerProduct { .. } => "baker_product",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Domain(m));
        match *self {
            Self::HalfExp { coefficient } if !(coefficient > 0.0 && coefficient.is_finite()) => {
                bad(format!(
                    "half_exp coefficient must be positive, got {coefficient}"
                ))
            }
            Self::ScaledExp { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                bad(format!("scaled_exp lambda must be positive, got {lambda}"))
            }
            Self::BakerProduct {
                c,
                a1,
                ratio,
                terms,
            } => {
                if !(c > 0.0 && c.is_finite()) {
                    return bad(format!("baker_product C must be positive, got {c}"));
                }
                if !(a1 > 0.0 && a1.is_finite()) {
                    return bad(format!("baker_product a1 must be positive, got {a1}"));
                }
                if !(ratio > 1.0 && ratio.is_finite()) {
                    return bad(format!(
                        "baker_product ratio must exceed 1 so a_k increase, got {ratio}"
                    ));
                }
                if terms == 0 {
                    return bad("baker_product needs at least one factor".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// True exactly when `f(0) = 0`.
    pub fn fixes_origin(&self) -> bool {
        matches!(self, Self::HalfExp { .. } | Self::BakerProduct { .. })
    }

    /// Zeros `a_k` of the Baker-style product; empty for the other families.
    pub fn product_zeros(&self) -> Vec<f64> {
        match *self {
            Self::BakerProduct {
                a1, ratio, terms, ..
            } => (0..terms).map(|k| a1 * ratio.powi(k as i32)).collect(),
            _ => Vec::new(),
        }
    }

    /// `log|f(0)|`, the floor of `log M`. `-inf` when `f(0) = 0`.
    pub fn log_value_at_origin(&self) -> f64 {
        match *self {
            Self::HalfExp { .. } | Self::BakerProduct { .. } => f64::NEG_INFINITY,
            Self::PureExp {} => 0.0,
            Self::ScaledExp { lambda } => lambda.ln(),
        }
    }

    /// Polynomial degree of the Baker product (`K + 2`).
    fn degree(&self) -> Option<f64> {
        match *self {
            Self::BakerProduct { terms, .. } => Some((terms + 2) as f64),
            _ => None,
        }
    }

    /// Direct complex evaluation.
    pub fn eval(&self, z: ComplexPoint) -> Result<ComplexPoint> {
        let w = match *self {
            Self::HalfExp { coefficient } => coefficient * z * z.exp(),
            Self::ScaledExp { lambda } => lambda * z.exp(),
            Self::PureExp {} => z.exp(),
            Self::BakerProduct { c, .. } => {
                let mut p = c * z * z;
                for a in self.product_zeros() {
                    p *= 1.0 + z / a;
                }
                p
            }
        };
        if w.re.is_finite() && w.im.is_finite() {
            Ok(w)
        } else {
            Err(Error::Range(format!("f({z}) overflows")))
        }
    }

    /// Log-polar evaluation, total on every input.
    ///
    /// For `|z| <= 1e300` the log-modulus is computed from exact log forms
    /// (`log|c z e^z| = ln c + ln|z| + Re z` and similar). Beyond that the
    /// dominant term is used and the result is flagged approximate; for the
    /// exponential families the argument map is no longer computable there and
    /// the argument is reported as 0.
    pub fn eval_log(&self, z: LogPolar) -> LogPolar {
        let l = z.log_modulus;
        if l == WideReal::NEG_INFINITY {
            return LogPolar {
                log_modulus: WideReal::real(self.log_value_at_origin()),
                argument: 0.0,
                approximate: z.approximate,
            };
        }
        let theta = z.argument;
        if l.is_real() && l.top() <= LN_HUGE {
            let lr = l.top();
            let r = lr.exp();
            let (x, y) = (r * theta.cos(), r * theta.sin());
            let (lm, arg) = match *self {
                Self::HalfExp { coefficient } => (coefficient.ln() + lr + x, theta + y),
                Self::ScaledExp { lambda } => (lambda.ln() + x, y),
                Self::PureExp {} => (x, y),
                Self::BakerProduct { c, .. } => {
                    let zc = Complex64::new(x, y);
                    let mut lm = c.ln() + 2.0 * lr;
                    let mut arg = 2.0 * theta;
                    for a in self.product_zeros() {
                        let q = 1.0 + zc / a;
                        lm += q.norm().ln();
                        arg += q.arg();
                    }
                    (lm, arg)
                }
            };
            return LogPolar {
                log_modulus: WideReal::real(lm),
                argument: normalize_angle(arg),
                approximate: z.approximate,
            };
        }
        // Dominant-term regime: |z| > 1e300.
        match *self {
            Self::BakerProduct { c, .. } => {
                let d = self.degree().unwrap_or(2.0);
                let shift = c.ln() - self.product_zeros().iter().map(|a| a.ln()).sum::<f64>();
                LogPolar {
                    log_modulus: l.scale(d).add(shift),
                    argument: normalize_angle(d * theta),
                    approximate: true,
                }
            }
            _ => {
                let cos = theta.cos();
                let log_modulus = if cos > 0.0 {
                    // Re z = e^l cos θ dominates every other term
                    l.add(cos.ln()).exp()
                } else {
                    WideReal::NEG_INFINITY
                };
                LogPolar {
                    log_modulus,
                    argument: 0.0,
                    approximate: true,
                }
            }
        }
    }

    /// `φ(t) = log M(e^t)`.
    pub fn log_max_modulus(&self, t: WideReal) -> WideReal {
        if t == WideReal::NEG_INFINITY {
            return WideReal::real(self.log_value_at_origin());
        }
        let small = t.is_real() && t.top() <= LN_HUGE;
        match *self {
            Self::HalfExp { coefficient } if small => {
                WideReal::real(coefficient.ln() + t.top() + t.top().exp())
            }
            Self::ScaledExp { lambda } if small => WideReal::real(lambda.ln() + t.top().exp()),
            Self::PureExp {} if small => WideReal::real(t.top().exp()),
            Self::HalfExp { .. } | Self::PureExp {} => t.exp(),
            Self::ScaledExp { lambda } => t.exp().add(lambda.ln()),
            Self::BakerProduct { c, .. } => {
                if t.is_real() {
                    let tr = t.top();
                    let mut s = c.ln() + 2.0 * tr;
                    for a in self.product_zeros() {
                        s += softplus(tr - a.ln());
                    }
                    WideReal::real(s)
                } else {
                    t.scale(self.degree().unwrap_or(2.0))
                }
            }
        }
    }

    /// Inverse of `φ` in the regime where `t` itself exceeds the float range.
    pub(crate) fn asymptotic_inverse(&self, s: WideReal) -> WideReal {
        match self.degree() {
            Some(d) => s.scale(1.0 / d),
            // s = e^t up to terms below one ulp
            None => s.ln().unwrap_or(WideReal::NEG_INFINITY),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eval_examples() {
        let h = FunctionSpec::half_exp();
        assert_eq!(
            h.eval(Complex64::new(0.0, 0.0)).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        let one = h.eval(Complex64::new(1.0, 0.0)).unwrap();
        assert!((one.re - std::f64::consts::E / 2.0).abs() < 1e-14);
        let z = Complex64::new(TAU.ln(), PI / 2.0);
        let w = FunctionSpec::pure_exp().eval(z).unwrap();
        assert!((w - Complex64::new(0.0, TAU)).norm() < 1e-12);
        assert!(matches!(
            h.eval(Complex64::new(800.0, 0.0)),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn eval_log_positive_axis() {
        let h = FunctionSpec::half_exp();
        for r in [0.1, 1.0, 3.0, 50.0, 600.0] {
            let out = h.eval_log(LogPolar::from_complex(Complex64::new(r, 0.0)));
            assert!((out.log_modulus.top() - ((r / 2.0f64).ln() + r)).abs() < 1e-12 * r.max(1.0));
            assert_eq!(out.argument, 0.0);
        }
    }

    #[test]
    fn eval_log_pure_exp_is_real_part() {
        let f = FunctionSpec::pure_exp();
        let z = Complex64::new(3.25, -1.5);
        let out = f.eval_log(LogPolar::from_complex(z));
        assert!((out.log_modulus.top() - 3.25).abs() < 1e-14);
    }

    #[test]
    fn eval_log_agrees_with_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (_, f) in FunctionSpec::builtins() {
            let mut checked = 0;
            while checked < 1000 {
                let r: f64 = rng.gen_range(0.01..30.0);
                let th: f64 = rng.gen_range(-PI..PI);
                let z = Complex64::from_polar(r, th);
                let Ok(w) = f.eval(z) else { continue };
                if w.norm() >= 1e100 || w.norm() == 0.0 {
                    continue;
                }
                let lw = f.eval_log(LogPolar::from_complex(z));
                let direct = w.norm().ln();
                let err = (lw.log_modulus.top() - direct).abs() / direct.abs().max(1.0);
                assert!(err < 1e-9, "{} at {z}: {err}", f.name());
                checked += 1;
            }
        }
    }

    #[test]
    fn eval_log_dominant_regime() {
        let h = FunctionSpec::half_exp();
        let z = LogPolar {
            log_modulus: WideReal::real(800.0),
            argument: 0.0,
            approximate: false,
        };
        let out = h.eval_log(z);
        assert!(out.approximate);
        assert_eq!(out.log_modulus.exps(), 1);
        assert!((out.log_modulus.top() - 800.0).abs() < 1e-12);
        let back = LogPolar { argument: PI, ..z };
        assert_eq!(h.eval_log(back).log_modulus, WideReal::NEG_INFINITY);
    }

    #[test]
    fn phi_examples() {
        let h = FunctionSpec::half_exp();
        let v = h.log_max_modulus(WideReal::real(0.0)).to_f64();
        assert!((v - (1.0 - std::f64::consts::LN_2)).abs() < 1e-15);
        let p = FunctionSpec::pure_exp().log_max_modulus(WideReal::real(0.0));
        assert_eq!(p.to_f64(), 1.0);
        for (_, f) in FunctionSpec::builtins() {
            let mut prev = f.log_max_modulus(WideReal::real(-30.0));
            for k in -29..60 {
                let cur = f.log_max_modulus(WideReal::real(k as f64));
                assert!(cur > prev, "{} not increasing at {k}", f.name());
                prev = cur;
            }
        }
    }

    #[test]
    fn positive_axis_maximality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (_, f) in FunctionSpec::builtins() {
            for _ in 0..1000 {
                let r: f64 = rng.gen_range(1e-3..40.0);
                let th: f64 = rng.gen_range(-PI..PI);
                let lw = f.eval_log(LogPolar::from_complex(Complex64::from_polar(r, th)));
                let m = f.log_max_modulus(WideReal::real(r.ln()));
                assert!(
                    m.approx_ge(&lw.log_modulus, 1e-9),
                    "{} r={r} th={th}",
                    f.name()
                );
            }
        }
    }

    #[test]
    fn convexity_of_phi() {
        for (_, f) in FunctionSpec::builtins() {
            let ts: Vec<f64> = (0..200).map(|i| -6.0 + 0.06 * i as f64).collect();
            let phi: Vec<f64> = ts
                .iter()
                .map(|&t| f.log_max_modulus(WideReal::real(t)).to_f64())
                .collect();
            for w in phi.windows(3) {
                let d2 = w[0] - 2.0 * w[1] + w[2];
                assert!(d2 >= -1e-9 * w[1].abs().max(1.0), "{}: {d2}", f.name());
            }
        }
    }

    #[test]
    fn growth_of_phi_over_t() {
        let f = FunctionSpec::pure_exp();
        let g: Vec<f64> = [10.0, 20.0, 40.0]
            .iter()
            .map(|&t| f.log_max_modulus(WideReal::real(t)).to_f64() / t)
            .collect();
        assert!(g[0] > 100.0 && g[1] > g[0] && g[2] > g[1]);
    }

    #[test]
    fn hadamard_inequality() {
        for (_, f) in FunctionSpec::builtins() {
            for t in [5.0, 10.0] {
                for c in [1.5, 2.0] {
                    let lhs = f.log_max_modulus(WideReal::real(c * t));
                    let rhs = f.log_max_modulus(WideReal::real(t)).scale(c);
                    assert!(lhs.approx_ge(&rhs, 1e-9), "{} t={t} c={c}", f.name());
                }
            }
        }
    }

    #[test]
    fn spec_validation_and_json() {
        assert!(FunctionSpec::HalfExp { coefficient: -1.0 }
            .validate()
            .is_err());
        assert!(FunctionSpec::BakerProduct {
            c: 1.0,
            a1: 1.0,
            ratio: 0.5,
            terms: 3
        }
        .validate()
        .is_err());
        let j = serde_json::to_string(&FunctionSpec::half_exp()).unwrap();
        assert_eq!(j, r#"{"family":"half_exp","params":{"coefficient":0.5}}"#);
        let p: FunctionSpec = serde_json::from_str(r#"{"family":"pure_exp","params":{}}"#).unwrap();
        assert_eq!(p, FunctionSpec::pure_exp());
        assert!(FunctionSpec::half_exp().fixes_origin());
        assert!(FunctionSpec::baker_default().fixes_origin());
        assert!(!FunctionSpec::pure_exp().fixes_origin());
        assert!(!FunctionSpec::scaled_exp(2.0).fixes_origin());
    }
}
