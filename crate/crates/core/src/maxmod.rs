//! Maximum-modulus engine: `φ`-iteration, its monotone inverse, and `R_f`.
//!
//! All quantities are carried on the log scale: `t = log r` and
//! `s = log M(r) = φ(t)`. `M^n(r)` corresponds to `φ^n(log r)` and
//! `M^{-n}(r)` to `ψ^n(log r)` with `ψ = φ^{-1}`.

use crate::entire::FunctionSpec;
use crate::error::{Error, Result};
use crate::extmag::{ExtReal, WideReal};

/// Largest `t` handled by bisection; beyond `φ(T_MAX)` the family's
/// asymptotic inverse is exact to float precision.
const T_MAX: f64 = 1e300;

/// Default escape threshold on `log M^n`: the start of level 3 (`e^e`), i.e.
/// `M^n >= e^{e^e}`.
pub fn default_escape_threshold() -> ExtReal {
    ExtReal::new(3, 0.0).expect("canonical")
}

pub const DEFAULT_HORIZON: usize = 60;

/// A function together with a monotone table of `(t, φ(t))` samples used to
/// seed bisection brackets.
#[derive(Clone, Debug)]
pub struct MaxModProfile {
    function: FunctionSpec,
    ladder: Vec<(f64, WideReal)>,
    floor: WideReal,
    asymptotic_from: WideReal,
}

impl MaxModProfile {
    pub fn new(function: FunctionSpec) -> Result<Self> {
        function.validate()?;
        let ladder: Vec<(f64, WideReal)> = (-128..=128)
            .map(|k| {
                let t = 0.5 * k as f64;
                (t, function.log_max_modulus(WideReal::real(t)))
            })
            .collect();
        debug_assert!(ladder.windows(2).all(|w| w[0].1 <= w[1].1));
        let floor = WideReal::real(function.log_value_at_origin());
        let asymptotic_from = function.log_max_modulus(WideReal::real(T_MAX));
        Ok(Self {
            function,
            ladder,
            floor,
            asymptotic_from,
        })
    }

    pub fn function(&self) -> &FunctionSpec {
        &self.function
    }

    /// `φ(t) = log M(e^t)`.
    pub fn phi(&self, t: WideReal) -> WideReal {
        self.function.log_max_modulus(t)
    }

    /// `log M^n(e^{t0})`.
    pub fn iterate_log_m(&self, t0: WideReal, n: usize) -> WideReal {
        (0..n).fold(t0, |t, _| self.phi(t))
    }

    /// `ψ(s) = log M^{-1}(e^s)`, found by a bracketing root search.
    ///
    /// Returns `-inf` (that is, `M^{-1} = 0`) at the floor `s = log|f(0)|`.
    pub fn inverse_log_m(&self, s: WideReal) -> Result<WideReal> {
        if s < self.floor {
            return Err(Error::Domain(format!(
                "inverse undefined: log-modulus {s} is below log|f(0)| = {}",
                self.floor
            )));
        }
        if s == self.floor {
            return Ok(WideReal::NEG_INFINITY);
        }
        if s > self.asymptotic_from {
            return Ok(self.function.asymptotic_inverse(s));
        }
        let (lo, hi) = self.bracket(s);
        Ok(WideReal::real(self.solve(s, lo, hi)))
    }

    /// Illinois false position on `φ(t) = s` with bisection fallback, keeping
    /// `φ(lo) <= s < φ(hi)`; returns `lo` once the bracket is a few ulps wide.
    fn solve(&self, s: WideReal, mut lo: f64, mut hi: f64) -> f64 {
        let target = s.is_real().then(|| s.top());
        let value = |t: f64| self.phi(WideReal::real(t));
        let real = |w: WideReal| w.is_real().then(|| w.top()).filter(|v| v.is_finite());
        let mut flo = real(value(lo));
        let mut fhi = real(value(hi));
        let mut side = 0i8;
        for k in 0..2048 {
            let width = hi - lo;
            if width <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) || width <= f64::MIN_POSITIVE {
                break;
            }
            let secant = match (target, flo, fhi) {
                (Some(y), Some(a), Some(b)) if k % 4 != 3 && b > a => {
                    Some(lo + (y - a) * (width / (b - a)))
                }
                _ => None,
            };
            let mid = match secant {
                Some(x) if x > lo && x < hi => x,
                _ => lo + 0.5 * width,
            };
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = value(mid);
            if fm <= s {
                lo = mid;
                flo = real(fm);
                if side == -1 {
                    fhi = fhi.map(|b| target.map_or(b, |y| y + 0.5 * (b - y)));
                }
                side = -1;
            } else {
                hi = mid;
                fhi = real(fm);
                if side == 1 {
                    flo = flo.map(|a| target.map_or(a, |y| y + 0.5 * (a - y)));
                }
                side = 1;
            }
        }
        lo
    }

    /// `ψ^n(s)`; fails as soon as an intermediate value drops below the floor.
    pub fn inverse_iterate(&self, s: WideReal, n: usize) -> Result<WideReal> {
        let mut t = s;
        for _ in 0..n {
            t = self.inverse_log_m(t)?;
        }
        Ok(t)
    }

    /// Float bracket `[lo, hi]` with `φ(lo) <= s < φ(hi)`.
    fn bracket(&self, s: WideReal) -> (f64, f64) {
        let idx = self.ladder.partition_point(|(_, p)| *p <= s);
        if idx == 0 {
            let top = self.ladder[0].0;
            let mut step = 1.0;
            let mut lo = top - step;
            while self.phi(WideReal::real(lo)) > s && lo > -f64::MAX / 4.0 {
                step *= 2.0;
                lo = top - step;
            }
            return (lo, top);
        }
        if idx == self.ladder.len() {
            let bottom = self.ladder[idx - 1].0;
            let mut step = 1.0;
            let mut hi = bottom + step;
            while self.phi(WideReal::real(hi)) <= s && hi < T_MAX {
                step *= 2.0;
                hi = (bottom + step).min(T_MAX);
            }
            return (bottom, hi);
        }
        (self.ladder[idx - 1].0, self.ladder[idx].0)
    }

    /// True iff `log M^n(r)` reaches `threshold` for some `n <= horizon`.
    pub fn escape_test(&self, r: f64, horizon: usize, threshold: ExtReal) -> bool {
        let th = WideReal::from_ext(threshold);
        let mut t = WideReal::real(r.ln());
        if t >= th {
            return true;
        }
        for _ in 0..horizon {
            let next = self.phi(t);
            if next >= th {
                return true;
            }
            t = next;
        }
        false
    }

    /// `R_f`, the largest radius whose `M`-orbit does not escape.
    ///
    /// The horizon-limited escape predicate is bisected first. Below that
    /// crossing, orbits either escape slowly or sit at a fixed point of `M`,
    /// so the result is refined to the largest `r` with `M(r) <= r`; this
    /// makes the answer exact for parabolic fixed points such as `0` for
    /// `z e^z`, which no finite horizon resolves.
    pub fn compute_rf(&self, horizon: usize, threshold: ExtReal) -> Result<f64> {
        if !self.function.fixes_origin() {
            return Err(Error::Contract(format!(
                "R_f needs f(0) = 0; {} does not fix the origin (conjugate to g(z) = f²(z+α) − α first)",
                self.function.name()
            )));
        }
        let escapes = |r: f64| self.escape_test(r, horizon, threshold);
        let mut hi = 1.0;
        while !escapes(hi) {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::Domain("no escaping radius found".into()));
            }
        }
        let mut lo = 0.0;
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if escapes(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(self.largest_fixed_point_below(hi))
    }

    fn below_diagonal(&self, r: f64) -> bool {
        // M(r) <= r on the log scale
        let t = WideReal::real(r.ln());
        self.phi(t) <= t
    }

    fn largest_fixed_point_below(&self, r_hi: f64) -> f64 {
        if self.below_diagonal(r_hi) {
            return r_hi;
        }
        let mut samples = Vec::new();
        let mut d = 1e-12;
        while r_hi - d > 0.5 * r_hi {
            samples.push(r_hi - d);
            d *= 2.0;
        }
        let mut r = 0.5 * r_hi;
        while r > 1e-300 {
            samples.push(r);
            r *= 0.5;
        }
        let mut above = r_hi;
        for s in samples {
            if self.below_diagonal(s) {
                let (mut lo, mut hi) = (s, above);
                while hi - lo > 1e-14 * hi.max(1.0) {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.below_diagonal(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return lo;
            }
            above = s;
        }
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, LN_2};

    fn prof(f: FunctionSpec) -> MaxModProfile {
        MaxModProfile::new(f).unwrap()
    }

    #[test]
    fn iterate_examples() {
        let p = prof(FunctionSpec::pure_exp());
        let t0 = WideReal::real(1.3);
        assert_eq!(p.iterate_log_m(t0, 0), t0);
        let v = p.iterate_log_m(WideReal::real(0.0), 2);
        assert!((v.to_f64() - E).abs() < 1e-15);
        assert_eq!(v.to_ext().unwrap().level(), 2);
        let h = prof(FunctionSpec::half_exp());
        let v = h.iterate_log_m(WideReal::real(LN_2), 1);
        assert!((v.to_f64() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_round_trip() {
        for (_, f) in FunctionSpec::builtins() {
            let p = prof(f);
            for t in [0.0, 1.0, 5.0] {
                let s = p.iterate_log_m(WideReal::real(t), 1);
                let back = p.inverse_log_m(s).unwrap();
                assert!(
                    (back.to_f64() - t).abs() < 1e-10,
                    "{} t={t}",
                    p.function().name()
                );
            }
        }
    }

    #[test]
    fn inverse_domain_floor() {
        let p = prof(FunctionSpec::pure_exp());
        assert_eq!(
            p.inverse_log_m(WideReal::real(0.0)).unwrap(),
            WideReal::NEG_INFINITY
        );
        let err = p.inverse_log_m(WideReal::real(0.5f64.ln())).unwrap_err();
        assert!(err.to_string().contains("inverse undefined"));
    }

    #[test]
    fn inverse_round_trip_deep() {
        let p = prof(FunctionSpec::half_exp());
        for n in 1..=5 {
            for t in [0.2, 1.0, 2.5] {
                let s = p.iterate_log_m(WideReal::real(t), n);
                let back = p.inverse_iterate(s, n).unwrap();
                assert!((back.to_f64() - t).abs() < 1e-10, "n={n} t={t}");
            }
        }
        let b = prof(FunctionSpec::baker_default());
        for n in 1..=5 {
            let s = b.iterate_log_m(WideReal::real(1.0), n);
            let back = b.inverse_iterate(s, n).unwrap();
            assert!((back.to_f64() - 1.0).abs() < 1e-10, "baker n={n}");
        }
    }

    #[test]
    fn inverse_concave() {
        for (_, f) in FunctionSpec::builtins() {
            let p = prof(f);
            let ss: Vec<f64> = (0..120).map(|i| 0.5 + 0.25 * i as f64).collect();
            let psi: Vec<f64> = ss
                .iter()
                .map(|&s| p.inverse_log_m(WideReal::real(s)).unwrap().to_f64())
                .collect();
            for w in psi.windows(3) {
                assert!(w[0] - 2.0 * w[1] + w[2] <= 1e-9, "{}", p.function().name());
            }
        }
    }

    #[test]
    fn inverse_power_inequality() {
        // M^{-1}(r^c) <= M^{-1}(r)^c
        for (_, f) in FunctionSpec::builtins() {
            let p = prof(f);
            for s in [10.0, 20.0] {
                for c in [1.5, 2.0] {
                    let lhs = p.inverse_log_m(WideReal::real(c * s)).unwrap().to_f64();
                    let rhs = c * p.inverse_log_m(WideReal::real(s)).unwrap().to_f64();
                    assert!(rhs - lhs >= -1e-9, "{} s={s} c={c}", p.function().name());
                }
            }
        }
    }

    #[test]
    fn monotone_engine() {
        let p = prof(FunctionSpec::half_exp());
        for n in 0..6 {
            let mut prev = WideReal::NEG_INFINITY;
            for k in 1..200 {
                let r = 0.02 * k as f64;
                let v = p.iterate_log_m(WideReal::real(r.ln()), n);
                assert!(v >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn rf_half_exp() {
        let p = prof(FunctionSpec::half_exp());
        let rf = p
            .compute_rf(DEFAULT_HORIZON, default_escape_threshold())
            .unwrap();
        assert!((rf - LN_2).abs() < 1e-8, "{rf}");
    }

    #[test]
    fn rf_z_exp_is_zero() {
        let p = prof(FunctionSpec::HalfExp { coefficient: 1.0 });
        let rf = p
            .compute_rf(DEFAULT_HORIZON, default_escape_threshold())
            .unwrap();
        assert!(rf.abs() < 1e-9, "{rf}");
    }

    #[test]
    fn rf_requires_normalization() {
        let p = prof(FunctionSpec::pure_exp());
        assert!(matches!(
            p.compute_rf(DEFAULT_HORIZON, default_escape_threshold()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn escape_examples() {
        let p = prof(FunctionSpec::half_exp());
        let th = default_escape_threshold();
        assert!(!p.escape_test(0.5, DEFAULT_HORIZON, th));
        assert!(p.escape_test(1.0, DEFAULT_HORIZON, th));
        let rf = p.compute_rf(DEFAULT_HORIZON, th).unwrap();
        assert!(!p.escape_test(rf - 1e-3, DEFAULT_HORIZON, th));
        assert!(p.escape_test(rf + 1e-3, DEFAULT_HORIZON, th));
    }
}
