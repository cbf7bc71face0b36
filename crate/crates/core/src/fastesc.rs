//! Pointwise fast-escape engine: orbits, `A_R` membership and the escape-rate
//! function `R_A`.
//!
//! Orbits are iterated in float complex arithmetic while that is meaningful.
//! Once an iterate exceeds [`EXACT_LIMIT`] or the next value overflows, the
//! next entry comes from the log-polar evaluation and is flagged approximate;
//! after that the argument is no longer known and the orbit follows the
//! maximum-modulus growth `log|f^{n+1}| = φ(log|f^n|)` with the flag kept.
//! Flagged tails therefore never decrease the `R_A` sequence.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::entire::{ComplexPoint, FunctionSpec, LogPolar, EXACT_LIMIT};
use crate::error::{Error, Result};
use crate::extmag::{ExtReal, WideReal};
use crate::maxmod::{default_escape_threshold, MaxModProfile, DEFAULT_HORIZON};

/// Relative slack used when comparing `|f^n(z)|` against `M^n(R)`.
const COMPARE_SLACK: f64 = 1e-12;

/// Horizon, thresholds and tolerances shared by the pointwise engines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeParams {
    pub horizon: usize,
    /// Threshold on `log|f^n|` (and `log M^n`) certifying escape.
    pub threshold: ExtReal,
    /// Stabilization tolerance on `log R` for the `R_A` sequence.
    pub tol: f64,
    pub nmax: usize,
}

impl Default for EscapeParams {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            threshold: default_escape_threshold(),
            tol: 1e-9,
            nmax: 30,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeClass {
    Escaping,
    BoundedAtHorizon,
    Indeterminate,
}

/// Iteration trace of one point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub point: ComplexPoint,
    /// `f^n(z)` in log-polar form for `n = 0..=horizon_used`.
    pub entries: Vec<LogPolar>,
    pub horizon_used: usize,
    pub escape_class: EscapeClass,
}

impl OrbitRecord {
    /// Index of the first approximate entry, if any.
    pub fn first_flagged(&self) -> Option<usize> {
        self.entries.iter().position(|e| e.approximate)
    }

    pub fn log_modulus(&self, n: usize) -> WideReal {
        self.entries[n].log_modulus
    }
}

/// Streaming orbit of a point, yielding `f^0(z), f^1(z), …`.
pub struct OrbitIter<'a> {
    profile: &'a MaxModProfile,
    exact: Option<ComplexPoint>,
    current: LogPolar,
    started: bool,
}

impl<'a> OrbitIter<'a> {
    pub fn new(profile: &'a MaxModProfile, z: ComplexPoint) -> Self {
        Self {
            profile,
            exact: Some(z),
            current: LogPolar::from_complex(z),
            started: false,
        }
    }

    fn step(&mut self) -> LogPolar {
        let f: &FunctionSpec = self.profile.function();
        if let Some(w) = self.exact {
            if w.norm() <= EXACT_LIMIT {
                if let Ok(next) = f.eval(w) {
                    self.exact = Some(next);
                    if next == Complex64::new(0.0, 0.0) && w != next {
                        // underflow; the log path keeps the modulus
                        let logged = f.eval_log(self.current);
                        if logged.log_modulus.is_real() && logged.log_modulus.top().is_finite() {
                            self.current = logged;
                            return logged;
                        }
                    }
                    return LogPolar::from_complex(next);
                }
            }
            self.exact = None;
            let mut next = f.eval_log(self.current);
            next.approximate = true;
            return next;
        }
        LogPolar {
            log_modulus: self.profile.phi(self.current.log_modulus),
            argument: 0.0,
            approximate: true,
        }
    }
}

impl Iterator for OrbitIter<'_> {
    type Item = LogPolar;

    fn next(&mut self) -> Option<LogPolar> {
        if self.started {
            self.current = self.step();
        }
        self.started = true;
        Some(self.current)
    }
}

/// Orbit up to `horizon` iterations, classified from its final state.
pub fn orbit(profile: &MaxModProfile, z: ComplexPoint, params: &EscapeParams) -> OrbitRecord {
    let entries: Vec<LogPolar> = OrbitIter::new(profile, z)
        .take(params.horizon + 1)
        .collect();
    let last = entries.last().expect("horizon >= 0").log_modulus;
    let threshold = WideReal::from_ext(params.threshold);
    // escape radius e^e on the modulus
    let escape_class = if last >= threshold {
        EscapeClass::Escaping
    } else if last < WideReal::real(std::f64::consts::E) {
        EscapeClass::BoundedAtHorizon
    } else {
        EscapeClass::Indeterminate
    };
    OrbitRecord {
        point: z,
        horizon_used: entries.len() - 1,
        entries,
        escape_class,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ArVerdict {
    In,
    /// `|f^n(z)| < M^n(R)` at this `n`.
    Out {
        n: usize,
    },
    HorizonLimited,
}

/// Membership of `z` in `A_R(f)` up to the horizon.
pub fn in_ar(
    profile: &MaxModProfile,
    z: ComplexPoint,
    r: f64,
    params: &EscapeParams,
) -> Result<ArVerdict> {
    Ok(ArBounds::new(profile, r, params)?.verdict(profile, z))
}

/// The ladder `log M^n(R)` for `n <= horizon`, shared by many membership tests.
#[derive(Clone, Debug)]
pub struct ArBounds {
    bounds: Vec<WideReal>,
    threshold: WideReal,
}

impl ArBounds {
    pub fn new(profile: &MaxModProfile, r: f64, params: &EscapeParams) -> Result<Self> {
        if !(r > 0.0) || !profile.escape_test(r, params.horizon, params.threshold) {
            return Err(Error::Contract(format!(
                "A_R needs M^n(R) → ∞; R = {r} does not escape within {} iterations (R must exceed R_f)",
                params.horizon
            )));
        }
        let mut bounds = vec![WideReal::real(r.ln())];
        for _ in 0..params.horizon {
            bounds.push(profile.phi(*bounds.last().expect("non-empty")));
        }
        Ok(Self {
            bounds,
            threshold: WideReal::from_ext(params.threshold),
        })
    }

    /// Stops at the first violated inequality.
    pub fn verdict(&self, profile: &MaxModProfile, z: ComplexPoint) -> ArVerdict {
        let mut last = WideReal::NEG_INFINITY;
        for (n, (e, bound)) in OrbitIter::new(profile, z).zip(&self.bounds).enumerate() {
            if !e.log_modulus.approx_ge(bound, COMPARE_SLACK) {
                return ArVerdict::Out { n };
            }
            last = e.log_modulus;
        }
        if last >= self.threshold {
            ArVerdict::In
        } else {
            ArVerdict::HorizonLimited
        }
    }
}

/// One entry `log M^{-n}(|f^n(z)|)` of the `R_A` sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaEntry {
    pub log_radius: WideReal,
    pub approximate: bool,
}

impl RaEntry {
    pub fn radius(&self) -> f64 {
        self.log_radius.exp().to_f64()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaSequence {
    pub entries: Vec<RaEntry>,
    /// Why the sequence stopped early, if it did.
    pub truncation: Option<String>,
}

/// `M^{-n}(|f^n(z)|)` for `n = 0..=min(nmax, horizon)`, on the log scale.
pub fn ra_sequence(profile: &MaxModProfile, orbit: &OrbitRecord, nmax: usize) -> RaSequence {
    ra_sequence_upto(profile, orbit, nmax.min(orbit.horizon_used))
}

fn ra_sequence_upto(profile: &MaxModProfile, orbit: &OrbitRecord, last: usize) -> RaSequence {
    let mut entries = Vec::with_capacity(last + 1);
    for n in 0..=last {
        let e = orbit.entries[n];
        match profile.inverse_iterate(e.log_modulus, n) {
            Ok(t) => entries.push(RaEntry {
                log_radius: t,
                approximate: e.approximate,
            }),
            Err(err) => {
                return RaSequence {
                    entries,
                    truncation: Some(format!("entry {n}: {err}")),
                }
            }
        }
    }
    RaSequence {
        entries,
        truncation: None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaStatus {
    Value,
    Undefined,
    NotEscaping,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaResult {
    pub status: RaStatus,
    /// `R_A(z)`; `R_f` when not escaping, NaN when undefined.
    pub value: f64,
    pub log_value: WideReal,
    pub sequence: Vec<RaEntry>,
    /// Last decrement of `log R` along the sequence.
    pub residual: f64,
    pub horizon_used: usize,
    pub note: Option<String>,
}

/// Extended `R_A(z)` for a function with `f(0) = 0`.
///
/// The sequence runs one step past the first approximate orbit entry, capped
/// at `nmax`; further tail steps leave it unchanged.
pub fn compute_ra(
    profile: &MaxModProfile,
    z: ComplexPoint,
    params: &EscapeParams,
    rf: f64,
) -> Result<RaResult> {
    if !profile.function().fixes_origin() {
        return Err(Error::Contract(format!(
            "the extended R_A needs f(0) = 0; use ra_sequence for {}",
            profile.function().name()
        )));
    }
    let orb = orbit(profile, z, params);
    Ok(ra_from_orbit(profile, &orb, params, rf))
}

pub(crate) fn ra_from_orbit(
    profile: &MaxModProfile,
    orb: &OrbitRecord,
    params: &EscapeParams,
    rf: f64,
) -> RaResult {
    if orb.escape_class != EscapeClass::Escaping {
        return RaResult {
            status: RaStatus::NotEscaping,
            value: rf,
            log_value: WideReal::real(rf.ln()),
            sequence: Vec::new(),
            residual: 0.0,
            horizon_used: orb.horizon_used,
            note: Some(format!("{:?} at horizon", orb.escape_class)),
        };
    }
    let last = orb
        .first_flagged()
        .map_or(orb.horizon_used, |k| k + 1)
        .min(params.nmax)
        .min(orb.horizon_used);
    let seq = ra_sequence_upto(profile, orb, last);
    let undefined = |note: String, seq: RaSequence| RaResult {
        status: RaStatus::Undefined,
        value: f64::NAN,
        log_value: WideReal::NEG_INFINITY,
        sequence: seq.entries,
        residual: f64::NAN,
        horizon_used: orb.horizon_used,
        note: Some(note),
    };
    if let Some(reason) = seq.truncation.clone() {
        return undefined(reason, seq);
    }
    let n = seq.entries.len();
    let final_entry = seq.entries[n - 1];
    let residual = if n >= 2 {
        seq.entries[n - 2]
            .log_radius
            .diff(&final_entry.log_radius)
            .unwrap_or(f64::NAN)
    } else {
        0.0
    };
    if !(residual.abs() < params.tol) {
        return undefined(
            format!(
                "not stabilized after {} terms (last decrement {residual:e})",
                n
            ),
            seq,
        );
    }
    RaResult {
        status: RaStatus::Value,
        value: final_entry.radius(),
        log_value: final_entry.log_radius,
        sequence: seq.entries,
        residual,
        horizon_used: orb.horizon_used,
        note: None,
    }
}

/// `v_n(z) = -log M^{-n}(|f^n(z)|)`, defined where `f^n(z) ≠ 0`.
pub fn v_n(profile: &MaxModProfile, orb: &OrbitRecord, n: usize) -> Option<f64> {
    let l = orb.entries.get(n)?.log_modulus;
    if l == WideReal::NEG_INFINITY {
        return None;
    }
    let t = profile.inverse_iterate(l, n).ok()?;
    t.is_real().then(|| -t.top())
}

/// `log|f^n(z)| / log M^n(R)` with `log R` given.
pub fn growth_ratio(
    profile: &MaxModProfile,
    orb: &OrbitRecord,
    log_r: WideReal,
    n: usize,
) -> Option<f64> {
    let num = orb.entries.get(n)?.log_modulus;
    let den = profile.iterate_log_m(log_r, n);
    num.ratio(&den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxmod::DEFAULT_HORIZON;
    use num_complex::Complex64;
    use std::f64::consts::{LN_2, PI, TAU};

    fn half() -> MaxModProfile {
        MaxModProfile::new(FunctionSpec::half_exp()).unwrap()
    }

    #[test]
    fn orbit_on_positive_axis_tracks_max_modulus() {
        let p = half();
        let params = EscapeParams::default();
        let orb = orbit(&p, Complex64::new(2.0, 0.0), &params);
        assert_eq!(orb.entries.len(), DEFAULT_HORIZON + 1);
        assert_eq!(orb.escape_class, EscapeClass::Escaping);
        for n in 0..orb.entries.len() {
            let expect = p.iterate_log_m(WideReal::real(2f64.ln()), n);
            let got = orb.log_modulus(n);
            assert!(
                got.approx_ge(&expect, 1e-12) && expect.approx_ge(&got, 1e-12),
                "n={n}"
            );
        }
        // flags are monotone
        let k = orb.first_flagged().unwrap();
        assert!(orb.entries[k..].iter().all(|e| e.approximate));
    }

    #[test]
    fn orbit_of_the_pure_exp_example() {
        let p = MaxModProfile::new(FunctionSpec::pure_exp()).unwrap();
        let z = Complex64::new(TAU.ln(), PI / 2.0);
        let orb = orbit(&p, z, &EscapeParams::default());
        let m: Vec<f64> = orb
            .entries
            .iter()
            .take(4)
            .map(|e| e.log_modulus.to_f64().exp())
            .collect();
        assert!((m[1] - TAU).abs() < 1e-12);
        assert!((m[2] - 1.0).abs() < 1e-12);
        assert!((m[3] - std::f64::consts::E).abs() < 1e-12);
        assert_eq!(orb.escape_class, EscapeClass::Escaping);
    }

    #[test]
    fn origin_is_fixed() {
        let p = half();
        let orb = orbit(&p, Complex64::new(0.0, 0.0), &EscapeParams::default());
        assert_eq!(orb.escape_class, EscapeClass::BoundedAtHorizon);
        assert!(orb
            .entries
            .iter()
            .all(|e| e.log_modulus == WideReal::NEG_INFINITY));
    }

    #[test]
    fn in_ar_examples() {
        let p = half();
        let params = EscapeParams::default();
        assert_eq!(
            in_ar(&p, Complex64::new(2.0, 0.0), 2.0, &params).unwrap(),
            ArVerdict::In
        );
        assert_eq!(
            in_ar(&p, Complex64::new(2.0, 0.0), 2.1, &params).unwrap(),
            ArVerdict::Out { n: 0 }
        );
        assert!(matches!(
            in_ar(&p, Complex64::new(2.0, 0.0), 0.5, &params),
            Err(Error::Contract(_))
        ));
        let e = MaxModProfile::new(FunctionSpec::pure_exp()).unwrap();
        let z = Complex64::new(TAU.ln(), PI / 2.0);
        assert_eq!(in_ar(&e, z, 1.0, &params).unwrap(), ArVerdict::Out { n: 2 });
    }

    #[test]
    fn ra_sequence_examples() {
        let p = half();
        let params = EscapeParams::default();
        let orb = orbit(&p, Complex64::new(2.0, 0.0), &params);
        let seq = ra_sequence(&p, &orb, 30);
        assert!(seq.truncation.is_none());
        for e in &seq.entries {
            assert!((e.radius() - 2.0).abs() < 1e-9);
        }
        let e = MaxModProfile::new(FunctionSpec::pure_exp()).unwrap();
        let orb = orbit(&e, Complex64::new(TAU.ln(), PI / 2.0), &params);
        let seq = ra_sequence(&e, &orb, 30);
        assert_eq!(seq.entries.len(), 2);
        assert!(seq
            .truncation
            .as_deref()
            .unwrap()
            .contains("inverse undefined"));
    }

    #[test]
    fn compute_ra_examples() {
        let p = half();
        let params = EscapeParams::default();
        let rf = p.compute_rf(params.horizon, params.threshold).unwrap();
        let r = compute_ra(&p, Complex64::new(2.0, 0.0), &params, rf).unwrap();
        assert_eq!(r.status, RaStatus::Value);
        assert!((r.value - 2.0).abs() < 1e-9);
        let r = compute_ra(&p, Complex64::new(0.3, 0.0), &params, rf).unwrap();
        assert_eq!(r.status, RaStatus::NotEscaping);
        assert!((r.value - LN_2).abs() < 1e-8);
        let e = MaxModProfile::new(FunctionSpec::pure_exp()).unwrap();
        assert!(matches!(
            compute_ra(&e, Complex64::new(1.0, 0.0), &params, 0.0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn first_sequence_step_never_increases() {
        // |f(z)| <= M(|z|) forces entry 1 <= entry 0
        let p = half();
        let params = EscapeParams::default();
        for k in 0..200 {
            let z = Complex64::from_polar(0.5 + 0.02 * k as f64, 0.1 * k as f64);
            let orb = orbit(&p, z, &params);
            let seq = ra_sequence(&p, &orb, 1);
            let a = seq.entries[0].log_radius.to_f64();
            let b = seq.entries[1].log_radius.to_f64();
            assert!(b <= a + 1e-12, "z={z}");
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        #[test]
        fn sequence_is_non_increasing_and_conjugate(r in 0.8f64..2.8, theta in -PI..PI) {
            let p = half();
            let params = EscapeParams::default();
            let rf = p.compute_rf(params.horizon, params.threshold).unwrap();
            let z = Complex64::from_polar(r, theta);
            let orb = orbit(&p, z, &params);
            let seq = ra_sequence(&p, &orb, params.nmax);
            for w in seq.entries.windows(2) {
                let (a, b) = (w[0].log_radius.to_f64(), w[1].log_radius.to_f64());
                let slack = if a.is_finite() { 1e-9 * a.abs().max(1.0) } else { 0.0 };
                proptest::prop_assert!(b <= a + slack, "z={} {} > {}", z, b, a);
            }
            let here = compute_ra(&p, z, &params, rf).unwrap();
            if here.status == RaStatus::Value && here.value > rf {
                let fz = p.function().eval(z).unwrap();
                let there = compute_ra(&p, fz, &params, rf).unwrap();
                if there.status == RaStatus::Value {
                    let lhs = p.phi(WideReal::real(here.value.ln())).to_f64();
                    let rhs = there.value.ln();
                    proptest::prop_assert!((lhs - rhs).abs() <= 1e-6 * rhs.abs().max(1.0), "z={}", z);
                }
            }
        }
    }
}
