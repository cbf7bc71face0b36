//! Extended-magnitude scalars.
//!
//! `ExtReal` is the canonical level-index encoding `exp^level(mantissa)` with
//! `mantissa ∈ [0, 1)`. It is used for storage, comparison and text output.
//!
//! `WideReal` is the working form used by the engines: a signed float while the
//! value fits (`|x| <= 1e300`), and `exp^exps(top)` with `top` kept in float
//! range above that. Keeping `top` large instead of reducing it to `[0, 1)`
//! avoids the precision loss of repeated `ln`/`exp` round trips.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest magnitude carried as a plain float by [`WideReal`].
pub const HUGE: f64 = 1e300;
/// `ln(HUGE)`.
pub const LN_HUGE: f64 = 690.775_527_898_213_7;

/// Level-index value `exp^level(mantissa)`, `mantissa ∈ [0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtReal {
    level: u32,
    mantissa: f64,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal {
        level: 0,
        mantissa: 0.0,
    };
    pub const ONE: ExtReal = ExtReal {
        level: 1,
        mantissa: 0.0,
    };

    /// Builds a value from its parts; the mantissa must lie in `[0, 1)`.
    pub fn new(level: u32, mantissa: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&mantissa) {
            return Err(Error::Domain(format!("mantissa {mantissa} outside [0, 1)")));
        }
        Ok(Self { level, mantissa })
    }

    pub fn from_real(x: f64) -> Result<Self> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::Domain(format!(
                "ExtReal needs a finite nonnegative value, got {x}"
            )));
        }
        let mut level = 0;
        let mut m = x;
        while m >= 1.0 {
            m = m.ln();
            level += 1;
        }
        // ln can land a hair below zero for inputs within an ulp of 1.
        Ok(Self {
            level,
            mantissa: m.max(0.0),
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn mantissa(&self) -> f64 {
        self.mantissa
    }

    /// Value as a float; `+inf` once it exceeds `f64::MAX`.
    pub fn to_f64(&self) -> f64 {
        let mut v = self.mantissa;
        for _ in 0..self.level {
            v = v.exp();
            if v.is_infinite() {
                return v;
            }
        }
        v
    }

    /// `exp(self)`. Exact: only the level moves.
    pub fn exp_ext(&self) -> Self {
        Self {
            level: self.level + 1,
            mantissa: self.mantissa,
        }
    }

    /// `ln(self)` for values `>= 1`.
    ///
    /// Values in `(0, 1)` have a negative logarithm which is not representable
    /// here; use [`ExtReal::ln_signed`] for those.
    pub fn log_ext(&self) -> Result<Self> {
        if self.level == 0 {
            if self.mantissa == 0.0 {
                return Err(Error::Domain("log of zero".into()));
            }
            return Err(Error::Domain(format!(
                "log of {} < 1 is negative; use ln_signed",
                self.mantissa
            )));
        }
        Ok(Self {
            level: self.level - 1,
            mantissa: self.mantissa,
        })
    }

    /// Signed-real logarithm, the fallback for values below one.
    pub fn ln_signed(&self) -> Result<f64> {
        match self.level {
            0 if self.mantissa == 0.0 => Err(Error::Domain("log of zero".into())),
            0 => Ok(self.mantissa.ln()),
            _ => Ok(self.log_ext()?.to_f64()),
        }
    }

    /// `self^c` for `c > 0` (or `c <= 0` with a positive base).
    pub fn pow_ext(&self, c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::Domain(format!("exponent {c} not finite")));
        }
        if self.mantissa == 0.0 && self.level == 0 {
            if c > 0.0 {
                return Ok(Self::ZERO);
            }
            return Err(Error::Domain("0^c with c <= 0".into()));
        }
        if c == 0.0 {
            return Ok(Self::ONE);
        }
        let log = WideReal::from_ext(*self).ln()?;
        let scaled = if c > 0.0 {
            log.scale(c)
        } else {
            log.neg_scale(-c)
        };
        scaled.exp().to_ext()
    }
}

impl Eq for ExtReal {}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.level
            .cmp(&other.level)
            .then_with(|| self.mantissa.total_cmp(&other.mantissa))
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ExtReal {
    /// `E(level,mantissa)` with 17 significant digits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E({},{:.16e})", self.level, self.mantissa)
    }
}

impl FromStr for ExtReal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix("E(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Parse(format!("expected E(level,mantissa), got {s}")))?;
        let (lvl, man) = inner
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("missing comma in {s}")))?;
        let level = lvl
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("level in {s}: {e}")))?;
        let mantissa = man
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("mantissa in {s}: {e}")))?;
        ExtReal::new(level, mantissa)
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Signed real below `HUGE`, exponential tower `exp^exps(top)` above.
///
/// Canonical: `exps == 0` means `top ∈ [-inf, HUGE]`; `exps >= 1` means
/// `top ∈ (LN_HUGE, HUGE]`. `-inf` at level zero stands for the log of zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WideReal {
    exps: u32,
    top: f64,
}

impl WideReal {
    pub const NEG_INFINITY: WideReal = WideReal {
        exps: 0,
        top: f64::NEG_INFINITY,
    };

    /// Wraps a float. Panics on NaN or `+inf`, which never carry meaning here.
    pub fn real(x: f64) -> Self {
        assert!(
            !x.is_nan() && x != f64::INFINITY,
            "WideReal::real({x}) is not representable"
        );
        Self::normalize(0, x)
    }

    fn normalize(mut exps: u32, mut top: f64) -> Self {
        while top > HUGE {
            top = top.ln();
            exps += 1;
        }
        while exps > 0 && top <= LN_HUGE {
            top = top.exp();
            exps -= 1;
        }
        Self { exps, top }
    }

    /// Tower `exp^exps(top)` with a float `top`; renormalized.
    pub fn tower(exps: u32, top: f64) -> Self {
        assert!(!top.is_nan() && top != f64::INFINITY);
        if exps > 0 && top == f64::NEG_INFINITY {
            // exp(-inf) = 0
            return Self::normalize(exps - 1, 0.0);
        }
        Self::normalize(exps, top)
    }

    pub fn exps(&self) -> u32 {
        self.exps
    }

    pub fn top(&self) -> f64 {
        self.top
    }

    pub fn is_real(&self) -> bool {
        self.exps == 0
    }

    /// Float value, `+inf` beyond `HUGE`.
    pub fn to_f64(&self) -> f64 {
        if self.exps == 0 {
            self.top
        } else {
            f64::INFINITY
        }
    }

    pub fn from_ext(e: ExtReal) -> Self {
        let mut lvl = e.level;
        let mut v = e.mantissa;
        while lvl > 0 && v <= LN_HUGE {
            v = v.exp();
            lvl -= 1;
        }
        Self::normalize(lvl, v)
    }

    pub fn to_ext(&self) -> Result<ExtReal> {
        if self.top < 0.0 {
            return Err(Error::Domain(format!(
                "negative value {} has no ExtReal form",
                self.top
            )));
        }
        let base = ExtReal::from_real(self.top)?;
        Ok(ExtReal {
            level: base.level + self.exps,
            mantissa: base.mantissa,
        })
    }

    pub fn exp(&self) -> Self {
        if self.exps == 0 {
            if self.top <= LN_HUGE {
                Self {
                    exps: 0,
                    top: self.top.exp(),
                }
            } else {
                Self {
                    exps: 1,
                    top: self.top,
                }
            }
        } else {
            Self {
                exps: self.exps + 1,
                top: self.top,
            }
        }
    }

    /// Natural log; `-inf` for zero, domain error for negatives.
    pub fn ln(&self) -> Result<Self> {
        if self.exps > 0 {
            return Ok(Self::normalize(self.exps - 1, self.top));
        }
        if self.top > 0.0 {
            Ok(Self {
                exps: 0,
                top: self.top.ln(),
            })
        } else if self.top == 0.0 {
            Ok(Self::NEG_INFINITY)
        } else {
            Err(Error::Domain(format!("log of negative value {}", self.top)))
        }
    }

    /// `self + c` for a float `c`. Above `HUGE` the shift is below one ulp of
    /// the value and is dropped.
    pub fn add(&self, c: f64) -> Self {
        if self.exps == 0 {
            Self::real_saturating(self.top + c)
        } else {
            *self
        }
    }

    /// `c · self` for `c > 0`.
    pub fn scale(&self, c: f64) -> Self {
        debug_assert!(c > 0.0);
        match self.exps {
            0 => {
                let p = self.top * c;
                if p.is_infinite() && self.top.is_finite() {
                    // both factors positive and large
                    Self::normalize(1, self.top.ln() + c.ln())
                } else {
                    Self::real_saturating(p)
                }
            }
            1 => Self::normalize(1, self.top + c.ln()),
            _ => *self,
        }
    }

    /// `-c · self` for `c > 0`, valid only when the product stays a float.
    fn neg_scale(&self, c: f64) -> Self {
        match self.exps {
            0 => Self::real_saturating(-self.top * c),
            // magnitudes beyond HUGE have no negative representation
            _ => Self::NEG_INFINITY,
        }
    }

    fn real_saturating(x: f64) -> Self {
        if x == f64::INFINITY {
            Self::normalize(1, f64::MAX.ln())
        } else {
            Self::normalize(0, x)
        }
    }

    /// `self >= other` up to a relative slack `rel` on the leading float.
    pub fn approx_ge(&self, other: &Self, rel: f64) -> bool {
        if self.exps != other.exps {
            return self.exps > other.exps;
        }
        if self.top >= other.top {
            return true;
        }
        let scale = self.top.abs().max(other.top.abs()).max(1.0);
        other.top - self.top <= rel * scale
    }

    /// `self / other` when it is representable, or saturates to `0`/`inf`.
    /// `None` when `other` is `-inf` or zero, or either side is `-inf`.
    pub fn ratio(&self, other: &Self) -> Option<f64> {
        let (a, b) = (self, other);
        if a.top == f64::NEG_INFINITY || b.top == f64::NEG_INFINITY || (b.exps == 0 && b.top == 0.0)
        {
            return None;
        }
        Some(match (a.exps, b.exps) {
            (0, 0) => a.top / b.top,
            (1, 1) => (a.top - b.top).exp(),
            (0, 1) => a.top.signum() * (a.top.abs().ln() - b.top).exp(),
            (1, 0) => b.top.signum() * (a.top - b.top.abs().ln()).exp(),
            _ if a == b => 1.0,
            _ if a > b => f64::INFINITY,
            _ => 0.0,
        })
    }

    /// Difference `self - other` when both are plain floats.
    pub fn diff(&self, other: &Self) -> Option<f64> {
        (self.exps == 0 && other.exps == 0).then_some(self.top - other.top)
    }
}

impl Eq for WideReal {}

impl Ord for WideReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.exps
            .cmp(&other.exps)
            .then_with(|| self.top.total_cmp(&other.top))
    }
}

impl PartialOrd for WideReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<f64> for WideReal {
    fn from(x: f64) -> Self {
        WideReal::real(x)
    }
}

impl fmt::Display for WideReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exps == 0 {
            if self.top == f64::NEG_INFINITY {
                write!(f, "-inf")
            } else {
                write!(f, "{:.16e}", self.top)
            }
        } else {
            match self.to_ext() {
                Ok(e) => write!(f, "{e}"),
                Err(_) => write!(f, "nan"),
            }
        }
    }
}

impl FromStr for WideReal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "-inf" {
            return Ok(Self::NEG_INFINITY);
        }
        if s.starts_with("E(") {
            return Ok(Self::from_ext(s.parse()?));
        }
        let x: f64 = s.parse().map_err(|e| Error::Parse(format!("{s}: {e}")))?;
        if x.is_nan() || x == f64::INFINITY {
            return Err(Error::Parse(format!("{s} is not representable")));
        }
        Ok(Self::real(x))
    }
}

impl Serialize for WideReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WideReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn from_real_examples() {
        assert_eq!(
            ExtReal::from_real(0.5).unwrap(),
            ExtReal::new(0, 0.5).unwrap()
        );
        assert_eq!(ExtReal::from_real(1.0).unwrap(), ExtReal::ONE);
        let two = ExtReal::from_real(2.0).unwrap();
        assert_eq!(two.level(), 1);
        assert!((two.mantissa() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((two.mantissa().exp() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn from_real_rejects_bad_input() {
        assert!(ExtReal::from_real(-1.0).is_err());
        assert!(ExtReal::from_real(f64::NAN).is_err());
        assert!(ExtReal::from_real(f64::INFINITY).is_err());
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn exp_log_examples() {
        assert_eq!(ExtReal::ZERO.exp_ext(), ExtReal::ONE);
        let a = ExtReal::new(1, 0.693147).unwrap();
        let direct = ExtReal::from_real(0.693147f64.exp().exp()).unwrap();
        let e = a.exp_ext();
        assert_eq!(e.level(), direct.level());
        assert!((e.mantissa() - direct.mantissa()).abs() < 1e-12);
        assert_eq!(ExtReal::ONE.log_ext().unwrap(), ExtReal::ZERO);
        assert_eq!(
            ExtReal::new(2, 0.0).unwrap().log_ext().unwrap(),
            ExtReal::ONE
        );
        assert!(ExtReal::ZERO.log_ext().is_err());
        assert!(ExtReal::ZERO.ln_signed().is_err());
        let half = ExtReal::from_real(0.5).unwrap();
        assert!(half.log_ext().is_err());
        assert!((half.ln_signed().unwrap() + std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn cmp_examples() {
        let a = ExtReal::new(1, 0.5).unwrap();
        assert_eq!(a.cmp(&a), Ordering::Equal);
        // e ≈ 2.718 against exp(0.9) ≈ 2.460
        let e = ExtReal::new(2, 0.0).unwrap();
        let b = ExtReal::new(1, 0.9).unwrap();
        assert!(e.to_f64() > b.to_f64());
        assert_eq!(e.cmp(&b), Ordering::Greater);
        let c = ExtReal::new(3, 0.0).unwrap();
        let d = ExtReal::new(2, 0.99).unwrap();
        assert!(c.to_f64() > d.to_f64());
        assert_eq!(c.cmp(&d), Ordering::Greater);
    }

    #[test]
    fn pow_examples() {
        let a = ExtReal::from_real(7.3).unwrap();
        let p = a.pow_ext(1.0).unwrap();
        assert!((p.to_f64() - 7.3).abs() < 1e-12);
        let eight = ExtReal::from_real(2.0).unwrap().pow_ext(3.0).unwrap();
        assert!((eight.to_f64() - 8.0).abs() < 1e-12);
        let x = ExtReal::from_real(3.5e40).unwrap().pow_ext(2.0).unwrap();
        assert!((x.to_f64() / (3.5e40f64 * 3.5e40) - 1.0).abs() < 1e-12);
        assert!(ExtReal::ZERO.pow_ext(-1.0).is_err());
        assert_eq!(ExtReal::ZERO.pow_ext(2.0).unwrap(), ExtReal::ZERO);
        // power of a tower far beyond f64
        let big = ExtReal::new(5, 0.3).unwrap();
        let sq = big.pow_ext(2.0).unwrap();
        assert!(sq > big);
        assert_eq!(sq.level(), 5);
    }

    #[test]
    fn text_round_trip() {
        let a = ExtReal::new(4, 0.123_456_789_012_345_67).unwrap();
        let s = a.to_string();
        assert!(s.starts_with("E(4,1.23456789012345"), "{s}");
        assert_eq!(s.parse::<ExtReal>().unwrap(), a);
        assert!("E(1,1.5)".parse::<ExtReal>().is_err());
        assert!("F(1,0.5)".parse::<ExtReal>().is_err());
    }

    #[test]
    fn wide_basics() {
        let w = WideReal::real(1e305);
        assert_eq!(w.exps(), 1);
        assert!((w.top() - 1e305f64.ln()).abs() < 1e-12);
        assert_eq!(w.ln().unwrap().to_f64(), w.top());
        let t = WideReal::real(1000.0).exp();
        assert_eq!(t.exps(), 1);
        assert_eq!(t.top(), 1000.0);
        assert_eq!(t.ln().unwrap(), WideReal::real(1000.0));
        assert_eq!(WideReal::real(0.0).ln().unwrap(), WideReal::NEG_INFINITY);
        assert!(WideReal::real(-1.0).ln().is_err());
        assert_eq!(WideReal::NEG_INFINITY.exp(), WideReal::real(0.0));
        assert!(WideReal::real(5.0) < WideReal::real(1e301));
        let s = WideReal::real(800.0).exp().scale(2.0);
        assert!((s.top() - (800.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn wide_to_ext_matches_from_real() {
        for x in [0.0, 0.3, 1.0, 2.5, 1e10, 1e200] {
            let a = WideReal::real(x).to_ext().unwrap();
            let b = ExtReal::from_real(x).unwrap();
            assert_eq!(a, b);
        }
        let tower = WideReal::tower(3, 5000.0);
        let back = WideReal::from_ext(tower.to_ext().unwrap());
        assert_eq!(back.exps(), 3);
        assert!((back.top() / 5000.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_across_levels() {
        let r = |a: WideReal, b: WideReal| a.ratio(&b).unwrap();
        assert_eq!(r(WideReal::real(6.0), WideReal::real(3.0)), 2.0);
        let big = WideReal::real(800.0).exp();
        assert!((r(WideReal::real(801.0).exp(), big) - 1f64.exp()).abs() < 1e-12);
        assert!((r(WideReal::real(2.0), big) - (2f64.ln() - 800.0).exp()).abs() < 1e-300);
        assert_eq!(r(big, big), 1.0);
        let tower = WideReal::tower(3, 10.0);
        assert_eq!(r(tower, big), f64::INFINITY);
        assert_eq!(r(big, tower), 0.0);
        assert_eq!(r(tower, tower), 1.0);
        assert!(WideReal::real(1.0).ratio(&WideReal::real(0.0)).is_none());
        assert!(WideReal::NEG_INFINITY.ratio(&WideReal::real(1.0)).is_none());
    }

    proptest! {
        #[test]
        fn round_trip(x in 1e-6f64..1e15) {
            let v = ExtReal::from_real(x).unwrap().to_f64();
            prop_assert!((v / x - 1.0).abs() < 1e-10);
        }

        #[test]
        fn order_embedding(x in 0.0f64..1e12, y in 0.0f64..1e12) {
            prop_assume!(x < y);
            let a = ExtReal::from_real(x).unwrap();
            let b = ExtReal::from_real(y).unwrap();
            prop_assert_ne!(a.cmp(&b), Ordering::Greater);
            if y / x - 1.0 > 1e-12 {
                prop_assert_eq!(a.cmp(&b), Ordering::Less);
            }
        }

        #[test]
        fn exp_log_inverse(level in 0u32..=5, m in 0.0f64..1.0) {
            let a = ExtReal::new(level, m).unwrap();
            let back = a.exp_ext().log_ext().unwrap();
            prop_assert!((back.mantissa() - m).abs() <= 1e-10 * m.max(1e-300));
            prop_assert_eq!(back.level(), level);
            if level >= 1 {
                let b = a.log_ext().unwrap().exp_ext();
                prop_assert_eq!(b, a);
            }
        }

        #[test]
        fn exp_log_monotone(l1 in 1u32..=5, m1 in 0.0f64..1.0, l2 in 1u32..=5, m2 in 0.0f64..1.0) {
            let a = ExtReal::new(l1, m1).unwrap();
            let b = ExtReal::new(l2, m2).unwrap();
            prop_assert_eq!(a.cmp(&b), a.exp_ext().cmp(&b.exp_ext()));
            prop_assert_eq!(a.cmp(&b), a.log_ext().unwrap().cmp(&b.log_ext().unwrap()));
        }

        #[test]
        fn wide_display_round_trip(exps in 0u32..4, top in -1e3f64..1e3) {
            let w = WideReal::tower(exps, if exps > 0 { top.abs() + 700.0 } else { top });
            let back: WideReal = w.to_string().parse().unwrap();
            if w.is_real() {
                prop_assert_eq!(back, w);
            } else {
                prop_assert_eq!(back.exps(), w.exps());
                prop_assert!((back.top() / w.top() - 1.0).abs() < 1e-12);
            }
        }
    }
}
