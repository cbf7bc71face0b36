//! Finite Blaschke products fixing the origin, the contraction bound
//! `|B(z)| <= μ(|z|)` and non-autonomous compositions.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point of the open unit disc.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Complex64", into = "Complex64")]
pub struct DiscPoint(Complex64);

impl DiscPoint {
    pub fn new(z: Complex64) -> Result<Self> {
        if z.norm() < 1.0 {
            Ok(Self(z))
        } else {
            Err(Error::Domain(format!("{z} is not inside the unit disc")))
        }
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

impl TryFrom<Complex64> for DiscPoint {
    type Error = Error;

    fn try_from(z: Complex64) -> Result<Self> {
        Self::new(z)
    }
}

impl From<DiscPoint> for Complex64 {
    fn from(p: DiscPoint) -> Self {
        p.0
    }
}

/// `c · z^q · ∏ ((z - a) / (1 - ā z))^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlaschkeSpec {
    pub rotation: Complex64,
    pub power_at_zero: u32,
    pub zeros: Vec<(Complex64, u32)>,
}

impl BlaschkeSpec {
    pub fn new(
        rotation: Complex64,
        power_at_zero: u32,
        zeros: Vec<(Complex64, u32)>,
    ) -> Result<Self> {
        let b = Self {
            rotation,
            power_at_zero,
            zeros,
        };
        b.validate()?;
        Ok(b)
    }

    /// `z ↦ z^q`.
    pub fn power(q: u32) -> Self {
        Self {
            rotation: Complex64::new(1.0, 0.0),
            power_at_zero: q,
            zeros: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if (self.rotation.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "rotation {} is not unimodular",
                self.rotation
            )));
        }
        if self.power_at_zero == 0 {
            return Err(Error::Domain("power at zero must be at least 1".into()));
        }
        for (k, &(a, m)) in self.zeros.iter().enumerate() {
            let r = a.norm();
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::Domain(format!("zero {a} must satisfy 0 < |a| < 1")));
            }
            if m == 0 {
                return Err(Error::Domain(format!("zero {a} has multiplicity 0")));
            }
            if self.zeros[..k].iter().any(|&(b, _)| b == a) {
                return Err(Error::Domain(format!("zero {a} is listed twice")));
            }
        }
        Ok(())
    }

    pub fn eval(&self, z: DiscPoint) -> DiscPoint {
        let z = z.value();
        let mut w = self.rotation * z.powu(self.power_at_zero);
        for &(a, m) in &self.zeros {
            w *= ((z - a) / (1.0 - a.conj() * z)).powu(m);
        }
        DiscPoint(w)
    }

    /// `|B'(0)|`.
    pub fn derivative_at_zero(&self) -> f64 {
        if self.power_at_zero >= 2 {
            return 0.0;
        }
        self.zeros
            .iter()
            .map(|&(a, m)| a.norm().powi(m as i32))
            .product()
    }

    /// Random spec with up to `max_zeros` zeros.
    pub fn random<R: Rng>(rng: &mut R, max_zeros: usize) -> Self {
        let rotation = Complex64::from_polar(
            1.0,
            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        );
        let power_at_zero = if rng.gen_bool(0.7) {
            1
        } else {
            rng.gen_range(2..=3)
        };
        let count = rng.gen_range(0..=max_zeros);
        let zeros = (0..count)
            .map(|_| {
                let a = Complex64::from_polar(
                    rng.gen_range(0.01..0.99),
                    rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                );
                (a, rng.gen_range(1..=2))
            })
            .collect();
        Self {
            rotation,
            power_at_zero,
            zeros,
        }
    }
}

/// `μ(r) = r (r + λ) / (1 + λ r)`.
pub fn mu(r: f64, lambda: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!("μ needs 0 < r < 1, got {r}")));
    }
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::Domain(format!("μ needs 0 <= λ < 1, got {lambda}")));
    }
    Ok(r * (r + lambda) / (1.0 + lambda * r))
}

/// `μ^n(r0)` for `n = 0, 1, …` until the value drops below `eps` (inclusive),
/// or `max_steps` iterations.
pub fn mu_iterates(r0: f64, lambda: f64, eps: f64, max_steps: usize) -> Result<Vec<f64>> {
    let mut out = vec![r0];
    let mut r = r0;
    while r >= eps && out.len() <= max_steps {
        r = mu(r, lambda)?;
        out.push(r);
    }
    Ok(out)
}

/// Partial compositions `z, B_0(z), B_1(B_0(z)), …`.
pub fn compose_orbit(seq: &[BlaschkeSpec], z: DiscPoint, lambda: f64) -> Result<Vec<DiscPoint>> {
    for (k, b) in seq.iter().enumerate() {
        b.validate()?;
        let d = b.derivative_at_zero();
        if d > lambda {
            return Err(Error::Contract(format!(
                "spec {k} has |B'(0)| = {d} > λ = {lambda}"
            )));
        }
    }
    let mut out = Vec::with_capacity(seq.len() + 1);
    out.push(z);
    let mut w = z;
    for b in seq {
        w = b.eval(w);
        out.push(w);
    }
    Ok(out)
}

/// Hyperbolic distance for the density `2 / (1 - |z|²)`.
pub fn hyperbolic_distance_disc(w: DiscPoint, z: DiscPoint) -> f64 {
    let (w, z) = (w.value(), z.value());
    let t = ((w - z) / (1.0 - w.conj() * z)).norm();
    2.0 * t.min(1.0).atanh()
}

/// The Beardon–Carne majorant `|z| (|z| + |B'(0)|) / (1 + |B'(0)| |z|)`.
pub fn contraction_bound(b: &BlaschkeSpec, z: DiscPoint) -> f64 {
    let (r, d) = (z.norm(), b.derivative_at_zero());
    r * (r + d) / (1.0 + d * r)
}
