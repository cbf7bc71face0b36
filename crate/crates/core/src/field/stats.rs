//! Oscillation, the Fatou proxy and discrete potential-theory tests.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{BitField, Contour, ScalarField};
use crate::error::{Error, Result};
use crate::par::{self, Exec};

/// Per cell, `max - min` of `ln` values over the defined 3×3 window.
pub fn oscillation_field(s: &ScalarField) -> ScalarField {
    let g = s.grid;
    let values = (0..g.len())
        .map(|k| {
            let (i, j) = g.coords(k);
            s.values[k]?;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for b in j.saturating_sub(1)..=(j + 1).min(g.ny - 1) {
                for a in i.saturating_sub(1)..=(i + 1).min(g.nx - 1) {
                    if let Some(v) = s.get(a, b) {
                        let l = v.ln();
                        lo = lo.min(l);
                        hi = hi.max(l);
                    }
                }
            }
            Some(hi - lo)
        })
        .collect();
    ScalarField::new(g, values)
}

/// Nearest-rank percentile of the defined values, `q ∈ [0, 100]`.
pub fn percentile(s: &ScalarField, q: f64) -> Option<f64> {
    let mut v: Vec<f64> = s.defined().collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let rank = ((q / 100.0) * v.len() as f64).ceil() as usize;
    Some(v[rank.clamp(1, v.len()) - 1])
}

/// Cells in `within` whose oscillation is at most the `q`-th percentile of
/// the oscillation over `within`.
pub fn fatou_proxy(osc: &ScalarField, within: &BitField, q: f64) -> BitField {
    let restricted = ScalarField::new(
        osc.grid,
        osc.values
            .iter()
            .zip(&within.values)
            .map(|(v, &w)| v.filter(|_| w))
            .collect(),
    );
    let cut = percentile(&restricted, q).unwrap_or(f64::NEG_INFINITY);
    BitField::new(
        osc.grid,
        restricted
            .values
            .iter()
            .map(|v| v.is_some_and(|v| v <= cut))
            .collect(),
    )
}

/// Cells whose whole `(2ρ+1)²` window lies in `mask`.
pub fn interior_cells(mask: &BitField, rho: usize) -> BitField {
    let g = mask.grid;
    let values = (0..g.len())
        .map(|k| {
            let (i, j) = g.coords(k);
            if i < rho || j < rho || i + rho >= g.nx || j + rho >= g.ny {
                return false;
            }
            (j - rho..=j + rho).all(|b| (i - rho..=i + rho).all(|a| mask.get(a, b)))
        })
        .collect();
    BitField::new(g, values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubMeanReport {
    pub tested: usize,
    pub violations: usize,
    /// Largest `v(z) - mean` seen.
    pub worst_excess: f64,
}

impl SubMeanReport {
    pub fn violation_rate(&self) -> f64 {
        if self.tested == 0 {
            0.0
        } else {
            self.violations as f64 / self.tested as f64
        }
    }
}

/// Discrete sub-mean-value test `v(z) <= avg_{|w-z|=r} v(w) + slack` at the
/// centers of `cells`, with the circle average taken over `points` bilinear
/// samples at radius `radius_cells` cells.
pub fn sub_mean_test(
    v: &ScalarField,
    cells: &BitField,
    radius_cells: f64,
    points: usize,
    slack: f64,
    exec: Exec,
) -> SubMeanReport {
    let g = v.grid;
    let r = radius_cells * g.dx();
    let ry = radius_cells * g.dy();
    let outcomes = par::map_range(exec, g.len(), |k| {
        if !cells.values[k] {
            return None;
        }
        let (i, j) = g.coords(k);
        let c = g.cell_center(i, j);
        let center = v.values[k]?;
        let mut sum = 0.0;
        for s in 0..points {
            let t = std::f64::consts::TAU * s as f64 / points as f64;
            sum += v.bilinear(c + Complex64::new(r * t.cos(), ry * t.sin()))?;
        }
        Some(center - sum / points as f64)
    });
    let mut report = SubMeanReport {
        tested: 0,
        violations: 0,
        worst_excess: f64::NEG_INFINITY,
    };
    for excess in outcomes.into_iter().flatten() {
        report.tested += 1;
        if excess > slack {
            report.violations += 1;
        }
        report.worst_excess = report.worst_excess.max(excess);
    }
    report
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UscReport {
    pub tested: usize,
    pub violations: usize,
    pub allowance: f64,
}

/// Cells where `R_A(center) < max over the 3×3 window - allowance`, on the log scale.
pub fn usc_violations(s: &ScalarField, allowance: f64) -> UscReport {
    let g = s.grid;
    let mut report = UscReport {
        tested: 0,
        violations: 0,
        allowance,
    };
    for k in 0..g.len() {
        let Some(c) = s.values[k] else { continue };
        let (i, j) = g.coords(k);
        let mut hi = f64::NEG_INFINITY;
        for b in j.saturating_sub(1)..=(j + 1).min(g.ny - 1) {
            for a in i.saturating_sub(1)..=(i + 1).min(g.nx - 1) {
                if let Some(v) = s.get(a, b) {
                    hi = hi.max(v.ln());
                }
            }
        }
        report.tested += 1;
        if c.ln() < hi - allowance {
            report.violations += 1;
        }
    }
    report
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub mean: f64,
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
    pub samples: usize,
}

/// Field statistics along a contour, sampled bilinearly at its vertices.
pub fn loop_level_stats(c: &Contour, s: &ScalarField) -> Result<LevelStats> {
    let vals: Vec<f64> = c.vertices[..c.vertices.len().saturating_sub(1)]
        .iter()
        .map(|&z| {
            s.bilinear(z).ok_or_else(|| {
                Error::Window(format!("contour vertex {z} is outside the defined field"))
            })
        })
        .collect::<Result<_>>()?;
    if vals.is_empty() {
        return Err(Error::Window("contour has no vertices".into()));
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(LevelStats {
        mean,
        stddev: var.sqrt(),
        min: vals.iter().copied().fold(f64::INFINITY, f64::min),
        max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        samples: vals.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{level_contours, GridSpec};

    fn grid(n: usize) -> GridSpec {
        GridSpec::square(Complex64::new(0.0, 0.0), 1.0, n).unwrap()
    }

    #[test]
    fn oscillation_examples() {
        let g = grid(7);
        let flat = ScalarField::new(g, vec![Some(2.0); g.len()]);
        assert!(oscillation_field(&flat).defined().all(|v| v == 0.0));
        let mut spike = flat.clone();
        let d: f64 = 0.5;
        spike.values[g.index(3, 3)] = Some(2.0 * d.exp());
        let o = oscillation_field(&spike);
        for b in 2..=4 {
            for a in 2..=4 {
                assert!((o.get(a, b).unwrap() - d).abs() < 1e-12);
            }
        }
        assert_eq!(o.get(0, 0), Some(0.0));
    }

    #[test]
    fn percentile_nearest_rank() {
        let g = grid(2);
        let f = ScalarField::new(g, vec![Some(4.0), Some(1.0), None, Some(3.0)]);
        assert_eq!(percentile(&f, 50.0), Some(3.0));
        assert_eq!(percentile(&f, 100.0), Some(4.0));
        assert_eq!(percentile(&f, 0.0), Some(1.0));
    }

    #[test]
    fn harmonic_and_subharmonic_fields() {
        let g = grid(64);
        let all = BitField::new(g, vec![true; g.len()]);
        let cells = interior_cells(&all, 3);
        let harmonic =
            ScalarField::from_fn(g, Exec::Sequential, |z| Some(z.re * z.re - z.im * z.im));
        let r = sub_mean_test(&harmonic, &cells, 2.0, 16, 1e-9, Exec::Sequential);
        assert!(r.tested > 0);
        assert_eq!(r.violations, 0);
        let concave = ScalarField::from_fn(g, Exec::Sequential, |z| Some(-z.norm_sqr()));
        let r = sub_mean_test(&concave, &cells, 2.0, 16, 0.0, Exec::Sequential);
        assert_eq!(r.violations, r.tested);
    }

    #[test]
    fn level_stats_of_modulus() {
        let g = GridSpec::square(Complex64::new(0.0, 0.0), 2.0, 128).unwrap();
        let f = ScalarField::from_fn(g, Exec::Sequential, |z| Some(z.norm()));
        let c = &level_contours(&f, 1.0)[0];
        let s = loop_level_stats(c, &f).unwrap();
        assert!((s.mean - 1.0).abs() < g.dx());
        assert!(s.stddev <= g.dx());
        let flat = ScalarField::new(g, vec![Some(3.0); g.len()]);
        assert!(loop_level_stats(c, &flat).unwrap().stddev < 1e-12);
        let small = ScalarField::from_fn(grid(16), Exec::Sequential, |z| Some(z.norm()));
        let big = &level_contours(&f, 1.9)[0];
        assert!(loop_level_stats(big, &small).is_err());
    }

    #[test]
    fn usc_of_a_step() {
        let g = grid(8);
        let f = ScalarField::from_fn(g, Exec::Sequential, |z| {
            Some(if z.re > 0.0 { 2.0 } else { 1.0 })
        });
        let r = usc_violations(&f, 0.1);
        assert_eq!(r.violations, 8);
        assert_eq!(usc_violations(&f, 1.0).violations, 0);
    }
}
