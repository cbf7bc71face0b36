//! Marching squares over cell-center nodes.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Region, ScalarField};
use crate::entire::ComplexPoint;
use crate::error::{Error, Result};

/// Closed polyline with `vertices[0] == vertices[last]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub vertices: Vec<ComplexPoint>,
    pub label: f64,
}

impl Contour {
    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Signed shoelace area; positive for counter-clockwise loops.
    pub fn area(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| w[0].re * w[1].im - w[1].re * w[0].im)
            .sum::<f64>()
            / 2.0
    }

    /// Even-odd point containment.
    pub fn contains(&self, z: ComplexPoint) -> bool {
        let mut inside = false;
        for w in self.vertices.windows(2) {
            let (a, b) = (w[0], w[1]);
            if (a.im > z.im) != (b.im > z.im) {
                let x = a.re + (z.im - a.im) * (b.re - a.re) / (b.im - a.im);
                if x > z.re {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Every vertex of `other` lies strictly inside `self`.
    pub fn surrounds(&self, other: &Contour) -> bool {
        other.vertices.iter().all(|&z| self.contains(z))
    }
}

/// Grid edge between node `(i, j)` and its right (`horizontal`) or upper neighbor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct EdgeKey {
    i: usize,
    j: usize,
    horizontal: bool,
}

/// Closed level curves `{value = iso}` with the region `{value < iso}` on their
/// left. Chains that leave the grid are dropped. Missing nodes count as above
/// `iso`.
pub fn level_contours(field: &ScalarField, iso: f64) -> Vec<Contour> {
    let g = field.grid;
    let value = |i: usize, j: usize| field.get(i, j).unwrap_or(f64::INFINITY);
    let node = |i: usize, j: usize| Complex64::new(g.x(i as f64), g.y(j as f64));
    let crossing = |e: EdgeKey| {
        let (i2, j2) = if e.horizontal {
            (e.i + 1, e.j)
        } else {
            (e.i, e.j + 1)
        };
        let (va, vb) = (value(e.i, e.j), value(i2, j2));
        let t = if va.is_finite() && vb.is_finite() {
            (iso - va) / (vb - va)
        } else {
            0.5
        };
        node(e.i, e.j) + (node(i2, j2) - node(e.i, e.j)) * t
    };

    let mut next: BTreeMap<EdgeKey, EdgeKey> = BTreeMap::new();
    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            // counter-clockwise corners and the edges that follow them
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let edges = [
                EdgeKey {
                    i,
                    j,
                    horizontal: true,
                },
                EdgeKey {
                    i: i + 1,
                    j,
                    horizontal: false,
                },
                EdgeKey {
                    i,
                    j: j + 1,
                    horizontal: true,
                },
                EdgeKey {
                    i,
                    j,
                    horizontal: false,
                },
            ];
            let vals = corners.map(|(a, b)| value(a, b));
            let inside = vals.map(|v| v < iso);
            let exits: Vec<usize> = (0..4)
                .filter(|&k| inside[k] && !inside[(k + 1) % 4])
                .collect();
            let entries: Vec<usize> = (0..4)
                .filter(|&k| !inside[k] && inside[(k + 1) % 4])
                .collect();
            match exits.len() {
                0 => {}
                1 => {
                    next.insert(edges[exits[0]], edges[entries[0]]);
                }
                _ => {
                    let center = vals.iter().sum::<f64>() / 4.0;
                    let joined = center < iso;
                    for &k in &exits {
                        let partner = if joined { (k + 1) % 4 } else { (k + 3) % 4 };
                        next.insert(edges[k], edges[partner]);
                    }
                }
            }
        }
    }

    let mut contours = Vec::new();
    while let Some((&start, _)) = next.iter().next() {
        let mut keys = vec![start];
        let mut cur = start;
        let mut closed = false;
        while let Some(n) = next.remove(&cur) {
            if n == start {
                closed = true;
                break;
            }
            keys.push(n);
            cur = n;
        }
        if closed && keys.len() >= 3 {
            let mut vertices: Vec<ComplexPoint> = keys.iter().map(|&k| crossing(k)).collect();
            vertices.push(vertices[0]);
            contours.push(Contour {
                vertices,
                label: iso,
            });
        }
    }
    contours
}

/// Boundary loop of a region compactly contained in its grid.
pub fn extract_loop(region: &Region, label: f64) -> Result<Contour> {
    if region.touches_edge() {
        return Err(Error::Window(
            "hole not compactly contained; at this R the grid window is too small".into(),
        ));
    }
    let mask = ScalarField::new(
        region.grid,
        region
            .mask
            .iter()
            .map(|&m| Some(if m { 0.0 } else { 1.0 }))
            .collect(),
    );
    let mut loops = level_contours(&mask, 0.5);
    loops.sort_by(|a, b| b.area().total_cmp(&a.area()));
    let mut best = loops
        .into_iter()
        .next()
        .filter(|c| c.area() > 0.0)
        .ok_or_else(|| Error::Window("region has no boundary loop".into()))?;
    best.label = label;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;
    use crate::par::Exec;
    use proptest::prelude::*;

    fn region_from(g: GridSpec, f: impl Fn(usize, usize) -> bool) -> Region {
        Region {
            grid: g,
            mask: (0..g.len())
                .map(|k| {
                    let (i, j) = g.coords(k);
                    f(i, j)
                })
                .collect(),
            contains_origin: true,
        }
    }

    #[test]
    fn square_region_perimeter() {
        let g = GridSpec::square(Complex64::new(0.0, 0.0), 10.0, 20).unwrap();
        let k = 8;
        let r = region_from(g, |i, j| (6..6 + k).contains(&i) && (6..6 + k).contains(&j));
        let c = extract_loop(&r, 1.0).unwrap();
        assert_eq!(c.vertices.first(), c.vertices.last());
        let perimeter = c.length() / g.dx();
        assert!((perimeter - 4.0 * k as f64).abs() < 1.5, "{perimeter}");
        assert!(c.area() > 0.0);
    }

    #[test]
    fn disc_region_length() {
        let g = GridSpec::square(Complex64::new(0.0, 0.0), 1.0, 101).unwrap();
        let rho = 30.0;
        let r = region_from(g, |i, j| {
            ((i as f64 - 50.0).powi(2) + (j as f64 - 50.0).powi(2)).sqrt() <= rho
        });
        let c = extract_loop(&r, 1.0).unwrap();
        let len = c.length() / g.dx();
        let expect = std::f64::consts::TAU * rho;
        assert!((len - expect).abs() < 0.1 * expect, "{len} vs {expect}");
        assert!(c.contains(Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn edge_touching_region_is_a_window_error() {
        let g = GridSpec::square(Complex64::new(0.0, 0.0), 1.0, 8).unwrap();
        let r = region_from(g, |i, _| i < 4);
        assert!(matches!(extract_loop(&r, 1.0), Err(Error::Window(_))));
    }

    #[test]
    fn diagonal_cells_split_at_the_saddle() {
        let g = GridSpec::square(Complex64::new(0.0, 0.0), 1.0, 6).unwrap();
        let r = region_from(g, |i, j| (i, j) == (2, 2) || (i, j) == (3, 3));
        let mask = ScalarField::new(
            g,
            r.mask
                .iter()
                .map(|&m| Some(if m { 0.0 } else { 1.0 }))
                .collect(),
        );
        assert_eq!(level_contours(&mask, 0.5).len(), 2);
    }

    #[test]
    fn level_set_of_modulus_is_a_circle() {
        let g = GridSpec::square(Complex64::new(0.0, 0.0), 2.0, 200).unwrap();
        let f = ScalarField::from_fn(g, Exec::Sequential, |z| Some(z.norm()));
        let cs = level_contours(&f, 1.3);
        assert_eq!(cs.len(), 1);
        for z in &cs[0].vertices {
            assert!((z.norm() - 1.3).abs() < g.dx() * g.dx());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn random_blobs_give_closed_oriented_loops(seed in any::<u64>()) {
            let g = GridSpec::square(Complex64::new(0.0, 0.0), 1.0, 12).unwrap();
            let r = region_from(g, |i, j| {
                let h = seed.rotate_left((i * 12 + j) as u32 % 64) ^ (i * 31 + j * 17) as u64;
                i > 0 && j > 0 && i < 11 && j < 11 && (h & 3 != 0 || (i, j) == (6, 6))
            });
            let mask = ScalarField::new(g, r.mask.iter().map(|&m| Some(if m { 0.0 } else { 1.0 })).collect());
            for c in level_contours(&mask, 0.5) {
                prop_assert_eq!(c.vertices.first(), c.vertices.last());
                prop_assert!(c.vertices.len() >= 4);
                prop_assert!(c.area() != 0.0);
            }
        }
    }
}
