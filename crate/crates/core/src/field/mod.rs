//! Grid fields: `A_R` membership, fundamental holes, `R_A`, `h` and `v_n`.

mod contour;
mod stats;

pub use contour::{extract_loop, level_contours, Contour};
pub use stats::{
    fatou_proxy, interior_cells, loop_level_stats, oscillation_field, percentile, sub_mean_test,
    usc_violations, LevelStats, SubMeanReport, UscReport,
};

use std::collections::VecDeque;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::entire::{ComplexPoint, LogPolar};
use crate::error::{Error, Result};
use crate::fastesc::{
    self, ArBounds, ArVerdict, EscapeClass, EscapeParams, OrbitIter, RaResult, RaStatus,
};
use crate::maxmod::MaxModProfile;
use crate::par::{self, Exec};

/// Axis-aligned sampling window; cell `(i, j)` is sampled at its center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub center: ComplexPoint,
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(
        center: ComplexPoint,
        width: f64,
        height: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self> {
        let g = Self {
            center,
            width,
            height,
            nx,
            ny,
        };
        g.validate()?;
        Ok(g)
    }

    /// Square window `[c - h, c + h]²` with `n × n` cells.
    pub fn square(center: ComplexPoint, half_width: f64, n: usize) -> Result<Self> {
        Self::new(center, 2.0 * half_width, 2.0 * half_width, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::Domain(format!(
                "grid needs nx, ny >= 2, got {}x{}",
                self.nx, self.ny
            )));
        }
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.width)
            || !ok(self.height)
            || !self.center.re.is_finite()
            || !self.center.im.is_finite()
        {
            return Err(Error::Domain(
                "grid width and height must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        self.width / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.height / self.ny as f64
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn x(&self, i: f64) -> f64 {
        self.center.re - self.width / 2.0 + (i + 0.5) * self.dx()
    }

    pub fn y(&self, j: f64) -> f64 {
        self.center.im - self.height / 2.0 + (j + 0.5) * self.dy()
    }

    pub fn cell_center(&self, i: usize, j: usize) -> ComplexPoint {
        Complex64::new(self.x(i as f64), self.y(j as f64))
    }

    /// Fractional node coordinates of `z` (cell centers are integers).
    pub fn fractional(&self, z: ComplexPoint) -> (f64, f64) {
        (
            (z.re - self.center.re + self.width / 2.0) / self.dx() - 0.5,
            (z.im - self.center.im + self.height / 2.0) / self.dy() - 0.5,
        )
    }

    /// Cell containing `z`, if inside the window.
    pub fn cell_of(&self, z: ComplexPoint) -> Option<(usize, usize)> {
        let (fx, fy) = self.fractional(z);
        let (i, j) = ((fx + 0.5).floor(), (fy + 0.5).floor());
        (i >= 0.0 && j >= 0.0 && i < self.nx as f64 && j < self.ny as f64)
            .then_some((i as usize, j as usize))
    }

    pub fn points(&self) -> Vec<ComplexPoint> {
        (0..self.len())
            .map(|k| {
                let (i, j) = self.coords(k);
                self.cell_center(i, j)
            })
            .collect()
    }

    fn on_edge(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    fn neighbors4(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (i, j) = (i as isize, j as isize);
        [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
            .into_iter()
            .filter(|&(a, b)| a >= 0 && b >= 0 && (a as usize) < self.nx && (b as usize) < self.ny)
            .map(|(a, b)| (a as usize, b as usize))
    }
}

/// Sampled real function; `None` marks an undefined cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<Option<f64>>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<Option<f64>>) -> Self {
        assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn from_fn(
        grid: GridSpec,
        exec: Exec,
        f: impl Fn(ComplexPoint) -> Option<f64> + Sync + Send,
    ) -> Self {
        let values = par::map_range(exec, grid.len(), |k| {
            let (i, j) = grid.coords(k);
            f(grid.cell_center(i, j))
        });
        Self::new(grid, values)
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[self.grid.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> Option<f64>) -> Self {
        Self::new(
            self.grid,
            self.values.iter().map(|v| v.and_then(&f)).collect(),
        )
    }

    pub fn missing(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }

    pub fn min(&self) -> Option<f64> {
        self.defined().reduce(f64::min)
    }

    pub fn max(&self) -> Option<f64> {
        self.defined().reduce(f64::max)
    }

    /// Bilinear interpolation between cell centers.
    pub fn bilinear(&self, z: ComplexPoint) -> Option<f64> {
        let (fx, fy) = self.grid.fractional(z);
        let (mx, my) = ((self.grid.nx - 1) as f64, (self.grid.ny - 1) as f64);
        if !(0.0..=mx).contains(&fx) || !(0.0..=my).contains(&fy) {
            return None;
        }
        let (i, j) = (
            (fx.floor() as usize).min(self.grid.nx - 2),
            (fy.floor() as usize).min(self.grid.ny - 2),
        );
        let (u, v) = (fx - i as f64, fy - j as f64);
        let a = self.get(i, j)?;
        let b = self.get(i + 1, j)?;
        let c = self.get(i, j + 1)?;
        let d = self.get(i + 1, j + 1)?;
        Some((1.0 - v) * ((1.0 - u) * a + u * b) + v * ((1.0 - u) * c + u * d))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BitField {
    pub grid: GridSpec,
    pub values: Vec<bool>,
}

impl BitField {
    pub fn new(grid: GridSpec, values: Vec<bool>) -> Self {
        assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.values[self.grid.index(i, j)]
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&b| b).count()
    }

    /// Cell-wise `self ⊆ other`.
    pub fn subset_of(&self, other: &BitField) -> bool {
        self.values
            .iter()
            .zip(&other.values)
            .all(|(&a, &b)| !a || b)
    }
}

/// `A_R` membership of every cell center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub r: f64,
    pub members: BitField,
    /// Cells that passed every test but did not reach the escape threshold.
    pub horizon_limited: usize,
}

pub fn classify_grid(
    profile: &MaxModProfile,
    grid: &GridSpec,
    r: f64,
    params: &EscapeParams,
    exec: Exec,
) -> Result<Classification> {
    grid.validate()?;
    let bounds = ArBounds::new(profile, r, params)?;
    let verdicts = par::map_range(exec, grid.len(), |k| {
        let (i, j) = grid.coords(k);
        bounds.verdict(profile, grid.cell_center(i, j))
    });
    let horizon_limited = verdicts
        .iter()
        .filter(|v| **v == ArVerdict::HorizonLimited)
        .count();
    Ok(Classification {
        r,
        members: BitField::new(
            *grid,
            verdicts.iter().map(|v| *v == ArVerdict::In).collect(),
        ),
        horizon_limited,
    })
}

/// 4-connected cell set of a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub grid: GridSpec,
    pub mask: Vec<bool>,
    pub contains_origin: bool,
}

impl Region {
    pub fn as_bits(&self) -> BitField {
        BitField::new(self.grid, self.mask.clone())
    }

    pub fn cells(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn touches_edge(&self) -> bool {
        (0..self.grid.len()).any(|k| {
            let (i, j) = self.grid.coords(k);
            self.mask[k] && self.grid.on_edge(i, j)
        })
    }
}

/// Origin component of the complement of `members`.
pub fn fundamental_hole(members: &BitField) -> Result<Region> {
    let g = members.grid;
    let (i0, j0) = g
        .cell_of(Complex64::new(0.0, 0.0))
        .ok_or_else(|| Error::Window("origin is outside the grid".into()))?;
    if members.get(i0, j0) {
        return Err(Error::OriginEscaping);
    }
    let mut mask = vec![false; g.len()];
    let mut queue = VecDeque::from([(i0, j0)]);
    mask[g.index(i0, j0)] = true;
    while let Some((i, j)) = queue.pop_front() {
        for (a, b) in g.neighbors4(i, j) {
            let k = g.index(a, b);
            if !mask[k] && !members.values[k] {
                mask[k] = true;
                queue.push_back((a, b));
            }
        }
    }
    Ok(Region {
        grid: g,
        mask,
        contains_origin: true,
    })
}

/// Per-cell `compute_RA` results.
pub fn ra_cells(
    profile: &MaxModProfile,
    grid: &GridSpec,
    params: &EscapeParams,
    rf: f64,
    exec: Exec,
) -> Result<Vec<RaResult>> {
    grid.validate()?;
    fastesc::compute_ra(profile, grid.center, params, rf)?;
    Ok(par::map_range(exec, grid.len(), |k| {
        let (i, j) = grid.coords(k);
        fastesc::compute_ra(profile, grid.cell_center(i, j), params, rf)
            .expect("normalization checked above")
    }))
}

/// Extended `R_A` field: `R_f` on non-escaping cells, missing where undefined.
pub fn ra_field(
    profile: &MaxModProfile,
    grid: &GridSpec,
    params: &EscapeParams,
    rf: f64,
    exec: Exec,
) -> Result<ScalarField> {
    Ok(ra_field_from_cells(
        grid,
        &ra_cells(profile, grid, params, rf, exec)?,
    ))
}

pub fn ra_field_from_cells(grid: &GridSpec, cells: &[RaResult]) -> ScalarField {
    ScalarField::new(
        *grid,
        cells
            .iter()
            .map(|r| (r.status != RaStatus::Undefined).then_some(r.value))
            .collect(),
    )
}

/// Cells whose `R_A` status is `value`.
pub fn escaping_mask(grid: &GridSpec, cells: &[RaResult]) -> BitField {
    BitField::new(
        *grid,
        cells.iter().map(|r| r.status == RaStatus::Value).collect(),
    )
}

/// `log|f^m(z)| / log|f^m(z0)|` at the largest `m <= n` where both orbits are
/// in the same approximation regime.
pub fn h_field(
    profile: &MaxModProfile,
    grid: &GridSpec,
    z0: ComplexPoint,
    n: usize,
    params: &EscapeParams,
    exec: Exec,
) -> Result<ScalarField> {
    grid.validate()?;
    let base = fastesc::orbit(profile, z0, params);
    if base.escape_class != EscapeClass::Escaping {
        return Err(Error::Contract(format!(
            "base point {z0} is not escaping at horizon {}",
            params.horizon
        )));
    }
    let n = n.min(params.horizon);
    let base = &base.entries[..=n];
    Ok(ScalarField::from_fn(*grid, exec, |z| {
        h_at(profile, z, base)
    }))
}

fn h_at(profile: &MaxModProfile, z: ComplexPoint, base: &[LogPolar]) -> Option<f64> {
    let orbit: Vec<LogPolar> = OrbitIter::new(profile, z).take(base.len()).collect();
    (1..base.len()).rev().find_map(|m| {
        let (a, b) = (orbit[m], base[m]);
        if a.approximate != b.approximate {
            return None;
        }
        a.log_modulus
            .ratio(&b.log_modulus)
            .filter(|r| r.is_finite())
    })
}

/// `v_n = -log M^{-n}(|f^n|)`, missing where undefined.
pub fn v_n_field(profile: &MaxModProfile, grid: &GridSpec, n: usize, exec: Exec) -> ScalarField {
    let params = EscapeParams {
        horizon: n,
        ..EscapeParams::default()
    };
    ScalarField::from_fn(*grid, exec, |z| {
        fastesc::v_n(profile, &fastesc::orbit(profile, z, &params), n)
    })
}

/// Cells where the disc of `radius_cells` around the center contains no zero
/// of `f^n`, judged by the winding number of `f^n` on its boundary circle.
pub fn zero_free_mask(
    profile: &MaxModProfile,
    grid: &GridSpec,
    n: usize,
    radius_cells: f64,
    exec: Exec,
) -> BitField {
    const SAMPLES: usize = 64;
    let r = radius_cells * grid.dx().max(grid.dy());
    let values = par::map_range(exec, grid.len(), |k| {
        let (i, j) = grid.coords(k);
        let c = grid.cell_center(i, j);
        let args: Option<Vec<f64>> = (0..SAMPLES)
            .map(|s| {
                let z =
                    c + Complex64::from_polar(r, std::f64::consts::TAU * s as f64 / SAMPLES as f64);
                let w = OrbitIter::new(profile, z)
                    .nth(n)
                    .expect("infinite iterator");
                (!w.approximate && w.log_modulus.is_real() && w.log_modulus.top().is_finite())
                    .then_some(w.argument)
            })
            .collect();
        let Some(args) = args else {
            // only deep escaping orbits lose their argument
            return true;
        };
        let mut turn = 0.0;
        for s in 0..SAMPLES {
            turn += crate::entire::normalize_angle(args[(s + 1) % SAMPLES] - args[s]);
        }
        (turn / std::f64::consts::TAU).round() == 0.0
    });
    BitField::new(*grid, values)
}
