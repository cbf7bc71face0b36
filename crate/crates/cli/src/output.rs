//! Output files, written all-or-nothing.

use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use image::{ImageFormat, Rgb, RgbImage};
use num_complex::Complex64;
use serde::Serialize;
use spiderweb_core::field::{Contour, GridSpec, ScalarField};

/// Files staged in memory and committed together. Each file is written to a
/// temporary in the output directory and renamed into place.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_owned(),
            files: Vec::new(),
        }
    }

    pub fn bytes(&mut self, name: &str, data: Vec<u8>) {
        self.files.push((name.to_owned(), data));
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.bytes(name, s.into_bytes());
        Ok(())
    }

    pub fn csv<R: IntoIterator<Item = Vec<String>>>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: R,
    ) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        self.bytes(name, w.into_inner()?);
        Ok(())
    }

    pub fn commit(self) -> anyhow::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating {}", self.dir.display()))?;
        let mut staged = Vec::new();
        for (name, data) in &self.files {
            let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
            tmp.write_all(data)?;
            tmp.as_file().sync_all()?;
            staged.push((tmp, self.dir.join(name)));
        }
        let mut written = Vec::new();
        for (tmp, path) in staged {
            tmp.persist(&path)
                .with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// `x, y, value` rows in cell order; undefined cells have an empty value.
pub fn field_rows(f: &ScalarField) -> impl Iterator<Item = Vec<String>> + '_ {
    f.grid
        .points()
        .into_iter()
        .zip(&f.values)
        .map(|(z, v)| vec![num(z.re), num(z.im), opt(*v)])
}

/// Rebuilds a field from `x, y, value` CSV; the grid is inferred from the distinct x and y.
pub fn read_field(path: &Path) -> anyhow::Result<ScalarField> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let get = |k: usize| rec.get(k).unwrap_or("").trim().to_owned();
        let x: f64 = get(0)
            .parse()
            .with_context(|| format!("bad x `{}`", get(0)))?;
        let y: f64 = get(1)
            .parse()
            .with_context(|| format!("bad y `{}`", get(1)))?;
        let v = get(2);
        let v = if v.is_empty() {
            None
        } else {
            Some(
                v.parse::<f64>()
                    .with_context(|| format!("bad value `{v}`"))?,
            )
        };
        rows.push((x, y, v));
    }
    let axis = |f: fn(&(f64, f64, Option<f64>)) -> f64| {
        let mut v: Vec<f64> = rows.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let xs = axis(|r| r.0);
    let ys = axis(|r| r.1);
    if xs.len() < 2 || ys.len() < 2 || xs.len() * ys.len() != rows.len() {
        anyhow::bail!("{} is not a full rectangular grid", path.display());
    }
    let (nx, ny) = (xs.len(), ys.len());
    let dx = (xs[nx - 1] - xs[0]) / (nx - 1) as f64;
    let dy = (ys[ny - 1] - ys[0]) / (ny - 1) as f64;
    let grid = GridSpec::new(
        Complex64::new((xs[0] + xs[nx - 1]) / 2.0, (ys[0] + ys[ny - 1]) / 2.0),
        dx * nx as f64,
        dy * ny as f64,
        nx,
        ny,
    )?;
    let mut values = vec![None; grid.len()];
    for (x, y, v) in rows {
        let i = xs.partition_point(|&a| a < x);
        let j = ys.partition_point(|&b| b < y);
        values[grid.index(i, j)] = v;
    }
    Ok(ScalarField::new(grid, values))
}

const STOPS: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

/// Fixed viridis-like ramp on `t ∈ [0, 1]`.
fn color(t: f64) -> Rgb<u8> {
    let s = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let k = (s.floor() as usize).min(STOPS.len() - 2);
    let u = s - k as f64;
    let c = |ch: usize| (STOPS[k][ch] + u * (STOPS[k + 1][ch] - STOPS[k][ch])).round() as u8;
    Rgb([c(0), c(1), c(2)])
}

/// Heatmap with `y` increasing upwards; undefined cells are gray.
pub fn heatmap_png(f: &ScalarField, log_scale: bool) -> anyhow::Result<Vec<u8>> {
    let g = f.grid;
    let tr = |v: f64| if log_scale { v.ln() } else { v };
    let vals: Vec<f64> = f.defined().map(tr).filter(|v| v.is_finite()).collect();
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let img = RgbImage::from_fn(g.nx as u32, g.ny as u32, |px, py| {
        let j = g.ny - 1 - py as usize;
        match f.get(px as usize, j).map(tr).filter(|v| v.is_finite()) {
            Some(v) => color((v - lo) / span),
            None => Rgb([128, 128, 128]),
        }
    });
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    Ok(buf.into_inner())
}

/// One `<path>` per contour in plane coordinates (the `y` axis is flipped).
pub fn contours_svg(grid: &GridSpec, contours: &[Contour]) -> String {
    let x0 = grid.center.re - grid.width / 2.0;
    let y1 = grid.center.im + grid.height / 2.0;
    let stroke = grid.dx().max(grid.dy());
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n",
        x0, -y1, grid.width, grid.height
    );
    for c in contours {
        let mut d = String::new();
        for (k, z) in c.vertices.iter().enumerate() {
            d.push_str(&format!(
                "{}{} {} ",
                if k == 0 { "M" } else { "L" },
                z.re,
                -z.im
            ));
        }
        d.push('Z');
        s.push_str(&format!(
            "  <path data-label=\"{}\" d=\"{d}\" fill=\"none\" stroke=\"black\" stroke-width=\"{stroke}\"/>\n",
            c.label
        ));
    }
    s.push_str("</svg>\n");
    s
}

/// `label, index, x, y` per vertex.
pub fn contour_rows(contours: &[Contour]) -> Vec<Vec<String>> {
    contours
        .iter()
        .flat_map(|c| {
            c.vertices
                .iter()
                .enumerate()
                .map(move |(k, z)| vec![num(c.label), k.to_string(), num(z.re), num(z.im)])
        })
        .collect()
}
