//! `spiderweb`: command-line front end for the fast-escaping-set engines.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use spiderweb_core::blaschke::{self, BlaschkeSpec, DiscPoint};
use spiderweb_core::fastesc::{self, RaStatus};
use spiderweb_core::field::{self, Contour};
use spiderweb_core::par::Exec;
use spiderweb_core::verify::{self, Verdict, VerifyConfig};
use spiderweb_core::{MaxModProfile, WideReal};

use config::{from_core, parse_list, parse_point, usage, Overrides, RunConfig, Usage};
use output::{contour_rows, contours_svg, field_rows, heatmap_png, num, opt, Outputs};

/// `println!` that ignores a closed stdout.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

const AFTER_HELP: &str = "\
Output formats:
  CSV   RFC 4180 with a header row. Fields are `x,y,value` in cell order
        (row-major from the lower-left cell center); undefined cells have an
        empty value. Contours are `label,index,x,y` with the first vertex
        repeated at the end of each loop.
  JSON  Pretty-printed. Every run also writes `config.json`, the effective
        configuration, which can be passed back with --config.
  SVG   One <path> per loop in plane coordinates, y axis pointing up.
  PNG   One pixel per cell, fixed viridis-like ramp, gray for undefined cells.

Files are staged and renamed into --out only when the command succeeds.
Exit status: 0 on success, 1 on a runtime error or a failed verify check,
2 on a usage error.";

#[derive(Parser, Debug)]
#[command(name = "spiderweb", version, about = "Fast escaping sets, escape-rate fields and loops", after_help = AFTER_HELP)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Built-in family name or inline JSON `{"family": ..., "params": ...}`.
    #[arg(long, global = true)]
    function: Option<String>,
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Sampling window `cx,cy,w,h,nx,ny`.
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Comma-separated radius ladder.
    #[arg(long = "R", global = true)]
    r: Option<String>,
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// Stabilization tolerance for R_A on the log scale.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// φ(t) = log M(e^t) and its iterates on a t-ladder, plus R_f.
    Maxmod {
        #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
        t_min: f64,
        #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
        t_max: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        /// Number of iterates φ, φ², ... per row.
        #[arg(long, default_value_t = 3)]
        iterates: usize,
    },
    /// R_A at one point, as JSON.
    Ra {
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// R_A over the grid.
    RaField,
    /// Harmonic rate field h_n relative to a base point.
    HField {
        #[arg(long, allow_hyphen_values = true)]
        z0: String,
        #[arg(long, default_value_t = 5)]
        n: usize,
    },
    /// Membership in A_R(f) over the grid, for each R of the ladder.
    Classify,
    /// Fundamental hole and its boundary loop for each R of the ladder.
    Loops,
    /// Log-oscillation of R_A and the Fatou proxy cells.
    Osc,
    /// Non-autonomous Blaschke orbit moduli against the μ-majorant.
    BlaschkeDemo {
        #[arg(long, default_value_t = 0.9)]
        lambda: f64,
        #[arg(long, default_value_t = 0.99)]
        r0: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Runs verification suites and writes `verify.json`.
    Verify {
        /// Suite name or `all`; repeatable.
        #[arg(long = "suite", default_value = "all")]
        suites: Vec<String>,
        /// Small grids and sample counts, for smoke runs.
        #[arg(long)]
        quick: bool,
    },
    /// Field CSV to PNG heatmap, with optional level contours as SVG and CSV.
    Render {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated iso levels.
        #[arg(long)]
        iso: Option<String>,
        /// Colour by ln(value).
        #[arg(long)]
        log: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let g = cli.global;
    if let Some(t) = g.threads {
        if t == 0 {
            return Err(usage("--threads: must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()?;
    }
    let overrides = Overrides {
        function: g.function,
        grid: g.grid,
        r: g.r,
        horizon: g.horizon,
        tol: g.tol,
        out: g.out,
        seed: g.seed,
    };
    let cfg = RunConfig::load(g.config.as_deref(), &overrides)?;
    let mut out = Outputs::new(&cfg.out);
    let mut code = ExitCode::SUCCESS;
    match cli.command {
        Command::Maxmod {
            t_min,
            t_max,
            step,
            iterates,
        } => maxmod(&cfg, &mut out, t_min, t_max, step, iterates)?,
        Command::Ra { point } => ra(&cfg, &mut out, &point)?,
        Command::RaField => ra_field(&cfg, &mut out)?,
        Command::HField { z0, n } => h_field(&cfg, &mut out, &z0, n)?,
        Command::Classify => classify(&cfg, &mut out)?,
        Command::Loops => loops(&cfg, &mut out)?,
        Command::Osc => osc(&cfg, &mut out)?,
        Command::BlaschkeDemo { lambda, r0, steps } => {
            blaschke_demo(&cfg, &mut out, lambda, r0, steps)?
        }
        Command::Verify { suites, quick } => {
            if !run_verify(&cfg, &mut out, &suites, quick)? {
                code = ExitCode::from(1);
            }
        }
        Command::Render { input, iso, log } => render(&mut out, &input, iso.as_deref(), log)?,
    }
    out.json("config.json", &cfg)?;
    for p in out.commit()? {
        eprintln!("wrote {}", p.display());
    }
    Ok(code)
}

fn profile(cfg: &RunConfig) -> anyhow::Result<(MaxModProfile, f64)> {
    let p = MaxModProfile::new(cfg.function.clone()).map_err(from_core)?;
    let rf = p
        .compute_rf(cfg.params.horizon, cfg.params.threshold)
        .map_err(from_core)?;
    Ok((p, rf))
}

fn wide(w: WideReal) -> String {
    if w.is_real() {
        num(w.top())
    } else {
        w.to_string()
    }
}

fn maxmod(
    cfg: &RunConfig,
    out: &mut Outputs,
    t_min: f64,
    t_max: f64,
    step: f64,
    iterates: usize,
) -> anyhow::Result<()> {
    if !(step > 0.0) || !(t_max >= t_min) {
        return Err(usage("maxmod: need step > 0 and t_max >= t_min"));
    }
    let (p, rf) = profile(cfg)?;
    let n = ((t_max - t_min) / step).floor() as usize;
    let rows = (0..=n).map(|k| {
        let t = t_min + step * k as f64;
        let mut row = vec![num(t)];
        let mut s = WideReal::real(t);
        for _ in 0..iterates {
            s = p.phi(s);
            row.push(wide(s));
        }
        row
    });
    let mut header = vec!["t".to_owned()];
    header.extend((1..=iterates).map(|k| format!("phi_{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv("maxmod.csv", &header, rows)?;
    out.json(
        "maxmod.json",
        &json!({ "function": cfg.function, "r_f": rf, "params": cfg.params }),
    )?;
    say!("R_f = {rf}");
    Ok(())
}

fn ra(cfg: &RunConfig, out: &mut Outputs, point: &str) -> anyhow::Result<()> {
    let z = parse_point(point, "--point")?;
    let (p, rf) = profile(cfg)?;
    let r = fastesc::compute_ra(&p, z, &cfg.params, rf).map_err(from_core)?;
    let report = json!({ "point": z, "r_f": rf, "result": r });
    say!("{}", serde_json::to_string_pretty(&report)?);
    out.json("ra.json", &report)
}

fn ra_field(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let (p, rf) = profile(cfg)?;
    let cells =
        field::ra_cells(&p, &cfg.grid, &cfg.params, rf, Exec::Parallel).map_err(from_core)?;
    let f = field::ra_field_from_cells(&cfg.grid, &cells);
    let count = |s: RaStatus| cells.iter().filter(|c| c.status == s).count();
    out.csv("ra_field.csv", &["x", "y", "value"], field_rows(&f))?;
    out.json(
        "ra_field.json",
        &json!({
            "grid": cfg.grid, "r_f": rf, "min": f.min(), "max": f.max(),
            "value_cells": count(RaStatus::Value), "not_escaping_cells": count(RaStatus::NotEscaping),
            "undefined_cells": count(RaStatus::Undefined),
        }),
    )
}

fn h_field(cfg: &RunConfig, out: &mut Outputs, z0: &str, n: usize) -> anyhow::Result<()> {
    let z0 = parse_point(z0, "--z0")?;
    let p = MaxModProfile::new(cfg.function.clone()).map_err(from_core)?;
    let f = field::h_field(&p, &cfg.grid, z0, n, &cfg.params, Exec::Parallel).map_err(from_core)?;
    out.csv("h_field.csv", &["x", "y", "value"], field_rows(&f))?;
    out.json(
        "h_field.json",
        &json!({ "grid": cfg.grid, "z0": z0, "n": n, "missing": f.missing() }),
    )
}

fn classify(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let p = MaxModProfile::new(cfg.function.clone()).map_err(from_core)?;
    let mut header = vec!["x".to_owned(), "y".to_owned()];
    let mut columns = Vec::new();
    let mut summary = Vec::new();
    for &r in &cfg.r_ladder {
        let c = field::classify_grid(&p, &cfg.grid, r, &cfg.params, Exec::Parallel)
            .map_err(from_core)?;
        header.push(format!("in_A_{r}"));
        summary.push(
            json!({ "R": r, "members": c.members.count(), "horizon_limited": c.horizon_limited }),
        );
        columns.push(c.members);
    }
    let rows = cfg.grid.points().into_iter().enumerate().map(|(k, z)| {
        let mut row = vec![num(z.re), num(z.im)];
        row.extend(columns.iter().map(|m| (m.values[k] as u8).to_string()));
        row
    });
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv("classify.csv", &header, rows)?;
    out.json(
        "classify.json",
        &json!({ "grid": cfg.grid, "ladder": summary }),
    )
}

fn loops(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let (p, rf) = profile(cfg)?;
    if let Some(r) = cfg.r_ladder.iter().find(|&&r| r <= rf) {
        return Err(usage(format!(
            "--R: every radius must satisfy R > R_f = {rf}; got {r}"
        )));
    }
    let mut found: Vec<Contour> = Vec::new();
    let mut summary = Vec::new();
    for &r in &cfg.r_ladder {
        let c = field::classify_grid(&p, &cfg.grid, r, &cfg.params, Exec::Parallel)
            .map_err(from_core)?;
        let entry = match field::fundamental_hole(&c.members)
            .and_then(|h| Ok((h.cells(), field::extract_loop(&h, r)?)))
        {
            Ok((cells, l)) => {
                let e = json!({ "R": r, "hole_cells": cells, "length": l.length(), "area": l.area(), "vertices": l.vertices.len() });
                found.push(l);
                e
            }
            Err(e) => json!({ "R": r, "error": e.to_string() }),
        };
        summary.push(entry);
    }
    out.csv(
        "loops.csv",
        &["label", "index", "x", "y"],
        contour_rows(&found),
    )?;
    out.bytes("loops.svg", contours_svg(&cfg.grid, &found).into_bytes());
    out.json(
        "loops.json",
        &json!({ "grid": cfg.grid, "r_f": rf, "loops": summary }),
    )
}

fn osc(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let (p, rf) = profile(cfg)?;
    let cells =
        field::ra_cells(&p, &cfg.grid, &cfg.params, rf, Exec::Parallel).map_err(from_core)?;
    let ra = field::ra_field_from_cells(&cfg.grid, &cells);
    let osc = field::oscillation_field(&ra);
    let escaping = field::escaping_mask(&cfg.grid, &cells);
    let q = cfg.verify.proxy_percentile;
    let proxy = field::fatou_proxy(&osc, &escaping, q);
    let rows = cfg.grid.points().into_iter().enumerate().map(|(k, z)| {
        vec![
            num(z.re),
            num(z.im),
            opt(osc.values[k]),
            (proxy.values[k] as u8).to_string(),
        ]
    });
    out.csv("osc.csv", &["x", "y", "oscillation", "fatou_proxy"], rows)?;
    out.json(
        "osc.json",
        &json!({ "grid": cfg.grid, "percentile": q, "escaping_cells": escaping.count(), "proxy_cells": proxy.count() }),
    )
}

fn blaschke_demo(
    cfg: &RunConfig,
    out: &mut Outputs,
    lambda: f64,
    r0: f64,
    steps: usize,
) -> anyhow::Result<()> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(usage("--lambda: must lie in [0, 1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let specs: Vec<BlaschkeSpec> = std::iter::repeat_with(|| BlaschkeSpec::random(&mut rng, 3))
        .filter(|b| b.derivative_at_zero() <= lambda)
        .take(steps)
        .collect();
    let z = DiscPoint::new(num_complex::Complex64::from_polar(
        r0,
        rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
    ))
    .map_err(|e| usage(format!("--r0: {e}")))?;
    let orbit = blaschke::compose_orbit(&specs, z, lambda).map_err(from_core)?;
    let mut m = z.norm();
    let mut rows = Vec::new();
    for (n, w) in orbit.iter().enumerate() {
        if n > 0 {
            m = if m > 0.0 {
                blaschke::mu(m, lambda).map_err(from_core)?
            } else {
                0.0
            };
        }
        rows.push(vec![n.to_string(), num(w.norm()), num(m)]);
    }
    out.csv("blaschke.csv", &["n", "orbit_modulus", "mu_majorant"], rows)?;
    out.json(
        "blaschke.json",
        &json!({ "lambda": lambda, "r0": r0, "steps": specs.len(), "seed": cfg.seed }),
    )
}

fn run_verify(
    cfg: &RunConfig,
    out: &mut Outputs,
    suites: &[String],
    quick: bool,
) -> anyhow::Result<bool> {
    let vcfg = if quick {
        VerifyConfig {
            seed: cfg.verify.seed,
            params: cfg.verify.params,
            ..VerifyConfig::quick()
        }
    } else {
        cfg.verify.clone()
    };
    let report = verify::run(suites, &vcfg, Exec::Parallel).map_err(from_core)?;
    for s in &report.suites {
        let fails = s
            .checks
            .iter()
            .filter(|c| c.verdict == Verdict::Fail)
            .count();
        let scores = s
            .checks
            .iter()
            .filter(|c| c.verdict == Verdict::ScoreOnly)
            .count();
        say!(
            "{:<18} {}  {} checks, {} failed, {} score-only",
            s.suite,
            if s.passed { "PASS" } else { "FAIL" },
            s.checks.len(),
            fails,
            scores
        );
    }
    for (suite, c) in report.failures() {
        say!(
            "  failed {suite}/{}: measured {} bound {}",
            c.id,
            c.measured,
            c.bound
        );
    }
    let mut text = report.to_json();
    text.push('\n');
    out.bytes("verify.json", text.into_bytes());
    Ok(report.passed)
}

fn render(
    out: &mut Outputs,
    input: &std::path::Path,
    iso: Option<&str>,
    log: bool,
) -> anyhow::Result<()> {
    let f = output::read_field(input).map_err(|e| usage(format!("--input: {e:#}")))?;
    out.bytes("heatmap.png", heatmap_png(&f, log)?);
    if let Some(levels) = iso {
        let contours: Vec<Contour> = parse_list(levels, "--iso")?
            .into_iter()
            .flat_map(|l| field::level_contours(&f, l))
            .collect();
        out.bytes(
            "contours.svg",
            contours_svg(&f.grid, &contours).into_bytes(),
        );
        out.csv(
            "contours.csv",
            &["label", "index", "x", "y"],
            contour_rows(&contours),
        )?;
    }
    Ok(())
}
