//! Named check suites and their JSON report.
//!
//! Every suite lists each configured check with a verdict. Checks with an a
//! priori bound are `pass`/`fail`; checks that depend on the Fatou/Julia
//! proxy or on sampled statistics without a bound are `score_only`.
//! Random inputs come from a ChaCha stream keyed by the seed and the suite
//! name and are drawn sequentially, so reports do not depend on scheduling.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::blaschke::{self, BlaschkeSpec, DiscPoint};
use crate::entire::{ComplexPoint, FunctionSpec};
use crate::error::{Error, Result};
use crate::extmag::WideReal;
use crate::fastesc::{self, EscapeClass, EscapeParams, RaResult, RaStatus};
use crate::field::{self, BitField, Contour, GridSpec, ScalarField};
use crate::maxmod::MaxModProfile;
use crate::par::{self, Exec};

pub const SUITES: &[&str] = &[
    "maxmod_convexity",
    "maxmod_growth",
    "hadamard",
    "ra_monotone",
    "ra_conjugacy",
    "ra_union",
    "ra_usc",
    "ra_submean",
    "ratio_limit",
    "loops_nesting",
    "loops_level",
    "loops_dichotomy",
    "blaschke_all",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub seed: u64,
    pub params: EscapeParams,
    /// Families for the maxmod and `R_A` monotonicity suites.
    pub functions: Vec<FunctionSpec>,
    pub samples: usize,
    pub conjugacy_samples: usize,
    pub axis_samples: usize,
    /// Upper end of the sampled modulus range, as `log r`.
    pub sample_log_max: f64,
    /// half_exp window for the `R_A` field suites.
    pub field_grid: GridSpec,
    pub proxy_percentile: f64,
    pub mean_radius_cells: f64,
    pub mean_points: usize,
    pub mean_slack: f64,
    /// Half-width of the window that must be proxy cells around a tested center.
    pub stencil_cells: usize,
    pub v_n_max: usize,
    pub violation_budget: f64,
    /// half_exp window and R-ladder for hole nesting.
    pub nesting_grid: GridSpec,
    pub nesting_ladder: Vec<f64>,
    /// Function, window and R-ladder for extracted loops.
    pub loop_function: FunctionSpec,
    pub loop_grid: GridSpec,
    pub loop_ladder: Vec<f64>,
    pub synthetic_n: usize,
    pub blaschke_samples: usize,
    pub compose_lambdas: Vec<f64>,
    pub mu_lambdas: Vec<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let origin = Complex64::new(0.0, 0.0);
        Self {
            seed: 20_111_109,
            params: EscapeParams::default(),
            functions: FunctionSpec::builtins()
                .into_iter()
                .map(|(_, f)| f)
                .collect(),
            samples: 1000,
            conjugacy_samples: 100,
            axis_samples: 100,
            sample_log_max: 3.0,
            field_grid: GridSpec::square(origin, 3.0, 256).expect("valid"),
            proxy_percentile: 95.0,
            mean_radius_cells: 2.0,
            mean_points: 16,
            mean_slack: 1e-3,
            stencil_cells: 2,
            v_n_max: 3,
            violation_budget: 0.01,
            nesting_grid: GridSpec::square(origin, 3.0, 512).expect("valid"),
            nesting_ladder: vec![1.0, 1.4, 1.8, 2.2, 2.6],
            loop_function: FunctionSpec::baker_default(),
            loop_grid: GridSpec::square(origin, 40.0, 256).expect("valid"),
            loop_ladder: vec![2.0, 4.0, 8.0, 16.0],
            synthetic_n: 256,
            blaschke_samples: 10_000,
            compose_lambdas: vec![0.0, 0.5, 0.9],
            mu_lambdas: vec![0.0, 0.5, 0.9, 0.99],
        }
    }
}

impl VerifyConfig {
    /// Small grids and sample counts for smoke runs.
    pub fn quick() -> Self {
        let origin = Complex64::new(0.0, 0.0);
        Self {
            samples: 100,
            conjugacy_samples: 30,
            axis_samples: 30,
            field_grid: GridSpec::square(origin, 3.0, 64).expect("valid"),
            nesting_grid: GridSpec::square(origin, 3.0, 96).expect("valid"),
            loop_grid: GridSpec::square(origin, 40.0, 64).expect("valid"),
            loop_ladder: vec![4.0, 8.0, 16.0],
            synthetic_n: 64,
            blaschke_samples: 1000,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    ScoreOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub inputs: String,
    /// FNV-1a hash of `inputs`.
    pub digest: String,
    pub measured: f64,
    /// `">= x"`, `"<= x"` or `"none"`.
    pub bound: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn fnv1a(s: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

impl Check {
    fn new(id: &str, inputs: String, measured: f64, bound: String, verdict: Verdict) -> Self {
        Self {
            id: id.to_owned(),
            digest: fnv1a(&inputs),
            inputs,
            measured,
            bound,
            verdict,
            note: None,
        }
    }

    pub fn at_least(id: &str, inputs: String, measured: f64, bound: f64) -> Self {
        let ok = measured >= bound;
        Self::new(
            id,
            inputs,
            measured,
            format!(">= {bound:e}"),
            if ok { Verdict::Pass } else { Verdict::Fail },
        )
    }

    pub fn at_most(id: &str, inputs: String, measured: f64, bound: f64) -> Self {
        let ok = measured <= bound;
        Self::new(
            id,
            inputs,
            measured,
            format!("<= {bound:e}"),
            if ok { Verdict::Pass } else { Verdict::Fail },
        )
    }

    pub fn score(id: &str, inputs: String, measured: f64) -> Self {
        Self::new(id, inputs, measured, "none".into(), Verdict::ScoreOnly)
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub environment: Value,
    pub checks: Vec<Check>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn failures(&self) -> impl Iterator<Item = (&str, &Check)> {
        self.suites
            .iter()
            .flat_map(|s| s.checks.iter().map(move |c| (s.suite.as_str(), c)))
            .filter(|(_, c)| c.verdict == Verdict::Fail)
    }
}

/// Runs the named suites; `all` expands to every suite.
pub fn run(names: &[String], cfg: &VerifyConfig, exec: Exec) -> Result<VerifyReport> {
    let mut selected: Vec<&'static str> = Vec::new();
    for n in names {
        if n == "all" {
            selected.extend_from_slice(SUITES);
        } else {
            selected.push(
                SUITES
                    .iter()
                    .copied()
                    .find(|s| s == n)
                    .ok_or_else(|| Error::UnknownSuite(n.clone()))?,
            );
        }
    }
    selected.dedup();
    let ctx = Context::prepare(cfg, exec, &selected)?;
    let suites = par::map_slice(exec, &selected, |name| ctx.run_suite(name));
    let suites: Vec<SuiteReport> = suites.into_iter().collect::<Result<_>>()?;
    Ok(VerifyReport {
        seed: cfg.seed,
        passed: suites.iter().all(|s| s.passed),
        suites,
    })
}

/// Runs a single suite.
pub fn run_suite(name: &str, cfg: &VerifyConfig, exec: Exec) -> Result<SuiteReport> {
    let mut r = run(&[name.to_owned()], cfg, exec)?;
    Ok(r.suites.remove(0))
}

/// Shared fields computed once before suites run in parallel.
struct Context<'a> {
    cfg: &'a VerifyConfig,
    exec: Exec,
    half: MaxModProfile,
    half_rf: f64,
    field_cells: Option<Vec<RaResult>>,
    loops: Option<LoopData>,
}

struct LoopData {
    profile: MaxModProfile,
    rf: f64,
    loops: Vec<std::result::Result<Contour, String>>,
    ra: ScalarField,
    proxy: BitField,
}

impl<'a> Context<'a> {
    fn prepare(cfg: &'a VerifyConfig, exec: Exec, selected: &[&str]) -> Result<Self> {
        let half = MaxModProfile::new(FunctionSpec::half_exp())?;
        let half_rf = half.compute_rf(cfg.params.horizon, cfg.params.threshold)?;
        let wants = |s: &str| selected.contains(&s);
        let field_cells = if wants("ra_usc") || wants("ra_submean") {
            Some(field::ra_cells(
                &half,
                &cfg.field_grid,
                &cfg.params,
                half_rf,
                exec,
            )?)
        } else {
            None
        };
        let loops = if wants("loops_nesting") || wants("loops_level") || wants("loops_dichotomy") {
            Some(LoopData::compute(cfg, exec)?)
        } else {
            None
        };
        Ok(Self {
            cfg,
            exec,
            half,
            half_rf,
            field_cells,
            loops,
        })
    }

    fn rng(&self, suite: &str) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(SUITES.iter().position(|s| *s == suite).unwrap_or(0) as u64);
        rng
    }

    fn run_suite(&self, name: &str) -> Result<SuiteReport> {
        let (environment, checks) = match name {
            "maxmod_convexity" => self.maxmod_convexity(),
            "maxmod_growth" => self.maxmod_growth(),
            "hadamard" => self.hadamard(),
            "ra_monotone" => self.ra_monotone()?,
            "ra_conjugacy" => self.ra_conjugacy()?,
            "ra_union" => self.ra_union()?,
            "ra_usc" => self.ra_usc(),
            "ra_submean" => self.ra_submean(),
            "ratio_limit" => self.ratio_limit()?,
            "loops_nesting" => self.loops_nesting()?,
            "loops_level" => self.loops_level(),
            "loops_dichotomy" => self.loops_dichotomy(),
            "blaschke_all" => self.blaschke_all()?,
            other => return Err(Error::UnknownSuite(other.to_owned())),
        };
        Ok(SuiteReport {
            suite: name.to_owned(),
            seed: self.cfg.seed,
            environment,
            passed: checks.iter().all(|c| c.verdict != Verdict::Fail),
            checks,
        })
    }

    fn profiles(&self) -> Result<Vec<MaxModProfile>> {
        self.cfg
            .functions
            .iter()
            .cloned()
            .map(MaxModProfile::new)
            .collect()
    }

    fn families_env(&self) -> Value {
        json!({ "functions": self.cfg.functions })
    }

    fn maxmod_convexity(&self) -> (Value, Vec<Check>) {
        let ts = ladder(-5.0, 6.0, 0.05);
        let mut checks = Vec::new();
        for p in self.profiles().expect("validated families") {
            let name = p.function().name();
            let phi: Vec<f64> = ts
                .iter()
                .map(|&t| p.phi(WideReal::real(t)).to_f64())
                .collect();
            let inc = phi
                .windows(2)
                .map(|w| (w[1] - w[0]) / w[1].abs().max(1.0))
                .fold(f64::INFINITY, f64::min);
            let conv = phi
                .windows(3)
                .map(|w| (w[0] + w[2] - 2.0 * w[1]) / w[1].abs().max(1.0))
                .fold(f64::INFINITY, f64::min);
            let inputs = format!("{name}; t in [-5, 6] step 0.05");
            checks.push(Check::at_least(
                &format!("{name}/phi_increasing"),
                inputs.clone(),
                inc,
                -1e-9,
            ));
            checks.push(Check::at_least(
                &format!("{name}/phi_convex"),
                inputs,
                conv,
                -1e-9,
            ));
            // the inverse ψ(s) = log M^{-1}(e^s) is concave and increasing
            let s0 = phi[0].max(p.function().log_value_at_origin()) + 0.05;
            let ss = ladder(s0, phi[phi.len() - 1], (phi[phi.len() - 1] - s0) / 200.0);
            let psi: Vec<f64> = ss
                .iter()
                .map(|&s| {
                    p.inverse_log_m(WideReal::real(s))
                        .map(|t| t.to_f64())
                        .unwrap_or(f64::NAN)
                })
                .collect();
            let conc = psi
                .windows(3)
                .map(|w| (2.0 * w[1] - w[0] - w[2]) / w[1].abs().max(1.0))
                .fold(f64::INFINITY, f64::min);
            let inc = psi
                .windows(2)
                .map(|w| (w[1] - w[0]) / w[1].abs().max(1.0))
                .fold(f64::INFINITY, f64::min);
            let inputs = format!(
                "{name}; s in [{s0:.4}, {:.4}], 201 points",
                phi[phi.len() - 1]
            );
            checks.push(Check::at_least(
                &format!("{name}/psi_increasing"),
                inputs.clone(),
                nan_low(inc),
                -1e-9,
            ));
            checks.push(Check::at_least(
                &format!("{name}/psi_concave"),
                inputs,
                nan_low(conc),
                -1e-9,
            ));
        }
        (self.families_env(), checks)
    }

    fn maxmod_growth(&self) -> (Value, Vec<Check>) {
        let ts = ladder(1.0, 30.0, 0.25);
        let mut checks = Vec::new();
        for p in self.profiles().expect("validated families") {
            let name = p.function().name();
            let ratios: Vec<f64> = ts
                .iter()
                .map(|&t| p.phi(WideReal::real(t)).to_f64() / t)
                .collect();
            let least = ratios
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min);
            let mut c = Check::new(
                &format!("{name}/log_m_over_log_r_increasing"),
                format!("{name}; log r in [1, 30] step 0.25"),
                least,
                "> 0".into(),
                if least > 0.0 {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                },
            );
            if matches!(p.function(), FunctionSpec::BakerProduct { .. }) {
                c = c.with_note(
                    "finite product: the ratio increases to the degree, not to infinity",
                );
            }
            checks.push(c);
            checks.push(Check::score(
                &format!("{name}/log_m_over_log_r_at_30"),
                format!("{name}; log r = 30"),
                *ratios.last().expect("non-empty ladder"),
            ));
        }
        (self.families_env(), checks)
    }

    fn hadamard(&self) -> (Value, Vec<Check>) {
        // r > R0 = e, i.e. log r > 1, where φ(t)/t is increasing for every family
        let big = [1.1, 1.5, 2.0, 3.0];
        let small = [0.3, 0.5, 0.9];
        let mut checks = Vec::new();
        for p in self.profiles().expect("validated families") {
            let name = p.function().name();
            let phi = |t: f64| p.phi(WideReal::real(t)).to_f64();
            let rel = |a: f64, b: f64| (a - b) / a.abs().max(b.abs()).max(1.0);
            let mut up = f64::INFINITY;
            for &c in &big {
                for t in ladder(1.0, 6.0, 0.1) {
                    up = up.min(rel(phi(c * t), c * phi(t)));
                }
            }
            let mut down = f64::INFINITY;
            for &c in &small {
                for t in ladder(1.0 / c, 6.0 / c, 0.1 / c) {
                    down = down.min(rel(c * phi(t), phi(c * t)));
                }
            }
            let mut inv = f64::INFINITY;
            let (s0, s1) = (phi(1.0), phi(6.0));
            for &c in &big {
                for s in ladder(s0, s1, (s1 - s0) / 100.0) {
                    let a = p.inverse_log_m(WideReal::real(c * s)).map(|t| t.to_f64());
                    let b = p.inverse_log_m(WideReal::real(s)).map(|t| t.to_f64());
                    inv = inv.min(match (a, b) {
                        (Ok(a), Ok(b)) => rel(c * b, a),
                        _ => f64::NEG_INFINITY,
                    });
                }
            }
            checks.push(Check::at_least(
                &format!("{name}/power_up"),
                format!("{name}; M(r^c) >= M(r)^c, c in {big:?}, log r in [1, 6]"),
                up,
                -1e-9,
            ));
            checks.push(Check::at_least(
                &format!("{name}/power_down"),
                format!("{name}; M(r^c) <= M(r)^c, c in {small:?}, log r in [1/c, 6/c]"),
                down,
                -1e-9,
            ));
            checks.push(Check::at_least(
                &format!("{name}/inverse_power"),
                format!("{name}; M^-1(r^c) <= M^-1(r)^c, c in {big:?}, log r in [phi(1), phi(6)]"),
                inv,
                -1e-9,
            ));
        }
        (
            json!({ "functions": self.cfg.functions, "log_r0": 1.0 }),
            checks,
        )
    }

    fn sampling_range(&self, p: &MaxModProfile) -> (f64, f64) {
        let lo = if p.function().fixes_origin() {
            p.compute_rf(self.cfg.params.horizon, self.cfg.params.threshold)
                .map(|rf| (rf * 1.01).ln())
                .unwrap_or(-3.0)
        } else {
            -3.0
        };
        (lo.max(-3.0), self.cfg.sample_log_max)
    }

    fn ra_monotone(&self) -> Result<(Value, Vec<Check>)> {
        let mut rng = self.rng("ra_monotone");
        let params = &self.cfg.params;
        let mut checks = Vec::new();
        for p in self.profiles()? {
            let name = p.function().name();
            let (lo, hi) = self.sampling_range(&p);
            let (points, drawn) =
                sample_escaping(&p, params, lo, hi, self.cfg.samples, &mut rng, self.exec);
            let worst = par::map_slice(self.exec, &points, |&z| {
                let orb = fastesc::orbit(&p, z, params);
                let seq = fastesc::ra_sequence(&p, &orb, params.nmax);
                let mut strict = f64::NEG_INFINITY;
                let mut tail = f64::NEG_INFINITY;
                for (n, w) in seq.entries.windows(2).enumerate() {
                    let rise = w[1]
                        .log_radius
                        .diff(&w[0].log_radius)
                        .unwrap_or(f64::INFINITY);
                    if orb.entries[n].approximate {
                        tail = tail.max(rise);
                    } else {
                        strict = strict.max(rise);
                    }
                }
                (strict, tail)
            });
            let strict_viol = worst.iter().filter(|w| w.0 > 1e-9).count();
            let tail_viol = worst.iter().filter(|w| w.1 > 1e-3).count();
            let inputs = format!(
                "{name}; {} escaping points of {drawn} drawn, log|z| in [{lo:.6}, {hi}], nmax {}",
                points.len(),
                params.nmax
            );
            let short = points.len() < self.cfg.samples;
            let mut c = Check::at_most(
                &format!("{name}/violations"),
                inputs.clone(),
                strict_viol as f64,
                0.0,
            );
            if short {
                c.verdict = Verdict::Fail;
                c = c.with_note(format!("only {} escaping points found", points.len()));
            }
            checks.push(c);
            checks.push(Check::at_most(
                &format!("{name}/flagged_tail_violations"),
                inputs.clone(),
                tail_viol as f64,
                0.0,
            ));
            checks.push(Check::score(
                &format!("{name}/largest_rise"),
                inputs,
                worst.iter().map(|w| w.0).fold(f64::NEG_INFINITY, f64::max),
            ));
        }
        Ok((
            json!({ "functions": self.cfg.functions, "params": params, "samples": self.cfg.samples }),
            checks,
        ))
    }

    fn normalized_profiles(&self) -> Result<Vec<(MaxModProfile, f64)>> {
        self.profiles()?
            .into_iter()
            .filter(|p| p.function().fixes_origin())
            .map(|p| {
                let rf = p.compute_rf(self.cfg.params.horizon, self.cfg.params.threshold)?;
                Ok((p, rf))
            })
            .collect()
    }

    fn ra_conjugacy(&self) -> Result<(Value, Vec<Check>)> {
        let mut rng = self.rng("ra_conjugacy");
        let params = &self.cfg.params;
        let mut checks = Vec::new();
        for (p, rf) in self.normalized_profiles()? {
            let name = p.function().name();
            let (lo, hi) = self.sampling_range(&p);
            let mut errors = Vec::new();
            let mut drawn = 0;
            while errors.len() < self.cfg.conjugacy_samples
                && drawn < 200 * self.cfg.conjugacy_samples
            {
                let batch: Vec<ComplexPoint> = (0..self.cfg.conjugacy_samples)
                    .map(|_| draw(&mut rng, lo, hi))
                    .collect();
                drawn += batch.len();
                let errs =
                    par::map_slice(self.exec, &batch, |&z| conjugacy_error(&p, z, params, rf));
                errors.extend(errs.into_iter().flatten());
            }
            errors.truncate(self.cfg.conjugacy_samples);
            let worst = errors.iter().copied().fold(0.0, f64::max);
            let mut c = Check::at_most(
                &format!("{name}/relative_log_error"),
                format!(
                    "{name}; {} escaping points with float f(z), {drawn} drawn",
                    errors.len()
                ),
                worst,
                1e-6,
            );
            if errors.len() < self.cfg.conjugacy_samples {
                c.verdict = Verdict::Fail;
                c = c.with_note("not enough admissible points");
            }
            checks.push(c);
        }
        // positive-axis identity on half_exp
        let g = &self.half;
        let xs: Vec<f64> = (1..=self.cfg.axis_samples)
            .map(|k| self.half_rf + (3.0 - self.half_rf) * k as f64 / self.cfg.axis_samples as f64)
            .collect();
        let errs = par::map_slice(self.exec, &xs, |&x| {
            fastesc::compute_ra(g, Complex64::new(x, 0.0), params, self.half_rf).map(|r| {
                if r.status == RaStatus::Value {
                    (r.value - x).abs()
                } else {
                    f64::INFINITY
                }
            })
        });
        let worst = errs
            .into_iter()
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        checks.push(Check::at_most(
            "half_exp/axis_identity",
            format!("half_exp; {} reals in (R_f, 3]", self.cfg.axis_samples),
            worst,
            1e-9,
        ));
        Ok((
            json!({ "params": params, "samples": self.cfg.conjugacy_samples }),
            checks,
        ))
    }

    fn ra_union(&self) -> Result<(Value, Vec<Check>)> {
        let mut rng = self.rng("ra_union");
        let params = &self.cfg.params;
        let mut checks = Vec::new();
        for (p, rf) in self.normalized_profiles()? {
            let name = p.function().name();
            let (lo, hi) = self.sampling_range(&p);
            let points: Vec<ComplexPoint> = (0..self.cfg.samples)
                .map(|_| draw(&mut rng, lo, hi))
                .collect();
            let outcomes = par::map_slice(self.exec, &points, |&z| -> Result<(u8, bool)> {
                let r = fastesc::compute_ra(&p, z, params, rf)?;
                Ok(match r.status {
                    RaStatus::Value if r.value > rf => {
                        let v = fastesc::in_ar(&p, z, r.value * (1.0 - 1e-6), params);
                        (0, matches!(v, Ok(fastesc::ArVerdict::Out { .. })))
                    }
                    RaStatus::NotEscaping => {
                        let v = fastesc::in_ar(&p, z, rf * 1.1, params)?;
                        (1, !matches!(v, fastesc::ArVerdict::Out { .. }))
                    }
                    _ => (2, false),
                })
            });
            let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
            let count = |k: u8| outcomes.iter().filter(|o| o.0 == k).count();
            let bad = |k: u8| outcomes.iter().filter(|o| o.0 == k && o.1).count();
            checks.push(Check::at_most(
                &format!("{name}/escaping_in_a_r"),
                format!(
                    "{name}; {} points with R_A > R_f, in_AR at R_A(1-1e-6)",
                    count(0)
                ),
                bad(0) as f64,
                0.0,
            ));
            checks.push(Check::at_most(
                &format!("{name}/non_escaping_outside"),
                format!("{name}; {} non-escaping points, in_AR at 1.1 R_f", count(1)),
                bad(1) as f64,
                0.0,
            ));
            checks.push(Check::score(
                &format!("{name}/other_status"),
                format!("{name}; points neither escaping above R_f nor non-escaping"),
                count(2) as f64,
            ));
        }
        Ok((
            json!({ "params": params, "samples": self.cfg.samples }),
            checks,
        ))
    }

    fn field_data(&self) -> (ScalarField, BitField, ScalarField) {
        let g = &self.cfg.field_grid;
        let cells = self.field_cells.as_ref().expect("prepared");
        let ra = field::ra_field_from_cells(g, cells);
        let esc = field::escaping_mask(g, cells);
        let osc = field::oscillation_field(&ra);
        (ra, esc, osc)
    }

    fn field_env(&self) -> Value {
        json!({
            "function": FunctionSpec::half_exp(),
            "grid": self.cfg.field_grid,
            "params": self.cfg.params,
            "proxy_percentile": self.cfg.proxy_percentile,
            "radius_cells": self.cfg.mean_radius_cells,
            "circle_points": self.cfg.mean_points,
            "slack": self.cfg.mean_slack,
            "stencil_cells": self.cfg.stencil_cells,
        })
    }

    fn ra_usc(&self) -> (Value, Vec<Check>) {
        let (ra, _, osc) = self.field_data();
        let mut nonzero: Vec<f64> = osc.defined().filter(|&v| v > 0.0).collect();
        nonzero.sort_by(f64::total_cmp);
        let allowance = if nonzero.is_empty() {
            0.0
        } else {
            2.0 * nonzero[(nonzero.len() - 1) / 2]
        };
        let r = field::usc_violations(&ra, allowance);
        let strict = field::usc_violations(&ra, 0.0);
        let inputs = format!(
            "half_exp R_A field {}x{}, {} cells tested",
            ra.grid.nx, ra.grid.ny, r.tested
        );
        let rate = |v: usize, t: usize| if t == 0 { 1.0 } else { v as f64 / t as f64 };
        let checks = vec![
            Check::at_most(
                "violation_rate",
                format!("{inputs}, allowance {allowance:.6e}"),
                rate(r.violations, r.tested),
                self.cfg.violation_budget,
            )
            .with_note("allowance: twice the median nonzero log-oscillation"),
            Check::score(
                "violation_rate_without_allowance",
                inputs,
                rate(strict.violations, strict.tested),
            ),
            Check::score(
                "missing_cells",
                "half_exp R_A field".into(),
                ra.missing() as f64,
            ),
        ];
        (self.field_env(), checks)
    }

    fn ra_submean(&self) -> (Value, Vec<Check>) {
        let cfg = self.cfg;
        let g = cfg.field_grid;
        let (ra, esc, osc) = self.field_data();
        let proxy = field::fatou_proxy(&osc, &esc, cfg.proxy_percentile);
        let tested = field::interior_cells(&proxy, cfg.stencil_cells);
        let v = ra.map(|r| Some(-r.ln()));
        let mut checks = vec![submean_check(
            "v",
            &field::sub_mean_test(
                &v,
                &tested,
                cfg.mean_radius_cells,
                cfg.mean_points,
                cfg.mean_slack,
                self.exec,
            ),
            cfg.violation_budget,
        )];
        // frontier vs interior oscillation
        let interior: Vec<f64> = (0..g.len())
            .filter(|&k| tested.values[k])
            .filter_map(|k| osc.values[k])
            .collect();
        let frontier: Vec<f64> = (0..g.len())
            .filter(|&k| esc.values[k] && !proxy.values[k])
            .filter_map(|k| osc.values[k])
            .collect();
        checks.push(Check::score(
            "frontier_over_interior_oscillation",
            format!(
                "{} frontier cells, {} interior cells",
                frontier.len(),
                interior.len()
            ),
            mean(&frontier) / mean(&interior),
        ));
        for n in 1..=cfg.v_n_max {
            let vn = field::v_n_field(&self.half, &g, n, self.exec);
            let zero_free =
                field::zero_free_mask(&self.half, &g, n, cfg.mean_radius_cells + 0.5, self.exec);
            let defined = BitField::new(
                g,
                (0..g.len())
                    .map(|k| zero_free.values[k] && vn.values[k].is_some())
                    .collect(),
            );
            let osc_n = field::oscillation_field(&vn.map(|x| Some((-x).exp())));
            let proxy_n = field::fatou_proxy(&osc_n, &defined, cfg.proxy_percentile);
            let cells = field::interior_cells(&proxy_n, cfg.stencil_cells);
            checks.push(submean_check(
                &format!("v_{n}"),
                &field::sub_mean_test(
                    &vn,
                    &cells,
                    cfg.mean_radius_cells,
                    cfg.mean_points,
                    cfg.mean_slack,
                    self.exec,
                ),
                cfg.violation_budget,
            ));
        }
        (self.field_env(), checks)
    }

    fn ratio_limit(&self) -> Result<(Value, Vec<Check>)> {
        let params = &self.cfg.params;
        let p = &self.half;
        let xs: Vec<f64> = (1..=self.cfg.axis_samples)
            .map(|k| self.half_rf + (3.0 - self.half_rf) * k as f64 / self.cfg.axis_samples as f64)
            .collect();
        // (largest unflagged deviation, largest computable flagged deviation, uncomputable n)
        let axis = par::map_slice(self.exec, &xs, |&x| -> Result<(f64, f64, usize)> {
            let z = Complex64::new(x, 0.0);
            let r = fastesc::compute_ra(p, z, params, self.half_rf)?;
            let orb = fastesc::orbit(p, z, params);
            let mut out = (0.0f64, 0.0f64, 0);
            for n in 0..=orb.horizon_used {
                let q = fastesc::growth_ratio(p, &orb, r.log_value, n)
                    .filter(|q| q.is_finite() && *q != 0.0);
                // between iterated exponentials the ratio amplifies rounding beyond any tolerance
                let q = q.filter(|_| orb.entries[n].log_modulus.is_real());
                match (q, orb.entries[n].approximate) {
                    (Some(q), false) => out.0 = out.0.max((q - 1.0).abs()),
                    (None, false) => out.0 = f64::INFINITY,
                    (Some(q), true) => out.1 = out.1.max((q - 1.0).abs()),
                    (None, true) => out.2 += 1,
                }
            }
            Ok(out)
        });
        let axis = axis.into_iter().collect::<Result<Vec<_>>>()?;
        let exact = axis.iter().map(|a| a.0).fold(0.0, f64::max);
        let tail = axis.iter().map(|a| a.1).fold(0.0, f64::max);
        let uncomputable: usize = axis.iter().map(|a| a.2).sum();
        let mut rng = self.rng("ratio_limit");
        let (lo, hi) = self.sampling_range(p);
        let (points, _) = sample_escaping(
            p,
            params,
            lo,
            hi,
            self.cfg.conjugacy_samples,
            &mut rng,
            self.exec,
        );
        let off: Vec<f64> = par::map_slice(self.exec, &points, |&z| {
            let orb = fastesc::orbit(p, z, params);
            let r = fastesc::compute_ra(p, z, params, self.half_rf).ok()?;
            let n = orb.first_flagged()?.checked_sub(1)?;
            (r.status == RaStatus::Value).then_some(())?;
            fastesc::growth_ratio(p, &orb, r.log_value, n)
        })
        .into_iter()
        .flatten()
        .collect();
        let inside = off.iter().filter(|q| (0.95..=1.05).contains(*q)).count();
        let checks = vec![
            Check::at_most(
                "half_exp/axis_ratio",
                format!(
                    "half_exp; {} reals in (R_f, 3], unflagged n",
                    self.cfg.axis_samples
                ),
                exact,
                1e-9,
            ),
            Check::at_most(
                "half_exp/axis_ratio_flagged_tail",
                format!(
                    "half_exp; {} reals in (R_f, 3], flagged n with float log-moduli",
                    self.cfg.axis_samples
                ),
                tail,
                1e-3,
            ),
            Check::score(
                "half_exp/axis_ratio_beyond_float",
                "half_exp; flagged (x, n) pairs with log-moduli beyond float range".into(),
                uncomputable as f64,
            ),
            Check::score(
                "half_exp/off_axis_fraction_within_5pct",
                format!("half_exp; {} escaping samples, last unflagged n", off.len()),
                if off.is_empty() {
                    0.0
                } else {
                    inside as f64 / off.len() as f64
                },
            ),
        ];
        Ok((json!({ "params": params }), checks))
    }

    fn loops_nesting(&self) -> Result<(Value, Vec<Check>)> {
        let cfg = self.cfg;
        let params = &cfg.params;
        let g = &cfg.nesting_grid;
        let mut holes = Vec::new();
        for &r in &cfg.nesting_ladder {
            let c = field::classify_grid(&self.half, g, r, params, self.exec)?;
            holes.push(field::fundamental_hole(&c.members)?.as_bits());
        }
        let strict = holes
            .windows(2)
            .all(|w| w[0].subset_of(&w[1]) && w[0].count() < w[1].count());
        let mut checks = vec![Check::at_least(
            "half_exp/hole_nesting",
            format!(
                "half_exp; R in {:?}, grid {}x{}",
                cfg.nesting_ladder, g.nx, g.ny
            ),
            strict as u8 as f64,
            1.0,
        )];
        let data = self.loops.as_ref().expect("prepared");
        let name = data.profile.function().name();
        let loops: Vec<&Contour> = data.loops.iter().filter_map(|l| l.as_ref().ok()).collect();
        let failures: Vec<String> = data
            .loops
            .iter()
            .filter_map(|l| l.as_ref().err().cloned())
            .collect();
        let ordered = loops.windows(2).all(|w| w[1].surrounds(w[0]));
        let mut c = Check::at_least(
            &format!("{name}/loop_ordering"),
            format!(
                "{name}; R in {:?}, grid {}x{}",
                cfg.loop_ladder, cfg.loop_grid.nx, cfg.loop_grid.ny
            ),
            (ordered && failures.is_empty()) as u8 as f64,
            1.0,
        );
        if let Some(f) = failures.first() {
            c = c.with_note(f.clone());
        }
        checks.push(c);
        // synthetic |z| oracle
        let n = cfg.synthetic_n;
        let sg = GridSpec::square(Complex64::new(0.0, 0.0), 2.0, n)?;
        let modulus = ScalarField::from_fn(sg, self.exec, |z| Some(z.norm()));
        let contour = field::level_contours(&modulus, 1.0);
        let stddev = contour
            .first()
            .and_then(|c| field::loop_level_stats(c, &modulus).ok())
            .map_or(f64::INFINITY, |s| s.stddev);
        // |∇|z|| = 1, so one cell-gradient is one cell width
        checks.push(Check::at_most(
            "synthetic/level_stddev_in_cell_gradients",
            format!("|z| on [-2,2]^2 at {n}x{n}, level 1"),
            stddev / sg.dx(),
            1.0,
        ));
        Ok((
            json!({ "nesting_grid": g, "nesting_ladder": cfg.nesting_ladder, "loop_function": cfg.loop_function,
                    "loop_grid": cfg.loop_grid, "loop_ladder": cfg.loop_ladder, "params": params }),
            checks,
        ))
    }

    fn loops_env(&self) -> Value {
        json!({ "loop_function": self.cfg.loop_function, "loop_grid": self.cfg.loop_grid,
                "loop_ladder": self.cfg.loop_ladder, "params": self.cfg.params,
                "proxy_percentile": self.cfg.proxy_percentile })
    }

    fn loops_level(&self) -> (Value, Vec<Check>) {
        let data = self.loops.as_ref().expect("prepared");
        let name = data.profile.function().name();
        let g = data.ra.grid;
        let mut checks = Vec::new();
        for (&r, l) in self.cfg.loop_ladder.iter().zip(&data.loops) {
            let id = format!("{name}/R={r}/stddev_in_cell_gradients");
            let inputs = format!("{name}; R_A along L_R, R = {r}, R_f = {:.9}", data.rf);
            let Ok(l) = l else {
                checks.push(Check::score(&id, inputs, f64::NAN).with_note("no loop at this R"));
                continue;
            };
            match field::loop_level_stats(l, &data.ra) {
                Ok(s) => {
                    let grads: Vec<f64> = l
                        .vertices
                        .iter()
                        .filter_map(|&z| gradient(&data.ra, z))
                        .collect();
                    let cell_gradient = mean(&grads) * g.dx();
                    checks.push(
                        Check::score(&id, inputs, s.stddev / cell_gradient).with_note(format!(
                            "mean {:.6}, stddev {:.3e}, {} samples",
                            s.mean, s.stddev, s.samples
                        )),
                    );
                }
                Err(e) => checks.push(Check::score(&id, inputs, f64::NAN).with_note(e.to_string())),
            }
        }
        (self.loops_env(), checks)
    }

    fn loops_dichotomy(&self) -> (Value, Vec<Check>) {
        let data = self.loops.as_ref().expect("prepared");
        let name = data.profile.function().name();
        let g = data.ra.grid;
        let mut checks = Vec::new();
        for (&r, l) in self.cfg.loop_ladder.iter().zip(&data.loops) {
            let id = format!("{name}/R={r}/one_sided_fraction");
            let Ok(l) = l else {
                checks.push(
                    Check::score(&id, format!("{name}; R = {r}"), f64::NAN)
                        .with_note("no loop at this R"),
                );
                continue;
            };
            let sides: Vec<bool> = l.vertices[1..]
                .iter()
                .filter_map(|&z| g.cell_of(z).map(|(i, j)| data.proxy.get(i, j)))
                .collect();
            let fatou = sides.iter().filter(|&&b| b).count() as f64 / sides.len().max(1) as f64;
            checks.push(
                Check::score(
                    &id,
                    format!("{name}; R = {r}, {} loop vertices", sides.len()),
                    fatou.max(1.0 - fatou),
                )
                .with_note(format!("Fatou-proxy fraction {fatou:.4}")),
            );
        }
        (self.loops_env(), checks)
    }

    fn blaschke_all(&self) -> Result<(Value, Vec<Check>)> {
        let mut rng = self.rng("blaschke_all");
        let n = self.cfg.blaschke_samples;
        let draws: Vec<(BlaschkeSpec, DiscPoint, DiscPoint)> = (0..n)
            .map(|_| {
                let b = BlaschkeSpec::random(&mut rng, 4);
                let w = random_disc(&mut rng);
                let z = random_disc(&mut rng);
                (b, w, z)
            })
            .collect();
        let bc = par::map_slice(self.exec, &draws, |(b, _, z)| {
            blaschke::contraction_bound(b, *z) - b.eval(*z).norm()
        })
        .into_iter()
        .fold(f64::INFINITY, f64::min);
        let sp = par::map_slice(self.exec, &draws, |(b, w, z)| {
            let before = blaschke::hyperbolic_distance_disc(*w, *z);
            (before - blaschke::hyperbolic_distance_disc(b.eval(*w), b.eval(*z))) / before.max(1.0)
        })
        .into_iter()
        .fold(f64::INFINITY, f64::min);
        let mut checks = vec![
            Check::at_least(
                "beardon_carne",
                format!("{n} random (spec, z) samples"),
                bc,
                -1e-9,
            ),
            Check::at_least(
                "schwarz_pick",
                format!("{n} random (spec, w, z) samples"),
                sp,
                -1e-9,
            ),
        ];
        for &l in &self.cfg.compose_lambdas {
            let specs: Vec<BlaschkeSpec> =
                std::iter::repeat_with(|| BlaschkeSpec::random(&mut rng, 3))
                    .filter(|b| b.derivative_at_zero() <= l)
                    .take(200)
                    .collect();
            let z = DiscPoint::new(Complex64::from_polar(
                0.99,
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            ))?;
            let orbit = blaschke::compose_orbit(&specs, z, l)?;
            let mut m = z.norm();
            let mut slack = f64::INFINITY;
            let mut dist = f64::INFINITY;
            for w in &orbit[1..] {
                m = if m > 0.0 { blaschke::mu(m, l)? } else { 0.0 };
                slack = slack.min(m - w.norm());
                let majorant = if m > 0.0 {
                    2.0 * m.min(1.0 - 1e-16).atanh()
                } else {
                    0.0
                };
                dist = dist.min(
                    majorant
                        - blaschke::hyperbolic_distance_disc(
                            DiscPoint::new(Complex64::new(0.0, 0.0))?,
                            *w,
                        ),
                );
                if m == 0.0 {
                    break;
                }
            }
            checks.push(Check::at_least(
                &format!("compose/lambda={l}/mu_domination"),
                format!("200 random specs with |B'(0)| <= {l}, |z| = 0.99"),
                slack,
                -1e-12,
            ));
            checks.push(Check::at_least(
                &format!("compose/lambda={l}/hyperbolic_domination"),
                format!("200 random specs with |B'(0)| <= {l}, |z| = 0.99"),
                dist,
                -1e-9,
            ));
        }
        for &l in &self.cfg.mu_lambdas {
            let it = blaschke::mu_iterates(0.999, l, 1e-6, 1_000_000)?;
            let reached = *it.last().expect("non-empty") < 1e-6;
            let monotone = it.windows(2).all(|w| w[1] < w[0]);
            let mut c = Check::new(
                &format!("mu/lambda={l}/steps_below_1e-6"),
                format!("mu iterates from 0.999, lambda = {l}"),
                (it.len() - 1) as f64,
                "finite".into(),
                if reached && monotone {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                },
            );
            if !monotone {
                c = c.with_note("not monotone");
            }
            checks.push(c);
        }
        let two = BlaschkeSpec::new(
            Complex64::new(1.0, 0.0),
            1,
            vec![(Complex64::new(0.5, 0.0), 1), (Complex64::new(0.8, 0.0), 2)],
        )?;
        checks.push(Check::at_most(
            "derivative_at_zero_product",
            "zeros 0.5 (m=1), 0.8 (m=2), q = 1".into(),
            (two.derivative_at_zero() - 0.32).abs(),
            1e-15,
        ));
        Ok((
            json!({ "samples": n, "compose_lambdas": self.cfg.compose_lambdas, "mu_lambdas": self.cfg.mu_lambdas }),
            checks,
        ))
    }
}

impl LoopData {
    fn compute(cfg: &VerifyConfig, exec: Exec) -> Result<Self> {
        let profile = MaxModProfile::new(cfg.loop_function.clone())?;
        let rf = profile.compute_rf(cfg.params.horizon, cfg.params.threshold)?;
        let mut loops = Vec::new();
        for &r in &cfg.loop_ladder {
            let c = field::classify_grid(&profile, &cfg.loop_grid, r, &cfg.params, exec)?;
            let l = field::fundamental_hole(&c.members).and_then(|h| field::extract_loop(&h, r));
            loops.push(l.map_err(|e| format!("R = {r}: {e}")));
        }
        let cells = field::ra_cells(&profile, &cfg.loop_grid, &cfg.params, rf, exec)?;
        let ra = field::ra_field_from_cells(&cfg.loop_grid, &cells);
        let osc = field::oscillation_field(&ra);
        let all = BitField::new(cfg.loop_grid, vec![true; cfg.loop_grid.len()]);
        let proxy = field::fatou_proxy(&osc, &all, cfg.proxy_percentile);
        Ok(Self {
            profile,
            rf,
            loops,
            ra,
            proxy,
        })
    }
}

fn submean_check(label: &str, r: &field::SubMeanReport, budget: f64) -> Check {
    let inputs = format!("{label}; {} tested cells", r.tested);
    let mut c = Check::at_most(
        &format!("{label}/violation_rate"),
        inputs,
        r.violation_rate(),
        budget,
    )
    .with_note(format!(
        "{} violations, largest excess {:.3e}",
        r.violations, r.worst_excess
    ));
    if r.tested == 0 {
        c.verdict = Verdict::Fail;
        c = c.with_note("no cells qualified for testing");
    }
    c
}

fn ladder(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step).round() as usize;
    (0..=n).map(|k| start + step * k as f64).collect()
}

fn nan_low(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else {
        x
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn gradient(s: &ScalarField, z: ComplexPoint) -> Option<f64> {
    let (hx, hy) = (s.grid.dx(), s.grid.dy());
    let gx = (s.bilinear(z + Complex64::new(hx, 0.0))?
        - s.bilinear(z - Complex64::new(hx, 0.0))?)
        / (2.0 * hx);
    let gy = (s.bilinear(z + Complex64::new(0.0, hy))?
        - s.bilinear(z - Complex64::new(0.0, hy))?)
        / (2.0 * hy);
    Some(gx.hypot(gy))
}

/// Log-uniform modulus in `[e^lo, e^hi]`, uniform argument.
pub fn draw<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> ComplexPoint {
    let t = rng.gen_range(lo..hi);
    let a = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    Complex64::from_polar(t.exp(), a)
}

fn random_disc<R: Rng>(rng: &mut R) -> DiscPoint {
    let r = rng.gen_range(0.0..0.999f64);
    DiscPoint::new(Complex64::from_polar(
        r,
        rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
    ))
    .expect("inside")
}

/// Rejection sampling of escaping points; batches are drawn sequentially and
/// classified in parallel. Returns the points and the number drawn.
pub fn sample_escaping<R: Rng>(
    p: &MaxModProfile,
    params: &EscapeParams,
    lo: f64,
    hi: f64,
    count: usize,
    rng: &mut R,
    exec: Exec,
) -> (Vec<ComplexPoint>, usize) {
    let mut out = Vec::with_capacity(count);
    let mut drawn = 0;
    while out.len() < count && drawn < 200 * count.max(1) {
        let batch: Vec<ComplexPoint> = (0..count.max(64)).map(|_| draw(rng, lo, hi)).collect();
        drawn += batch.len();
        let keep = par::map_slice(exec, &batch, |&z| {
            fastesc::orbit(p, z, params).escape_class == EscapeClass::Escaping
        });
        out.extend(batch.iter().zip(keep).filter(|(_, k)| *k).map(|(z, _)| *z));
    }
    out.truncate(count);
    (out, drawn)
}

/// Relative log-scale error of `R_A(f(z)) = M(R_A(z))`, when both sides are values.
fn conjugacy_error(
    p: &MaxModProfile,
    z: ComplexPoint,
    params: &EscapeParams,
    rf: f64,
) -> Option<f64> {
    let fz = p.function().eval(z).ok()?;
    let a = fastesc::compute_ra(p, z, params, rf).ok()?;
    let b = fastesc::compute_ra(p, fz, params, rf).ok()?;
    if a.status != RaStatus::Value || b.status != RaStatus::Value || !(a.value > rf) {
        return None;
    }
    let lhs = b.log_value;
    let rhs = p.phi(a.log_value);
    if rhs.is_real() && rhs.to_f64().abs() < 1.0 {
        return lhs.diff(&rhs).map(f64::abs);
    }
    lhs.ratio(&rhs).map(|q| (q - 1.0).abs())
}
