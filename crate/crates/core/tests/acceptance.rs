//! Acceptance criteria, one line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the summary prints under
//! `cargo test` without `--nocapture`. Exits nonzero if any criterion fails.

use std::f64::consts::{LN_2, PI, TAU};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use spiderweb_core::entire::FunctionSpec;
use spiderweb_core::fastesc::{self, EscapeParams, RaStatus};
use spiderweb_core::maxmod::MaxModProfile;
use spiderweb_core::par::Exec;
use spiderweb_core::verify::{self, SuiteReport, Verdict, VerifyConfig};

struct Outcome {
    passed: bool,
    detail: String,
}

fn suites(names: &[&str], cfg: &VerifyConfig) -> Outcome {
    let mut failed = Vec::new();
    let mut checks = 0;
    for name in names {
        match verify::run_suite(name, cfg, Exec::Parallel) {
            Ok(SuiteReport { checks: cs, .. }) => {
                checks += cs.len();
                failed.extend(
                    cs.iter().filter(|c| c.verdict == Verdict::Fail).map(|c| {
                        format!("{name}/{} measured {:e} vs {}", c.id, c.measured, c.bound)
                    }),
                );
            }
            Err(e) => failed.push(format!("{name}: {e}")),
        }
    }
    Outcome {
        passed: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{checks} checks")
        } else {
            failed.join("; ")
        },
    }
}

fn check<F: FnOnce() -> Outcome>(id: u32, title: &str, limit: Option<Duration>, f: F) -> bool {
    let t = Instant::now();
    let mut out = f();
    let elapsed = t.elapsed();
    if let Some(l) = limit {
        if elapsed > l {
            out.passed = false;
            out.detail = format!("{}; over the {:?} budget", out.detail, l);
        }
    }
    println!(
        "[{}] criterion {id:>2}: {title} ({}; {:.2?})",
        if out.passed { "PASS" } else { "FAIL" },
        out.detail,
        elapsed
    );
    out.passed
}

fn half() -> MaxModProfile {
    MaxModProfile::new(FunctionSpec::half_exp()).expect("builtin")
}

fn verify_json(cfg: &VerifyConfig, threads: usize) -> String {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("pool");
    pool.install(|| verify::run(&["all".to_owned()], cfg, Exec::Parallel))
        .expect("verify runs")
        .to_json()
}

fn main() {
    let cfg = VerifyConfig::default();
    let params = EscapeParams::default();
    let secs = Duration::from_secs;
    let mut ok = true;

    ok &= check(
        1,
        "maxmod convexity, growth and Hadamard",
        Some(secs(10)),
        || suites(&["maxmod_convexity", "maxmod_growth", "hadamard"], &cfg),
    );

    ok &= check(2, "R_f(half_exp) = ln 2", Some(secs(1)), || {
        let rf = half().compute_rf(params.horizon, params.threshold);
        match rf {
            Ok(rf) => Outcome {
                passed: (rf - LN_2).abs() <= 1e-8,
                detail: format!("|R_f - ln 2| = {:.3e}", (rf - LN_2).abs()),
            },
            Err(e) => Outcome {
                passed: false,
                detail: e.to_string(),
            },
        }
    });

    ok &= check(3, "R_A sequence non-increasing", Some(secs(30)), || {
        suites(&["ra_monotone"], &cfg)
    });

    ok &= check(4, "M(R_A(z)) = R_A(f(z))", Some(secs(10)), || {
        suites(&["ra_conjugacy"], &cfg)
    });

    ok &= check(
        5,
        "R_A(x) = x on the half_exp positive axis",
        Some(secs(5)),
        || {
            let p = half();
            let rf = p.compute_rf(params.horizon, params.threshold).expect("R_f");
            let mut worst: f64 = 0.0;
            for k in 1..=100 {
                let x = rf + (3.0 - rf) * k as f64 / 100.0;
                let r = fastesc::compute_ra(&p, Complex64::new(x, 0.0), &params, rf).expect("R_A");
                worst = worst.max(if r.status == RaStatus::Value {
                    (r.value - x).abs()
                } else {
                    f64::INFINITY
                });
            }
            Outcome {
                passed: worst <= 1e-9,
                detail: format!("worst error {worst:.3e} over 100 points"),
            }
        },
    );

    ok &= check(6, "growth ratio limit", None, || {
        suites(&["ratio_limit"], &cfg)
    });

    ok &= check(
        7,
        "sub-mean-value of v and v_1..v_3",
        Some(secs(300)),
        || suites(&["ra_submean"], &cfg),
    );

    ok &= check(
        8,
        "loop machinery and hole nesting",
        Some(secs(120)),
        || suites(&["loops_nesting"], &cfg),
    );

    ok &= check(9, "Blaschke contraction", Some(secs(10)), || {
        suites(&["blaschke_all"], &cfg)
    });

    ok &= check(10, "pure_exp sequence truncation", None, || {
        let p = MaxModProfile::new(FunctionSpec::pure_exp()).expect("builtin");
        let z = Complex64::new(TAU.ln(), PI / 2.0);
        let run = || fastesc::ra_sequence(&p, &fastesc::orbit(&p, z, &params), 30);
        let (a, b) = (run(), run());
        let reason = a.truncation.clone().unwrap_or_default();
        Outcome {
            passed: a.entries.len() == 2 && reason.contains("inverse undefined") && a == b,
            detail: format!("{} entries, reason: {reason}", a.entries.len()),
        }
    });

    ok &= check(
        11,
        "verify JSON identical across runs and thread counts",
        None,
        || {
            let one = verify_json(&cfg, 1);
            let again = verify_json(&cfg, 1);
            let many = verify_json(&cfg, 4);
            Outcome {
                passed: one == again && one == many,
                detail: format!("{} bytes", one.len()),
            }
        },
    );

    if !ok {
        std::process::exit(1);
    }
}
