//! Effective run configuration: JSON file overlaid with command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use spiderweb_core::fastesc::EscapeParams;
use spiderweb_core::field::GridSpec;
use spiderweb_core::verify::VerifyConfig;
use spiderweb_core::{Error, FunctionSpec};

/// Bad input from the user; exits with status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "usage error: {}", self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Core errors caused by arguments become usage errors.
pub fn from_core(e: Error) -> anyhow::Error {
    match e {
        Error::Contract(_) | Error::Parse(_) | Error::UnknownSuite(_) => usage(e.to_string()),
        other => other.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub function: FunctionSpec,
    pub grid: GridSpec,
    pub r_ladder: Vec<f64>,
    pub params: EscapeParams,
    pub seed: u64,
    pub out: PathBuf,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let verify = VerifyConfig::default();
        Self {
            function: FunctionSpec::half_exp(),
            grid: GridSpec::square(Complex64::new(0.0, 0.0), 3.0, 256).expect("valid"),
            r_ladder: vec![1.0, 1.4, 1.8, 2.2, 2.6],
            params: EscapeParams::default(),
            seed: verify.seed,
            out: PathBuf::from("out"),
            verify,
        }
    }
}

/// Flag overrides; `None` keeps the file or default value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub function: Option<String>,
    pub grid: Option<String>,
    pub r: Option<String>,
    pub horizon: Option<usize>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, o: &Overrides) -> anyhow::Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| usage(format!("--config {}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| usage(format!("--config {}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(f) = &o.function {
            cfg.function = parse_function(f)?;
        }
        if let Some(g) = &o.grid {
            cfg.grid = parse_grid(g)?;
        }
        if let Some(r) = &o.r {
            cfg.r_ladder = parse_list(r, "--R")?;
        }
        if let Some(h) = o.horizon {
            cfg.params.horizon = h;
            cfg.verify.params.horizon = h;
        }
        if let Some(t) = o.tol {
            cfg.params.tol = t;
            cfg.verify.params.tol = t;
        }
        if let Some(out) = &o.out {
            cfg.out = out.clone();
        }
        if let Some(s) = o.seed {
            cfg.seed = s;
            cfg.verify.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> anyhow::Result<()> {
        self.function
            .validate()
            .map_err(|e| usage(format!("function: {e}")))?;
        self.grid
            .validate()
            .map_err(|e| usage(format!("grid: {e}")))?;
        if self.params.horizon == 0 {
            return Err(usage("params.horizon: must be at least 1"));
        }
        if !(self.params.tol > 0.0) {
            return Err(usage("params.tol: must be positive"));
        }
        if self.r_ladder.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(usage("r_ladder: radii must be positive and finite"));
        }
        Ok(())
    }
}

/// A built-in family name or an inline `{"family": ..., "params": ...}` object.
pub fn parse_function(s: &str) -> anyhow::Result<FunctionSpec> {
    if s.trim_start().starts_with('{') {
        serde_json::from_str(s).map_err(|e| usage(format!("--function: {e}")))
    } else {
        FunctionSpec::by_name(s).map_err(|e| usage(format!("--function: {e}")))
    }
}

pub fn parse_list(s: &str, flag: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| usage(format!("{flag}: `{p}`: {e}")))
        })
        .collect()
}

pub fn parse_point(s: &str, flag: &str) -> anyhow::Result<Complex64> {
    match parse_list(s, flag)?.as_slice() {
        &[re, im] => Ok(Complex64::new(re, im)),
        _ => Err(usage(format!("{flag}: expected re,im"))),
    }
}

/// `cx,cy,w,h,nx,ny`.
pub fn parse_grid(s: &str) -> anyhow::Result<GridSpec> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err(usage("--grid: expected cx,cy,w,h,nx,ny"));
    }
    let f = |k: usize| {
        parts[k]
            .parse::<f64>()
            .map_err(|e| usage(format!("--grid: `{}`: {e}", parts[k])))
    };
    let n = |k: usize| {
        parts[k]
            .parse::<usize>()
            .map_err(|e| usage(format!("--grid: `{}`: {e}", parts[k])))
    };
    GridSpec::new(Complex64::new(f(0)?, f(1)?), f(2)?, f(3)?, n(4)?, n(5)?)
        .map_err(|e| usage(format!("--grid: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_flag() {
        let g = parse_grid("0,0.5,4,2,40,20").unwrap();
        assert_eq!((g.nx, g.ny, g.width, g.height), (40, 20, 4.0, 2.0));
        assert!(parse_grid("0,0,4,2,40").is_err());
        assert!(parse_grid("0,0,4,2,1,20").is_err());
    }

    #[test]
    fn unknown_key_names_the_key() {
        let err = serde_json::from_str::<RunConfig>(r#"{"horizn": 3}"#).unwrap_err();
        assert!(err.to_string().contains("horizn"));
    }

    #[test]
    fn inline_function() {
        let f = parse_function(r#"{"family": "scaled_exp", "params": {"lambda": 0.2}}"#).unwrap();
        assert_eq!(f, FunctionSpec::scaled_exp(0.2));
        assert!(parse_function("sine").is_err());
    }
}
