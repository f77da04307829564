//! Run configuration: flat `key = value` text with `#` comments, validated
//! defaults, and deterministic serialization for provenance headers.

use std::path::PathBuf;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Ode,
    Verify,
    Metric,
    Integral,
    Flow,
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Validated run parameters; the documented defaults apply to every field
/// not mentioned in the source text.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub y_max: f64,
    pub tol: f64,
    pub c: f64,
    pub d1: f64,
    /// Vertical-shift parameter of the second family / S2 system; `None`
    /// means "use p0 + 1 computed from the solved profile".
    pub p: Option<f64>,
    pub energy: f64,
    pub t_final: f64,
    pub dt: f64,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: Command::Report,
            y_max: 8.0,
            tol: 1e-10,
            c: 1.0,
            d1: 0.0,
            p: None,
            energy: 1.0,
            t_final: 100.0,
            dt: 1e-3,
            seed: 42,
            output_dir: None,
            format: Format::Json,
        }
    }
}

fn bad(key: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn parse_num(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| bad(key, format!("malformed number `{value}`")))
}

/// Parse flat `key = value` lines (one per line, `#` starts a comment)
/// into a validated configuration.
pub fn parse_config(source: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for raw in source.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "command" => {
                cfg.command = match value {
                    "ode" => Command::Ode,
                    "verify" => Command::Verify,
                    "metric" => Command::Metric,
                    "integral" => Command::Integral,
                    "flow" => Command::Flow,
                    "report" => Command::Report,
                    _ => return Err(bad(key, format!("unknown command `{value}`"))),
                }
            }
            "y_max" => cfg.y_max = parse_num(key, value)?,
            "tol" => cfg.tol = parse_num(key, value)?,
            "c" => cfg.c = parse_num(key, value)?,
            "d1" => cfg.d1 = parse_num(key, value)?,
            "p" => cfg.p = Some(parse_num(key, value)?),
            "E" => cfg.energy = parse_num(key, value)?,
            "T" => cfg.t_final = parse_num(key, value)?,
            "dt" => cfg.dt = parse_num(key, value)?,
            "seed" => {
                cfg.seed = value
                    .parse::<u64>()
                    .map_err(|_| bad(key, format!("malformed seed `{value}`")))?
            }
            "out" => cfg.output_dir = Some(PathBuf::from(value)),
            "format" => {
                cfg.format = match value {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    _ => return Err(bad(key, format!("unknown format `{value}`"))),
                }
            }
            _ => return Err(bad(key, "unknown key")),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Check every numeric field against the preconditions of the
    /// operations it feeds.
    pub fn validate(&self) -> Result<()> {
        if !(1.0..=12.0).contains(&self.y_max) {
            return Err(bad("y_max", format!("{} outside [1, 12]", self.y_max)));
        }
        if !(self.tol > 1e-14 && self.tol < 1e-4) {
            return Err(bad("tol", format!("{} outside (1e-14, 1e-4)", self.tol)));
        }
        if !self.c.is_finite() {
            return Err(bad("c", "not finite"));
        }
        if !self.d1.is_finite() {
            return Err(bad("d1", "not finite"));
        }
        if let Some(p) = self.p {
            if !p.is_finite() {
                return Err(bad("p", "not finite"));
            }
        }
        if !self.energy.is_finite() {
            return Err(bad("E", "not finite"));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(bad("T", format!("{} must be positive", self.t_final)));
        }
        if !(self.dt > 0.0 && self.dt <= 1e-2) {
            return Err(bad("dt", format!("{} outside (0, 1e-2]", self.dt)));
        }
        Ok(())
    }

    /// Config echo for provenance headers (deterministic key order).
    pub fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "command": serde_json::to_value(self.command).unwrap(),
            "y_max": self.y_max,
            "tol": self.tol,
            "c": self.c,
            "d1": self.d1,
            "p": self.p,
            "E": self.energy,
            "T": self.t_final,
            "dt": self.dt,
            "seed": self.seed,
            "format": serde_json::to_value(self.format).unwrap(),
        })
    }
}
