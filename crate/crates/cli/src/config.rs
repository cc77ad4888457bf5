//! Flat `key = value` model configuration.
//!
//! ```text
//! # Q(f) = f^{1+1/k}
//! q = polytrope(1)
//! mass = 1.0
//! grid_nodes = 2000
//! ```
//!
//! Blank lines and `#` comments are ignored. Table paths are resolved
//! against the directory of the config file.

use std::path::{Path, PathBuf};

use casimir_reduce::convex::{make_polytrope_q_on, SampleRange};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum FunctionSpec {
    Polytrope(f64),
    Table(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    Q(FunctionSpec),
    Phi(FunctionSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub model: ModelSpec,
    pub mass: f64,
    pub grid_nodes: usize,
    /// Abscissae of sampled convex functions.
    pub sample: SampleRange,
    pub ode_rtol: f64,
    pub ode_atol: f64,
    pub mass_rtol: f64,
    /// Euler–Lagrange residual target of the minimizer.
    pub tol: f64,
    pub exterior: Option<PathBuf>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub mass: Option<f64>,
    pub k: Option<f64>,
    pub n: Option<f64>,
    pub grid_nodes: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Default)]
struct Raw {
    q: Option<FunctionSpec>,
    phi: Option<FunctionSpec>,
    mass: Option<f64>,
    grid_nodes: Option<usize>,
    sample_min: Option<f64>,
    sample_max: Option<f64>,
    sample_nodes: Option<usize>,
    ode_rtol: Option<f64>,
    ode_atol: Option<f64>,
    mass_rtol: Option<f64>,
    tol: Option<f64>,
    exterior: Option<PathBuf>,
}

fn line_error(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("line {line}: {msg}"))
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64, CliError> {
    v.parse::<f64>()
        .map_err(|_| line_error(line, format!("`{key}` expects a number, got `{v}`")))
}

fn parse_usize(line: usize, key: &str, v: &str) -> Result<usize, CliError> {
    v.parse::<usize>()
        .map_err(|_| line_error(line, format!("`{key}` expects a nonnegative integer, got `{v}`")))
}

fn parse_function(line: usize, key: &str, v: &str, base: &Path) -> Result<FunctionSpec, CliError> {
    let call = |name: &str| {
        v.strip_prefix(name)
            .and_then(|rest| rest.trim_start().strip_prefix('('))
            .and_then(|rest| rest.strip_suffix(')'))
            .map(str::trim)
    };
    if let Some(arg) = call("polytrope") {
        return Ok(FunctionSpec::Polytrope(parse_f64(line, key, arg)?));
    }
    if let Some(arg) = call("table") {
        if arg.is_empty() {
            return Err(line_error(line, "table() needs a path"));
        }
        return Ok(FunctionSpec::Table(base.join(arg)));
    }
    Err(line_error(
        line,
        format!("`{key}` expects polytrope(<index>) or table(<path>), got `{v}`"),
    ))
}

impl ModelConfig {
    /// Builds a config from an optional file and the overrides.
    pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let raw = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                parse(&text, path.parent().unwrap_or(Path::new(".")))?
            }
            None => Raw::default(),
        };
        finish(raw, overrides)
    }

    #[cfg(test)]
    pub fn from_text(text: &str, base: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        finish(parse(text, base)?, overrides)
    }
}

fn parse(text: &str, base: &Path) -> Result<Raw, CliError> {
    let mut raw = Raw::default();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| line_error(n, format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(line_error(n, format!("`{key}` has no value")));
        }
        let dup = |set: bool| {
            if set {
                Err(line_error(n, format!("`{key}` given twice")))
            } else {
                Ok(())
            }
        };
        match key {
            "q" => {
                dup(raw.q.is_some())?;
                raw.q = Some(parse_function(n, key, value, base)?);
            }
            "phi" => {
                dup(raw.phi.is_some())?;
                raw.phi = Some(parse_function(n, key, value, base)?);
            }
            "mass" => {
                dup(raw.mass.is_some())?;
                raw.mass = Some(parse_f64(n, key, value)?);
            }
            "grid_nodes" => {
                dup(raw.grid_nodes.is_some())?;
                raw.grid_nodes = Some(parse_usize(n, key, value)?);
            }
            "sample_min" => {
                dup(raw.sample_min.is_some())?;
                raw.sample_min = Some(parse_f64(n, key, value)?);
            }
            "sample_max" => {
                dup(raw.sample_max.is_some())?;
                raw.sample_max = Some(parse_f64(n, key, value)?);
            }
            "sample_nodes" => {
                dup(raw.sample_nodes.is_some())?;
                raw.sample_nodes = Some(parse_usize(n, key, value)?);
            }
            "ode_rtol" => {
                dup(raw.ode_rtol.is_some())?;
                raw.ode_rtol = Some(parse_f64(n, key, value)?);
            }
            "ode_atol" => {
                dup(raw.ode_atol.is_some())?;
                raw.ode_atol = Some(parse_f64(n, key, value)?);
            }
            "mass_rtol" => {
                dup(raw.mass_rtol.is_some())?;
                raw.mass_rtol = Some(parse_f64(n, key, value)?);
            }
            "tol" => {
                dup(raw.tol.is_some())?;
                raw.tol = Some(parse_f64(n, key, value)?);
            }
            "exterior" => {
                dup(raw.exterior.is_some())?;
                raw.exterior = Some(base.join(value));
            }
            _ => return Err(line_error(n, format!("unknown key `{key}`"))),
        }
    }
    Ok(raw)
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!(
            "`{name}` must be positive and finite, got {v}"
        )))
    }
}

fn finish(mut raw: Raw, o: &Overrides) -> Result<ModelConfig, CliError> {
    match (o.k, o.n) {
        (Some(_), Some(_)) => return Err(CliError::Config("--k and --n are mutually exclusive".into())),
        (Some(k), None) => {
            raw.q = Some(FunctionSpec::Polytrope(k));
            raw.phi = None;
        }
        (None, Some(n)) => {
            raw.phi = Some(FunctionSpec::Polytrope(n));
            raw.q = None;
        }
        (None, None) => {}
    }
    let model = match (raw.q, raw.phi) {
        (Some(q), None) => ModelSpec::Q(q),
        (None, Some(phi)) => ModelSpec::Phi(phi),
        (None, None) => {
            return Err(CliError::Config(
                "the model needs exactly one of `q` or `phi` (or --k / --n)".into(),
            ))
        }
        (Some(_), Some(_)) => return Err(CliError::Config("give either `q` or `phi`, not both".into())),
    };
    match &model {
        ModelSpec::Phi(FunctionSpec::Polytrope(n)) if !(*n > 0.0 && *n < 3.0) => {
            return Err(CliError::Config(format!("phi = polytrope(n) needs 0 < n < 3, got {n}")));
        }
        ModelSpec::Q(FunctionSpec::Polytrope(k)) if !(*k > 0.0 && k.is_finite()) => {
            return Err(CliError::Config(format!("q = polytrope(k) needs k > 0, got {k}")));
        }
        _ => {}
    }
    let defaults = SampleRange::default();
    let sample = SampleRange {
        min: positive("sample_min", raw.sample_min.unwrap_or(defaults.min))?,
        max: positive("sample_max", raw.sample_max.unwrap_or(defaults.max))?,
        nodes: raw.sample_nodes.unwrap_or(defaults.nodes),
    };
    if sample.max <= sample.min || sample.nodes < 4 {
        return Err(CliError::Config(format!(
            "sample range needs sample_min < sample_max and at least 4 nodes, got {sample:?}"
        )));
    }
    let grid_nodes = o.grid_nodes.or(raw.grid_nodes).unwrap_or(2000);
    if grid_nodes < 10 {
        return Err(CliError::Config(format!(
            "`grid_nodes` must be at least 10, got {grid_nodes}"
        )));
    }
    // make_polytrope_q_on validates k against the range
    if let ModelSpec::Q(FunctionSpec::Polytrope(k)) = &model {
        make_polytrope_q_on(*k, sample).map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(ModelConfig {
        model,
        mass: positive("mass", o.mass.or(raw.mass).unwrap_or(1.0))?,
        grid_nodes,
        sample,
        ode_rtol: positive("ode_rtol", raw.ode_rtol.unwrap_or(1e-12))?,
        ode_atol: positive("ode_atol", raw.ode_atol.unwrap_or(1e-14))?,
        mass_rtol: positive("mass_rtol", raw.mass_rtol.unwrap_or(1e-12))?,
        tol: positive("tol", o.tol.or(raw.tol).unwrap_or(1e-11))?,
        exterior: raw.exterior,
    })
}
