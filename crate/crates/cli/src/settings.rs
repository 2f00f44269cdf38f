//! Config loading and `DEPHASE_*` environment overrides.
//!
//! Precedence, lowest first: the config file (or the built-in reference
//! configuration), then environment variables, then command-line flags.

use std::path::Path;

use dephase_core::{Complex64, Perturbation, RunConfig};

use crate::error::{CliError, CliResult};

pub const ENV_PREFIX: &str = "DEPHASE_";

/// Reads TOML, or JSON when the extension says so or TOML parsing fails on
/// something that looks like a JSON object.
pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
    let config = if is_json {
        RunConfig::from_json(&text)?
    } else {
        RunConfig::from_toml(&text)?
    };
    Ok(config)
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{ENV_PREFIX}{key}: cannot parse {value:?}")))
}

/// Sets one named scalar. Shared by environment overrides and sweeps.
pub fn set_parameter(config: &mut RunConfig, name: &str, value: &str) -> CliResult<()> {
    match name {
        "mu" => config.mu = parse(name, value)?,
        "dt" => config.dt = parse(name, value)?,
        "t_max" => config.t_max = parse(name, value)?,
        "k_max" => config.k_max = parse(name, value)?,
        "epsilon" => set_epsilon(config, parse(name, value)?),
        _ => return Err(CliError::Usage(format!("unknown parameter {name:?} (mu, epsilon, dt, t_max, k_max)"))),
    }
    Ok(())
}

/// Replaces the first-mode amplitude by the real number `eps`.
fn set_epsilon(config: &mut RunConfig, eps: f64) {
    let p = &mut config.initial.perturbations;
    p.retain(|q| q.mode.abs() != 1);
    p.insert(0, Perturbation::new(1, Complex64::new(eps, 0.0)));
}

/// Applies `DEPHASE_MU`, `DEPHASE_EPSILON`, `DEPHASE_DT`, `DEPHASE_T_MAX`,
/// `DEPHASE_K_MAX` from the given environment.
pub fn apply_env<I, K, V>(config: &mut RunConfig, vars: I) -> CliResult<()>
where
    I: IntoIterator<Item = (K, V)>,
    K: AsRef<str>,
    V: AsRef<str>,
{
    for (k, v) in vars {
        let Some(name) = k.as_ref().strip_prefix(ENV_PREFIX) else {
            continue;
        };
        let name = name.to_ascii_lowercase();
        if ["mu", "epsilon", "dt", "t_max", "k_max"].contains(&name.as_str()) {
            set_parameter(config, &name, v.as_ref())?;
        }
    }
    Ok(())
}
