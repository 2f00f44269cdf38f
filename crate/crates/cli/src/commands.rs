//! Subcommand implementations. Each returns the manifest it wrote.

use std::path::{Path, PathBuf};

use dephase_core::estimates::{
    check_apriori_r, check_l_continuity, extract_h_infinity, fit_decay, mode_decay, CheckReport,
};
use dephase_core::io::{field_to_bytes, field_to_csv, field_from_bytes, snapshot_name};
use dephase_core::norms::norm_lambda_p;
use dephase_core::oracle::particle_run;
use dephase_core::picard::iterate;
use dephase_core::solver::richardson_difference;
use dephase_core::{make_initial_field, run, MixedField, OrderSeries, RunConfig, SpectralTransform};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::manifest::{read_manifest, verify_inventory, ExperimentManifest, OutputDir};
use crate::settings::set_parameter;

/// Richardson ratios inside this window indicate the asymptotic 4th-order regime.
const RICHARDSON_WINDOW: (f64, f64) = (24.0, 40.0);
/// Below this one-step difference the ratio is roundoff, not truncation.
const RICHARDSON_FLOOR: f64 = 1e-13;
/// Largest acceptable Richardson estimate of the one-step error.
const LOCAL_ERROR_TOL: f64 = 1e-8;
const MODE_ZERO_TOL: f64 = 1e-12;

fn write_config(out: &mut OutputDir, config: &RunConfig) -> CliResult<String> {
    let json = config.canonical_json();
    out.write("config.json", json.as_bytes())?;
    Ok(json)
}

fn write_snapshots(out: &mut OutputDir, snapshots: &[MixedField], csv: bool) -> CliResult<()> {
    for (i, s) in snapshots.iter().enumerate() {
        let name = snapshot_name(i);
        out.write(&format!("snapshots/{name}"), &field_to_bytes(s))?;
        if csv {
            out.write(&format!("snapshots/{}", name.replace(".bin", ".csv")), field_to_csv(s).as_bytes())?;
        }
    }
    Ok(())
}

/// One-step Richardson ratio at `t = 0`, or `None` when both differences
/// are at roundoff level.
fn richardson_ratio(config: &RunConfig) -> CliResult<Option<(f64, f64)>> {
    let f0 = make_initial_field(&config.initial, config.omega_grid, config.k_max)?;
    let coarse = richardson_difference(&f0, config.dt, config.mu)?;
    let fine = richardson_difference(&f0, 0.5 * config.dt, config.mu)?;
    Ok((coarse > RICHARDSON_FLOOR).then(|| (coarse / fine, coarse)))
}

fn record_richardson(out: &mut OutputDir, config: &RunConfig) -> CliResult<()> {
    let phase_step = config.dt * config.omega_grid.half_width;
    if phase_step > std::f64::consts::PI {
        out.warnings.push(format!(
            "dt·max|ω| = {phase_step:.3} exceeds π: the rotating phases e^{{itω}} are under-resolved"
        ));
    }
    match richardson_ratio(config) {
        Ok(Some((ratio, diff))) => {
            let local = diff * 16.0 / 15.0;
            let in_window = (RICHARDSON_WINDOW.0..=RICHARDSON_WINDOW.1).contains(&ratio);
            if local > LOCAL_ERROR_TOL {
                out.warnings.push(format!(
                    "Richardson local-error estimate {local:.2e} per step at dt = {} exceeds {LOCAL_ERROR_TOL:e}",
                    config.dt
                ));
            }
            let ok = in_window && local <= LOCAL_ERROR_TOL;
            if !in_window {
                out.warnings.push(format!(
                    "Richardson ratio {ratio:.2} at dt = {} is outside [{}, {}]: the step is not in the 4th-order regime",
                    config.dt, RICHARDSON_WINDOW.0, RICHARDSON_WINDOW.1
                ));
            }
            out.check("richardson_ratio", ok, ratio, format!("one-step difference {diff:.3e}"));
        }
        Ok(None) => out.check("richardson_ratio", true, f64::NAN, "one-step difference at roundoff"),
        Err(e) => {
            out.warnings.push(format!("Richardson probe failed: {e}"));
            out.check("richardson_ratio", false, f64::NAN, e.to_string());
        }
    }
    Ok(())
}

pub fn simulate(config: &RunConfig, out_dir: &Path) -> CliResult<ExperimentManifest> {
    let mut out = OutputDir::create(out_dir)?;
    let json = write_config(&mut out, config)?;
    record_richardson(&mut out, config)?;
    let result = run(config)?;
    out.write("order_series.csv", result.series.to_csv().as_bytes())?;
    write_snapshots(&mut out, &result.snapshots, config.output.snapshot_csv)?;
    out.write("final_field.csv", field_to_csv(&result.final_field).as_bytes())?;

    let initial = &result.snapshots[0];
    let drift = result
        .snapshots
        .iter()
        .map(|s| s.row(0).iter().zip(initial.row(0)).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    out.check("mode_zero_conservation", drift <= MODE_ZERO_TOL, drift, "sup_t,ω |h₀(t) - h₀(0)|");
    let mass = result.final_field.mass();
    out.check("mass", (mass - 1.0).abs() <= 1e-12, mass, "∫ h₀ dω at t_max");
    out.check(
        "reality_drift",
        result.max_reality_drift <= 1e-12,
        result.max_reality_drift,
        "largest conjugate-symmetry defect removed per step",
    );
    let r_max = result.series.moduli().into_iter().fold(0.0, f64::max);
    out.check(
        "order_parameter_bound",
        r_max <= 1.0 + 1e-12,
        r_max,
        "max R(t); above 1 means the mode truncation no longer resolves the solution",
    );
    if result.tail_mass > 1e-3 {
        out.warnings.push(format!("frequency grid truncates {:.2e} of the density mass", result.tail_mass));
    }
    out.finish("simulate", &json)
}

pub fn picard(config: &RunConfig, out_dir: &Path) -> CliResult<ExperimentManifest> {
    let mut out = OutputDir::create(out_dir)?;
    let json = write_config(&mut out, config)?;
    let outcome = iterate(config, config.picard.tol, config.picard.max_iters)?;
    out.write("picard_log.jsonl", outcome.log_json().as_bytes())?;
    out.write("order_series.csv", outcome.z_series.to_csv_tagged(Some("picard")).as_bytes())?;
    out.write("final_field.csv", field_to_csv(outcome.trajectory.last()).as_bytes())?;
    let last = outcome.records.last().expect("at least one round");
    out.check(
        "converged",
        outcome.converged,
        outcome.records.len() as f64,
        format!("delta_z {:.3e}, delta_h {:.3e}", last.delta_z, last.delta_h),
    );
    out.check(
        "fixed_point_residual",
        last.fixed_point_residual <= 1e-4,
        last.fixed_point_residual,
        "sup_t |ĥ₁(t,t) - z(t)|",
    );
    let converged = outcome.converged;
    let manifest = out.finish("picard", &json)?;
    if !converged {
        return Err(CliError::Numerical(format!(
            "Picard iteration did not reach tol {} in {} rounds (last delta_z {:.3e})",
            config.picard.tol, config.picard.max_iters, last.delta_z
        )));
    }
    Ok(manifest)
}

pub fn particles(config: &RunConfig, out_dir: &Path) -> CliResult<ExperimentManifest> {
    let mut out = OutputDir::create(out_dir)?;
    let json = write_config(&mut out, config)?;
    let dt = config.particles.dt.unwrap_or(config.dt);
    let series = particle_run(
        &config.initial,
        config.particles.n,
        config.mu,
        dt,
        config.t_max,
        config.seed,
        config.omega_grid.half_width,
    )?;
    out.write("particle_series.csv", series.to_csv_tagged(Some("particles")).as_bytes())?;
    out.finish("particles", &json)
}

/// Everything `estimates` needs from a simulate directory.
struct RunData {
    config: RunConfig,
    series: OrderSeries,
    snapshots: Vec<MixedField>,
}

fn read(dir: &Path, name: &str) -> CliResult<Vec<u8>> {
    let path = dir.join(name);
    std::fs::read(&path).map_err(|e| CliError::io(path, e))
}

fn load_run(dir: &Path) -> CliResult<RunData> {
    let manifest = read_manifest(dir)?;
    let diff = verify_inventory(dir, &manifest);
    let mut required_missing: Vec<&str> = ["config.json", "order_series.csv"]
        .into_iter()
        .filter(|r| !manifest.files.iter().any(|f| f.path == *r))
        .collect();
    let snapshot_names: Vec<&str> = manifest
        .files
        .iter()
        .map(|f| f.path.as_str())
        .filter(|p| p.starts_with("snapshots/") && p.ends_with(".bin"))
        .collect();
    if snapshot_names.is_empty() {
        required_missing.push("snapshots/*.bin");
    }
    if !diff.is_clean() || !required_missing.is_empty() {
        let mut report = diff.to_string();
        for r in required_missing {
            report.push_str(&format!("- {r} (not in inventory)\n"));
        }
        return Err(CliError::Config(format!(
            "run directory {} does not match its inventory:\n{}",
            dir.display(),
            report.trim_end()
        )));
    }
    let config = RunConfig::from_json(&String::from_utf8_lossy(&read(dir, "config.json")?))?;
    let series = OrderSeries::from_csv(&String::from_utf8_lossy(&read(dir, "order_series.csv")?))?;
    let mut names = snapshot_names;
    names.sort_unstable();
    let snapshots = names
        .into_iter()
        .map(|n| Ok(field_from_bytes(&read(dir, n)?)?))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(RunData {
        config,
        series,
        snapshots,
    })
}

/// Fit window for `R(t)`: the last three quarters of the horizon.
fn decay_window(t_max: f64) -> (f64, f64) {
    (0.25 * t_max, t_max)
}

/// Reports plus, when available, the Cauchy distances `(t, d(t))`.
type Estimates = (Vec<CheckReport>, Option<Vec<(f64, f64)>>);

fn estimate_reports(data: &RunData) -> CliResult<Estimates> {
    let c = &data.config;
    let tr = SpectralTransform::new(c.omega_grid, c.eta_grid)?;
    let (lambda, p) = (0.5 * c.weights.lambda0, c.weights.gamma);
    let mut reports = Vec::new();
    reports.push(match fit_decay(&data.series, decay_window(c.t_max)) {
        Ok(f) => CheckReport::from_fit("order_parameter_decay", &f),
        Err(e) => CheckReport::failed("order_parameter_decay", &e),
    });
    reports.push(match check_l_continuity(&data.snapshots, &data.series, &tr, lambda, p) {
        Ok(t) => CheckReport::from_track(&t),
        Err(e) => CheckReport::failed("operator_continuity", &e),
    });
    let f0 = norm_lambda_p(&tr.apply(&data.snapshots[0]), lambda, p)?.value;
    reports.push(
        match check_apriori_r(&data.series, &data.snapshots, &tr, f0, lambda, p, c.mu) {
            Ok(t) => CheckReport::from_track(&t),
            Err(e) => CheckReport::failed("apriori_r", &e),
        },
    );
    let mut distances = None;
    reports.push(match extract_h_infinity(&data.snapshots, &tr, p, (0.0, c.t_max)) {
        Ok(h) => {
            distances = Some(h.distances.clone());
            match h.fit {
                Some(f) => CheckReport::from_fit("h_infinity", &f),
                // d ≡ 0: the trajectory already sits at its limit.
                None => CheckReport {
                    name: "h_infinity".into(),
                    max_ratio: Some(0.0),
                    argmax_t: None,
                    fit: None,
                    refinement_stability: None,
                    error: None,
                },
            }
        }
        Err(e) => CheckReport::failed("h_infinity", &e),
    });
    let last = data.snapshots.last().expect("nonempty");
    reports.push(match mode_decay(last) {
        Ok(m) => CheckReport::from_fit("mode_decay", &m.fit),
        Err(e) => CheckReport::failed("mode_decay", &e),
    });
    Ok((reports, distances))
}

pub fn estimates(run_dir: &Path, out_dir: &Path) -> CliResult<ExperimentManifest> {
    let data = load_run(run_dir)?;
    let mut out = OutputDir::create(out_dir)?;
    let (reports, distances) = estimate_reports(&data)?;
    let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
    out.write("estimates.json", json.as_bytes())?;
    if let Some(d) = distances {
        let mut csv = String::from("t,cauchy_distance\n");
        for (t, v) in d {
            csv.push_str(&format!("{t:.16e},{v:.16e}\n"));
        }
        out.write("cauchy_distances.csv", csv.as_bytes())?;
    }
    for r in &reports {
        let pass = r.error.is_none();
        let value = r.max_ratio.or(r.fit.map(|f| f.slope)).unwrap_or(f64::NAN);
        out.check(&r.name, pass, value, r.error.clone().unwrap_or_default());
    }
    out.finish("estimates", &data.config.canonical_json())
}

/// One row of a sweep summary.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: String,
    pub status: &'static str,
    pub decay_rate: f64,
    pub r_squared: f64,
    pub max_continuity_ratio: f64,
    pub max_apriori_ratio: f64,
    pub error: String,
}

impl SweepRow {
    fn failed(value: &str, status: &'static str, error: String) -> Self {
        Self {
            value: value.to_owned(),
            status,
            decay_rate: f64::NAN,
            r_squared: f64::NAN,
            max_continuity_ratio: f64::NAN,
            max_apriori_ratio: f64::NAN,
            error,
        }
    }

    fn csv_line(&self) -> String {
        format!(
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},\"{}\"\n",
            self.value,
            self.status,
            self.decay_rate,
            self.r_squared,
            self.max_continuity_ratio,
            self.max_apriori_ratio,
            self.error.replace('"', "'")
        )
    }
}

fn sweep_row(base: &RunConfig, param: &str, value: &str) -> (SweepRow, Option<OrderSeries>) {
    let mut c = base.clone();
    if let Err(e) = set_parameter(&mut c, param, value) {
        return (SweepRow::failed(value, "config_error", e.to_string()), None);
    }
    let result = match run(&c) {
        Ok(r) => r,
        Err(e) => {
            let status = if CliError::from(e.clone()).exit_code() == 1 { "config_error" } else { "numerical_error" };
            return (SweepRow::failed(value, status, e.to_string()), None);
        }
    };
    let data = RunData {
        config: c,
        series: result.series,
        snapshots: result.snapshots,
    };
    let reports = match estimate_reports(&data) {
        Ok((r, _)) => r,
        Err(e) => return (SweepRow::failed(value, "numerical_error", e.to_string()), Some(data.series)),
    };
    let find = |name: &str| reports.iter().find(|r| r.name == name).expect("report present");
    let decay = find("order_parameter_decay");
    let row = SweepRow {
        value: value.to_owned(),
        status: "ok",
        decay_rate: decay.fit.map_or(f64::NAN, |f| -f.slope),
        r_squared: decay.fit.map_or(f64::NAN, |f| f.r2),
        max_continuity_ratio: find("operator_continuity").max_ratio.unwrap_or(f64::NAN),
        max_apriori_ratio: find("apriori_r").max_ratio.unwrap_or(f64::NAN),
        error: decay.error.clone().unwrap_or_default(),
    };
    (row, Some(data.series))
}

pub fn sweep(config: &RunConfig, param: &str, values: &[String], out_dir: &Path) -> CliResult<ExperimentManifest> {
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    if !["mu", "epsilon", "dt", "k_max"].contains(&param) {
        return Err(CliError::Usage(format!("cannot sweep {param:?}; choose mu, epsilon, dt or k_max")));
    }
    let mut out = OutputDir::create(out_dir)?;
    let json = write_config(&mut out, config)?;
    let rows: Vec<(SweepRow, Option<OrderSeries>)> =
        values.par_iter().map(|v| sweep_row(config, param, v)).collect();
    let mut summary = format!("{param},status,decay_rate,r_squared,max_continuity_ratio,max_apriori_ratio,error\n");
    for (i, (row, series)) in rows.iter().enumerate() {
        summary.push_str(&row.csv_line());
        if let Some(s) = series {
            out.write(&format!("runs/{param}_{i:03}/order_series.csv"), s.to_csv().as_bytes())?;
        }
        out.check(&format!("{param}={}", row.value), row.status == "ok", row.decay_rate, row.error.clone());
    }
    out.write("sweep_summary.csv", summary.as_bytes())?;
    out.finish("sweep", &json)
}

/// `--out`, else the config's output directory, else `dephase-out/<command>`.
pub fn output_dir(flag: Option<&Path>, config: &RunConfig, command: &str) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("dephase-out").join(command))
}
