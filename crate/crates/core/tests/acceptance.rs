//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Every tolerance is pinned here.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use dephase_core::estimates::{check_l_continuity, check_nesting, extract_h_infinity, fit_decay, mode_decay};
use dephase_core::io::field_to_bytes;
use dephase_core::oracle::particle_run;
use dephase_core::picard::iterate;
use dephase_core::solver::richardson_difference;
use dephase_core::{
    run, EtaGrid, FrequencyDensity, OmegaGrid, RunConfig, RunOutput, SpectralField, SpectralTransform,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};

const MODE_ZERO_TOL: f64 = 1e-12;
const MODE_ZERO_BUDGET: Duration = Duration::from_secs(60);
const FREE_GAUSSIAN_TOL: f64 = 1e-8;
const FREE_LORENTZIAN_TOL: f64 = 1e-3;
const DEPHASING_R2: f64 = 0.98;
const DEPHASING_RATE_SHIFT: f64 = 1e-3;
const CAUCHY_R2: f64 = 0.95;
const PICARD_TOL: f64 = 1e-6;
const PICARD_MAX_ITERS: usize = 20;
const PICARD_REDUCTION: f64 = 2.0;
const PICARD_DIRECT_TOL: f64 = 1e-4;
const FIXED_POINT_TOL: f64 = 1e-4;
const UNIFORM_BOUND_FACTOR: f64 = 2.0;
const PARTICLES: usize = 50_000;
const PARTICLE_TOL: f64 = 5e-3;
const PARTICLE_HORIZON: f64 = 10.0;
const NESTING_FIELDS: usize = 100;
const NESTING_PAIRS: [(f64, f64); 5] = [(0.0, 0.1), (0.1, 0.3), (0.25, 0.5), (0.4, 0.45), (0.0, 1.0)];
const CONTINUITY_STABILITY: f64 = 0.10;
const RICHARDSON_WINDOW: (f64, f64) = (24.0, 40.0);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn failed(e: impl std::fmt::Display) -> Outcome {
    outcome(false, format!("error: {e}"))
}

/// Lorentzian `Δ = 1` on a grid wide enough for a ~5e-4 tail error.
fn lorentzian(mu: f64, t_max: f64) -> RunConfig {
    let mut c = RunConfig::reference();
    c.mu = mu;
    c.t_max = t_max;
    c.initial.density = FrequencyDensity::Lorentzian { width: 1.0 };
    c.omega_grid = OmegaGrid::new(200.0, 4001).unwrap();
    // Δη·W ≤ π needs Δη ≤ π/200.
    c.eta_grid = EtaGrid::new(t_max.max(5.0), (2.0 * t_max.max(5.0) * 200.0 / 3.0).ceil() as usize + 1).unwrap();
    c
}

fn mode_zero(reference: &RunConfig) -> (Outcome, Option<RunOutput>) {
    let start = Instant::now();
    let out = match run(reference) {
        Ok(o) => o,
        Err(e) => return (failed(e), None),
    };
    let elapsed = start.elapsed();
    let transform = SpectralTransform::new(reference.omega_grid, reference.eta_grid).unwrap();
    let etas = reference.eta_grid.points();
    let mut worst = 0.0f64;
    for snap in &out.snapshots {
        let s = transform.apply(snap);
        for (v, &eta) in s.row(0).iter().zip(&etas) {
            let g = reference.initial.density.transform(eta).unwrap();
            worst = worst.max((v - g).norm());
        }
    }
    let pass = worst <= MODE_ZERO_TOL && elapsed <= MODE_ZERO_BUDGET;
    (
        outcome(pass, format!("sup |ĥ₀ - ĝ| = {worst:.3e} (tol {MODE_ZERO_TOL:e}), run {elapsed:.2?}")),
        Some(out),
    )
}

fn free_flow(reference: &RunConfig) -> Outcome {
    let mut c = reference.clone();
    c.mu = 0.0;
    c.t_max = 5.0;
    let gauss = match run(&c) {
        Ok(o) => o,
        Err(e) => return failed(e),
    };
    let eg = gauss
        .series
        .samples
        .iter()
        .map(|s| (s.r - 0.1 * (-0.5 * s.t * s.t).exp()).abs())
        .fold(0.0, f64::max);
    let lor = match run(&lorentzian(0.0, 5.0)) {
        Ok(o) => o,
        Err(e) => return failed(e),
    };
    let el = lor
        .series
        .samples
        .iter()
        .map(|s| (s.r - 0.1 * (-s.t).exp()).abs())
        .fold(0.0, f64::max);
    outcome(
        eg <= FREE_GAUSSIAN_TOL && el <= FREE_LORENTZIAN_TOL,
        format!("Gaussian err {eg:.3e} (tol {FREE_GAUSSIAN_TOL:e}), Lorentzian err {el:.3e} (tol {FREE_LORENTZIAN_TOL:e})"),
    )
}

fn dephasing() -> Outcome {
    let c = lorentzian(0.2, 20.0);
    let mut half = c.clone();
    half.dt /= 2.0;
    let fits = [&c, &half].map(|cfg| run(cfg).and_then(|o| fit_decay(&o.series, (5.0, 20.0))));
    let [Ok(a), Ok(b)] = fits else {
        return failed(format!("{:?}", fits.iter().find_map(|f| f.as_ref().err())));
    };
    let shift = (a.rate() - b.rate()).abs();
    outcome(
        a.slope < 0.0 && a.r_squared >= DEPHASING_R2 && shift < DEPHASING_RATE_SHIFT,
        format!(
            "slope {:.6} on [{}, {}], r² {:.6}, rate shift under dt/2 {shift:.2e}",
            a.slope, a.window.0, a.window.1, a.r_squared
        ),
    )
}

fn h_infinity(reference: &RunConfig, out: &RunOutput) -> Outcome {
    let transform = SpectralTransform::new(reference.omega_grid, reference.eta_grid).unwrap();
    let hinf = match extract_h_infinity(&out.snapshots, &transform, reference.weights.gamma, (0.0, reference.t_max)) {
        Ok(h) => h,
        Err(e) => return failed(e),
    };
    let Some(fit) = hinf.fit else {
        return outcome(false, "‖h(t) - h(t_max)‖ vanished identically; nothing decays".into());
    };
    let modes = match mode_decay(&out.final_field) {
        Ok(m) => m,
        Err(e) => return failed(e),
    };
    outcome(
        fit.r_squared >= CAUCHY_R2 && modes.is_geometric(CAUCHY_R2),
        format!(
            "Cauchy fit slope {:.4}, r² {:.4} on [{}, {}]; mode decay slope {:.3}/k, r² {:.4}, max ratio {:.3e}",
            fit.slope,
            fit.r_squared,
            fit.window.0,
            fit.window.1,
            modes.fit.slope,
            modes.fit.r_squared,
            modes.ratios.iter().copied().fold(0.0, f64::max)
        ),
    )
}

fn picard(reference: &RunConfig, direct: &RunOutput) -> (Outcome, Outcome) {
    let out = match iterate(reference, PICARD_TOL, PICARD_MAX_ITERS) {
        Ok(o) => o,
        Err(e) => return (failed(&e), failed(e)),
    };
    let deltas: Vec<f64> = out.records.iter().map(|r| r.delta_z).collect();
    // Reduction is required between consecutive rounds while above tolerance.
    let contracting = deltas
        .windows(2)
        .all(|w| w[0] < PICARD_TOL || w[0] / w[1] >= PICARD_REDUCTION);
    let agreement = out.z_series.sup_distance(&direct.series);
    let residual = out.records.last().map_or(f64::INFINITY, |r| r.fixed_point_residual);
    let conv = outcome(
        out.converged && contracting && agreement <= PICARD_DIRECT_TOL && residual <= FIXED_POINT_TOL,
        format!(
            "{} rounds, delta_z {:?}, sup|z - z_direct| {agreement:.3e}, fixed-point residual {residual:.3e}",
            out.records.len(),
            deltas.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>()
        ),
    );
    let first = &out.records[0];
    let max_h = out.records.iter().map(|r| r.triple_norm_h).fold(0.0, f64::max);
    let max_r = out.records.iter().map(|r| r.triple_norm_r).fold(0.0, f64::max);
    let bounds = outcome(
        max_h <= UNIFORM_BOUND_FACTOR * first.triple_norm_h && max_r <= UNIFORM_BOUND_FACTOR * first.triple_norm_r,
        format!(
            "max |||h||| {max_h:.5e} vs first {:.5e}; max |||R||| {max_r:.5e} vs first {:.5e}",
            first.triple_norm_h, first.triple_norm_r
        ),
    );
    (conv, bounds)
}

fn particles(reference: &RunConfig) -> Outcome {
    let mut c = reference.clone();
    c.t_max = PARTICLE_HORIZON;
    let kinetic = match run(&c) {
        Ok(o) => o.series,
        Err(e) => return failed(e),
    };
    let half_width = c.omega_grid.half_width;
    let gap = |n: usize| {
        particle_run(&c.initial, n, c.mu, c.dt, c.t_max, c.seed, half_width).map(|p| {
            p.samples
                .iter()
                .zip(&kinetic.samples)
                .map(|(a, b)| (a.r - b.r).abs())
                .fold(0.0, f64::max)
        })
    };
    match (gap(PARTICLES), gap(2 * PARTICLES)) {
        (Ok(a), Ok(b)) => outcome(
            a <= PARTICLE_TOL && b < a,
            format!("sup |ΔR| = {a:.3e} at n = {PARTICLES}, {b:.3e} at n = {}", 2 * PARTICLES),
        ),
        (Err(e), _) | (_, Err(e)) => failed(e),
    }
}

fn nesting() -> Outcome {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let grid = EtaGrid::new(20.0, 81).unwrap();
    let fields: Vec<SpectralField> = (0..NESTING_FIELDS)
        .map(|i| {
            let mut f = SpectralField::zeros(6, grid, i as f64);
            let decay: f64 = rng.random_range(0.0..1.5);
            let etas = grid.points();
            for k in -6..=6i32 {
                for (v, &eta) in f.row_mut(k).iter_mut().zip(&etas) {
                    let envelope = (-decay * (k.abs() as f64 + eta.abs())).exp();
                    *v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * envelope;
                }
            }
            f
        })
        .collect();
    match check_nesting(&fields, &NESTING_PAIRS, 3.0) {
        Ok(t) => outcome(
            true,
            format!("{} checks, 0 violations, max LHS/RHS {:.4}", t.ratios.len(), t.max_ratio),
        ),
        Err(e) => failed(e),
    }
}

fn continuity(reference: &RunConfig, base: &RunOutput) -> Outcome {
    let (lambda, p) = (0.25, reference.weights.gamma);
    let mut fine = reference.clone();
    fine.dt /= 2.0;
    fine.k_max *= 2;
    fine.omega_grid = fine.omega_grid.refined();
    let track = |c: &RunConfig, o: &RunOutput| {
        let tr = SpectralTransform::new(c.omega_grid, c.eta_grid)?;
        check_l_continuity(&o.snapshots, &o.series, &tr, lambda, p)
    };
    let coarse = track(reference, base);
    let refined = run(&fine).and_then(|o| track(&fine, &o));
    match (coarse, refined) {
        (Ok(a), Ok(b)) => {
            let change = a.relative_change(&b);
            outcome(
                a.is_finite() && b.is_finite() && change <= CONTINUITY_STABILITY,
                format!(
                    "running max {:.6} (t = {}), refined {:.6}, relative change {change:.2e}",
                    a.max_ratio, a.argmax_t, b.max_ratio
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => failed(e),
    }
}

fn determinism(reference: &RunConfig, first: &RunOutput) -> Outcome {
    let bytes = |o: &RunOutput| {
        let mut b = o.series.to_csv().into_bytes();
        b.extend(field_to_bytes(&o.final_field));
        b
    };
    let identical_run = match run(reference) {
        Ok(o) => bytes(&o) == bytes(first),
        Err(e) => return failed(e),
    };
    let particle = || particle_run(&reference.initial, 2000, reference.mu, 0.05, 2.0, reference.seed, 8.0);
    let identical_particles = match (particle(), particle()) {
        (Ok(a), Ok(b)) => a.to_csv() == b.to_csv(),
        _ => false,
    };
    let state = &first.snapshots[4];
    let ratio = match (
        richardson_difference(state, 0.1, reference.mu),
        richardson_difference(state, 0.05, reference.mu),
    ) {
        (Ok(a), Ok(b)) => a / b,
        (Err(e), _) | (_, Err(e)) => return failed(e),
    };
    outcome(
        identical_run && identical_particles && (RICHARDSON_WINDOW.0..=RICHARDSON_WINDOW.1).contains(&ratio),
        format!(
            "kinetic rerun identical: {identical_run}, particle rerun identical: {identical_particles}, \
             Richardson ratio {ratio:.3} at t = {} (dt 0.1 → 0.05)",
            state.time_tag
        ),
    )
}

fn main() -> ExitCode {
    let reference = RunConfig::reference();
    let mut lines: Vec<(usize, &str, Outcome)> = Vec::new();
    let (c1, base) = mode_zero(&reference);
    lines.push((1, "mode-zero conservation", c1));
    lines.push((2, "free-flow exactness", free_flow(&reference)));
    lines.push((3, "exponential dephasing", dephasing()));
    match &base {
        Some(out) => {
            lines.push((4, "h_inf existence", h_infinity(&reference, out)));
            let (c5, c6) = picard(&reference, out);
            lines.push((5, "Picard-direct agreement", c5));
            lines.push((6, "uniform bounds in n", c6));
        }
        None => {
            for (i, name) in [(4, "h_inf existence"), (5, "Picard-direct agreement"), (6, "uniform bounds in n")] {
                lines.push((i, name, outcome(false, "reference run failed".into())));
            }
        }
    }
    lines.push((7, "particle cross-validation", particles(&reference)));
    lines.push((8, "nesting inequality", nesting()));
    match &base {
        Some(out) => {
            lines.push((9, "operator continuity", continuity(&reference, out)));
            lines.push((10, "determinism and RK4 order", determinism(&reference, out)));
        }
        None => {
            for (i, name) in [(9, "operator continuity"), (10, "determinism and RK4 order")] {
                lines.push((i, name, outcome(false, "reference run failed".into())));
            }
        }
    }
    let mut all = true;
    for (i, name, o) in &lines {
        all &= o.pass;
        println!("criterion {i:>2} {}: {name} — {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
