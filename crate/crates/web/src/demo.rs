//! Plain-Rust bodies of the exported operations, testable off the browser.

use dephase_core::oracle::particle_run;
use dephase_core::solver::reconstruct_f;
use dephase_core::{
    run, Complex64, EtaGrid, FrequencyDensity, InitialDatum, OmegaGrid, Perturbation, Result, RunConfig,
};

/// Coarse but well-resolved settings sized for an interactive page.
pub fn demo_config(mu: f64, epsilon: f64, sigma: f64, t_max: f64) -> Result<RunConfig> {
    let mut c = RunConfig::reference();
    c.mu = mu;
    c.t_max = t_max;
    c.dt = 0.02;
    c.k_max = 12;
    c.snapshot_interval = t_max;
    let w = 8.0 * sigma;
    c.omega_grid = OmegaGrid::new(w, 129)?;
    let reach = t_max.max(10.0);
    let n_eta = (2.0 * reach * w / std::f64::consts::PI).ceil() as usize + 2;
    c.eta_grid = EtaGrid::new(reach, n_eta | 1)?;
    c.initial = InitialDatum::new(
        FrequencyDensity::Gaussian { sigma },
        vec![Perturbation::new(1, Complex64::new(epsilon, 0.0))],
    );
    c.validate()?;
    Ok(c)
}

/// `[t₀, R₀, t₁, R₁, …]`, every `every` steps.
pub fn order_parameter_curve(config: &RunConfig, every: usize) -> Result<Vec<f64>> {
    let out = run(config)?;
    Ok(out
        .series
        .samples
        .iter()
        .step_by(every.max(1))
        .flat_map(|s| [s.t, s.r])
        .collect())
}

/// `f(t, ϑ, ω)` on `n_theta × n_ω`, row-major in `ϑ ∈ [0, 2π)`.
pub struct Density {
    pub n_theta: usize,
    pub n_omega: usize,
    pub omega_max: f64,
    pub values: Vec<f64>,
}

pub fn phase_density(config: &RunConfig, n_theta: usize) -> Result<Density> {
    let out = run(config)?;
    let thetas: Vec<f64> = (0..n_theta)
        .map(|i| 2.0 * std::f64::consts::PI * i as f64 / n_theta as f64)
        .collect();
    let values = reconstruct_f(&out.final_field, config.t_max, &thetas)?;
    Ok(Density {
        n_theta,
        n_omega: config.omega_grid.n_points,
        omega_max: config.omega_grid.half_width,
        values,
    })
}

/// `[t, R_kinetic, R_particles]` triples every `every` steps.
pub fn particle_comparison(config: &RunConfig, n: usize, seed: u64, every: usize) -> Result<Vec<f64>> {
    let kinetic = run(config)?.series;
    let particles = particle_run(
        &config.initial,
        n,
        config.mu,
        config.dt,
        config.t_max,
        seed,
        config.omega_grid.half_width,
    )?;
    Ok(kinetic
        .samples
        .iter()
        .zip(&particles.samples)
        .step_by(every.max(1))
        .flat_map(|(k, p)| [k.t, k.r, p.r])
        .collect())
}
