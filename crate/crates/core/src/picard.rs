//! Constructive iteration for the nonlinear problem.
//!
//! Starting from the frozen datum `h⁰ ≡ f₀`, each round solves
//!
//! ```text
//! zⁿ(t) = ĥ₁(0,t) + μ Σ_{m=±1} (m/2) ∫₀ᵗ zⁿ_m(s) ĥⁿ_{1-m}(s, t - ms) ds
//! ```
//!
//! as a Volterra equation of the second kind (zⁿ on both sides), then the
//! linear transport `∂_t hⁿ⁺¹ = μ L_tⁿ hⁿ⁺¹` driven by `zⁿ`.

use num_complex::Complex64;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::field::{evaluate_spectral_at, make_initial_field, quadrature_phases, MixedField, SpectralTransform};
use crate::norms::{triple_norm_h_lattices, triple_norm_r, LogLattice, TripleNorm, WeightParams};
use crate::series::OrderSeries;
use crate::solver::{Coupling, SolverState};

/// Smallest admissible `||α|² - |β|²|` in the per-step endpoint solve.
const SINGULAR_FLOOR: f64 = 1e-8;

/// Snapshots of `h(t)` at a fixed step stride, `t_j = j·stride·dt`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<MixedField>,
    pub dt: f64,
    pub stride: usize,
}

impl Trajectory {
    /// `h(t) ≡ field` on `[0, n_steps·dt]`.
    pub fn frozen(field: &MixedField, dt: f64, stride: usize, n_steps: usize) -> Self {
        let snapshots = snapshot_steps(n_steps, stride)
            .into_iter()
            .map(|s| MixedField {
                time_tag: s as f64 * dt,
                ..field.clone()
            })
            .collect();
        Self { snapshots, dt, stride }
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time_tag).collect()
    }

    pub fn last(&self) -> &MixedField {
        self.snapshots.last().expect("trajectory is never empty")
    }

    /// Mode `k` at time `s`, linearly interpolated between snapshots.
    pub fn mode_at(&self, k: i32, s: f64) -> Vec<Complex64> {
        let h = self.stride as f64 * self.dt;
        let x = (s / h).max(0.0);
        let i = (x.floor() as usize).min(self.snapshots.len() - 1);
        let a = self.snapshots[i].row(k);
        if i + 1 >= self.snapshots.len() {
            return a.to_vec();
        }
        let b = &self.snapshots[i + 1];
        let span = b.time_tag - self.snapshots[i].time_tag;
        let frac = ((s - self.snapshots[i].time_tag) / span).clamp(0.0, 1.0);
        if frac == 0.0 {
            return a.to_vec();
        }
        a.iter().zip(b.row(k)).map(|(u, v)| u + (v - u) * frac).collect()
    }

    /// Snapshot closest to `t`.
    pub fn nearest(&self, t: f64) -> &MixedField {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.time_tag - t).abs().total_cmp(&(b.time_tag - t).abs()))
            .expect("trajectory is never empty")
    }
}

fn snapshot_steps(n_steps: usize, stride: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = (0..=n_steps).step_by(stride).collect();
    if !n_steps.is_multiple_of(stride) {
        steps.push(n_steps);
    }
    steps
}

/// Marches the Volterra equation for `z₁` on `t_n = n·dt`, `n ≤ n_steps`,
/// with the trapezoidal rule. The `m = +1` kernel is `ĝ(t - s)` from the
/// datum's mode zero; the `m = -1` kernel `ĥ₂(s, t + s)` is taken from the
/// trajectory. The implicit endpoint `α z + β conj(z) = c` is solved exactly.
pub fn volterra_solve(
    trajectory: &Trajectory,
    initial: &MixedField,
    mu: f64,
    dt: f64,
    n_steps: usize,
) -> Result<OrderSeries> {
    if initial.k_max < 2 {
        return Err(Error::Config("the Volterra kernel needs k_max ≥ 2".into()));
    }
    let grid = initial.grid;
    let times: Vec<f64> = (0..=n_steps).map(|n| n as f64 * dt).collect();
    let forcing: Vec<Complex64> = times.iter().map(|&t| evaluate_spectral_at(initial, 1, t)).collect();
    let ghat: Vec<Complex64> = times.iter().map(|&t| evaluate_spectral_at(initial, 0, t)).collect();
    let omegas = grid.points();

    // P_i(ω) = w(ω) h₂(s_i, ω) e^{-i s_i ω}, so that ĥ₂(s_i, t_n + s_i) = Σ_ω P_i(ω) e^{-i t_n ω}.
    let kernel_row = |n: usize| -> Vec<Complex64> {
        let s = times[n];
        let h2 = trajectory.mode_at(2, s);
        quadrature_phases(&grid, s)
            .into_iter()
            .zip(h2)
            .map(|(p, h)| p * h)
            .collect()
    };
    let phase = |t: f64| -> Vec<Complex64> { omegas.iter().map(|&w| Complex64::from_polar(1.0, -t * w)).collect() };
    let dotp = |a: &[Complex64], b: &[Complex64]| -> Complex64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };

    let mut z = vec![Complex64::default(); n_steps + 1];
    z[0] = forcing[0];
    // Running Σ_{i<n} w_i conj(z_i) P_i.
    let mut acc = vec![Complex64::default(); grid.n_points];
    let mut p_prev = kernel_row(0);
    let half = 0.5 * mu * dt;
    for n in 1..=n_steps {
        let wprev = if n == 1 { 0.5 } else { 1.0 };
        for (a, p) in acc.iter_mut().zip(&p_prev) {
            *a += wprev * z[n - 1].conj() * p;
        }
        let e = phase(times[n]);
        let p_n = kernel_row(n);
        let s_minus = dotp(&acc, &e);
        let k_nn = dotp(&p_n, &e);
        let s_plus: Complex64 = (0..n)
            .map(|i| if i == 0 { 0.5 } else { 1.0 } * z[i] * ghat[n - i])
            .sum();
        let c = forcing[n] + half * (s_plus - s_minus);
        let alpha = Complex64::new(1.0, 0.0) - 0.5 * half * ghat[0];
        let beta = 0.5 * half * k_nn;
        let det = alpha.norm_sqr() - beta.norm_sqr();
        if det.abs() < SINGULAR_FLOOR {
            return Err(Error::Numerical {
                t: times[n],
                reason: format!("singular Volterra endpoint system (det {det:.3e}); μ·dt too large"),
            });
        }
        z[n] = (alpha.conj() * c - beta * c.conj()) / det;
        p_prev = p_n;
    }
    Ok(OrderSeries::from_fn(times.iter().copied(), {
        let mut it = z.into_iter();
        move |_| it.next().expect("one value per time")
    }))
}

/// Linear transport with the prescribed order parameter; snapshots every
/// `stride` steps.
pub fn linear_transport_solve(
    z_series: &OrderSeries,
    initial: &MixedField,
    mu: f64,
    dt: f64,
    n_steps: usize,
    stride: usize,
) -> Result<Trajectory> {
    if z_series.t_max() + 1e-9 * dt < n_steps as f64 * dt {
        return Err(Error::Config("order series does not cover the transport horizon".into()));
    }
    let coupling = Coupling::Prescribed(z_series);
    let mut state = SolverState::new(initial.clone(), dt, stride, coupling);
    for _ in 0..n_steps {
        state.advance(mu, coupling)?;
    }
    state.close();
    Ok(Trajectory {
        snapshots: state.snapshots,
        dt,
        stride,
    })
}

/// Diagnostics of one Picard round.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub n: usize,
    #[serde(skip)]
    pub z_series: OrderSeries,
    /// `|||hⁿ|||_a` of the trajectory that produced `zⁿ`.
    pub triple_norm_h: f64,
    /// `|||Rⁿ|||_a`.
    pub triple_norm_r: f64,
    /// `sup_t |zⁿ - zⁿ⁻¹|`, with `z⁻¹` the free-flow forcing `ĥ₁(0, t)`.
    pub delta_z: f64,
    /// `sup` over snapshots of `sup_{k,η} |ĥⁿ⁺¹ - ĥⁿ|`.
    pub delta_h: f64,
    /// `sup_t |ĥⁿ⁺¹₁(t, t) - zⁿ(t)|`.
    pub fixed_point_residual: f64,
}

/// Outcome of [`iterate`]: per-round records plus the last `(h, z)` pair.
#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub records: Vec<IterationRecord>,
    pub trajectory: Trajectory,
    pub z_series: OrderSeries,
    pub converged: bool,
}

impl PicardOutcome {
    /// One JSON object per line: n, delta_z, delta_h, triple norms.
    pub fn log_json(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }
}

fn spectral_lattices(
    trajectory: &Trajectory,
    transform: &SpectralTransform,
    times: &[f64],
) -> Result<Vec<LogLattice>> {
    times
        .iter()
        .map(|&t| LogLattice::new(&transform.apply(trajectory.nearest(t))))
        .collect()
}

fn trajectory_distance(a: &Trajectory, b: &Trajectory, transform: &SpectralTransform) -> f64 {
    a.snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(x, y)| transform.apply(&x.difference(y)).sup_abs())
        .fold(0.0, f64::max)
}

/// `sup_t |ĥ₁(t, t) - z₁(t)|` over the trajectory's snapshot times.
pub fn fixed_point_check(trajectory: &Trajectory, z_series: &OrderSeries) -> f64 {
    trajectory
        .snapshots
        .iter()
        .map(|s| {
            let t = s.time_tag;
            let z = z_series.nearest(t).map_or(Complex64::default(), |x| x.z1);
            (evaluate_spectral_at(s, 1, t) - z).norm()
        })
        .fold(0.0, f64::max)
}

/// Runs the iteration until `delta_z < tol` and `delta_h < tol`, or
/// `max_iters` rounds. Non-convergence is reported through
/// [`PicardOutcome::converged`], with the full delta history.
pub fn iterate(config: &RunConfig, tol: f64, max_iters: usize) -> Result<PicardOutcome> {
    config.validate()?;
    if !(tol > 0.0) || max_iters == 0 {
        return Err(Error::Config("picard needs tol > 0 and max_iters ≥ 1".into()));
    }
    let initial = make_initial_field(&config.initial, config.omega_grid, config.k_max)?;
    let n_steps = config.n_steps();
    let stride = config.picard.snapshot_stride;
    let dt = config.dt;
    let params: WeightParams = config.weight_params();
    let transform = SpectralTransform::new(config.omega_grid, config.eta_grid)?;

    let mut h = Trajectory::frozen(&initial, dt, stride, n_steps);
    let mut z_prev = OrderSeries::from_fn((0..=n_steps).map(|n| n as f64 * dt), |t| {
        evaluate_spectral_at(&initial, 1, t)
    });
    let mut records = Vec::new();
    for n in 0..max_iters {
        let z = volterra_solve(&h, &initial, config.mu, dt, n_steps)?;
        let h_next = linear_transport_solve(&z, &initial, config.mu, dt, n_steps, stride)?;
        let lattices = spectral_lattices(&h, &transform, &params.t_samples)?;
        let TripleNorm { total, .. } = triple_norm_h_lattices(&lattices, &params)?;
        let record = IterationRecord {
            n,
            triple_norm_h: total,
            triple_norm_r: triple_norm_r(&z, &params)?.0,
            delta_z: z.sup_distance(&z_prev),
            delta_h: trajectory_distance(&h_next, &h, &transform),
            fixed_point_residual: fixed_point_check(&h_next, &z),
            z_series: z.clone(),
        };
        let done = record.delta_z < tol && record.delta_h < tol;
        records.push(record);
        h = h_next;
        z_prev = z;
        if done {
            return Ok(PicardOutcome {
                records,
                trajectory: h,
                z_series: z_prev,
                converged: true,
            });
        }
    }
    Ok(PicardOutcome {
        records,
        trajectory: h,
        z_series: z_prev,
        converged: false,
    })
}
