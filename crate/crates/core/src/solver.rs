//! Time integration of the gliding-frame equation in the mixed `(k, ω)`
//! representation.
//!
//! In Fourier variables the coupling shifts `η` by `±t`; on the ω grid that
//! shift is the exact multiplication by `e^{±itω}`, so
//!
//! ```text
//! ∂_t h_k = μ (k/2) [ z₁ e^{itω} h_{k-1} - conj(z₁) e^{-itω} h_{k+1} ]
//! ```
//!
//! with `z₁(t) = ĥ₁(t, t)` and `h_{±(k_max+1)} ≡ 0`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::field::{evaluate_spectral_at, make_initial_field, MixedField};
use crate::series::OrderSeries;

/// Right-hand side `μ L_t h`, same layout as [`MixedField::values`].
#[derive(Debug, Clone, PartialEq)]
pub struct RhsEvaluation {
    pub k_max: usize,
    pub n_omega: usize,
    pub values: Vec<Complex64>,
}

impl RhsEvaluation {
    pub fn row(&self, k: i32) -> &[Complex64] {
        let r = (k + self.k_max as i32) as usize;
        &self.values[r * self.n_omega..(r + 1) * self.n_omega]
    }

    /// Wraps the values as a field (for transforms and norms).
    pub fn into_field(self, template: &MixedField) -> MixedField {
        MixedField {
            k_max: self.k_max,
            grid: template.grid,
            values: self.values,
            time_tag: template.time_tag,
        }
    }
}

/// `z₁(t) = ĥ₁(t, t)`, the same quadrature as [`evaluate_spectral_at`].
pub fn order_parameter(field: &MixedField, t: f64) -> Complex64 {
    evaluate_spectral_at(field, 1, t)
}

/// `μ (k/2) [z₁ e^{itω} h_{k-1} - conj(z₁) e^{-itω} h_{k+1}]` per `(k, ω)`.
pub fn apply_l(field: &MixedField, z1: Complex64, t: f64, mu: f64) -> RhsEvaluation {
    let n = field.n_omega();
    let k_max = field.k_max as i32;
    let zc = z1.conj();
    let (up, down): (Vec<Complex64>, Vec<Complex64>) = field
        .grid
        .points()
        .into_iter()
        .map(|w| {
            let e = Complex64::from_polar(1.0, t * w);
            (z1 * e, zc * e.conj())
        })
        .unzip();
    let mut values = vec![Complex64::default(); field.values.len()];
    let fill = |(r, out): (usize, &mut [Complex64])| {
        let k = r as i32 - k_max;
        if k == 0 || mu == 0.0 {
            return;
        }
        let c = 0.5 * mu * k as f64;
        let lower = (k > -k_max).then(|| field.row(k - 1));
        let upper = (k < k_max).then(|| field.row(k + 1));
        for j in 0..n {
            let mut acc = Complex64::default();
            if let Some(h) = lower {
                acc += up[j] * h[j];
            }
            if let Some(h) = upper {
                acc -= down[j] * h[j];
            }
            out[j] = c * acc;
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        values.par_chunks_mut(n).enumerate().for_each(fill);
    }
    #[cfg(not(feature = "parallel"))]
    values.chunks_mut(n).enumerate().for_each(fill);
    RhsEvaluation {
        k_max: field.k_max,
        n_omega: n,
        values,
    }
}

/// Where the order parameter driving `L_t` comes from.
#[derive(Debug, Clone, Copy)]
pub enum Coupling<'a> {
    /// `z₁` recomputed from the current stage field (the nonlinear problem).
    SelfConsistent,
    /// `z₁` read from a given series (the linear problem of the Picard scheme).
    Prescribed(&'a OrderSeries),
}

impl Coupling<'_> {
    fn order(&self, field: &MixedField, t: f64) -> Complex64 {
        match self {
            Coupling::SelfConsistent => order_parameter(field, t),
            Coupling::Prescribed(series) => series.interpolate(t),
        }
    }
}

fn axpy(base: &MixedField, scale: f64, rhs: &RhsEvaluation, t: f64) -> MixedField {
    MixedField {
        k_max: base.k_max,
        grid: base.grid,
        values: base
            .values
            .iter()
            .zip(&rhs.values)
            .map(|(h, r)| h + r * scale)
            .collect(),
        time_tag: t,
    }
}

/// Result of one RK4 step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub field: MixedField,
    /// Reality defect before symmetrization.
    pub drift: f64,
}

/// Classical four-stage step of `∂_t h = μ L_t h` from `field.time_tag`.
pub fn step_rk4(field: &MixedField, dt: f64, mu: f64, coupling: Coupling<'_>) -> Result<StepOutcome> {
    assert!(dt > 0.0, "dt must be positive");
    let t = field.time_tag;
    let half = t + 0.5 * dt;
    let end = t + dt;
    let k1 = apply_l(field, coupling.order(field, t), t, mu);
    let s2 = axpy(field, 0.5 * dt, &k1, half);
    let k2 = apply_l(&s2, coupling.order(&s2, half), half, mu);
    let s3 = axpy(field, 0.5 * dt, &k2, half);
    let k3 = apply_l(&s3, coupling.order(&s3, half), half, mu);
    let s4 = axpy(field, dt, &k3, end);
    let k4 = apply_l(&s4, coupling.order(&s4, end), end, mu);
    let c = dt / 6.0;
    let values: Vec<Complex64> = field
        .values
        .iter()
        .enumerate()
        .map(|(i, h)| h + (k1.values[i] + 2.0 * (k2.values[i] + k3.values[i]) + k4.values[i]) * c)
        .collect();
    let mut next = MixedField {
        k_max: field.k_max,
        grid: field.grid,
        values,
        time_tag: end,
    };
    if let Err(e) = next.check_finite() {
        return Err(Error::Numerical {
            t: end,
            reason: format!("{e}; reduce dt or raise k_max"),
        });
    }
    let drift = next.symmetrize();
    Ok(StepOutcome { field: next, drift })
}

/// Evolving state of a run.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub field: MixedField,
    pub step: usize,
    pub dt: f64,
    pub order_history: OrderSeries,
    pub snapshots: Vec<MixedField>,
    pub snapshot_stride: usize,
    pub max_drift: f64,
}

impl SolverState {
    pub fn new(initial: MixedField, dt: f64, snapshot_stride: usize, coupling: Coupling<'_>) -> Self {
        let mut order_history = OrderSeries::new();
        order_history.push(0.0, coupling.order(&initial, 0.0));
        Self {
            snapshots: vec![initial.clone()],
            field: initial,
            step: 0,
            dt,
            order_history,
            snapshot_stride: snapshot_stride.max(1),
            max_drift: 0.0,
        }
    }

    pub fn t(&self) -> f64 {
        self.step as f64 * self.dt
    }

    /// Advances one step, recording `z₁` and, on schedule, a snapshot.
    pub fn advance(&mut self, mu: f64, coupling: Coupling<'_>) -> Result<()> {
        let outcome = step_rk4(&self.field, self.dt, mu, coupling)?;
        self.step += 1;
        let t = self.t();
        self.field = outcome.field;
        // Time tags are kept exact multiples of dt.
        self.field.time_tag = t;
        self.max_drift = self.max_drift.max(outcome.drift);
        self.order_history.push(t, coupling.order(&self.field, t));
        if self.step.is_multiple_of(self.snapshot_stride) {
            self.snapshots.push(self.field.clone());
        }
        Ok(())
    }

    /// Records the current field as the final snapshot if the schedule missed it.
    pub fn close(&mut self) {
        if self.snapshots.last().map(|s| s.time_tag) != Some(self.field.time_tag) {
            self.snapshots.push(self.field.clone());
        }
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: OrderSeries,
    pub snapshots: Vec<MixedField>,
    pub final_field: MixedField,
    pub max_reality_drift: f64,
    pub tail_mass: f64,
}

/// Integrates from `t = 0` to `t_max` with fixed `dt`, self-consistently.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let initial = make_initial_field(&config.initial, config.omega_grid, config.k_max)?;
    let tail_mass = config.initial.density.on_grid(&config.omega_grid).tail_mass;
    let mut state = SolverState::new(initial, config.dt, config.snapshot_stride(), Coupling::SelfConsistent);
    for _ in 0..config.n_steps() {
        state.advance(config.mu, Coupling::SelfConsistent)?;
    }
    state.close();
    Ok(RunOutput {
        series: state.order_history,
        snapshots: state.snapshots,
        final_field: state.field,
        max_reality_drift: state.max_drift,
        tail_mass,
    })
}

/// `‖S_dt(h) - S_{dt/2}∘S_{dt/2}(h)‖_sup`: the one-step Richardson difference.
pub fn richardson_difference(field: &MixedField, dt: f64, mu: f64) -> Result<f64> {
    let full = step_rk4(field, dt, mu, Coupling::SelfConsistent)?.field;
    let h1 = step_rk4(field, 0.5 * dt, mu, Coupling::SelfConsistent)?.field;
    let h2 = step_rk4(&h1, 0.5 * dt, mu, Coupling::SelfConsistent)?.field;
    Ok(full.difference(&h2).sup_abs())
}

/// `f(t, ϑ, ω) = (1/2π) Σ_k h_k(t, ω) e^{ik(ϑ - ωt)}` on `thetas × ω-grid`,
/// row-major in `ϑ`.
pub fn reconstruct_f(field: &MixedField, t: f64, thetas: &[f64]) -> Result<Vec<f64>> {
    let omegas = field.grid.points();
    let mut out = Vec::with_capacity(thetas.len() * omegas.len());
    for &theta in thetas {
        for (j, &w) in omegas.iter().enumerate() {
            let x = theta - w * t;
            let mut acc = Complex64::default();
            for k in field.modes() {
                acc += field.row(k)[j] * Complex64::from_polar(1.0, k as f64 * x);
            }
            if acc.im.abs() > 1e-10 {
                return Err(Error::Numerical {
                    t,
                    reason: format!("reconstructed density has imaginary part {:.3e}", acc.im),
                });
            }
            out.push(acc.re / (2.0 * PI));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::{FrequencyDensity, InitialDatum, Perturbation};
    use crate::field::mixed_to_spectral;
    use crate::grid::{EtaGrid, OmegaGrid};

    fn gaussian_field(eps: f64, k_max: usize) -> MixedField {
        let datum = InitialDatum::new(
            FrequencyDensity::Gaussian { sigma: 1.0 },
            vec![Perturbation::new(1, Complex64::new(eps, 0.0))],
        );
        make_initial_field(&datum, OmegaGrid::new(8.0, 257).unwrap(), k_max).unwrap()
    }

    #[test]
    fn mode_zero_row_of_rhs_vanishes() {
        let f = gaussian_field(0.1, 6);
        let rhs = apply_l(&f, Complex64::new(0.05, 0.02), 1.3, 0.7);
        assert!(rhs.row(0).iter().all(|v| *v == Complex64::default()));
    }

    #[test]
    fn zero_order_parameter_gives_zero_rhs() {
        let f = gaussian_field(0.1, 6);
        let rhs = apply_l(&f, Complex64::default(), 2.0, 0.7);
        assert!(rhs.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn rhs_of_pure_mode_zero_field() {
        let f = gaussian_field(0.0, 4);
        let c = Complex64::new(0.03, -0.04);
        let (t, mu) = (1.7, 0.2);
        let rhs = apply_l(&f, c, t, mu);
        for k in f.modes().filter(|k| k.abs() != 1) {
            assert!(rhs.row(k).iter().all(|v| v.norm() == 0.0), "row {k}");
        }
        for (j, w) in f.grid.points().into_iter().enumerate() {
            let expected = 0.5 * mu * c * Complex64::from_polar(1.0, t * w) * f.row(0)[j];
            assert!((rhs.row(1)[j] - expected).norm() < 1e-16);
        }
    }

    #[test]
    fn rhs_matches_shift_form_in_dual_variables() {
        // ĥ-form: μ k Σ_m (m/2) z_m ĥ_{k-m}(η - m t).
        let mut f = gaussian_field(0.1, 4);
        for (j, v) in f.row_mut(2).iter_mut().enumerate() {
            *v = Complex64::new(0.01, 0.004) * (-(j as f64 - 128.0).powi(2) / 800.0).exp();
        }
        for (j, v) in f.row_mut(-2).iter_mut().enumerate() {
            *v = Complex64::new(0.01, -0.004) * (-(j as f64 - 128.0).powi(2) / 800.0).exp();
        }
        let (z, t, mu) = (Complex64::new(0.06, 0.03), 1.25, 0.2);
        let rhs = apply_l(&f, z, t, mu).into_field(&f);
        let eta = EtaGrid::new(10.0, 81).unwrap();
        let lhs = mixed_to_spectral(&rhs, eta).unwrap();
        for (j, e) in eta.points().into_iter().enumerate() {
            for k in -3..=3 {
                let kf = k as f64;
                let mut expected = 0.5 * mu * kf * z * evaluate_spectral_at(&f, k - 1, e - t);
                expected -= 0.5 * mu * kf * z.conj() * evaluate_spectral_at(&f, k + 1, e + t);
                assert!((lhs.get(k, j) - expected).norm() < 1e-8, "k={k} η={e}");
            }
        }
    }

    #[test]
    fn free_flow_leaves_field_unchanged() {
        let f = gaussian_field(0.1, 4);
        let out = step_rk4(&f, 0.01, 0.0, Coupling::SelfConsistent).unwrap();
        assert_eq!(out.field.values, f.values);
        assert_eq!(out.drift, 0.0);
    }

    #[test]
    fn mode_zero_is_preserved_exactly() {
        let mut f = gaussian_field(0.1, 6);
        let g = f.row(0).to_vec();
        for _ in 0..50 {
            f = step_rk4(&f, 0.05, 0.5, Coupling::SelfConsistent).unwrap().field;
        }
        assert_eq!(f.row(0), g.as_slice());
    }

    #[test]
    fn nan_is_reported() {
        let mut f = gaussian_field(0.1, 4);
        f.row_mut(2)[3] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            step_rk4(&f, 0.01, 0.2, Coupling::SelfConsistent),
            Err(Error::Numerical { .. })
        ));
    }

    #[test]
    fn reconstruction_at_time_zero() {
        let datum = InitialDatum::new(
            FrequencyDensity::Gaussian { sigma: 1.0 },
            vec![
                Perturbation::new(1, Complex64::new(0.1, 0.05)),
                Perturbation::new(2, Complex64::new(-0.03, 0.0)),
            ],
        );
        let f = make_initial_field(&datum, OmegaGrid::new(8.0, 257).unwrap(), 4).unwrap();
        let thetas: Vec<f64> = (0..16).map(|i| i as f64 * 0.4).collect();
        let dens = reconstruct_f(&f, 0.0, &thetas).unwrap();
        for (i, &th) in thetas.iter().enumerate() {
            for (j, w) in f.grid.points().into_iter().enumerate().step_by(16) {
                assert!((dens[i * 257 + j] - datum.eval(th, w)).abs() < 1e-10);
            }
        }
    }
}
