//! WebAssembly bindings: three interactive operations for a static page.

pub mod demo;

use wasm_bindgen::prelude::*;

fn js(e: dephase_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Interleaved `(t, R)` pairs of a Gaussian-datum run, sampled every 0.1.
#[wasm_bindgen]
pub fn order_parameter_curve(mu: f64, epsilon: f64, sigma: f64, t_max: f64) -> Result<Vec<f64>, JsError> {
    let c = demo::demo_config(mu, epsilon, sigma, t_max).map_err(js)?;
    demo::order_parameter_curve(&c, 5).map_err(js)
}

#[wasm_bindgen]
pub struct PhaseDensity {
    inner: demo::Density,
}

#[wasm_bindgen]
impl PhaseDensity {
    #[wasm_bindgen(getter)]
    pub fn n_theta(&self) -> usize {
        self.inner.n_theta
    }

    #[wasm_bindgen(getter)]
    pub fn n_omega(&self) -> usize {
        self.inner.n_omega
    }

    #[wasm_bindgen(getter)]
    pub fn omega_max(&self) -> f64 {
        self.inner.omega_max
    }

    /// Row-major in `ϑ`.
    pub fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }
}

/// The density `f(t, ϑ, ω)` at time `t` on an `n_theta × 129` grid.
#[wasm_bindgen]
pub fn phase_density(mu: f64, epsilon: f64, sigma: f64, t: f64, n_theta: usize) -> Result<PhaseDensity, JsError> {
    let c = demo::demo_config(mu, epsilon, sigma, t).map_err(js)?;
    demo::phase_density(&c, n_theta).map(|inner| PhaseDensity { inner }).map_err(js)
}

/// Interleaved `(t, R_kinetic, R_particles)` triples, sampled every 0.1.
#[wasm_bindgen]
pub fn particle_comparison(
    mu: f64,
    epsilon: f64,
    sigma: f64,
    n: usize,
    t_max: f64,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    let c = demo::demo_config(mu, epsilon, sigma, t_max).map_err(js)?;
    demo::particle_comparison(&c, n, seed as u64, 5).map_err(js)
}
