//! Independent references: the finite-N Kuramoto particle system and the
//! exact free-flow order parameter.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datum::InitialDatum;
use crate::error::{Error, Result};
use crate::series::OrderSeries;

/// Fractional part of the golden ratio; drives the angular Kronecker sequence.
const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Angular table resolution for the conditional inverse CDF.
const ANGLE_TABLE: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    /// Phases in `[0, 2π)`.
    pub thetas: Vec<f64>,
    pub omegas: Vec<f64>,
    pub t: f64,
}

impl ParticleEnsemble {
    pub fn new(thetas: Vec<f64>, omegas: Vec<f64>) -> Result<Self> {
        if thetas.len() != omegas.len() || thetas.len() < 2 {
            return Err(Error::Config(format!(
                "ensemble needs two equal-length arrays with n ≥ 2 (got {} and {})",
                thetas.len(),
                omegas.len()
            )));
        }
        Ok(Self {
            thetas: thetas.into_iter().map(wrap).collect(),
            omegas,
            t: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Empirical `R_N e^{iφ_N} = (1/N) Σ e^{iθ_j}`.
    pub fn centroid(&self) -> Complex64 {
        centroid(&self.thetas)
    }

    /// Order parameter in the kinetic convention, `z₁ = R e^{-iφ}`.
    pub fn z1(&self) -> Complex64 {
        self.centroid().conj()
    }
}

fn wrap(theta: f64) -> f64 {
    let w = theta.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

fn centroid(thetas: &[f64]) -> Complex64 {
    #[cfg(feature = "parallel")]
    let sum: Complex64 = {
        use rayon::prelude::*;
        thetas
            .par_chunks(4096)
            .map(|c| c.iter().map(|&th| Complex64::from_polar(1.0, th)).sum::<Complex64>())
            .collect::<Vec<_>>()
            .into_iter()
            .sum()
    };
    #[cfg(not(feature = "parallel"))]
    let sum: Complex64 = thetas.iter().map(|&th| Complex64::from_polar(1.0, th)).sum();
    sum / thetas.len() as f64
}

/// Inverse CDF of the angular factor `(1/2π)(1 + Σ 2Re(ε_k e^{ikϑ}))`.
struct AngularSampler<'a> {
    datum: &'a InitialDatum,
    modes: Vec<(usize, Complex64)>,
    cdf: Vec<f64>,
}

impl<'a> AngularSampler<'a> {
    fn new(datum: &'a InitialDatum) -> Result<Self> {
        let (_, min) = datum.profile_minimum();
        if min < -1e-14 {
            return Err(Error::Datum(format!(
                "conditional phase density is negative (minimum factor {min:.4})"
            )));
        }
        let modes = datum.positive_modes();
        let mut s = Self {
            datum,
            modes,
            cdf: Vec::new(),
        };
        s.cdf = (0..=ANGLE_TABLE)
            .map(|i| s.exact_cdf(2.0 * PI * i as f64 / ANGLE_TABLE as f64))
            .collect();
        Ok(s)
    }

    fn exact_cdf(&self, theta: f64) -> f64 {
        let osc: f64 = self
            .modes
            .iter()
            .map(|(k, a)| {
                let k = *k as f64;
                let e = Complex64::from_polar(1.0, k * theta) - 1.0;
                2.0 * (a * e / Complex64::new(0.0, k)).re
            })
            .sum();
        (theta + osc) / (2.0 * PI)
    }

    fn quantile(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, ANGLE_TABLE);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let h = 2.0 * PI / ANGLE_TABLE as f64;
        let mut theta = h * ((i - 1) as f64 + if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 });
        // Newton polish on the exact CDF.
        for _ in 0..3 {
            let dens = self.datum.angular_profile(theta) / (2.0 * PI);
            if dens <= 1e-12 {
                break;
            }
            theta = (theta - (self.exact_cdf(theta) - u) / dens).clamp(h * (i - 1) as f64, h * i as f64);
        }
        theta
    }
}

/// Stratified ensemble: `ω_i` are the shifted quantiles `(i + s)/n` of `g`
/// truncated to `[-W, W]`; `θ_i` invert the angular CDF at the Kronecker
/// points `{iα + s'}`. The shifts come from `seed`.
pub fn sample_ensemble(datum: &InitialDatum, n: usize, seed: u64, half_width: f64) -> Result<ParticleEnsemble> {
    if n < 2 {
        return Err(Error::Config(format!("ensemble needs n ≥ 2, got {n}")));
    }
    datum.density.validate()?;
    let sampler = AngularSampler::new(datum)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift_omega: f64 = rng.random();
    let shift_theta: f64 = rng.random();
    let mut thetas = Vec::with_capacity(n);
    let mut omegas = Vec::with_capacity(n);
    for i in 0..n {
        let u = (i as f64 + shift_omega) / n as f64;
        omegas.push(datum.density.truncated_quantile(u, half_width));
        let v = (i as f64 * GOLDEN + shift_theta).fract();
        thetas.push(sampler.quantile(v));
    }
    ParticleEnsemble::new(thetas, omegas)
}

fn velocities(thetas: &[f64], omegas: &[f64], mu: f64) -> Vec<f64> {
    let c = centroid(thetas).conj();
    let force = |(&th, &w): (&f64, &f64)| w - mu * (Complex64::from_polar(1.0, th) * c).im;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        thetas.par_iter().zip(omegas.par_iter()).map(force).collect()
    }
    #[cfg(not(feature = "parallel"))]
    thetas.iter().zip(omegas).map(force).collect()
}

fn offset(thetas: &[f64], k: &[f64], scale: f64) -> Vec<f64> {
    thetas.iter().zip(k).map(|(t, v)| t + scale * v).collect()
}

/// RK4 step of `θ̇_i = ω_i - μ R_N sin(θ_i - φ_N)` with the centroid
/// recomputed at every stage.
pub fn particle_step(ens: &ParticleEnsemble, mu: f64, dt: f64) -> ParticleEnsemble {
    assert!(dt > 0.0, "dt must be positive");
    let th = &ens.thetas;
    let w = &ens.omegas;
    let k1 = velocities(th, w, mu);
    let k2 = velocities(&offset(th, &k1, 0.5 * dt), w, mu);
    let k3 = velocities(&offset(th, &k2, 0.5 * dt), w, mu);
    let k4 = velocities(&offset(th, &k3, dt), w, mu);
    let thetas = (0..th.len())
        .map(|i| wrap(th[i] + dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])))
        .collect();
    ParticleEnsemble {
        thetas,
        omegas: ens.omegas.clone(),
        t: ens.t + dt,
    }
}

/// Order parameter history of a particle run, in the kinetic convention.
pub fn particle_run(
    datum: &InitialDatum,
    n: usize,
    mu: f64,
    dt: f64,
    t_max: f64,
    seed: u64,
    half_width: f64,
) -> Result<OrderSeries> {
    let mut ens = sample_ensemble(datum, n, seed, half_width)?;
    let steps = (t_max / dt).round() as usize;
    let mut series = OrderSeries::new();
    series.push(0.0, ens.z1());
    for s in 1..=steps {
        ens = particle_step(&ens, mu, dt);
        series.push(s as f64 * dt, ens.z1());
    }
    Ok(series)
}

/// Free-flow order parameter and whether it came from a closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeFlowR {
    pub value: f64,
    pub exact: bool,
}

/// `R(t) = |ε₁|·|ĝ(t)|` for the `μ = 0` flow `f₀(ϑ - ωt, ω)`.
pub fn exact_free_flow_r(datum: &InitialDatum, t: f64) -> FreeFlowR {
    let eps = datum.first_mode().norm();
    match datum.density.transform(t) {
        Some(g) => FreeFlowR {
            value: eps * g.abs(),
            exact: true,
        },
        None => {
            let half = datum.density.suggested_half_width(0.0);
            let n = 20_001;
            let h = 2.0 * half / (n - 1) as f64;
            let mut acc = Complex64::default();
            let mut mass = 0.0;
            for j in 0..n {
                let w = -half + j as f64 * h;
                let q = if j == 0 || j == n - 1 { 0.5 * h } else { h };
                let g = datum.density.eval(w);
                acc += Complex64::from_polar(q * g, -w * t);
                mass += q * g;
            }
            FreeFlowR {
                value: eps * acc.norm() / mass,
                exact: false,
            }
        }
    }
}
