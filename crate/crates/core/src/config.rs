//! Run configuration: physical parameters, grids, initial datum and outputs.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::datum::{FrequencyDensity, InitialDatum, Perturbation};
use crate::error::{Error, Result};
use crate::grid::{EtaGrid, OmegaGrid};
use crate::norms::WeightParams;

fn default_lambda0() -> f64 {
    0.5
}
fn default_gamma() -> f64 {
    3.0
}
fn default_n_lambda() -> usize {
    16
}
fn default_snapshot_interval() -> f64 {
    0.5
}
fn default_seed() -> u64 {
    1
}

/// Weight parameters as written in a config file; sample sets default to
/// uniform `λ` in `[0, λ₀)` and the snapshot times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSettings {
    #[serde(default = "default_lambda0")]
    pub lambda0: f64,
    /// Defaults to `λ₀/π`, half the admissible bound `2λ₀/π`.
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_n_lambda")]
    pub n_lambda: usize,
    #[serde(default)]
    pub lambda_samples: Option<Vec<f64>>,
    #[serde(default)]
    pub t_samples: Option<Vec<f64>>,
}

impl Default for WeightSettings {
    fn default() -> Self {
        Self {
            lambda0: default_lambda0(),
            a: None,
            gamma: default_gamma(),
            n_lambda: default_n_lambda(),
            lambda_samples: None,
            t_samples: None,
        }
    }
}

/// Picard iteration controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSettings {
    pub tol: f64,
    pub max_iters: usize,
    /// Solver steps between stored trajectory snapshots.
    pub snapshot_stride: usize,
}

impl Default for PicardSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 20,
            snapshot_stride: 5,
        }
    }
}

/// Particle-oracle controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSettings {
    pub n: usize,
    /// Time step; defaults to the kinetic `dt`.
    #[serde(default)]
    pub dt: Option<f64>,
}

impl Default for ParticleSettings {
    fn default() -> Self {
        Self { n: 50_000, dt: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Also write every snapshot as CSV (binary dumps are always written).
    #[serde(default)]
    pub snapshot_csv: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mu: f64,
    pub dt: f64,
    pub t_max: f64,
    pub k_max: usize,
    pub omega_grid: OmegaGrid,
    pub eta_grid: EtaGrid,
    #[serde(default)]
    pub weights: WeightSettings,
    pub initial: InitialDatum,
    #[serde(default = "default_snapshot_interval")]
    pub snapshot_interval: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub picard: PicardSettings,
    #[serde(default)]
    pub particles: ParticleSettings,
    #[serde(default)]
    pub output: OutputSettings,
}

impl RunConfig {
    /// Gaussian `σ = 1`, `ε₁ = 0.1`, `μ = 0.2`, `k_max = 16`, `dt = 0.01`,
    /// `t_max = 20`, `W = 8` with 257 points.
    pub fn reference() -> Self {
        Self {
            mu: 0.2,
            dt: 0.01,
            t_max: 20.0,
            k_max: 16,
            omega_grid: OmegaGrid {
                half_width: 8.0,
                n_points: 257,
            },
            eta_grid: EtaGrid {
                half_width: 30.0,
                n_points: 241,
            },
            weights: WeightSettings::default(),
            initial: InitialDatum::new(
                FrequencyDensity::Gaussian { sigma: 1.0 },
                vec![Perturbation::new(1, Complex64::new(0.1, 0.0))],
            ),
            snapshot_interval: 0.5,
            seed: 1,
            picard: PicardSettings::default(),
            particles: ParticleSettings::default(),
            output: OutputSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::Config(format!("mu must be ≥ 0, got {}", self.mu)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::Config(format!("t_max must be > 0, got {}", self.t_max)));
        }
        if self.k_max < 2 {
            return Err(Error::Config(format!("k_max must be ≥ 2, got {}", self.k_max)));
        }
        if !(self.snapshot_interval > 0.0) {
            return Err(Error::Config("snapshot_interval must be > 0".into()));
        }
        self.omega_grid.validate()?;
        self.eta_grid.validate()?;
        self.eta_grid.check_resolves(&self.omega_grid)?;
        self.eta_grid.check_covers(self.t_max)?;
        self.initial.validate()?;
        if self.initial.highest_mode() > self.k_max {
            return Err(Error::Config(format!(
                "k_max = {} is smaller than the highest perturbed mode {}",
                self.k_max,
                self.initial.highest_mode()
            )));
        }
        self.weight_params().validate()?;
        if self.picard.snapshot_stride == 0 || !(self.picard.tol > 0.0) {
            return Err(Error::Config("picard needs tol > 0 and snapshot_stride ≥ 1".into()));
        }
        if self.particles.n < 2 {
            return Err(Error::Config("particle count must be ≥ 2".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    /// Steps between snapshots (at least one).
    pub fn snapshot_stride(&self) -> usize {
        ((self.snapshot_interval / self.dt).round() as usize).max(1)
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        let stride = self.snapshot_stride();
        let n = self.n_steps();
        let mut times: Vec<f64> = (0..=n).step_by(stride).map(|s| s as f64 * self.dt).collect();
        if !n.is_multiple_of(stride) {
            times.push(n as f64 * self.dt);
        }
        times
    }

    pub fn weight_params(&self) -> WeightParams {
        let w = &self.weights;
        WeightParams {
            lambda0: w.lambda0,
            a: w.a.unwrap_or(w.lambda0 / std::f64::consts::PI),
            gamma: w.gamma,
            lambda_samples: w.lambda_samples.clone().unwrap_or_else(|| {
                (0..w.n_lambda)
                    .map(|i| w.lambda0 * i as f64 / w.n_lambda as f64)
                    .collect()
            }),
            t_samples: w.t_samples.clone().unwrap_or_else(|| self.snapshot_times()),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Canonical JSON (struct field order, shortest round-trip floats).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_is_valid() {
        let c = RunConfig::reference();
        c.validate().unwrap();
        assert_eq!(c.n_steps(), 2000);
        assert_eq!(c.snapshot_stride(), 50);
        assert_eq!(c.snapshot_times().len(), 41);
        let p = c.weight_params();
        assert_eq!(p.lambda_samples.len(), 16);
        assert!((p.a - 0.5 / std::f64::consts::PI).abs() < 1e-16);
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut c = RunConfig::reference();
        c.dt = 0.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::reference();
        c.mu = -0.1;
        assert!(c.validate().is_err());
        let mut c = RunConfig::reference();
        c.weights.a = Some(1.0 / std::f64::consts::PI);
        assert!(c.validate().unwrap_err().to_string().contains("a<2λ₀/π"));
    }

    #[test]
    fn toml_with_defaults() {
        let text = r#"
            mu = 0.0
            dt = 0.01
            t_max = 5.0
            k_max = 4
            omega_grid = { half_width = 8.0, n_points = 257 }
            eta_grid = { half_width = 10.0, n_points = 81 }

            [initial.density]
            family = "gaussian"
            sigma = 1.0

            [[initial.perturbations]]
            mode = 1
            re = 0.1
        "#;
        let c = RunConfig::from_toml(text).unwrap();
        c.validate().unwrap();
        assert_eq!(c.initial.first_mode(), Complex64::new(0.1, 0.0));
        assert_eq!(c.weights, WeightSettings::default());
        assert!(RunConfig::from_toml("mu = 1.0\nbogus = 3").is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = RunConfig::reference();
        let back = RunConfig::from_json(&c.canonical_json()).unwrap();
        assert_eq!(back, c);
    }
}
