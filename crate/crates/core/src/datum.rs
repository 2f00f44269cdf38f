//! Initial data: a natural-frequency density `g(ω)` times an angular profile
//! `1 + Σ_k 2 Re(ε_k e^{ikϑ})`, normalized as `f₀ = g(ω)/(2π) · profile(ϑ)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::grid::OmegaGrid;

/// Number of angular samples used for positivity checks.
const POSITIVITY_SAMPLES: usize = 8192;

/// Roll-off onset and width for heavy-tailed densities, as fractions of the
/// grid half width.
const ROLLOFF_ONSET: f64 = 0.8;
const ROLLOFF_WIDTH: f64 = 0.025;

/// Distribution of natural frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FrequencyDensity {
    Gaussian { sigma: f64 },
    Lorentzian { width: f64 },
    /// Piecewise-linear density through `(omega, density)` knots; zero outside.
    Tabulated { omega: Vec<f64>, density: Vec<f64> },
}

/// A single angular perturbation `2 Re(ε e^{ikϑ})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub mode: i32,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl Perturbation {
    pub fn new(mode: i32, amplitude: Complex64) -> Self {
        Self {
            mode,
            re: amplitude.re,
            im: amplitude.im,
        }
    }

    pub fn amplitude(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDatum {
    pub density: FrequencyDensity,
    #[serde(default)]
    pub perturbations: Vec<Perturbation>,
    #[serde(default = "default_true")]
    pub check_normalization: bool,
}

fn default_true() -> bool {
    true
}

/// `g` sampled on an ω grid, renormalized to unit trapezoidal mass.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub values: Vec<f64>,
    /// Probability mass lost to truncation (before renormalization).
    pub tail_mass: f64,
}

impl FrequencyDensity {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gaussian { sigma } if !(*sigma > 0.0) => Err(Error::Datum(format!(
                "gaussian sigma must be positive, got {sigma}"
            ))),
            Self::Lorentzian { width } if !(*width > 0.0) => Err(Error::Datum(format!(
                "lorentzian width must be positive, got {width}"
            ))),
            Self::Tabulated { omega, density } => {
                if omega.len() < 2 || omega.len() != density.len() {
                    return Err(Error::Datum(
                        "tabulated density needs matching omega/density arrays of length ≥ 2"
                            .into(),
                    ));
                }
                if omega.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Datum("tabulated omega must be strictly increasing".into()));
                }
                if density.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
                    return Err(Error::Datum("tabulated density must be finite and ≥ 0".into()));
                }
                let mass = tabulated_mass(omega, density);
                if !(mass > 0.0) {
                    return Err(Error::Datum("tabulated density has zero mass".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Pointwise density (tabulated densities are not renormalized here).
    pub fn eval(&self, omega: f64) -> f64 {
        match self {
            Self::Gaussian { sigma } => {
                let x = omega / sigma;
                (-0.5 * x * x).exp() / (sigma * (2.0 * PI).sqrt())
            }
            Self::Lorentzian { width } => width / (PI * (omega * omega + width * width)),
            Self::Tabulated { omega: xs, density } => interpolate(xs, density, omega),
        }
    }

    /// Closed-form `ĝ(t) = ∫ g(ω) e^{-iωt} dω` when available.
    pub fn transform(&self, t: f64) -> Option<f64> {
        match self {
            Self::Gaussian { sigma } => Some((-0.5 * sigma * sigma * t * t).exp()),
            Self::Lorentzian { width } => Some((-width * t.abs()).exp()),
            Self::Tabulated { .. } => None,
        }
    }

    /// Half width leaving at most `tail` probability mass outside the grid.
    pub fn suggested_half_width(&self, tail: f64) -> f64 {
        match self {
            Self::Gaussian { sigma } => sigma * std::f64::consts::SQRT_2 * erfc_inv(tail),
            Self::Lorentzian { width } => width * (0.5 * PI * (1.0 - tail)).tan() / ROLLOFF_ONSET,
            Self::Tabulated { omega, .. } => omega[0].abs().max(omega[omega.len() - 1].abs()),
        }
    }

    /// Samples `g` on the grid and renormalizes to unit trapezoidal mass.
    ///
    /// Lorentzian densities are multiplied by a smooth erfc roll-off starting
    /// at `0.8 W`; a hard cut at `W` leaves a jump whose transform decays only
    /// like `g(W)/t`, which would swamp the exponential decay of `ĝ`.
    pub fn on_grid(&self, grid: &OmegaGrid) -> GridDensity {
        let weights = grid.weights();
        let mut values: Vec<f64> = grid
            .points()
            .into_iter()
            .map(|w| match self {
                Self::Lorentzian { .. } => self.eval(w) * rolloff(w, grid.half_width),
                _ => self.eval(w),
            })
            .collect();
        let raw: f64 = values.iter().zip(&weights).map(|(g, w)| g * w).sum();
        let reference = match self {
            Self::Tabulated { omega, density } => tabulated_mass(omega, density),
            _ => 1.0,
        };
        for v in &mut values {
            *v /= raw;
        }
        GridDensity {
            values,
            tail_mass: ((reference - raw) / reference).max(0.0),
        }
    }

    /// Quantile of the density restricted to `[-half_width, half_width]`.
    pub fn truncated_quantile(&self, u: f64, half_width: f64) -> f64 {
        match self {
            Self::Gaussian { sigma } => {
                let normal = Normal::new(0.0, *sigma).expect("validated sigma");
                let lo = normal.cdf(-half_width);
                let hi = normal.cdf(half_width);
                normal.inverse_cdf(lo + u * (hi - lo))
            }
            Self::Lorentzian { width } => {
                let cdf = |x: f64| 0.5 + (x / width).atan() / PI;
                let lo = cdf(-half_width);
                let hi = cdf(half_width);
                let p = lo + u * (hi - lo);
                width * (PI * (p - 0.5)).tan()
            }
            Self::Tabulated { omega, density } => tabulated_quantile(omega, density, u),
        }
    }
}

fn rolloff(omega: f64, half_width: f64) -> f64 {
    let onset = ROLLOFF_ONSET * half_width;
    let width = ROLLOFF_WIDTH * half_width;
    0.5 * erfc((omega.abs() - onset) / width)
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x < xs[0] || x > xs[xs.len() - 1] {
        return 0.0;
    }
    let i = match xs.partition_point(|&v| v <= x) {
        0 => 0,
        i if i >= xs.len() => xs.len() - 2,
        i => i - 1,
    };
    let s = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + s * (ys[i + 1] - ys[i])
}

fn tabulated_mass(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

fn tabulated_quantile(xs: &[f64], ys: &[f64], u: f64) -> f64 {
    let total = tabulated_mass(xs, ys);
    let target = u * total;
    let mut acc = 0.0;
    for i in 0..xs.len() - 1 {
        let h = xs[i + 1] - xs[i];
        let seg = 0.5 * h * (ys[i] + ys[i + 1]);
        if acc + seg >= target || i == xs.len() - 2 {
            // Invert the quadratic cumulative of the linear segment.
            let r = (target - acc).max(0.0);
            let slope = (ys[i + 1] - ys[i]) / h;
            let s = if slope.abs() < 1e-300 {
                if ys[i] > 0.0 {
                    r / ys[i]
                } else {
                    0.0
                }
            } else {
                let disc = (ys[i] * ys[i] + 2.0 * slope * r).max(0.0);
                (disc.sqrt() - ys[i]) / slope
            };
            return xs[i] + s.clamp(0.0, h);
        }
        acc += seg;
    }
    xs[xs.len() - 1]
}

impl InitialDatum {
    pub fn new(density: FrequencyDensity, perturbations: Vec<Perturbation>) -> Self {
        Self {
            density,
            perturbations,
            check_normalization: true,
        }
    }

    /// Perturbations folded onto positive modes: `ε_{-k}` contributes
    /// `conj(ε_{-k})` to mode `k`.
    pub fn positive_modes(&self) -> Vec<(usize, Complex64)> {
        let mut out: Vec<(usize, Complex64)> = Vec::new();
        for p in &self.perturbations {
            let (k, a) = if p.mode < 0 {
                ((-p.mode) as usize, p.amplitude().conj())
            } else {
                (p.mode as usize, p.amplitude())
            };
            match out.iter_mut().find(|(m, _)| *m == k) {
                Some(entry) => entry.1 += a,
                None => out.push((k, a)),
            }
        }
        out.sort_by_key(|(k, _)| *k);
        out
    }

    pub fn highest_mode(&self) -> usize {
        self.positive_modes().iter().map(|(k, _)| *k).max().unwrap_or(0)
    }

    /// First-mode amplitude `ε₁`, so that `z₁(0) = ε₁`.
    pub fn first_mode(&self) -> Complex64 {
        self.positive_modes()
            .into_iter()
            .find(|(k, _)| *k == 1)
            .map(|(_, a)| a)
            .unwrap_or_default()
    }

    /// Angular factor `1 + Σ_k 2 Re(ε_k e^{ikϑ})`.
    pub fn angular_profile(&self, theta: f64) -> f64 {
        1.0 + self
            .positive_modes()
            .iter()
            .map(|(k, a)| 2.0 * (a * Complex64::from_polar(1.0, *k as f64 * theta)).re)
            .sum::<f64>()
    }

    /// `f₀(ϑ, ω)` with the exact (untruncated) density.
    pub fn eval(&self, theta: f64, omega: f64) -> f64 {
        self.density.eval(omega) / (2.0 * PI) * self.angular_profile(theta)
    }

    pub fn validate(&self) -> Result<()> {
        self.density.validate()?;
        if let Some(p) = self.perturbations.iter().find(|p| p.mode == 0) {
            return Err(Error::Datum(format!(
                "perturbation on mode 0 (amplitude {}+{}i) would change the mass",
                p.re, p.im
            )));
        }
        if self
            .perturbations
            .iter()
            .any(|p| !p.re.is_finite() || !p.im.is_finite())
        {
            return Err(Error::Datum("perturbation amplitudes must be finite".into()));
        }
        if self.check_normalization {
            let (theta, min) = self.profile_minimum();
            if min < -1e-14 {
                return Err(Error::Datum(format!(
                    "f₀ is negative at ϑ = {theta:.6} (angular factor {min:.6})"
                )));
            }
        }
        Ok(())
    }

    /// Minimum of the angular factor on a dense sample grid.
    pub fn profile_minimum(&self) -> (f64, f64) {
        (0..POSITIVITY_SAMPLES)
            .map(|j| {
                let theta = 2.0 * PI * j as f64 / POSITIVITY_SAMPLES as f64;
                (theta, self.angular_profile(theta))
            })
            .fold((0.0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc })
    }
}
