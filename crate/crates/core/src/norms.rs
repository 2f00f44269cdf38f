//! Analytic weights and norms on the dual lattice.
//!
//! `A^{λ,p}_k(η) = e^{λ⟨k,η⟩}⟨k,η⟩^p`, `‖f‖_{λ,p} = sup A^{λ,p}|f̂|`,
//! the decay-rate weight `β(t,λ) = λ₀ - λ - a·arctan t`, and the space-time
//! sups built from them. Continuous sups over `λ`, `t` and `η` are taken over
//! declared sample sets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::series::OrderSeries;

/// Largest exponent accepted before a weight is considered unrepresentable.
const LOG_OVERFLOW: f64 = 700.0;

/// `⟨t⟩ = (1 + t²)^{1/2}`.
pub fn bracket(t: f64) -> f64 {
    (1.0 + t * t).sqrt()
}

/// `⟨k, η⟩ = (1 + k² + η²)^{1/2}`.
pub fn bracket2(k: i32, eta: f64) -> f64 {
    let k = k as f64;
    (1.0 + k * k + eta * eta).sqrt()
}

fn log_weight(lambda: f64, p: f64, x: f64) -> f64 {
    if p == 0.0 {
        lambda * x
    } else {
        lambda * x + p * x.ln()
    }
}

/// `A^{λ,p}_k(η)`, evaluated in log space and exponentiated once.
pub fn weight_a(lambda: f64, p: f64, k: i32, eta: f64) -> Result<f64> {
    assert!(lambda >= 0.0 && p >= 0.0, "weights need λ, p ≥ 0");
    let lw = log_weight(lambda, p, bracket2(k, eta));
    if lw > LOG_OVERFLOW {
        return Err(Error::Overflow(format!(
            "A^{{{lambda},{p}}} at (k={k}, η={eta}) has log {lw:.1}; grid or λ too large"
        )));
    }
    Ok(lw.exp())
}

/// Parameters of the space-time norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub lambda0: f64,
    pub a: f64,
    pub gamma: f64,
    pub lambda_samples: Vec<f64>,
    pub t_samples: Vec<f64>,
}

impl WeightParams {
    /// `a = λ₀/π` (half the admissible bound), `γ = 3`, `n_lambda` uniform
    /// samples in `[0, λ₀)` and `n_t` uniform samples in `[0, t_max]`.
    pub fn standard(lambda0: f64, t_max: f64, n_lambda: usize, n_t: usize) -> Self {
        Self {
            lambda0,
            a: lambda0 / PI,
            gamma: 3.0,
            lambda_samples: uniform_lambdas(lambda0, n_lambda),
            t_samples: (0..n_t)
                .map(|i| t_max * i as f64 / (n_t.max(2) - 1) as f64)
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.0) {
            return Err(Error::Config(format!("lambda0 must be positive, got {}", self.lambda0)));
        }
        if !(self.a > 0.0) || self.a >= 2.0 * self.lambda0 / PI {
            return Err(Error::Config(format!(
                "weight parameter a = {} violates 0 < a < 2λ₀/π = {:.6} (a<2λ₀/π)",
                self.a,
                2.0 * self.lambda0 / PI
            )));
        }
        if !(self.gamma >= 3.0) {
            return Err(Error::Config(format!("gamma must be ≥ 3, got {}", self.gamma)));
        }
        if self.lambda_samples.is_empty() {
            return Err(Error::Config("lambda_samples is empty".into()));
        }
        if self
            .lambda_samples
            .iter()
            .any(|&l| !(l >= 0.0) || l >= self.lambda0)
        {
            return Err(Error::Config("lambda samples must lie in [0, lambda0)".into()));
        }
        if self.lambda_samples.windows(2).any(|w| !(w[1] > w[0]))
            || self.t_samples.windows(2).any(|w| !(w[1] > w[0]))
        {
            return Err(Error::Config("lambda and t samples must be strictly increasing".into()));
        }
        Ok(())
    }

    /// `β(∞, 0) = λ₀ - aπ/2`, the analyticity left at infinite time.
    pub fn asymptotic_budget(&self) -> f64 {
        self.lambda0 - 0.5 * self.a * PI
    }

    /// Same parameters with twice as many λ and t samples (midpoints added).
    pub fn refined(&self) -> Self {
        Self {
            lambda_samples: refine_samples(&self.lambda_samples, Some(self.lambda0)),
            t_samples: refine_samples(&self.t_samples, None),
            ..self.clone()
        }
    }
}

fn uniform_lambdas(lambda0: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lambda0 * i as f64 / n as f64).collect()
}

fn refine_samples(xs: &[f64], upper: Option<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * xs.len());
    for (i, &x) in xs.iter().enumerate() {
        out.push(x);
        match (xs.get(i + 1), upper) {
            (Some(&next), _) => out.push(0.5 * (x + next)),
            (None, Some(u)) => out.push(0.5 * (x + u)),
            (None, None) => {}
        }
    }
    out
}

/// `β(t, λ) = λ₀ - λ - a·arctan t`; may be non-positive.
pub fn beta(t: f64, lambda: f64, params: &WeightParams) -> f64 {
    params.lambda0 - lambda - params.a * t.atan()
}

/// One weighted supremum with its location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub lambda: f64,
    pub p: f64,
    pub value: f64,
    pub argsup_k: i32,
    pub argsup_eta: f64,
    pub t: f64,
}

/// Log-magnitudes of a spectral field, reused across many `(λ, p)`.
#[derive(Debug, Clone)]
pub struct LogLattice {
    time_tag: f64,
    /// `(ln|ĥ|, ⟨k,η⟩, ln⟨k,η⟩, k, η)` for each nonzero entry.
    entries: Vec<(f64, f64, f64, i32, f64)>,
}

impl LogLattice {
    pub fn new(field: &SpectralField) -> Result<Self> {
        field.check_finite()?;
        let etas = field.grid.points();
        let mut entries = Vec::new();
        for k in -(field.k_max as i32)..=field.k_max as i32 {
            for (v, &eta) in field.row(k).iter().zip(&etas) {
                let m = v.norm();
                if m > 0.0 {
                    let x = bracket2(k, eta);
                    entries.push((m.ln(), x, x.ln(), k, eta));
                }
            }
        }
        Ok(Self {
            time_tag: field.time_tag,
            entries,
        })
    }

    pub fn time_tag(&self) -> f64 {
        self.time_tag
    }

    pub fn norm(&self, lambda: f64, p: f64) -> Result<NormValue> {
        let mut best = (f64::NEG_INFINITY, 0, 0.0);
        for &(ln_abs, x, ln_x, k, eta) in &self.entries {
            let v = ln_abs + lambda * x + p * ln_x;
            if v > best.0 {
                best = (v, k, eta);
            }
        }
        if best.0 > LOG_OVERFLOW {
            return Err(Error::Overflow(format!(
                "‖·‖_{{{lambda},{p}}} has log {:.1} at k = {}, η = {}",
                best.0, best.1, best.2
            )));
        }
        Ok(NormValue {
            lambda,
            p,
            value: if best.0.is_finite() { best.0.exp() } else { 0.0 },
            argsup_k: best.1,
            argsup_eta: best.2,
            t: self.time_tag,
        })
    }
}

/// `‖f‖_{λ,p} = sup_{k,η} A^{λ,p}_k(η)|f̂_k(η)|` over the lattice.
pub fn norm_lambda_p(field: &SpectralField, lambda: f64, p: f64) -> Result<NormValue> {
    LogLattice::new(field)?.norm(lambda, p)
}

/// `r_{λ,p}(t) = |z₁(t)| e^{λt} ⟨t⟩^p` per sample.
pub fn r_lambda_p(series: &OrderSeries, lambda: f64, p: f64) -> Vec<f64> {
    series
        .samples
        .iter()
        .map(|s| s.r * (lambda * s.t).exp() * bracket(s.t).powf(p))
        .collect()
}

/// A space-time supremum split into its two addends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleNorm {
    pub total: f64,
    /// `sup β^{1/2}‖h(t)‖_{λ,1}`.
    pub first: f64,
    /// `sup β^{1/2}‖h(t)‖_{λ,γ}/⟨t⟩`.
    pub second: f64,
    pub argsup_first: (f64, f64),
    pub argsup_second: (f64, f64),
}

/// `|||h|||_a = |||h|||_{a,1} + |||h/⟨t⟩|||_{a,γ}` over the sampled `(λ, t)`
/// with `β(t, λ) > 0`; the trajectory's time tags are the sampled times.
pub fn triple_norm_h(trajectory: &[SpectralField], params: &WeightParams) -> Result<TripleNorm> {
    let lattices = trajectory
        .iter()
        .map(LogLattice::new)
        .collect::<Result<Vec<_>>>()?;
    triple_norm_h_lattices(&lattices, params)
}

pub fn triple_norm_h_lattices(lattices: &[LogLattice], params: &WeightParams) -> Result<TripleNorm> {
    let mut out = TripleNorm {
        total: 0.0,
        first: 0.0,
        second: 0.0,
        argsup_first: (0.0, 0.0),
        argsup_second: (0.0, 0.0),
    };
    let mut admissible = false;
    for lat in lattices {
        let t = lat.time_tag();
        for &lambda in &params.lambda_samples {
            let b = beta(t, lambda, params);
            if b <= 0.0 {
                continue;
            }
            admissible = true;
            let sb = b.sqrt();
            let v1 = sb * lat.norm(lambda, 1.0)?.value;
            let v2 = sb * lat.norm(lambda, params.gamma)?.value / bracket(t);
            if v1 > out.first {
                out.first = v1;
                out.argsup_first = (lambda, t);
            }
            if v2 > out.second {
                out.second = v2;
                out.argsup_second = (lambda, t);
            }
        }
    }
    if !admissible {
        return Err(Error::Config("no sampled (λ, t) with β(t, λ) > 0".into()));
    }
    out.total = out.first + out.second;
    Ok(out)
}

/// `|||R|||_a = sup_{β>0} R(t) e^{λt}⟨t⟩^γ` over the series times and λ samples.
/// Returns the value and its `(λ, t)` location.
pub fn triple_norm_r(series: &OrderSeries, params: &WeightParams) -> Result<(f64, (f64, f64))> {
    let mut best = (0.0, (0.0, 0.0));
    let mut admissible = false;
    for s in &series.samples {
        for &lambda in &params.lambda_samples {
            if beta(s.t, lambda, params) <= 0.0 {
                continue;
            }
            admissible = true;
            let v = s.r * (lambda * s.t).exp() * bracket(s.t).powf(params.gamma);
            if v > best.0 {
                best = (v, (lambda, s.t));
            }
        }
    }
    if !admissible && !series.is_empty() {
        return Err(Error::Config("no sampled (λ, t) with β(t, λ) > 0".into()));
    }
    Ok(best)
}

/// Serializable bundle of norm evaluations for one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub t: f64,
    pub entries: Vec<NormValue>,
    pub triple_h: Option<TripleNorm>,
    pub triple_r: Option<f64>,
}

impl NormReport {
    pub fn for_field(field: &SpectralField, lambdas: &[f64], ps: &[f64]) -> Result<Self> {
        let lat = LogLattice::new(field)?;
        let mut entries = Vec::new();
        for &l in lambdas {
            for &p in ps {
                entries.push(lat.norm(l, p)?);
            }
        }
        Ok(Self {
            t: field.time_tag,
            entries,
            triple_h: None,
            triple_r: None,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("norm report serializes")
    }
}
