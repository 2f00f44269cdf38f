//! Ratio trackers for the analytic estimates, exponential decay fits and
//! the extraction of the limiting profile `h_∞`.
//!
//! The constants in the estimates are existential, so nothing here asserts a
//! value for them: each check reports the achieved ratios and their running
//! maximum, and callers judge boundedness and stability under refinement.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{MixedField, SpectralField, SpectralTransform};
use crate::norms::{bracket, norm_lambda_p, LogLattice};
use crate::series::OrderSeries;
use crate::solver::apply_l;

/// Samples at or below this modulus are not fitted.
pub const FIT_FLOOR: f64 = 1e-13;

/// Least-squares line through `(t, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub window: (f64, f64),
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
    /// The requested window ran into the floor and was cut short.
    pub shrunk: bool,
}

impl DecayFit {
    /// The fitted rate `λ̂ = -slope`.
    pub fn rate(&self) -> f64 {
        -self.slope
    }
}

/// Fits `ln y = slope·t + intercept` over `t ∈ [t_lo, t_hi]`. If a sample in
/// the window is at or below `floor`, the window ends just before it and the
/// fit is flagged as shrunk.
pub fn fit_exponential(points: &[(f64, f64)], window: (f64, f64), floor: f64) -> Result<DecayFit> {
    let (t_lo, t_hi) = window;
    if !(t_lo < t_hi) {
        return Err(Error::Config(format!("empty fit window [{t_lo}, {t_hi}]")));
    }
    let mut shrunk = false;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(t, y) in points.iter().filter(|(t, _)| *t >= t_lo && *t <= t_hi) {
        if !(y > floor) {
            shrunk = true;
            break;
        }
        xs.push(t);
        ys.push(y.ln());
    }
    if xs.len() < 3 {
        return Err(Error::DampingFailure(format!(
            "fewer than 3 samples above {floor:e} in [{t_lo}, {t_hi}]"
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(DecayFit {
        window: (xs[0], *xs.last().expect("nonempty")),
        slope,
        intercept,
        r_squared,
        n_points: xs.len(),
        shrunk,
    })
}

/// Exponential fit of `R(t)` on a window, floor [`FIT_FLOOR`].
pub fn fit_decay(series: &OrderSeries, window: (f64, f64)) -> Result<DecayFit> {
    let points: Vec<(f64, f64)> = series.samples.iter().map(|s| (s.t, s.r)).collect();
    fit_exponential(&points, window, FIT_FLOOR)
}

/// Per-time ratios of one inequality and their running maximum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioTrack {
    pub name: String,
    pub times: Vec<f64>,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub argmax_t: f64,
}

impl RatioTrack {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_owned(),
            times: Vec::new(),
            ratios: Vec::new(),
            max_ratio: 0.0,
            argmax_t: 0.0,
        }
    }

    fn push(&mut self, t: f64, ratio: f64) {
        if ratio > self.max_ratio || self.ratios.is_empty() {
            self.max_ratio = ratio;
            self.argmax_t = t;
        }
        self.times.push(t);
        self.ratios.push(ratio);
    }

    pub fn is_finite(&self) -> bool {
        self.ratios.iter().all(|r| r.is_finite())
    }

    /// `|max_a - max_b| / max_a`, the refinement-stability measure.
    pub fn relative_change(&self, refined: &Self) -> f64 {
        (self.max_ratio - refined.max_ratio).abs() / self.max_ratio.abs().max(f64::MIN_POSITIVE)
    }
}

fn ratio(num: f64, den: f64, what: &str, t: f64) -> Result<f64> {
    if den > 0.0 {
        Ok(num / den)
    } else if num == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::Violation(format!("{what}: zero denominator with numerator {num:e} at t = {t}")))
    }
}

/// `‖f‖_{λ,p+1} ≤ ‖f‖_{λ',p} / (λ' - λ)` for every field and pair. The
/// inequality holds pointwise on the lattice with no constant, so any
/// violation is a hard error. Ratios are LHS/RHS, indexed by field then pair.
pub fn check_nesting(fields: &[SpectralField], lambda_pairs: &[(f64, f64)], p: f64) -> Result<RatioTrack> {
    let mut track = RatioTrack::new("nesting");
    for (i, field) in fields.iter().enumerate() {
        let lattice = LogLattice::new(field)?;
        for &(lambda, lambda_prime) in lambda_pairs {
            if !(lambda_prime > lambda) {
                return Err(Error::Config(format!("nesting needs λ' > λ, got ({lambda}, {lambda_prime})")));
            }
            let lhs = lattice.norm(lambda, p + 1.0)?.value;
            let rhs = lattice.norm(lambda_prime, p)?.value / (lambda_prime - lambda);
            if lhs > rhs {
                return Err(Error::Violation(format!(
                    "nesting fails on field {i} at (λ, λ', p) = ({lambda}, {lambda_prime}, {p}): {lhs:e} > {rhs:e}"
                )));
            }
            track.push(field.time_tag, ratio(lhs, rhs, "nesting", field.time_tag)?);
        }
    }
    Ok(track)
}

/// `‖L_t h‖_{λ,p} / (r_{λ,0}‖h‖_{λ,p+1} + r_{λ,p}‖h‖_{λ,1})` per snapshot,
/// with `z₁` read from the series at each snapshot time.
pub fn check_l_continuity(
    snapshots: &[MixedField],
    z_series: &OrderSeries,
    transform: &SpectralTransform,
    lambda: f64,
    p: f64,
) -> Result<RatioTrack> {
    let mut track = RatioTrack::new("operator_continuity");
    for h in snapshots {
        let t = h.time_tag;
        let sample = z_series
            .nearest(t)
            .filter(|s| (s.t - t).abs() <= 1e-9 * t.abs().max(1.0))
            .ok_or_else(|| Error::Config(format!("no order-parameter sample at snapshot time {t}")))?;
        let lh = apply_l(h, sample.z1, t, 1.0).into_field(h);
        let num = norm_lambda_p(&transform.apply(&lh), lambda, p)?.value;
        let lattice = LogLattice::new(&transform.apply(h))?;
        let r0 = sample.r * (lambda * t).exp();
        let rp = r0 * bracket(t).powf(p);
        let den = r0 * lattice.norm(lambda, p + 1.0)?.value + rp * lattice.norm(lambda, 1.0)?.value;
        track.push(t, ratio(num, den, "operator continuity", t)?);
    }
    Ok(track)
}

/// Trapezoidal `∫₀^{t_m} f` on a (possibly nonuniform) grid, for all `m`.
fn cumulative(ts: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    ts.windows(2)
        .enumerate()
        .map(|(i, w)| 0.5 * (w[1] - w[0]) * (f(i) + f(i + 1)))
        .sum()
}

/// Both sides of the a-priori bound on `r_{λ,p}` with unit constant:
///
/// ```text
/// r(t) ≤ ‖f₀‖ + μ‖f₀‖ ∫₀ᵗ r(s)(⟨s⟩^{-p} + ⟨t-s⟩^{-p}) ds + μ ∫₀ᵗ r(s) ‖h(s)‖_{λ,p} ⟨s⟩^{-p} ds
/// ```
///
/// evaluated on the snapshot times; the track holds LHS/RHS.
pub fn check_apriori_r(
    series: &OrderSeries,
    snapshots: &[MixedField],
    transform: &SpectralTransform,
    f0_norm: f64,
    lambda: f64,
    p: f64,
    mu: f64,
) -> Result<RatioTrack> {
    if !(f0_norm > 0.0) {
        return Err(Error::Config("a-priori check needs ‖f₀‖ > 0".into()));
    }
    let ts: Vec<f64> = snapshots.iter().map(|s| s.time_tag).collect();
    let r: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let z = series.nearest(t).map_or(0.0, |s| s.r);
            z * (lambda * t).exp() * bracket(t).powf(p)
        })
        .collect();
    let hn: Vec<f64> = snapshots
        .iter()
        .map(|h| norm_lambda_p(&transform.apply(h), lambda, p).map(|v| v.value))
        .collect::<Result<_>>()?;
    let mut track = RatioTrack::new("apriori_r");
    for m in 0..ts.len() {
        let t = ts[m];
        let head = &ts[..=m];
        let linear = cumulative(head, |i| r[i] * (bracket(ts[i]).powf(-p) + bracket(t - ts[i]).powf(-p)));
        let nonlinear = cumulative(head, |i| r[i] * hn[i] * bracket(ts[i]).powf(-p));
        let rhs = f0_norm + mu * f0_norm * linear + mu * nonlinear;
        track.push(t, r[m] / rhs);
    }
    Ok(track)
}

/// The last snapshot as the `h_∞` estimate, with the Cauchy distances
/// `d(t) = ‖h(t) - h(t_max)‖_{0,γ}` and their exponential fit.
#[derive(Debug, Clone)]
pub struct HInfinity {
    pub field: SpectralField,
    pub distances: Vec<(f64, f64)>,
    /// `None` when `d ≡ 0`: the trajectory is already at its limit.
    pub fit: Option<DecayFit>,
}

/// Relative floor for `d(t)`, against `‖h(t_max)‖_{0,γ}`.
pub const CAUCHY_FLOOR: f64 = 1e-11;

/// Extracts `h_∞` and fits `d(t)` on `window`. A non-negative fitted slope,
/// or `d` not shrinking across the window, is a damping failure.
pub fn extract_h_infinity(
    snapshots: &[MixedField],
    transform: &SpectralTransform,
    gamma: f64,
    window: (f64, f64),
) -> Result<HInfinity> {
    let last = snapshots
        .last()
        .ok_or_else(|| Error::Config("h_∞ extraction needs at least one snapshot".into()))?;
    let field = transform.apply(last);
    let scale = norm_lambda_p(&field, 0.0, gamma)?.value;
    let distances: Vec<(f64, f64)> = snapshots
        .iter()
        .map(|h| {
            norm_lambda_p(&transform.apply(&h.difference(last)), 0.0, gamma).map(|v| (h.time_tag, v.value))
        })
        .collect::<Result<_>>()?;
    if distances.iter().all(|&(_, d)| d == 0.0) {
        return Ok(HInfinity {
            field,
            distances,
            fit: None,
        });
    }
    let fit = fit_exponential(&distances, window, CAUCHY_FLOOR * scale.max(1.0))?;
    let in_window: Vec<f64> = distances
        .iter()
        .filter(|(t, _)| *t >= fit.window.0 && *t <= fit.window.1)
        .map(|&(_, d)| d)
        .collect();
    let shrinking = in_window.last() < in_window.first();
    if fit.slope >= 0.0 || !shrinking {
        return Err(Error::DampingFailure(format!(
            "‖h(t) - h(t_max)‖ does not decay on [{}, {}] (slope {:.3e})",
            fit.window.0, fit.window.1, fit.slope
        )));
    }
    Ok(HInfinity {
        field,
        distances,
        fit: Some(fit),
    })
}

/// `max_ω |h_k|` against `k` and an exponential fit in `k` over the modes
/// above the floor: a geometric-decay (analyticity) proxy.
#[derive(Debug, Clone, Serialize)]
pub struct ModeDecay {
    pub amplitudes: Vec<f64>,
    /// `a_{k+1} / a_k` for consecutive modes above the floor, from `k = 1`.
    pub ratios: Vec<f64>,
    pub fit: DecayFit,
}

impl ModeDecay {
    /// Every consecutive ratio is below one, and the fit is a clean decay.
    pub fn is_geometric(&self, min_r2: f64) -> bool {
        self.fit.slope < 0.0 && self.fit.r_squared >= min_r2 && self.ratios.iter().all(|&q| q < 1.0)
    }
}

/// Mode-amplitude decay of a field over `k ≥ 1`.
pub fn mode_decay(field: &MixedField) -> Result<ModeDecay> {
    let amplitudes = field.mode_amplitudes();
    let floor = FIT_FLOOR * amplitudes[0].max(1.0);
    let points: Vec<(f64, f64)> = amplitudes
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &a)| (k as f64, a))
        .collect();
    let fit = fit_exponential(&points, (1.0, field.k_max as f64), floor)?;
    let used = &amplitudes[1..=fit.window.1 as usize];
    let ratios = used.windows(2).map(|w| w[1] / w[0]).collect();
    Ok(ModeDecay { amplitudes, ratios, fit })
}

/// `{slope, r2}` summary of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitSummary {
    pub slope: f64,
    pub r2: f64,
}

impl From<&DecayFit> for FitSummary {
    fn from(f: &DecayFit) -> Self {
        Self {
            slope: f.slope,
            r2: f.r_squared,
        }
    }
}

/// The JSON shape every check is reported in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub max_ratio: Option<f64>,
    pub argmax_t: Option<f64>,
    pub fit: Option<FitSummary>,
    pub refinement_stability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckReport {
    pub fn from_track(track: &RatioTrack) -> Self {
        Self {
            name: track.name.clone(),
            max_ratio: Some(track.max_ratio),
            argmax_t: Some(track.argmax_t),
            fit: None,
            refinement_stability: None,
            error: None,
        }
    }

    /// A check that could not produce a value.
    pub fn failed(name: &str, error: &Error) -> Self {
        Self {
            name: name.to_owned(),
            max_ratio: None,
            argmax_t: None,
            fit: None,
            refinement_stability: None,
            error: Some(error.to_string()),
        }
    }

    pub fn from_fit(name: &str, fit: &DecayFit) -> Self {
        Self {
            name: name.to_owned(),
            max_ratio: None,
            argmax_t: None,
            fit: Some(fit.into()),
            refinement_stability: None,
            error: None,
        }
    }

    pub fn with_stability(mut self, relative_change: f64) -> Self {
        self.refinement_stability = Some(relative_change);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::{FrequencyDensity, InitialDatum, Perturbation};
    use crate::field::make_initial_field;
    use crate::grid::{EtaGrid, OmegaGrid};
    use num_complex::Complex64;

    fn synthetic(rate: f64, amp: f64) -> OrderSeries {
        OrderSeries::from_fn((0..=200).map(|i| i as f64 * 0.1), |t| {
            Complex64::from_polar(amp * (-rate * t).exp(), 0.3 * t)
        })
    }

    #[test]
    fn exact_exponential_is_recovered() {
        let fit = fit_decay(&synthetic(0.7, 0.1), (2.0, 18.0)).unwrap();
        assert!((fit.slope + 0.7).abs() < 1e-12, "{}", fit.slope);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(!fit.shrunk);
    }

    #[test]
    fn window_shrinks_at_the_floor() {
        // 0.1 e^{-2t} crosses 1e-13 at t ≈ 13.8.
        let fit = fit_decay(&synthetic(2.0, 0.1), (5.0, 20.0)).unwrap();
        assert!(fit.shrunk);
        assert!(fit.window.1 < 13.9 && fit.window.1 > 13.7, "{:?}", fit.window);
        assert!((fit.slope + 2.0).abs() < 1e-10);
    }

    #[test]
    fn gaussian_decay_is_not_exponential() {
        let s = OrderSeries::from_fn((0..=500).map(|i| i as f64 * 0.01), |t| {
            Complex64::new(0.1 * (-t * t / 2.0).exp(), 0.0)
        });
        let fit = fit_decay(&s, (2.0, 5.0)).unwrap();
        // ln R is a parabola; the best line has slope -t_mid.
        assert!((fit.slope + 3.5).abs() < 1e-6);
        assert!(fit.r_squared < 0.999);
    }

    #[test]
    fn too_few_points_is_a_damping_failure() {
        let s = synthetic(30.0, 1e-12);
        assert!(matches!(fit_decay(&s, (0.0, 5.0)), Err(Error::DampingFailure(_))));
    }

    #[test]
    fn nesting_single_mode_and_limits() {
        let grid = EtaGrid::new(5.0, 11).unwrap();
        let mut f = SpectralField::zeros(3, grid, 0.0);
        f.values[2 * 11 + 7] = Complex64::new(0.4, 0.0);
        let track = check_nesting(&[f.clone()], &[(0.1, 0.2), (0.0, 1e-6)], 2.0).unwrap();
        assert!(track.ratios.iter().all(|&r| r <= 1.0));
        // x (λ'-λ) e^{-(λ'-λ)x} → 0 as λ' → λ.
        assert!(track.ratios[1] < 1e-4);
        assert!(check_nesting(&[f], &[(0.2, 0.2)], 1.0).is_err());
    }

    #[test]
    fn zero_coupling_operator_ratio_is_zero() {
        let datum = InitialDatum::new(
            FrequencyDensity::Gaussian { sigma: 1.0 },
            vec![Perturbation::new(1, Complex64::new(0.1, 0.0))],
        );
        let h = make_initial_field(&datum, OmegaGrid::new(8.0, 129).unwrap(), 4).unwrap();
        let tr = SpectralTransform::new(h.grid, EtaGrid::new(10.0, 81).unwrap()).unwrap();
        let z = OrderSeries::from_fn([0.0], |_| Complex64::default());
        let track = check_l_continuity(&[h], &z, &tr, 0.2, 1.0).unwrap();
        assert_eq!(track.ratios, vec![0.0]);
    }

    #[test]
    fn frozen_trajectory_has_no_cauchy_decay_to_fit() {
        let datum = InitialDatum::new(
            FrequencyDensity::Gaussian { sigma: 1.0 },
            vec![Perturbation::new(1, Complex64::new(0.1, 0.0))],
        );
        let h = make_initial_field(&datum, OmegaGrid::new(8.0, 129).unwrap(), 4).unwrap();
        let tr = SpectralTransform::new(h.grid, EtaGrid::new(10.0, 81).unwrap()).unwrap();
        let snaps: Vec<MixedField> = (0..5)
            .map(|i| MixedField {
                time_tag: i as f64,
                ..h.clone()
            })
            .collect();
        let out = extract_h_infinity(&snaps, &tr, 3.0, (0.0, 4.0)).unwrap();
        assert!(out.fit.is_none());
        assert!(out.distances.iter().all(|&(_, d)| d == 0.0));
    }

    #[test]
    fn report_shape() {
        let fit = fit_decay(&synthetic(0.5, 1.0), (0.0, 10.0)).unwrap();
        let json = CheckReport::from_fit("decay", &fit).with_stability(0.01).to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["name", "max_ratio", "argmax_t", "fit", "refinement_stability"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["fit"]["slope"].as_f64().unwrap(), fit.slope);
    }
}
