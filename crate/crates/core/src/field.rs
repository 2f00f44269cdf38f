//! Mode fields in the mixed `(k, ω)` representation and the dual `(k, η)`
//! representation, with the trapezoidal transform between them.
//!
//! Conventions carry no `2π` prefactors:
//! `h_k(ω) = ∫ h(ϑ, ω) e^{-ikϑ} dϑ` and `ĥ_k(η) = ∫ h_k(ω) e^{-iηω} dω`,
//! so that `z₁(t) = ĥ₁(t, t)` and `ĥ₀ = ĝ`.

use num_complex::Complex64;

use crate::datum::InitialDatum;
use crate::error::{Error, Result};
use crate::grid::{EtaGrid, OmegaGrid};

/// Angular modes `h_k(ω)` for `k ∈ [-k_max, k_max]` on an ω grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedField {
    pub k_max: usize,
    pub grid: OmegaGrid,
    /// Row-major, row `k + k_max`, column = ω index.
    pub values: Vec<Complex64>,
    pub time_tag: f64,
}

/// Dual modes `ĥ_k(η)` on an η grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub k_max: usize,
    pub grid: EtaGrid,
    pub values: Vec<Complex64>,
    pub time_tag: f64,
}

impl MixedField {
    pub fn zeros(k_max: usize, grid: OmegaGrid, time_tag: f64) -> Self {
        Self {
            k_max,
            grid,
            values: vec![Complex64::default(); (2 * k_max + 1) * grid.n_points],
            time_tag,
        }
    }

    pub fn n_modes(&self) -> usize {
        2 * self.k_max + 1
    }

    pub fn n_omega(&self) -> usize {
        self.grid.n_points
    }

    pub fn modes(&self) -> impl Iterator<Item = i32> {
        let k = self.k_max as i32;
        -k..=k
    }

    pub fn row(&self, k: i32) -> &[Complex64] {
        let n = self.n_omega();
        let r = (k + self.k_max as i32) as usize;
        &self.values[r * n..(r + 1) * n]
    }

    pub fn row_mut(&mut self, k: i32) -> &mut [Complex64] {
        let n = self.n_omega();
        let r = (k + self.k_max as i32) as usize;
        &mut self.values[r * n..(r + 1) * n]
    }

    /// `max |h_{-k}(ω) - conj(h_k(ω))|`.
    pub fn reality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..=self.k_max as i32 {
            for (a, b) in self.row(k).iter().zip(self.row(-k)) {
                worst = worst.max((b - a.conj()).norm());
            }
        }
        worst
    }

    /// Replaces `h_k` by `(h_k + conj(h_{-k}))/2` and `h_{-k}` by its
    /// conjugate. Returns the defect before the projection.
    pub fn symmetrize(&mut self) -> f64 {
        let defect = self.reality_defect();
        let n = self.n_omega();
        for k in 0..=self.k_max as i32 {
            let pos = (k + self.k_max as i32) as usize * n;
            let neg = (self.k_max as i32 - k) as usize * n;
            for j in 0..n {
                let avg = 0.5 * (self.values[pos + j] + self.values[neg + j].conj());
                self.values[pos + j] = avg;
                self.values[neg + j] = avg.conj();
            }
        }
        defect
    }

    /// Total mass `∫ h₀(ω) dω` (the angular integral is already in `h₀`).
    pub fn mass(&self) -> f64 {
        self.row(0)
            .iter()
            .zip(self.grid.weights())
            .map(|(h, w)| h.re * w)
            .sum()
    }

    pub fn check_finite(&self) -> Result<()> {
        let n = self.n_omega();
        match self.values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            Some(i) => Err(Error::NonFinite {
                k: (i / n) as i32 - self.k_max as i32,
                index: i % n,
            }),
            None => Ok(()),
        }
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max_ω |h_k(ω)|` for `k = 0..=k_max`.
    pub fn mode_amplitudes(&self) -> Vec<f64> {
        (0..=self.k_max as i32)
            .map(|k| self.row(k).iter().map(|v| v.norm()).fold(0.0, f64::max))
            .collect()
    }

    /// `self - other`, tagged with `self.time_tag`. Shapes must agree.
    pub fn difference(&self, other: &Self) -> Self {
        assert_eq!(self.values.len(), other.values.len(), "field shape mismatch");
        Self {
            k_max: self.k_max,
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
            time_tag: self.time_tag,
        }
    }

    /// Copy with a different mode cutoff; missing modes are zero.
    pub fn with_k_max(&self, k_max: usize) -> Self {
        let mut out = Self::zeros(k_max, self.grid, self.time_tag);
        let shared = k_max.min(self.k_max) as i32;
        for k in -shared..=shared {
            out.row_mut(k).copy_from_slice(self.row(k));
        }
        out
    }
}

impl SpectralField {
    pub fn zeros(k_max: usize, grid: EtaGrid, time_tag: f64) -> Self {
        Self {
            k_max,
            grid,
            values: vec![Complex64::default(); (2 * k_max + 1) * grid.n_points],
            time_tag,
        }
    }

    pub fn n_eta(&self) -> usize {
        self.grid.n_points
    }

    pub fn row(&self, k: i32) -> &[Complex64] {
        let n = self.n_eta();
        let r = (k + self.k_max as i32) as usize;
        &self.values[r * n..(r + 1) * n]
    }

    pub fn row_mut(&mut self, k: i32) -> &mut [Complex64] {
        let n = self.n_eta();
        let r = (k + self.k_max as i32) as usize;
        &mut self.values[r * n..(r + 1) * n]
    }

    pub fn get(&self, k: i32, j: usize) -> Complex64 {
        self.row(k)[j]
    }

    /// `max |ĥ_{-k}(-η) - conj(ĥ_k(η))|` on the symmetric grid.
    pub fn reality_defect(&self) -> f64 {
        let n = self.n_eta();
        let mut worst = 0.0f64;
        for k in 0..=self.k_max as i32 {
            let pos = self.row(k);
            let neg = self.row(-k);
            for j in 0..n {
                worst = worst.max((neg[n - 1 - j] - pos[j].conj()).norm());
            }
        }
        worst
    }

    pub fn check_finite(&self) -> Result<()> {
        let n = self.n_eta();
        match self.values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            Some(i) => Err(Error::NonFinite {
                k: (i / n) as i32 - self.k_max as i32,
                index: i % n,
            }),
            None => Ok(()),
        }
    }

    /// Entrywise supremum `max_{k,η} |ĥ_k(η)|`.
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }
}

/// Builds `h_k(0, ω) = ∫ f₀(ϑ, ω) e^{-ikϑ} dϑ` in closed form:
/// `h₀ = g`, `h_k = ε_k g`, `h_{-k} = conj(ε_k) g`.
pub fn make_initial_field(datum: &InitialDatum, grid: OmegaGrid, k_max: usize) -> Result<MixedField> {
    datum.validate()?;
    grid.validate()?;
    let highest = datum.highest_mode();
    if highest > k_max {
        return Err(Error::Config(format!(
            "k_max = {k_max} is smaller than the highest perturbed mode {highest}"
        )));
    }
    let g = datum.density.on_grid(&grid).values;
    let mut field = MixedField::zeros(k_max, grid, 0.0);
    for (h, &gv) in field.row_mut(0).iter_mut().zip(&g) {
        *h = Complex64::new(gv, 0.0);
    }
    for (k, eps) in datum.positive_modes() {
        let k = k as i32;
        for (h, &gv) in field.row_mut(k).iter_mut().zip(&g) {
            *h = eps * gv;
        }
        for (h, &gv) in field.row_mut(-k).iter_mut().zip(&g) {
            *h = eps.conj() * gv;
        }
    }
    Ok(field)
}

/// Quadrature phases `w_j e^{-iηω_j}` for one dual point.
pub fn quadrature_phases(grid: &OmegaGrid, eta: f64) -> Vec<Complex64> {
    grid.points()
        .into_iter()
        .zip(grid.weights())
        .map(|(w, q)| Complex64::from_polar(q, -eta * w))
        .collect()
}

fn dot(row: &[Complex64], phases: &[Complex64]) -> Complex64 {
    row.iter()
        .zip(phases)
        .fold(Complex64::default(), |acc, (h, p)| acc + h * p)
}

/// `ĥ_k(η)` at one arbitrary `η` by direct quadrature, no interpolation.
pub fn evaluate_spectral_at(field: &MixedField, k: i32, eta: f64) -> Complex64 {
    assert!(
        k.unsigned_abs() as usize <= field.k_max,
        "mode {k} outside k_max = {}",
        field.k_max
    );
    dot(field.row(k), &quadrature_phases(&field.grid, eta))
}

/// Cached phase matrix for repeated `(k, ω) → (k, η)` transforms.
#[derive(Debug, Clone)]
pub struct SpectralTransform {
    omega: OmegaGrid,
    eta: EtaGrid,
    /// Row `j` holds the phases of `η_j`.
    phases: Vec<Vec<Complex64>>,
}

impl SpectralTransform {
    pub fn new(omega: OmegaGrid, eta: EtaGrid) -> Result<Self> {
        omega.validate()?;
        eta.validate()?;
        eta.check_resolves(&omega)?;
        let phases = eta
            .points()
            .into_iter()
            .map(|e| quadrature_phases(&omega, e))
            .collect();
        Ok(Self { omega, eta, phases })
    }

    pub fn eta_grid(&self) -> EtaGrid {
        self.eta
    }

    pub fn apply(&self, field: &MixedField) -> SpectralField {
        assert_eq!(field.grid, self.omega, "field grid does not match transform");
        let mut out = SpectralField::zeros(field.k_max, self.eta, field.time_tag);
        let n_eta = self.eta.n_points;
        let k_max = field.k_max as i32;
        let fill = |(r, dst): (usize, &mut [Complex64])| {
            let row = field.row(r as i32 - k_max);
            for (j, d) in dst.iter_mut().enumerate() {
                *d = dot(row, &self.phases[j]);
            }
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            out.values.par_chunks_mut(n_eta).enumerate().for_each(fill);
        }
        #[cfg(not(feature = "parallel"))]
        out.values.chunks_mut(n_eta).enumerate().for_each(fill);
        out
    }
}

/// One-shot transform to the dual grid.
pub fn mixed_to_spectral(field: &MixedField, eta: EtaGrid) -> Result<SpectralField> {
    field.check_finite()?;
    Ok(SpectralTransform::new(field.grid, eta)?.apply(field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::{FrequencyDensity, Perturbation};

    fn gaussian_field(eps: f64) -> MixedField {
        let datum = InitialDatum::new(
            FrequencyDensity::Gaussian { sigma: 1.0 },
            vec![Perturbation::new(1, Complex64::new(eps, 0.0))],
        );
        make_initial_field(&datum, OmegaGrid::new(8.0, 257).unwrap(), 4).unwrap()
    }

    #[test]
    fn initial_modes_in_closed_form() {
        let f = gaussian_field(0.1);
        let g = FrequencyDensity::Gaussian { sigma: 1.0 };
        for (j, w) in f.grid.points().into_iter().enumerate() {
            assert!((f.row(0)[j].re - g.eval(w)).abs() < 1e-15);
            assert!((f.row(1)[j] - 0.1 * f.row(0)[j]).norm() == 0.0);
            assert_eq!(f.row(2)[j], Complex64::default());
        }
        assert_eq!(f.reality_defect(), 0.0);
        assert!((f.mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn incoherent_state_has_only_mode_zero() {
        let f = gaussian_field(0.0);
        for k in f.modes().filter(|&k| k != 0) {
            assert!(f.row(k).iter().all(|v| v.norm() == 0.0));
        }
    }

    #[test]
    fn k_max_below_perturbed_mode_is_config_error() {
        let datum = InitialDatum::new(
            FrequencyDensity::Gaussian { sigma: 1.0 },
            vec![Perturbation::new(3, Complex64::new(0.05, 0.0))],
        );
        let err = make_initial_field(&datum, OmegaGrid::new(8.0, 64).unwrap(), 2).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn gaussian_transform_matches_closed_form() {
        let f = gaussian_field(0.1);
        let eta = EtaGrid::new(30.0, 241).unwrap();
        let s = mixed_to_spectral(&f, eta).unwrap();
        for (j, e) in eta.points().into_iter().enumerate() {
            assert!((s.get(0, j) - Complex64::new((-0.5 * e * e).exp(), 0.0)).norm() < 1e-8);
        }
        assert!(s.reality_defect() < 1e-15);
    }

    #[test]
    fn lorentzian_transform_matches_closed_form() {
        let datum = InitialDatum::new(
            FrequencyDensity::Lorentzian { width: 1.0 },
            vec![Perturbation::new(1, Complex64::new(0.1, 0.0))],
        );
        let grid = OmegaGrid::new(4000.0, 100_001).unwrap();
        let f = make_initial_field(&datum, grid, 1).unwrap();
        for eta in [0.0, 0.5, 1.0, 3.0, 7.5] {
            let v = evaluate_spectral_at(&f, 1, eta);
            assert!((v.re - 0.1 * (-eta).exp()).abs() < 1e-4, "eta {eta}: {v}");
            assert!(v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn zero_field_transforms_to_zero() {
        let f = MixedField::zeros(3, OmegaGrid::new(8.0, 65).unwrap(), 0.0);
        let s = mixed_to_spectral(&f, EtaGrid::new(10.0, 81).unwrap()).unwrap();
        assert_eq!(s.sup_abs(), 0.0);
    }

    #[test]
    fn point_evaluation_matches_grid_transform_exactly() {
        let f = gaussian_field(0.1);
        let eta = EtaGrid::new(30.0, 241).unwrap();
        let s = mixed_to_spectral(&f, eta).unwrap();
        for (j, e) in eta.points().into_iter().enumerate().step_by(7) {
            for k in -1..=1 {
                assert_eq!(evaluate_spectral_at(&f, k, e), s.get(k, j));
            }
        }
    }

    #[test]
    fn point_evaluation_examples() {
        let f = gaussian_field(0.1);
        assert!((evaluate_spectral_at(&f, 1, 0.0) - Complex64::new(0.1, 0.0)).norm() < 1e-15);
        for t in [0.0, 1.0, 2.5] {
            let v = evaluate_spectral_at(&f, 0, t);
            assert!((v.re - (-0.5 * t * t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn aliasing_guard_rejects_coarse_eta() {
        let f = gaussian_field(0.1);
        assert!(mixed_to_spectral(&f, EtaGrid::new(30.0, 31).unwrap()).is_err());
    }

    #[test]
    fn symmetrize_restores_reality() {
        let mut f = gaussian_field(0.1);
        f.row_mut(1)[10] += Complex64::new(1e-9, 2e-9);
        let defect = f.symmetrize();
        assert!(defect > 1e-9);
        assert_eq!(f.reality_defect(), 0.0);
    }
}
