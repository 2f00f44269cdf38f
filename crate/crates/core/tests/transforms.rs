use std::f64::consts::PI;

use dephase_core::field::quadrature_phases;
use dephase_core::{evaluate_spectral_at, mixed_to_spectral, EtaGrid, MixedField, OmegaGrid};
use num_complex::Complex64;

/// Rows `c_k (1 + a_k ω) e^{-ω²/2}`, whose transforms are
/// `c_k √(2π) e^{-η²/2} (1 - i a_k η)`.
fn polynomial_gaussian(k_max: usize, grid: OmegaGrid) -> (MixedField, Vec<(Complex64, f64)>) {
    let coeffs: Vec<(Complex64, f64)> = (0..=2 * k_max)
        .map(|r| (Complex64::new(0.3 + 0.1 * r as f64, -0.05 * r as f64), 0.2 * r as f64 - 0.7))
        .collect();
    let mut f = MixedField::zeros(k_max, grid, 0.0);
    let omegas = grid.points();
    for (r, &(c, a)) in coeffs.iter().enumerate() {
        let k = r as i32 - k_max as i32;
        for (v, &w) in f.row_mut(k).iter_mut().zip(&omegas) {
            *v = c * (1.0 + a * w) * (-0.5 * w * w).exp();
        }
    }
    (f, coeffs)
}

fn exact(c: Complex64, a: f64, eta: f64) -> Complex64 {
    c * (2.0 * PI).sqrt() * (-0.5 * eta * eta).exp() * Complex64::new(1.0, -a * eta)
}

#[test]
fn point_transform_matches_closed_form() {
    let (f, coeffs) = polynomial_gaussian(3, OmegaGrid::new(12.0, 241).unwrap());
    for k in -3..=3 {
        let (c, a) = coeffs[(k + 3) as usize];
        for eta in [0.0, 0.4, 1.7, -2.3, 5.0] {
            let got = evaluate_spectral_at(&f, k, eta);
            assert!((got - exact(c, a, eta)).norm() < 1e-12, "k={k} η={eta}: {got}");
        }
    }
}

#[test]
fn grid_transform_matches_closed_form_everywhere() {
    let omega = OmegaGrid::new(12.0, 241).unwrap();
    let eta = EtaGrid::new(6.0, 61).unwrap();
    let (f, coeffs) = polynomial_gaussian(2, omega);
    let s = mixed_to_spectral(&f, eta).unwrap();
    for k in -2..=2 {
        let (c, a) = coeffs[(k + 2) as usize];
        for (v, e) in s.row(k).iter().zip(eta.points()) {
            assert!((v - exact(c, a, e)).norm() < 1e-12);
        }
    }
}

/// A non-analytic-looking random field: the transform at one point must
/// converge under ω-refinement towards the fine-grid value.
#[test]
fn random_field_transform_is_refinement_stable() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let amps: Vec<(f64, f64, f64)> = (0..6).map(|_| (rng.random(), rng.random(), rng.random::<f64>() * 3.0)).collect();
    let profile = |w: f64| -> Complex64 {
        amps.iter()
            .map(|&(a, b, s)| Complex64::new(a, b) * (-(w - s).powi(2)).exp())
            .sum()
    };
    let value = |n: usize| -> Complex64 {
        let grid = OmegaGrid::new(10.0, n).unwrap();
        let mut f = MixedField::zeros(2, grid, 0.0);
        for (v, w) in f.row_mut(2).iter_mut().zip(grid.points()) {
            *v = profile(w);
        }
        evaluate_spectral_at(&f, 2, 1.7)
    };
    let coarse = value(101);
    let fine = value(401);
    let finest = value(1601);
    assert!((fine - finest).norm() < 1e-12);
    assert!((coarse - finest).norm() < 1e-8);
}

#[test]
fn quadrature_phases_are_weighted_exponentials() {
    let grid = OmegaGrid::new(4.0, 33).unwrap();
    let p = quadrature_phases(&grid, 0.9);
    let w = grid.weights();
    for (j, v) in p.iter().enumerate() {
        let expect = Complex64::from_polar(w[j], -0.9 * grid.point(j));
        assert!((v - expect).norm() < 1e-15);
    }
}
