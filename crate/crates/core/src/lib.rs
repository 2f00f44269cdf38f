//! Spectral simulation of the kinetic Kuramoto model below the
//! synchronization threshold.
//!
//! The phase density is followed in the gliding frame
//! `h(t, ϑ, ω) = f(t, ϑ + ωt, ω)`, expanded in angular modes `h_k(t, ω)`.
//! Around the solver sit the diagnostics used to watch dephasing: analytic
//! norms of `ĥ_k(t, η)`, a Picard construction alternating a Volterra
//! equation for the order parameter with linear transport, a finite-N
//! particle oracle, and a posteriori estimate trackers.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod datum;
pub mod error;
pub mod estimates;
pub mod field;
pub mod grid;
pub mod io;
pub mod norms;
pub mod oracle;
pub mod picard;
pub mod series;
pub mod solver;

pub use config::RunConfig;
pub use num_complex::Complex64;
pub use datum::{FrequencyDensity, InitialDatum, Perturbation};
pub use error::{Error, Result};
pub use field::{evaluate_spectral_at, make_initial_field, mixed_to_spectral, MixedField, SpectralField, SpectralTransform};
pub use grid::{EtaGrid, OmegaGrid};
pub use norms::WeightParams;
pub use series::{OrderSample, OrderSeries};
pub use solver::{run, Coupling, RunOutput};
