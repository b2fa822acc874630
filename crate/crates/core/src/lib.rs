//! Simulation library for weak measurements of the mass-energy coupling
//! between an atom's internal qubit and its center-of-mass momentum.
//!
//! The library works in dimensionless internal units: `ħ = 1`, `m = 1`, and a
//! reference wavenumber `k = 1`. All physics enters through dimensionless
//! groups (`g0`, `η`, `ω_k·t`, `ωt`, `θ`, and a dimensionless gravitational
//! acceleration). SI conversion lives in the CLI layer.
//!
//! Module map:
//! - [`hilbert`] — qubit and wave-packet state types, dual position/momentum
//!   grids, Gaussian preparation, observable expectations.
//! - [`kd`] — Kapitza-Dirac scattering: the position phase mask, its Bessel
//!   decomposition into momentum classes, and free-flight separation.
//! - [`dynamics`] — exact and split-step propagators for the coupled
//!   internal/external Hamiltonians, the interaction-picture transform of the
//!   vertical coupling, and the first-order Dyson state.
//! - [`weakmeas`] — weak values, post-selection, momentum-class probabilities
//!   at first order and to all orders.
//! - [`detector`] — atom-counting noise model, two-detector ratio estimator,
//!   and coupling-strength recovery by least squares.

pub mod detector;
pub mod dynamics;
pub mod hilbert;
pub mod kd;
pub mod weakmeas;

mod bessel;
mod fft;
mod stats;

pub use bessel::{bessel_j, bessel_j_sequence};

// re-exported so downstream crates match the complex type used in signatures
pub use num_complex;

/// Simulation unit of action (`ħ` in internal units).
pub const HBAR: f64 = 1.0;
/// Simulation unit of mass (ground-state rest mass in internal units).
pub const MASS: f64 = 1.0;
