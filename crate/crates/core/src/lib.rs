//! Simulation and analysis toolkit for the torsional and center-of-mass
//! motion of an optically levitated ellipsoidal nanoparticle.
//!
//! The crate is organized by physical subsystem:
//!
//! * [`model`] holds the shared parameter types (particle, trap beam, gas,
//!   cavity) and their validation.
//! * [`optics`] computes the Rayleigh-regime susceptibility tensor, the
//!   optical potential, restoring force/torque and trap frequencies.
//! * [`gas`] gives free-molecular damping rates and quality factors, with a
//!   Monte-Carlo collision oracle in [`gas::oracle`].
//! * [`dynamics`] integrates the Langevin equations for `(y, θ)`.
//! * [`spectral`] estimates power spectra and fits thermal Lorentzians.
//! * [`cooling`] evaluates cavity coupling constants and sideband-cooling
//!   steady states.
//! * [`sensing`] evaluates thermal-noise-limited torque sensitivity.
//!
//! All quantities are SI. Angular frequencies are rad/s throughout; values
//! in Hz only appear at I/O boundaries.

pub mod analysis;
pub mod config;
pub mod constants;
pub mod cooling;
pub mod dynamics;
mod error;
pub mod gas;
pub mod model;
pub mod optics;
mod quadrature;
pub mod sensing;
pub mod spectral;

pub use config::Config;
pub use error::{Error, Result};
pub use model::{validate, Cavity, GasEnvironment, Particle, TrapBeam, ValidationReport};
