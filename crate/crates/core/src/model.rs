//! Parameter types shared by every module: the particle, the trap beam, the
//! background gas and the cooling cavity.
//!
//! Values are plain SI numbers. Constructors do not validate; call
//! [`validate`] (or the per-type `check` methods) to get a report of
//! violated invariants and warnings.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

use crate::constants::{AIR_KINETIC_DIAMETER, AIR_MOLECULAR_MASS, C, KB, TORR};

/// Default nanodiamond mass density (kg/m³).
pub const DIAMOND_DENSITY: f64 = 3500.0;
/// Default nanodiamond relative permittivity at 1550 nm (n ≈ 2.39).
pub const DIAMOND_PERMITTIVITY: f64 = 5.71;
/// Default momentum accommodation coefficient.
pub const DEFAULT_ACCOMMODATION: f64 = 0.9;

fn diamond_density() -> f64 {
    DIAMOND_DENSITY
}
fn diamond_permittivity() -> f64 {
    DIAMOND_PERMITTIVITY
}
fn air_mass() -> f64 {
    AIR_MOLECULAR_MASS
}
fn default_accommodation() -> f64 {
    DEFAULT_ACCOMMODATION
}

/// Prolate spheroidal particle with semiaxes `rx ≥ ry = rz`.
///
/// The long axis `x_N` is the one that aligns with the trap polarization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Particle {
    pub rx: f64,
    pub ry: f64,
    pub rz: f64,
    #[serde(default = "diamond_density")]
    pub density: f64,
    #[serde(default = "diamond_permittivity")]
    pub eps_r: f64,
}

impl Particle {
    pub fn new(rx: f64, ry: f64, rz: f64, density: f64, eps_r: f64) -> Self {
        Particle {
            rx,
            ry,
            rz,
            density,
            eps_r,
        }
    }

    /// Nanodiamond spheroid with `ry = rz`.
    pub fn diamond(rx: f64, ry: f64) -> Self {
        Particle::new(rx, ry, ry, DIAMOND_DENSITY, DIAMOND_PERMITTIVITY)
    }

    /// Uniformly rescale all semiaxes.
    pub fn scaled(&self, factor: f64) -> Self {
        Particle {
            rx: self.rx * factor,
            ry: self.ry * factor,
            rz: self.rz * factor,
            ..*self
        }
    }

    /// `ry / rx`, in (0, 1] for a valid prolate particle.
    pub fn aspect(&self) -> f64 {
        self.ry / self.rx
    }

    pub fn volume(&self) -> f64 {
        4.0 * PI / 3.0 * self.rx * self.ry * self.rz
    }

    pub fn mass(&self) -> f64 {
        self.density * self.volume()
    }

    /// Moment of inertia of a uniform ellipsoid about `z_N`.
    pub fn moment_of_inertia(&self) -> f64 {
        self.mass() * (self.rx * self.rx + self.ry * self.ry) / 5.0
    }

    pub fn max_semiaxis(&self) -> f64 {
        self.rx.max(self.ry).max(self.rz)
    }

    pub fn check(&self, report: &mut ValidationReport) {
        let finite = [self.rx, self.ry, self.rz, self.density, self.eps_r]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            report.violation("particle fields must be finite");
            return;
        }
        if self.rx <= 0.0 || self.ry <= 0.0 || self.rz <= 0.0 {
            report.violation("semiaxes must be positive");
        }
        if self.ry > self.rx {
            report.violation(format!(
                "semiaxis ordering violated: ry = {:e} m exceeds rx = {:e} m",
                self.ry, self.rx
            ));
        }
        if self.ry != self.rz {
            report.violation(format!(
                "model requires ry = rz (got ry = {:e} m, rz = {:e} m)",
                self.ry, self.rz
            ));
        }
        if self.density <= 0.0 {
            report.violation("density must be positive");
        }
        if self.eps_r <= 1.0 {
            report.violation(format!(
                "relative permittivity must exceed 1 (got {})",
                self.eps_r
            ));
        }
    }
}

/// Linearly polarized Gaussian trapping beam, polarized along `x_T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapBeam {
    pub power: f64,
    pub waist: f64,
    pub wavelength: f64,
}

impl TrapBeam {
    pub fn new(power: f64, waist: f64, wavelength: f64) -> Self {
        TrapBeam {
            power,
            waist,
            wavelength,
        }
    }

    pub fn with_power(&self, power: f64) -> Self {
        TrapBeam { power, ..*self }
    }

    /// Focal intensity `2P / (π W²)` (W/m²).
    pub fn peak_intensity(&self) -> f64 {
        2.0 * self.power / (PI * self.waist * self.waist)
    }

    pub fn check(&self, report: &mut ValidationReport) {
        if !(self.power > 0.0 && self.power.is_finite()) {
            report.violation("beam power must be positive");
        }
        if !(self.waist > 0.0 && self.waist.is_finite()) {
            report.violation("beam waist must be positive");
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            report.violation("beam wavelength must be positive");
        }
    }
}

/// Background gas at rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasEnvironment {
    pub pressure: f64,
    pub temperature: f64,
    #[serde(default = "air_mass")]
    pub molecular_mass: f64,
    #[serde(default = "default_accommodation")]
    pub accommodation: f64,
}

/// Flow regime classification from the Knudsen number `λ / (2 rx)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowRegime {
    /// Zero pressure: no collisions at all.
    Ballistic,
    FreeMolecular,
    /// Mean free path comparable to the particle; free-molecular drag is
    /// only an estimate here.
    Transitional,
}

/// Knudsen number below which the free-molecular model is flagged.
pub const FREE_MOLECULAR_KNUDSEN_MIN: f64 = 5.0;

impl GasEnvironment {
    pub fn new(pressure: f64, temperature: f64, molecular_mass: f64, accommodation: f64) -> Self {
        GasEnvironment {
            pressure,
            temperature,
            molecular_mass,
            accommodation,
        }
    }

    /// Air at 300 K with accommodation 0.9.
    pub fn air(pressure: f64) -> Self {
        GasEnvironment::new(pressure, 300.0, AIR_MOLECULAR_MASS, DEFAULT_ACCOMMODATION)
    }

    pub fn air_torr(pressure_torr: f64) -> Self {
        Self::air(pressure_torr * TORR)
    }

    pub fn with_pressure(&self, pressure: f64) -> Self {
        GasEnvironment { pressure, ..*self }
    }

    /// Mean molecular speed `sqrt(8 kB T / (π m))`.
    pub fn mean_speed(&self) -> f64 {
        (8.0 * KB * self.temperature / (PI * self.molecular_mass)).sqrt()
    }

    /// Hard-sphere mean free path (m); infinite at zero pressure.
    pub fn mean_free_path(&self) -> f64 {
        if self.pressure == 0.0 {
            return f64::INFINITY;
        }
        KB * self.temperature
            / (2f64.sqrt() * PI * AIR_KINETIC_DIAMETER * AIR_KINETIC_DIAMETER * self.pressure)
    }

    pub fn regime(&self, particle: &Particle) -> FlowRegime {
        if self.pressure == 0.0 {
            FlowRegime::Ballistic
        } else if self.mean_free_path() / (2.0 * particle.rx) < FREE_MOLECULAR_KNUDSEN_MIN {
            FlowRegime::Transitional
        } else {
            FlowRegime::FreeMolecular
        }
    }

    pub fn check(&self, report: &mut ValidationReport) {
        if !(self.pressure >= 0.0 && self.pressure.is_finite()) {
            report.violation("gas pressure must be non-negative");
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            report.violation("gas temperature must be positive");
        }
        if !(self.molecular_mass > 0.0) {
            report.violation("molecular mass must be positive");
        }
        if !(0.0..=1.0).contains(&self.accommodation) {
            report.violation("accommodation coefficient must lie in [0, 1]");
        }
    }
}

/// Two-mirror Fabry–Pérot cavity in the confocal geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cavity {
    pub length: f64,
    pub finesse: f64,
    pub wavelength: f64,
}

impl Cavity {
    pub fn new(length: f64, finesse: f64, wavelength: f64) -> Self {
        Cavity {
            length,
            finesse,
            wavelength,
        }
    }

    pub fn with_length(&self, length: f64) -> Self {
        Cavity { length, ..*self }
    }

    /// Angular full-width decay rate `κ = π c / (L F)`.
    pub fn decay_rate(&self) -> f64 {
        PI * C / (self.length * self.finesse)
    }

    /// Confocal mode waist `sqrt(λ L / 2π)`.
    pub fn mode_waist(&self) -> f64 {
        (self.wavelength * self.length / (2.0 * PI)).sqrt()
    }

    /// Resonance angular frequency `2π c / λ`.
    pub fn resonance(&self) -> f64 {
        2.0 * PI * C / self.wavelength
    }

    pub fn check(&self, report: &mut ValidationReport) {
        if !(self.length > 0.0 && self.length.is_finite()) {
            report.violation("cavity length must be positive");
        }
        if !(self.finesse > 1.0) {
            report.violation("cavity finesse must exceed 1");
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            report.violation("cavity wavelength must be positive");
        }
    }
}

/// Outcome of [`validate`]: hard invariant violations and soft warnings.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn violation(&mut self, msg: impl Into<String>) {
        self.violations.push(msg.into());
    }

    pub fn warning(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    /// No violations (warnings allowed).
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Neither violations nor warnings.
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty() && self.warnings.is_empty()
    }

    pub fn into_result(self) -> crate::Result<ValidationReport> {
        if self.is_valid() {
            Ok(self)
        } else {
            Err(crate::Error::InvalidParameter {
                name: "configuration",
                reason: self.violations.join("; "),
            })
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "error: {v}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Particle size above which the Rayleigh approximation is flagged, as a
/// fraction of the trap wavelength.
pub const RAYLEIGH_SIZE_FRACTION: f64 = 0.2;

pub fn validate(particle: &Particle, beam: &TrapBeam) -> ValidationReport {
    let mut report = ValidationReport::default();
    particle.check(&mut report);
    beam.check(&mut report);
    if report.is_valid() && particle.max_semiaxis() >= RAYLEIGH_SIZE_FRACTION * beam.wavelength {
        report.warning(format!(
            "Rayleigh approximation questionable: largest semiaxis {:.3e} m is not small \
             compared with wavelength {:.3e} m",
            particle.max_semiaxis(),
            beam.wavelength
        ));
    }
    report
}
