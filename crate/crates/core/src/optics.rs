//! Rayleigh-regime optics of a spheroid in a linearly polarized Gaussian
//! trap: depolarization factors, effective susceptibilities, the optical
//! potential `U(y, θ)`, its gradients, and the small-oscillation trap
//! frequencies.
//!
//! The beam is modelled in its focal plane only, as a Gaussian in `y`.

use serde::Serialize;
use std::f64::consts::PI;

use crate::constants::{C, EPS0};
use crate::model::{Particle, TrapBeam};
use crate::{Error, Result};

/// Effective susceptibilities `χ_i = α_i / (ε0 V)` along the principal axes,
/// with the depolarization factors they were computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Susceptibility {
    pub chi_x: f64,
    pub chi_y: f64,
    pub depolarization: [f64; 3],
}

impl Susceptibility {
    pub fn anisotropy(&self) -> f64 {
        self.chi_x - self.chi_y
    }

    /// Polarizabilities `(α_x, α_y)` in SI (C·m²/V).
    pub fn polarizabilities(&self, volume: f64) -> (f64, f64) {
        (EPS0 * volume * self.chi_x, EPS0 * volume * self.chi_y)
    }
}

/// Depolarization factors `(L_x, L_y, L_z)` of a prolate spheroid with
/// `ry / rx = aspect`.
pub fn depolarization_factors(aspect: f64) -> Result<[f64; 3]> {
    if !(aspect > 0.0 && aspect <= 1.0) {
        return Err(Error::AspectOutOfDomain(aspect));
    }
    let e2 = 1.0 - aspect * aspect;
    if e2 == 0.0 {
        return Ok([1.0 / 3.0; 3]);
    }
    let lx = if e2 < 1e-2 {
        // atanh(e)/e - 1 = e²/3 + e⁴/5 + ...; the closed form cancels badly here.
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 0..12 {
            sum += term / (2 * k + 3) as f64;
            term *= e2;
        }
        (1.0 - e2) * sum
    } else {
        let e = e2.sqrt();
        (1.0 - e2) / e2 * (e.atanh() / e - 1.0)
    };
    let ly = 0.5 * (1.0 - lx);
    Ok([lx, ly, ly])
}

fn effective_chi(eps_r: f64, depolarization: f64) -> f64 {
    (eps_r - 1.0) / (1.0 + depolarization * (eps_r - 1.0))
}

pub fn susceptibilities(particle: &Particle) -> Result<Susceptibility> {
    let l = depolarization_factors(particle.aspect())?;
    Ok(Susceptibility {
        chi_x: effective_chi(particle.eps_r, l[0]),
        chi_y: effective_chi(particle.eps_r, l[1]),
        depolarization: l,
    })
}

/// Trap intensity `I_L(y)` in the focal plane (W/m²).
pub fn intensity(beam: &TrapBeam, y: f64) -> f64 {
    let w = beam.waist;
    beam.peak_intensity() * (-2.0 * y * y / (w * w)).exp()
}

/// Angular trap frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrapFrequencies {
    /// Transverse COM frequency `Ω_y` (rad/s).
    pub omega_y: f64,
    /// Torsional frequency `Ω_θ` (rad/s); zero when `degenerate`.
    pub omega_theta: f64,
    /// Set for optically isotropic particles, which have no angular trap.
    pub degenerate: bool,
}

impl TrapFrequencies {
    pub fn max(&self) -> f64 {
        self.omega_y.max(self.omega_theta)
    }

    pub fn ratio(&self) -> f64 {
        self.omega_theta / self.omega_y
    }
}

/// Particle in a trap with everything the potential needs precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalTrap {
    pub particle: Particle,
    pub beam: TrapBeam,
    pub susceptibility: Susceptibility,
    /// `V I0 / (2c)`: the energy scale of the potential.
    energy_scale: f64,
}

impl OpticalTrap {
    pub fn new(particle: &Particle, beam: &TrapBeam) -> Result<Self> {
        let susceptibility = susceptibilities(particle)?;
        Ok(OpticalTrap {
            particle: *particle,
            beam: *beam,
            susceptibility,
            energy_scale: particle.volume() * beam.peak_intensity() / (2.0 * C),
        })
    }

    fn profile(&self, y: f64) -> f64 {
        let w = self.beam.waist;
        (-2.0 * y * y / (w * w)).exp()
    }

    fn orientation_factor(&self, theta: f64) -> f64 {
        let s = theta.sin();
        self.susceptibility.chi_x - self.susceptibility.anisotropy() * s * s
    }

    /// `U(y, θ) = −(V/2c) [χx − (χx−χy) sin²θ] I_L(y)`.
    pub fn potential(&self, y: f64, theta: f64) -> f64 {
        -self.energy_scale * self.orientation_factor(theta) * self.profile(y)
    }

    /// `F_y = −∂U/∂y`.
    pub fn force(&self, y: f64, theta: f64) -> f64 {
        let w2 = self.beam.waist * self.beam.waist;
        -self.energy_scale * self.orientation_factor(theta) * self.profile(y) * 4.0 * y / w2
    }

    /// `M_z = −∂U/∂θ = −(V/2c)(χx−χy) sin 2θ I_L(y)`.
    pub fn torque(&self, y: f64, theta: f64) -> f64 {
        -self.energy_scale * self.susceptibility.anisotropy() * (2.0 * theta).sin() * self.profile(y)
    }

    pub fn frequencies(&self) -> TrapFrequencies {
        let p = &self.particle;
        let b = &self.beam;
        let chi = &self.susceptibility;
        let w2 = b.waist * b.waist;
        let base = C * PI * p.density * w2;
        let omega_y = (4.0 * chi.chi_x * b.power / (base * w2)).sqrt();
        let aniso = chi.anisotropy();
        let degenerate = aniso <= 0.0;
        let omega_theta = if degenerate {
            0.0
        } else {
            (10.0 * aniso * b.power / (base * (p.rx * p.rx + p.ry * p.ry))).sqrt()
        };
        TrapFrequencies {
            omega_y,
            omega_theta,
            degenerate,
        }
    }

    /// Linear stiffnesses `(m Ω_y², I Ω_θ²)` from the potential curvature at
    /// the trap center, used by the harmonic dynamics.
    pub fn stiffness(&self) -> (f64, f64) {
        let w2 = self.beam.waist * self.beam.waist;
        let ky = 4.0 * self.energy_scale * self.susceptibility.chi_x / w2;
        let ktheta = 2.0 * self.energy_scale * self.susceptibility.anisotropy();
        (ky, ktheta)
    }
}

pub fn potential(particle: &Particle, beam: &TrapBeam, y: f64, theta: f64) -> Result<f64> {
    Ok(OpticalTrap::new(particle, beam)?.potential(y, theta))
}

pub fn restoring_force(particle: &Particle, beam: &TrapBeam, y: f64, theta: f64) -> Result<f64> {
    Ok(OpticalTrap::new(particle, beam)?.force(y, theta))
}

pub fn restoring_torque(particle: &Particle, beam: &TrapBeam, y: f64, theta: f64) -> Result<f64> {
    Ok(OpticalTrap::new(particle, beam)?.torque(y, theta))
}

pub fn frequencies(particle: &Particle, beam: &TrapBeam) -> Result<TrapFrequencies> {
    Ok(OpticalTrap::new(particle, beam)?.frequencies())
}

/// `Ω_θ/Ω_y = sqrt(10(χx−χy) / (4χx)) · W / sqrt(rx² + ry²)`.
pub fn frequency_ratio(particle: &Particle, beam: &TrapBeam) -> Result<f64> {
    let chi = susceptibilities(particle)?;
    Ok((10.0 * chi.anisotropy() / (4.0 * chi.chi_x)).sqrt() * beam.waist
        / (particle.rx * particle.rx + particle.ry * particle.ry).sqrt())
}
