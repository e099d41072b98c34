//! Cavity sideband cooling of the torsional and COM modes.
//!
//! The particle sits at a cavity antinode. With intracavity photon number
//! `n_p` the linearized coupling is `G = g √n_p`; the cavity scatters phonons
//! out at `A₋` and in at `A₊`, and the background gas heats the mode towards
//! its thermal occupancy. Both channels are treated independently.

use serde::Serialize;
use std::f64::consts::PI;

use crate::constants::{C, HBAR, KB};
use crate::model::{Cavity, Particle, TrapBeam};
use crate::optics::{self, OpticalTrap};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoolingSetup {
    pub cavity: Cavity,
    pub particle: Particle,
    pub beam: TrapBeam,
    /// Intracavity photon number `n_p = |α|²`.
    pub photons: f64,
    /// Effective detuning `Δ_L` (rad/s); `None` selects the optimum for the
    /// mode being cooled.
    pub detuning: Option<f64>,
    /// Angle between trap and cavity polarizations (rad).
    pub beta: f64,
}

impl CoolingSetup {
    /// Setup with the torsion-optimal polarization angle `β = π/4`.
    pub fn new(cavity: Cavity, particle: Particle, beam: TrapBeam, photons: f64) -> Self {
        CoolingSetup {
            cavity,
            particle,
            beam,
            photons,
            detuning: None,
            beta: PI / 4.0,
        }
    }

    /// Same setup with `β = 0`, which maximizes the COM coupling.
    pub fn for_com(&self) -> Self {
        CoolingSetup { beta: 0.0, ..*self }
    }

    /// Steady intracavity amplitude `|α|`.
    pub fn amplitude(&self) -> f64 {
        self.photons.sqrt()
    }
}

/// Torsional single-photon coupling
/// `g_θ = sqrt(10ħπ rx ry² / (3ρ(rx²+ry²)Ω_θ)) (χx−χy) 64πc / (λ_C² L²)`,
/// times `|sin 2β|` away from the optimal angle.
pub fn coupling_torsional(setup: &CoolingSetup) -> Result<f64> {
    let trap = OpticalTrap::new(&setup.particle, &setup.beam)?;
    let freqs = trap.frequencies();
    if freqs.degenerate {
        return Err(Error::NoTorsionalMode);
    }
    let p = &setup.particle;
    let cav = &setup.cavity;
    let zpf = (10.0 * HBAR * PI * p.rx * p.ry * p.ry
        / (3.0 * p.density * (p.rx * p.rx + p.ry * p.ry) * freqs.omega_theta))
        .sqrt();
    let optical = 64.0 * PI * C / (cav.wavelength.powi(2) * cav.length.powi(2));
    Ok(zpf * trap.susceptibility.anisotropy() * optical * (2.0 * setup.beta).sin().abs())
}

/// COM single-photon coupling
/// `g_y = sqrt(2ħπ rx ry² / (3ρΩ_y)) χx 16π²c / (λ_C³ L²)`; away from
/// `β = 0` the cavity sees `χx cos²β + χy sin²β`.
pub fn coupling_com(setup: &CoolingSetup) -> Result<f64> {
    let trap = OpticalTrap::new(&setup.particle, &setup.beam)?;
    let freqs = trap.frequencies();
    let p = &setup.particle;
    let cav = &setup.cavity;
    let chi = &trap.susceptibility;
    let zpf = (2.0 * HBAR * PI * p.rx * p.ry * p.ry / (3.0 * p.density * freqs.omega_y)).sqrt();
    let (s, c) = setup.beta.sin_cos();
    let chi_eff = chi.chi_x * c * c + chi.chi_y * s * s;
    let optical = 16.0 * PI * PI * C / (cav.wavelength.powi(3) * cav.length.powi(2));
    Ok(zpf * chi_eff * optical)
}

/// `Δ_L = −sqrt(κ²/4 + Ω²)`.
pub fn optimal_detuning(kappa: f64, omega: f64) -> f64 {
    -(0.25 * kappa * kappa + omega * omega).sqrt()
}

/// `Δ_L = ω_L − ω_C + 2 g² |α|² / Ω`: effective detuning from the bare laser
/// detuning `ω_L − ω_C`, including the static optomechanical shift.
pub fn effective_detuning(bare: f64, coupling: f64, photons: f64, omega: f64) -> f64 {
    if coupling == 0.0 || photons == 0.0 {
        return bare;
    }
    bare + 2.0 * coupling * coupling * photons / omega
}

/// Mechanical mode entering the rate equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    pub omega: f64,
    /// Single-photon coupling `g` (rad/s).
    pub coupling: f64,
    /// Gas damping rate (rad/s).
    pub gamma_gas: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoolingRates {
    pub a_minus: f64,
    pub a_plus: f64,
    pub gamma_opt: f64,
    /// Quantum backaction limit `A₊ / (A₋ − A₊)`.
    pub n_min: f64,
    /// `kB T / (ħ Ω)`.
    pub n_th: f64,
    /// Steady-state occupancy; `+inf` when `heating` is set.
    pub n_ss: f64,
    /// `A₋ ≤ A₊`: the drive heats the mode.
    pub heating: bool,
    /// `G = g √n_p < κ/2`.
    pub weak_coupling: bool,
}

/// Rate-equation steady state for one mode at detuning `detuning` and
/// temperature `temperature`.
pub fn steady_phonons(
    mode: &Mode,
    kappa: f64,
    photons: f64,
    detuning: f64,
    temperature: f64,
) -> CoolingRates {
    let big_g2 = mode.coupling * mode.coupling * photons;
    let k2 = 0.25 * kappa * kappa;
    let a_minus = big_g2 * kappa / (k2 + (detuning + mode.omega).powi(2));
    let a_plus = big_g2 * kappa / (k2 + (detuning - mode.omega).powi(2));
    let gamma_opt = a_minus - a_plus;
    let n_th = KB * temperature / (HBAR * mode.omega);
    let weak_coupling = big_g2.sqrt() < 0.5 * kappa;
    if big_g2 == 0.0 {
        return CoolingRates {
            a_minus,
            a_plus,
            gamma_opt,
            n_min: f64::NAN,
            n_th,
            n_ss: if mode.gamma_gas > 0.0 { n_th } else { f64::NAN },
            heating: false,
            weak_coupling,
        };
    }
    let heating = gamma_opt <= 0.0;
    let n_min = if heating { f64::INFINITY } else { a_plus / gamma_opt };
    let n_ss = if heating {
        f64::INFINITY
    } else {
        (gamma_opt * n_min + mode.gamma_gas * n_th) / (gamma_opt + mode.gamma_gas)
    };
    CoolingRates {
        a_minus,
        a_plus,
        gamma_opt,
        n_min,
        n_th,
        n_ss,
        heating,
        weak_coupling,
    }
}

/// Photon number at which `G` reaches `κ/2`.
pub fn weak_coupling_limit(coupling: f64, kappa: f64) -> f64 {
    (0.5 * kappa / coupling).powi(2)
}

/// Intracavity photon number for input power `P_in` on resonance,
/// `n_p = 4 P_in / (ħ ω_L κ)`.
pub fn photons_from_input_power(input_power: f64, laser_omega: f64, kappa: f64) -> f64 {
    4.0 * input_power / (HBAR * laser_omega * kappa)
}

/// One row of a drive sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub photons: f64,
    pub modes: [CoolingRates; 2],
}

/// Both modes evaluated over a drive grid. Index 0 is torsional, 1 is COM.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoolingSweep {
    pub kappa: f64,
    pub modes: [Mode; 2],
    pub detunings: [f64; 2],
    pub points: Vec<SweepPoint>,
}

impl CoolingSweep {
    /// Whether mode `k` dips below one phonon anywhere within weak coupling.
    pub fn reaches_ground_state(&self, k: usize) -> bool {
        self.points
            .iter()
            .any(|p| p.modes[k].weak_coupling && p.modes[k].n_ss < 1.0)
    }
}

/// Mechanical modes (torsional, COM) of a setup with gas damping rates
/// `(Γ_θ, Γ_y)`.
pub fn modes(setup: &CoolingSetup, gamma_theta: f64, gamma_y: f64) -> Result<[Mode; 2]> {
    let freqs = optics::frequencies(&setup.particle, &setup.beam)?;
    Ok([
        Mode {
            omega: freqs.omega_theta,
            coupling: coupling_torsional(setup)?,
            gamma_gas: gamma_theta,
        },
        Mode {
            omega: freqs.omega_y,
            coupling: coupling_com(&setup.for_com())?,
            gamma_gas: gamma_y,
        },
    ])
}

/// Sweep the drive for both modes at their respective optimal detunings (or
/// the setup's fixed detuning). `drives` must be monotone.
pub fn cooling_sweep(
    setup: &CoolingSetup,
    modes: [Mode; 2],
    drives: &[f64],
    temperature: f64,
) -> Result<CoolingSweep> {
    if drives.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter {
            name: "drive grid",
            reason: "must be non-decreasing".into(),
        });
    }
    let kappa = setup.cavity.decay_rate();
    let detunings = modes.map(|m| setup.detuning.unwrap_or_else(|| optimal_detuning(kappa, m.omega)));
    let points = drives
        .iter()
        .map(|&photons| SweepPoint {
            photons,
            modes: [0, 1].map(|k| steady_phonons(&modes[k], kappa, photons, detunings[k], temperature)),
        })
        .collect();
    Ok(CoolingSweep {
        kappa,
        modes,
        detunings,
        points,
    })
}

/// Logarithmic grid of `count` points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::TORR;
    use crate::gas;
    use crate::model::GasEnvironment;
    use proptest::prelude::*;

    fn cooling_setup(length: f64) -> CoolingSetup {
        CoolingSetup::new(
            Cavity::new(length, 1e5, 1540e-9),
            Particle::diamond(50e-9, 25e-9),
            TrapBeam::new(0.1, 600e-9, 1550e-9),
            0.0,
        )
    }

    #[test]
    fn torsional_coupling_frozen_value() {
        // extended-precision evaluation of the same expression
        let g = coupling_torsional(&cooling_setup(5e-3)).unwrap();
        assert!((g / 14.01679753029814 - 1.0).abs() < 1e-9, "{g}");
        let gy = coupling_com(&cooling_setup(5e-3).for_com()).unwrap();
        assert!((gy / 1.5118365519513766 - 1.0).abs() < 1e-9, "{gy}");
    }

    #[test]
    fn couplings_scale_as_inverse_length_squared() {
        let reference = coupling_torsional(&cooling_setup(0.5e-3)).unwrap() * 0.5e-3f64.powi(2);
        let reference_y = coupling_com(&cooling_setup(0.5e-3).for_com()).unwrap() * 0.5e-3f64.powi(2);
        for l in [1e-3, 2e-3, 5e-3] {
            let g = coupling_torsional(&cooling_setup(l)).unwrap() * l * l;
            assert!((g / reference - 1.0).abs() < 1e-12);
            let gy = coupling_com(&cooling_setup(l).for_com()).unwrap() * l * l;
            assert!((gy / reference_y - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn isotropic_particle_has_no_torsional_coupling() {
        let mut s = cooling_setup(1e-3);
        s.particle = Particle::diamond(40e-9, 40e-9);
        assert!(matches!(coupling_torsional(&s), Err(Error::NoTorsionalMode)));
    }

    #[test]
    fn couplings_have_similar_magnitude() {
        let gt = coupling_torsional(&cooling_setup(1e-3)).unwrap();
        let gy = coupling_com(&cooling_setup(1e-3).for_com()).unwrap();
        let r = gt / gy;
        assert!(r > 0.1 && r < 10.0, "{r}");
    }

    #[test]
    fn com_coupling_vanishes_with_susceptibility() {
        // g_y ∝ χx^{3/4} through Ω_y
        let s = cooling_setup(1e-3).for_com();
        let reference = coupling_com(&s).unwrap();
        let mut weak = s;
        weak.particle.eps_r = 1.0 + 1e-12;
        assert!(coupling_com(&weak).unwrap() < 1e-6 * reference);
    }

    #[test]
    fn detuning_limits() {
        assert_eq!(optimal_detuning(0.0, 3.0), -3.0);
        assert_eq!(optimal_detuning(4.0, 0.0), -2.0);
        let cav = Cavity::new(0.5e-3, 1e5, 1540e-9);
        let kappa = cav.decay_rate();
        assert!((kappa / (2.0 * PI) / 3.0e6 - 1.0).abs() < 1e-3);
        let d = optimal_detuning(kappa, 2.0 * PI * 2.6e6) / (2.0 * PI);
        assert!((d + 3.0e6).abs() < 0.05e6, "{d}");
    }

    #[test]
    fn effective_detuning_shift() {
        assert_eq!(effective_detuning(-5.0, 0.0, 1e6, 2.0), -5.0);
        assert_eq!(effective_detuning(-5.0, 3.0, 0.0, 2.0), -5.0);
        assert_eq!(effective_detuning(-5.0, 1.0, 2.0, 2.0), -3.0);
    }

    #[test]
    fn resolved_sideband_limit() {
        let omega = 1e7;
        let kappa = 1e4;
        let mode = Mode { omega, coupling: 1.0, gamma_gas: 0.0 };
        let r = steady_phonons(&mode, kappa, 10.0, -omega, 300.0);
        let expected = (kappa / (4.0 * omega)).powi(2);
        assert!((r.n_ss / expected - 1.0).abs() < 1e-6, "{} vs {expected}", r.n_ss);
    }

    #[test]
    fn zero_drive_gives_thermal_occupancy() {
        let mode = Mode { omega: 1e7, coupling: 10.0, gamma_gas: 1e-4 };
        let r = steady_phonons(&mode, 1e6, 0.0, -1e7, 300.0);
        assert_eq!(r.n_ss, r.n_th);
        assert!((r.n_th - KB * 300.0 / (HBAR * 1e7)).abs() < 1e-9 * r.n_th);
    }

    #[test]
    fn blue_detuning_is_flagged() {
        let mode = Mode { omega: 1e7, coupling: 10.0, gamma_gas: 1e-4 };
        let r = steady_phonons(&mode, 1e6, 1e4, 1e7, 300.0);
        assert!(r.heating);
        assert!(r.n_ss.is_infinite());
    }

    #[test]
    fn interpolates_between_limits() {
        let mode = Mode { omega: 1e7, coupling: 10.0, gamma_gas: 0.0 };
        let kappa = 2e7;
        let d = optimal_detuning(kappa, mode.omega);
        let r0 = steady_phonons(&mode, kappa, 1e4, d, 300.0);
        assert!((r0.n_ss / r0.n_min - 1.0).abs() < 1e-3);
        let hot = Mode { gamma_gas: 1e12, ..mode };
        let r1 = steady_phonons(&hot, kappa, 1e4, d, 300.0);
        assert!((r1.n_ss / r1.n_th - 1.0).abs() < 1e-3);
    }

    fn sweep(length: f64) -> CoolingSweep {
        let setup = cooling_setup(length);
        let gas = GasEnvironment::air(1e-8 * TORR);
        let rates = gas::damping_rates(&setup.particle, &gas);
        let m = modes(&setup, rates.gamma_theta, rates.gamma_y).unwrap();
        let kappa = setup.cavity.decay_rate();
        let hi = weak_coupling_limit(m[1].coupling, kappa);
        cooling_sweep(&setup, m, &log_grid(1.0, hi, 200), 300.0).unwrap()
    }

    #[test]
    fn short_cavity_cools_only_torsion() {
        let s = sweep(0.5e-3);
        assert!(s.reaches_ground_state(0));
        assert!(s.points.iter().all(|p| p.modes[1].n_ss > 1.0));
    }

    #[test]
    fn long_cavity_cools_both() {
        let s = sweep(5e-3);
        assert!(s.reaches_ground_state(0));
        assert!(s.reaches_ground_state(1));
    }

    #[test]
    fn torsion_colder_than_com_and_monotone() {
        for length in [0.5e-3, 5e-3] {
            let s = sweep(length);
            let mut last = f64::INFINITY;
            for p in s.points.iter().filter(|p| p.modes[0].weak_coupling) {
                assert!(p.modes[0].n_ss < p.modes[1].n_ss, "n_p = {}", p.photons);
                assert!(p.modes[0].n_ss <= last * (1.0 + 1e-12));
                last = p.modes[0].n_ss;
            }
        }
    }

    #[test]
    fn non_monotone_grid_rejected() {
        let setup = cooling_setup(1e-3);
        let m = modes(&setup, 1e-4, 1e-4).unwrap();
        assert!(cooling_sweep(&setup, m, &[1.0, 3.0, 2.0], 300.0).is_err());
    }

    proptest! {
        #[test]
        fn n_ss_bounded_by_limits(photons in 1.0..1e6f64, gamma in 0.0..1e3f64) {
            let mode = Mode { omega: 1.6e7, coupling: 10.0, gamma_gas: gamma };
            let kappa = 1.9e7;
            let r = steady_phonons(&mode, kappa, photons, optimal_detuning(kappa, mode.omega), 300.0);
            prop_assert!(r.n_ss >= r.n_min * (1.0 - 1e-12));
            prop_assert!(r.n_ss <= r.n_th * (1.0 + 1e-12));
        }
    }
}
