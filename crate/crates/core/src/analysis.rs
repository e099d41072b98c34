//! Simulate → detect → PSD → fit, the measurement chain used to recover
//! trap frequencies and linewidths from synthetic data.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::KB;
use crate::dynamics::{
    default_timestep, Detector, DetectorModel, ForceModel, InitialCondition, SimulationConfig, Simulator,
};
use crate::gas::DampingRates;
use crate::model::{GasEnvironment, Particle, TrapBeam};
use crate::optics::{self, TrapFrequencies};
use crate::spectral::{fit_lorentzian, welch_psd, LorentzianFit, Spectrum, Window};
use crate::Result;

/// One-sided thermal displacement PSD per Hz at angular frequency `omega`
/// for an oscillator of inertia `inertia`. Integrates to `kB T / (inertia Ω²)`.
pub fn thermal_psd(omega: f64, center: f64, gamma: f64, inertia: f64, temperature: f64) -> f64 {
    let d = center * center - omega * omega;
    4.0 * KB * temperature * gamma / inertia / (d * d + gamma * gamma * omega * omega)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub n_steps: usize,
    pub segment_len: usize,
    pub overlap: f64,
    pub window: Window,
    /// Fit band is `Ω (1 ± band)` around the injected frequency.
    pub band: f64,
    /// Peak-to-floor ratio of each detector channel, in dB. `None` means a
    /// noiseless detector.
    pub snr_db: Option<f64>,
    /// Defaults to the torsional period over 50.
    pub dt: Option<f64>,
    pub detector_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            n_steps: 1 << 22,
            segment_len: 1 << 18,
            overlap: 0.5,
            window: Window::Hann,
            band: 0.3,
            snr_db: None,
            dt: None,
            detector_seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeEstimate {
    pub fit: LorentzianFit,
    pub injected_omega: f64,
    pub injected_gamma: f64,
}

impl ModeEstimate {
    pub fn omega_error(&self) -> f64 {
        self.fit.omega / self.injected_omega - 1.0
    }

    pub fn gamma_error(&self) -> f64 {
        self.fit.gamma / self.injected_gamma - 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub torsional: ModeEstimate,
    pub com: ModeEstimate,
    pub tor_spectrum: Spectrum,
    pub com_spectrum: Spectrum,
    pub frequencies: TrapFrequencies,
    pub rates: DampingRates,
    pub dt: f64,
}

/// Detector model whose channels sit `snr_db` below the thermal peaks.
pub fn detector_for_snr(
    particle: &Particle,
    frequencies: &TrapFrequencies,
    rates: &DampingRates,
    temperature: f64,
    snr_db: f64,
    seed: u64,
) -> DetectorModel {
    let ratio = 10f64.powf(snr_db / 10.0);
    let peak = |w: f64, g: f64, inertia: f64| thermal_psd(w, w, g, inertia, temperature);
    DetectorModel {
        com_gain: 1.0,
        tor_gain: 1.0,
        com_noise_psd: peak(frequencies.omega_y, rates.gamma_y, particle.mass()) / ratio,
        tor_noise_psd: peak(frequencies.omega_theta, rates.gamma_theta, particle.moment_of_inertia()) / ratio,
        seed,
    }
}

/// Harmonic thermal run at the gas temperature, then a Lorentzian fit to
/// each detector channel.
pub fn run_pipeline(
    particle: &Particle,
    beam: &TrapBeam,
    gas: &GasEnvironment,
    seed: u64,
    cfg: &PipelineConfig,
) -> Result<PipelineResult> {
    let frequencies = optics::frequencies(particle, beam)?;
    let dt = cfg.dt.unwrap_or_else(|| default_timestep(&frequencies));
    let sim_cfg = SimulationConfig {
        dt,
        n_steps: cfg.n_steps - 1,
        seed,
        stream: 0,
        mode: ForceModel::Harmonic,
        temperature: gas.temperature,
        initial: InitialCondition::Thermal,
    };
    let sim = Simulator::new(particle, beam, gas, &sim_cfg)?;
    let rates = *sim.rates();
    let model = match cfg.snr_db {
        Some(db) => detector_for_snr(particle, &frequencies, &rates, gas.temperature, db, cfg.detector_seed ^ seed),
        None => DetectorModel::noiseless(),
    };
    let mut det = Detector::new(&model, dt);
    let mut com = Vec::with_capacity(cfg.n_steps);
    let mut tor = Vec::with_capacity(cfg.n_steps);
    sim.run(|_, s| {
        let (c, t) = det.read(s);
        com.push(c);
        tor.push(t);
    })?;

    let fit_mode = |series: &[f64], omega: f64, gamma: f64| -> Result<(ModeEstimate, Spectrum)> {
        let spec = welch_psd(series, dt, cfg.segment_len, cfg.overlap, cfg.window)?;
        let f0 = omega / (2.0 * PI);
        let fit = fit_lorentzian(&spec, (f0 * (1.0 - cfg.band), f0 * (1.0 + cfg.band)))?;
        Ok((
            ModeEstimate {
                fit,
                injected_omega: omega,
                injected_gamma: gamma,
            },
            spec,
        ))
    };
    let (torsional, tor_spectrum) = fit_mode(&tor, frequencies.omega_theta, rates.gamma_theta)?;
    let (com_est, com_spectrum) = fit_mode(&com, frequencies.omega_y, rates.gamma_y)?;
    Ok(PipelineResult {
        torsional,
        com: com_est,
        tor_spectrum,
        com_spectrum,
        frequencies,
        rates,
        dt,
    })
}
