//! Langevin dynamics of the transverse COM coordinate `y` and the torsional
//! angle `θ`:
//!
//! ```text
//! m ÿ = F_y − m Γ_y ẏ + ξ_y,     ⟨ξ_y ξ_y⟩ = 2 m Γ_y kB T δ(t)
//! I θ̈ = M_z − I Γ_θ θ̇ + ξ_θ,     ⟨ξ_θ ξ_θ⟩ = 2 I Γ_θ kB T δ(t)
//! ```
//!
//! Friction and noise are applied as an exact Ornstein–Uhlenbeck update of
//! the velocities. In [`ForceModel::Harmonic`] the conservative flow is also
//! exact (a phase-space rotation), so the scheme samples the Gibbs state with
//! no timestep error. [`ForceModel::FullPotential`] uses the full optical
//! forces in a BAOAB splitting.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::{angular_to_hz, KB};
use crate::gas::{self, DampingRates};
use crate::model::{GasEnvironment, Particle, TrapBeam};
use crate::optics::{OpticalTrap, TrapFrequencies};
use crate::{Error, Result};

/// `dt` must stay below this fraction of the fastest oscillation period.
pub const RESOLUTION_FRACTION: f64 = 0.05;
/// Default number of steps per torsional period.
pub const STEPS_PER_PERIOD: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceModel {
    /// Forces linearized about `(y, θ) = (0, 0)`; the two modes decouple.
    Harmonic,
    /// Exact gradients of the optical potential.
    FullPotential,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub y: f64,
    pub vy: f64,
    pub theta: f64,
    pub omega: f64,
}

impl State {
    fn is_finite(&self) -> bool {
        self.y.is_finite() && self.vy.is_finite() && self.theta.is_finite() && self.omega.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    Rest,
    /// Drawn from the harmonic Gibbs distribution at the run temperature.
    Thermal,
    Explicit { state: State },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub seed: u64,
    /// RNG stream; ensemble member `k` runs on stream `k`.
    #[serde(default)]
    pub stream: u64,
    pub mode: ForceModel,
    pub temperature: f64,
    pub initial: InitialCondition,
}

impl SimulationConfig {
    /// Thermal start at the gas temperature with the default timestep.
    pub fn new(frequencies: &TrapFrequencies, gas: &GasEnvironment, n_steps: usize, seed: u64) -> Self {
        SimulationConfig {
            dt: default_timestep(frequencies),
            n_steps,
            seed,
            stream: 0,
            mode: ForceModel::Harmonic,
            temperature: gas.temperature,
            initial: InitialCondition::Thermal,
        }
    }
}

/// `(2π / Ω_max) / 50`.
pub fn default_timestep(frequencies: &TrapFrequencies) -> f64 {
    2.0 * PI / frequencies.max() / STEPS_PER_PERIOD
}

/// Everything needed to regenerate a trajectory bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetadata {
    pub particle: Particle,
    pub beam: TrapBeam,
    pub gas: GasEnvironment,
    pub config: SimulationConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    /// `n_steps + 1` samples, starting with the initial state.
    pub samples: Vec<State>,
    pub metadata: TrajectoryMetadata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Y,
    Vy,
    Theta,
    Omega,
}

impl Column {
    pub fn from_name(name: &str) -> Option<Column> {
        match name {
            "y_m" | "y" => Some(Column::Y),
            "vy_ms" | "vy" => Some(Column::Vy),
            "theta_rad" | "theta" => Some(Column::Theta),
            "omega_rads" | "omega" => Some(Column::Omega),
            _ => None,
        }
    }

    pub fn of(&self, s: &State) -> f64 {
        match self {
            Column::Y => s.y,
            Column::Vy => s.vy,
            Column::Theta => s.theta,
            Column::Omega => s.omega,
        }
    }
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn column(&self, column: Column) -> Vec<f64> {
        self.samples.iter().map(|s| column.of(s)).collect()
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.dt
    }

    /// Re-run the simulation described by the metadata.
    pub fn replay(&self) -> Result<Trajectory> {
        let m = &self.metadata;
        simulate(&m.particle, &m.beam, &m.gas, &m.config)
    }
}

/// Integrator with all per-run constants precomputed.
#[derive(Debug, Clone)]
pub struct Simulator {
    trap: OpticalTrap,
    gas: GasEnvironment,
    config: SimulationConfig,
    mass: f64,
    inertia: f64,
    frequencies: TrapFrequencies,
    rates: DampingRates,
}

/// One coordinate's OU constants: `v ← decay v + kick ξ`.
#[derive(Debug, Clone, Copy)]
struct Thermostat {
    decay: f64,
    kick: f64,
}

impl Thermostat {
    fn new(gamma: f64, dt: f64, temperature: f64, inertia: f64) -> Self {
        let decay = (-gamma * dt).exp();
        let kick = ((1.0 - decay * decay) * KB * temperature / inertia).max(0.0).sqrt();
        Thermostat { decay, kick }
    }

    #[inline]
    fn apply(&self, v: f64, xi: f64) -> f64 {
        self.decay * v + self.kick * xi
    }
}

/// Exact flow of `ẍ = −Ω² x` over time `h`.
#[derive(Debug, Clone, Copy)]
struct Rotation {
    cos: f64,
    sin: f64,
    omega: f64,
    h: f64,
}

impl Rotation {
    fn new(omega: f64, h: f64) -> Self {
        let (sin, cos) = (omega * h).sin_cos();
        Rotation { cos, sin, omega, h }
    }

    #[inline]
    fn apply(&self, x: f64, v: f64) -> (f64, f64) {
        if self.omega == 0.0 {
            return (x + v * self.h, v);
        }
        (
            x * self.cos + v * self.sin / self.omega,
            -x * self.omega * self.sin + v * self.cos,
        )
    }
}

impl Simulator {
    pub fn new(
        particle: &Particle,
        beam: &TrapBeam,
        gas: &GasEnvironment,
        config: &SimulationConfig,
    ) -> Result<Self> {
        let trap = OpticalTrap::new(particle, beam)?;
        let frequencies = trap.frequencies();
        if config.n_steps < 1 {
            return Err(Error::InvalidParameter {
                name: "n_steps",
                reason: "trajectory needs at least two samples".into(),
            });
        }
        if !(config.dt > 0.0 && config.dt.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("must be positive, got {}", config.dt),
            });
        }
        if !(config.temperature >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "temperature",
                reason: "must be non-negative".into(),
            });
        }
        let (mode, omega) = if frequencies.omega_theta >= frequencies.omega_y {
            ("torsional", frequencies.omega_theta)
        } else {
            ("COM", frequencies.omega_y)
        };
        let limit = RESOLUTION_FRACTION * 2.0 * PI / omega;
        if config.dt >= limit {
            return Err(Error::TimestepTooLarge {
                dt: config.dt,
                mode,
                frequency_hz: angular_to_hz(omega),
                limit,
            });
        }
        Ok(Simulator {
            trap,
            gas: *gas,
            config: *config,
            mass: particle.mass(),
            inertia: particle.moment_of_inertia(),
            frequencies,
            rates: gas::damping_rates(particle, gas),
        })
    }

    pub fn frequencies(&self) -> &TrapFrequencies {
        &self.frequencies
    }

    pub fn rates(&self) -> &DampingRates {
        &self.rates
    }

    fn initial_state(&self, rng: &mut ChaCha8Rng) -> State {
        match self.config.initial {
            InitialCondition::Rest => State::default(),
            InitialCondition::Explicit { state } => state,
            InitialCondition::Thermal => {
                let kt = KB * self.config.temperature;
                let f = &self.frequencies;
                let mut gauss = || -> f64 { StandardNormal.sample(rng) };
                let sy = (kt / (self.mass * f.omega_y * f.omega_y)).sqrt();
                let svy = (kt / self.mass).sqrt();
                let st = if f.omega_theta > 0.0 {
                    (kt / (self.inertia * f.omega_theta * f.omega_theta)).sqrt()
                } else {
                    0.0
                };
                let sw = (kt / self.inertia).sqrt();
                State {
                    y: sy * gauss(),
                    vy: svy * gauss(),
                    theta: st * gauss(),
                    omega: sw * gauss(),
                }
            }
        }
    }

    /// Integrate, handing every sample (including the initial one) to
    /// `visit`.
    pub fn run(&self, mut visit: impl FnMut(usize, &State)) -> Result<()> {
        let cfg = &self.config;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(cfg.stream);
        let mut state = self.initial_state(&mut rng);
        if !state.is_finite() {
            return Err(Error::NonFinite { step: 0 });
        }
        visit(0, &state);

        let dt = cfg.dt;
        let thermo_y = Thermostat::new(self.rates.gamma_y, dt, cfg.temperature, self.mass);
        let thermo_t = Thermostat::new(self.rates.gamma_theta, dt, cfg.temperature, self.inertia);

        match cfg.mode {
            ForceModel::Harmonic => {
                let rot_y = Rotation::new(self.frequencies.omega_y, 0.5 * dt);
                let rot_t = Rotation::new(self.frequencies.omega_theta, 0.5 * dt);
                for step in 1..=cfg.n_steps {
                    let (y, vy) = rot_y.apply(state.y, state.vy);
                    let (th, w) = rot_t.apply(state.theta, state.omega);
                    let vy = thermo_y.apply(vy, StandardNormal.sample(&mut rng));
                    let w = thermo_t.apply(w, StandardNormal.sample(&mut rng));
                    let (y, vy) = rot_y.apply(y, vy);
                    let (th, w) = rot_t.apply(th, w);
                    state = State {
                        y,
                        vy,
                        theta: th,
                        omega: w,
                    };
                    if !state.is_finite() {
                        return Err(Error::NonFinite { step });
                    }
                    visit(step, &state);
                }
            }
            ForceModel::FullPotential => {
                let h = 0.5 * dt;
                let mut force = self.trap.force(state.y, state.theta);
                let mut torque = self.trap.torque(state.y, state.theta);
                for step in 1..=cfg.n_steps {
                    let mut s = state;
                    s.vy += h * force / self.mass;
                    s.omega += h * torque / self.inertia;
                    s.y += h * s.vy;
                    s.theta += h * s.omega;
                    s.vy = thermo_y.apply(s.vy, StandardNormal.sample(&mut rng));
                    s.omega = thermo_t.apply(s.omega, StandardNormal.sample(&mut rng));
                    s.y += h * s.vy;
                    s.theta += h * s.omega;
                    force = self.trap.force(s.y, s.theta);
                    torque = self.trap.torque(s.y, s.theta);
                    s.vy += h * force / self.mass;
                    s.omega += h * torque / self.inertia;
                    state = s;
                    if !state.is_finite() {
                        return Err(Error::NonFinite { step });
                    }
                    visit(step, &state);
                }
            }
        }
        Ok(())
    }

    pub fn metadata(&self) -> TrajectoryMetadata {
        TrajectoryMetadata {
            particle: self.trap.particle,
            beam: self.trap.beam,
            gas: self.gas,
            config: self.config,
        }
    }
}

pub fn simulate(
    particle: &Particle,
    beam: &TrapBeam,
    gas: &GasEnvironment,
    config: &SimulationConfig,
) -> Result<Trajectory> {
    let sim = Simulator::new(particle, beam, gas, config)?;
    let mut samples = Vec::with_capacity(config.n_steps + 1);
    sim.run(|_, s| samples.push(*s))?;
    Ok(Trajectory {
        dt: config.dt,
        samples,
        metadata: sim.metadata(),
    })
}

/// `count` independent trajectories; member `k` uses RNG stream `k` of the
/// master seed, so results do not depend on scheduling.
pub fn simulate_ensemble(
    particle: &Particle,
    beam: &TrapBeam,
    gas: &GasEnvironment,
    config: &SimulationConfig,
    count: usize,
) -> Result<Vec<Trajectory>> {
    (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let cfg = SimulationConfig {
                stream: k,
                ..*config
            };
            simulate(particle, beam, gas, &cfg)
        })
        .collect()
}

/// Torsional detector response: the balanced polarimeter signal for a
/// particle rotated by `θ`, normalized so that it reads `θ` at small angles.
pub fn torsion_response(theta: f64) -> f64 {
    0.5 * (2.0 * theta).sin()
}

/// Gains and white-noise floors of the two detectors. Noise levels are
/// one-sided PSDs in signal units²/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub com_gain: f64,
    pub tor_gain: f64,
    pub com_noise_psd: f64,
    pub tor_noise_psd: f64,
    pub seed: u64,
}

impl DetectorModel {
    pub fn noiseless() -> Self {
        DetectorModel {
            com_gain: 1.0,
            tor_gain: 1.0,
            com_noise_psd: 0.0,
            tor_noise_psd: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSignals {
    pub dt: f64,
    pub com: Vec<f64>,
    pub tor: Vec<f64>,
    pub model: DetectorModel,
}

/// Sample-by-sample detector, for streaming use without a stored trajectory.
#[derive(Debug, Clone)]
pub struct Detector {
    model: DetectorModel,
    rng: ChaCha8Rng,
    sigma_com: f64,
    sigma_tor: f64,
}

impl Detector {
    pub fn new(model: &DetectorModel, dt: f64) -> Self {
        Detector {
            model: *model,
            rng: ChaCha8Rng::seed_from_u64(model.seed),
            sigma_com: (model.com_noise_psd / (2.0 * dt)).sqrt(),
            sigma_tor: (model.tor_noise_psd / (2.0 * dt)).sqrt(),
        }
    }

    /// `(com, tor)` readings for one state.
    pub fn read(&mut self, s: &State) -> (f64, f64) {
        let n1: f64 = StandardNormal.sample(&mut self.rng);
        let n2: f64 = StandardNormal.sample(&mut self.rng);
        (
            self.model.com_gain * s.y + self.sigma_com * n1,
            self.model.tor_gain * torsion_response(s.theta) + self.sigma_tor * n2,
        )
    }
}

pub fn detector_signals(traj: &Trajectory, model: &DetectorModel) -> DetectorSignals {
    let mut det = Detector::new(model, traj.dt);
    let (com, tor) = traj.samples.iter().map(|s| det.read(s)).unzip();
    DetectorSignals {
        dt: traj.dt,
        com,
        tor,
        model: *model,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::TORR;
    use crate::optics;

    fn torsion_setup() -> (Particle, TrapBeam) {
        (Particle::diamond(50e-9, 40e-9), TrapBeam::new(0.1, 600e-9, 1550e-9))
    }

    fn config(p: &Particle, b: &TrapBeam, gas: &GasEnvironment, n: usize) -> SimulationConfig {
        let f = optics::frequencies(p, b).unwrap();
        SimulationConfig::new(&f, gas, n, 42)
    }

    #[test]
    fn deterministic_for_seed() {
        let (p, b) = torsion_setup();
        let gas = GasEnvironment::air_torr(10.0);
        let cfg = config(&p, &b, &gas, 2000);
        let a = simulate(&p, &b, &gas, &cfg).unwrap();
        let c = simulate(&p, &b, &gas, &cfg).unwrap();
        assert_eq!(a, c);
        assert_eq!(a.replay().unwrap(), a);
        assert_eq!(a.len(), 2001);
        let other = simulate(&p, &b, &gas, &SimulationConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.samples, other.samples);
    }

    #[test]
    fn ensemble_member_zero_matches_single_run() {
        let (p, b) = torsion_setup();
        let gas = GasEnvironment::air_torr(10.0);
        let cfg = config(&p, &b, &gas, 500);
        let single = simulate(&p, &b, &gas, &cfg).unwrap();
        let ens = simulate_ensemble(&p, &b, &gas, &cfg, 3).unwrap();
        assert_eq!(ens[0], single);
        assert_ne!(ens[1].samples, ens[2].samples);
    }

    #[test]
    fn conservative_harmonic_flow_conserves_energy() {
        let (p, b) = torsion_setup();
        let gas = GasEnvironment::air(0.0);
        let f = optics::frequencies(&p, &b).unwrap();
        let cfg = SimulationConfig {
            n_steps: 1_000_000,
            initial: InitialCondition::Explicit {
                state: State {
                    y: 5e-9,
                    vy: 0.01,
                    theta: 0.02,
                    omega: 1e4,
                },
            },
            ..SimulationConfig::new(&f, &gas, 0, 1)
        };
        let m = p.mass();
        let inertia = p.moment_of_inertia();
        let energy = |s: &State| {
            (
                0.5 * m * (s.vy * s.vy + f.omega_y * f.omega_y * s.y * s.y),
                0.5 * inertia * (s.omega * s.omega + f.omega_theta * f.omega_theta * s.theta * s.theta),
            )
        };
        let sim = Simulator::new(&p, &b, &gas, &cfg).unwrap();
        let mut first = None;
        let mut worst: f64 = 0.0;
        sim.run(|_, s| {
            let e = energy(s);
            let e0 = *first.get_or_insert(e);
            worst = worst.max(((e.0 - e0.0) / e0.0).abs()).max(((e.1 - e0.1) / e0.1).abs());
        })
        .unwrap();
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn timestep_guard_names_limiting_mode() {
        let (p, b) = torsion_setup();
        let gas = GasEnvironment::air_torr(10.0);
        let f = optics::frequencies(&p, &b).unwrap();
        let cfg = SimulationConfig {
            dt: 0.06 * 2.0 * PI / f.omega_theta,
            ..config(&p, &b, &gas, 10)
        };
        match simulate(&p, &b, &gas, &cfg) {
            Err(e @ Error::TimestepTooLarge { .. }) => assert!(e.to_string().contains("torsional")),
            other => panic!("expected timestep error, got {other:?}"),
        }
        let cfg = SimulationConfig { n_steps: 0, ..cfg };
        assert!(simulate(&p, &b, &gas, &cfg).is_err());
    }

    #[test]
    fn non_finite_state_aborts() {
        let (p, b) = torsion_setup();
        let gas = GasEnvironment::air_torr(10.0);
        let cfg = SimulationConfig {
            initial: InitialCondition::Explicit {
                state: State {
                    y: f64::NAN,
                    ..State::default()
                },
            },
            ..config(&p, &b, &gas, 10)
        };
        assert!(matches!(simulate(&p, &b, &gas, &cfg), Err(Error::NonFinite { step: 0 })));
    }

    fn wrapped(theta: f64) -> f64 {
        let t = theta.rem_euclid(PI);
        if t > PI / 2.0 {
            t - PI
        } else {
            t
        }
    }

    #[test]
    fn saddle_relaxes_to_aligned_orientation() {
        let (p, b) = torsion_setup();
        let gas = GasEnvironment::air_torr(100.0);
        let f = optics::frequencies(&p, &b).unwrap();
        let relax = 1.0 / gas::rot_damping(&p, &gas);
        let mut cfg = SimulationConfig {
            mode: ForceModel::FullPotential,
            temperature: 0.0,
            initial: InitialCondition::Explicit {
                state: State {
                    theta: PI / 2.0 - 0.01,
                    ..State::default()
                },
            },
            ..SimulationConfig::new(&f, &gas, 0, 3)
        };
        cfg.n_steps = (30.0 * relax / cfg.dt) as usize;
        let traj = simulate(&p, &b, &gas, &cfg).unwrap();
        let last = traj.samples.last().unwrap();
        assert!(wrapped(last.theta).abs() < 1e-3, "{}", last.theta);

        // with thermal noise (σ_θ ≈ 0.26 rad here) it stays in a well at 0 mod π
        cfg.temperature = 300.0;
        let traj = simulate(&p, &b, &gas, &cfg).unwrap();
        let tail = &traj.samples[traj.len() * 9 / 10..];
        let near = tail.iter().filter(|s| wrapped(s.theta).abs() < PI / 4.0).count();
        assert!(near as f64 > 0.9 * tail.len() as f64);
    }

    #[test]
    fn harmonic_and_full_agree_at_small_amplitude() {
        let (p, b) = torsion_setup();
        let gas = GasEnvironment::air(1e-3 * TORR);
        let base = SimulationConfig {
            temperature: 0.0,
            initial: InitialCondition::Explicit {
                state: State {
                    y: 1e-11,
                    theta: 1e-5,
                    ..State::default()
                },
            },
            ..config(&p, &b, &gas, 5000)
        };
        let h = simulate(&p, &b, &gas, &base).unwrap();
        let full = simulate(&p, &b, &gas, &SimulationConfig { mode: ForceModel::FullPotential, ..base }).unwrap();
        let (a, c) = (h.samples.last().unwrap(), full.samples.last().unwrap());
        // Verlet phase error after 100 periods at 50 steps per period ~ 1e-1 rad
        assert!((a.theta - c.theta).abs() < 0.3 * 1e-5);
        assert!((a.y - c.y).abs() < 0.3 * 1e-11);
    }

    #[test]
    fn detector_small_angle_linearity() {
        for th in [-0.1, -0.05, 0.01, 0.07, 0.1] {
            let r = torsion_response(th);
            assert!((r / th - 1.0).abs() < 0.01 * 1.5, "{th}");
        }
        // mean over a uniform grid of orientations in [0, π)
        let n = 10_000;
        let mean: f64 = (0..n).map(|i| torsion_response(PI * i as f64 / n as f64)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn detector_gains_and_noise() {
        let (p, b) = torsion_setup();
        let gas = GasEnvironment::air_torr(10.0);
        let traj = simulate(&p, &b, &gas, &config(&p, &b, &gas, 100)).unwrap();
        let sig = detector_signals(&traj, &DetectorModel { com_gain: 2.0, tor_gain: 3.0, ..DetectorModel::noiseless() });
        assert_eq!(sig.com[7], 2.0 * traj.samples[7].y);
        assert_eq!(sig.tor[7], 3.0 * torsion_response(traj.samples[7].theta));
    }
}
