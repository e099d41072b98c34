#![allow(dead_code)]

use levitodyn_core::constants::KB;
use levitodyn_core::dynamics::{ForceModel, InitialCondition, SimulationConfig, Simulator};
use levitodyn_core::{optics, GasEnvironment, Particle, TrapBeam};

pub fn torsion_particle() -> Particle {
    Particle::diamond(50e-9, 40e-9)
}

pub fn cooling_particle() -> Particle {
    Particle::diamond(50e-9, 25e-9)
}

pub fn beam() -> TrapBeam {
    TrapBeam::new(0.1, 600e-9, 1550e-9)
}

/// Mean of a series and its standard error from non-overlapping block means.
#[derive(Debug, Clone)]
pub struct BlockMeans {
    block_len: usize,
    current: f64,
    filled: usize,
    means: Vec<f64>,
}

impl BlockMeans {
    pub fn new(block_len: usize) -> Self {
        BlockMeans { block_len, current: 0.0, filled: 0, means: Vec::new() }
    }

    pub fn push(&mut self, x: f64) {
        self.current += x;
        self.filled += 1;
        if self.filled == self.block_len {
            self.means.push(self.current / self.block_len as f64);
            self.current = 0.0;
            self.filled = 0;
        }
    }

    pub fn blocks(&self) -> usize {
        self.means.len()
    }

    pub fn mean(&self) -> f64 {
        self.means.iter().sum::<f64>() / self.means.len() as f64
    }

    pub fn stderr(&self) -> f64 {
        let b = self.means.len() as f64;
        let m = self.mean();
        let var = self.means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (b - 1.0);
        (var / b).sqrt()
    }
}

/// Stationary `⟨y²⟩` and `⟨θ²⟩` of a harmonic thermal run, each divided by
/// its equipartition value, with standard errors.
#[derive(Debug, Clone, Copy)]
pub struct Equipartition {
    pub y_ratio: f64,
    pub y_err: f64,
    pub theta_ratio: f64,
    pub theta_err: f64,
    pub relaxation_times: f64,
}

impl Equipartition {
    pub fn within(&self, sigmas: f64) -> bool {
        (self.y_ratio - 1.0).abs() <= sigmas * self.y_err && (self.theta_ratio - 1.0).abs() <= sigmas * self.theta_err
    }
}

pub fn equipartition(
    particle: &Particle,
    beam: &TrapBeam,
    gas: &GasEnvironment,
    dt: f64,
    relaxation_times: f64,
    blocks: usize,
    seed: u64,
) -> Equipartition {
    let f = optics::frequencies(particle, beam).unwrap();
    let rates = levitodyn_core::gas::damping_rates(particle, gas);
    let slowest = rates.gamma_y.min(rates.gamma_theta);
    let steps = (relaxation_times / slowest / dt).ceil() as usize;
    let block_len = steps / blocks;
    let cfg = SimulationConfig {
        dt,
        n_steps: block_len * blocks - 1,
        seed,
        stream: 0,
        mode: ForceModel::Harmonic,
        temperature: gas.temperature,
        initial: InitialCondition::Thermal,
    };
    let sim = Simulator::new(particle, beam, gas, &cfg).unwrap();
    let vy = KB * gas.temperature / (particle.mass() * f.omega_y * f.omega_y);
    let vt = KB * gas.temperature / (particle.moment_of_inertia() * f.omega_theta * f.omega_theta);
    let mut by = BlockMeans::new(block_len);
    let mut bt = BlockMeans::new(block_len);
    sim.run(|_, s| {
        by.push(s.y * s.y / vy);
        bt.push(s.theta * s.theta / vt);
    })
    .unwrap();
    assert_eq!(by.blocks(), blocks);
    Equipartition {
        y_ratio: by.mean(),
        y_err: by.stderr(),
        theta_ratio: bt.mean(),
        theta_err: bt.stderr(),
        relaxation_times: (block_len * blocks) as f64 * dt * slowest,
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
