//! Data behind each reproduced figure panel.

use clap::ValueEnum;
use levitodyn_core::analysis::{run_pipeline, PipelineConfig, PipelineResult};
use levitodyn_core::constants::{angular_to_hz, TORR};
use levitodyn_core::cooling::{self, cooling_sweep, log_grid, weak_coupling_limit, CoolingSetup};
use levitodyn_core::spectral::{fit_sqrt_power, pressure_independence};
use levitodyn_core::{gas, optics, Config, GasEnvironment, Particle};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::f64::consts::PI;

use crate::error::CliError;
use crate::output::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureId {
    #[value(name = "2b")]
    PowerScaling,
    #[value(name = "2c")]
    PressureIndependence,
    #[value(name = "2d")]
    FrequencyRatio,
    #[value(name = "3a")]
    Potentials,
    #[value(name = "3b")]
    SizeDependence,
    #[value(name = "3c")]
    QualityFactors,
    #[value(name = "3d")]
    Enhancement,
    #[value(name = "4a")]
    Couplings,
    #[value(name = "4b")]
    Cooling,
}

impl FigureId {
    /// Figures built around the cooling geometry default to its preset.
    pub fn default_config(&self) -> Config {
        match self {
            FigureId::Couplings | FigureId::Cooling => Config::cooling_reference(),
            _ => Config::torsion_reference(),
        }
    }

    pub fn uses_pipeline(&self) -> bool {
        matches!(
            self,
            FigureId::PowerScaling | FigureId::PressureIndependence | FigureId::FrequencyRatio
        )
    }
}

#[derive(Debug, Clone)]
pub struct FigureOptions {
    pub cavity_length: Option<f64>,
    /// Steps per simulated trajectory for the pipeline panels.
    pub steps: usize,
    pub seed: u64,
}

pub struct FigureData {
    pub main: Table,
    pub side: Vec<(&'static str, Table)>,
    pub summary: Value,
}

/// Largest power of two not above `steps / 16`, between 2^10 and 2^18.
fn segment_for(steps: usize) -> usize {
    let target = (steps / 16).max(1024);
    let mut seg = 1usize << (usize::BITS - 1 - target.leading_zeros());
    seg = seg.min(1 << 18);
    seg
}

fn pipeline_config(opts: &FigureOptions) -> PipelineConfig {
    PipelineConfig {
        n_steps: opts.steps,
        segment_len: segment_for(opts.steps),
        ..Default::default()
    }
}

fn gas_at_torr(cfg: &Config, torr: f64) -> GasEnvironment {
    cfg.gas.unwrap_or_else(|| GasEnvironment::air(0.0)).with_pressure(torr * TORR)
}

/// The configured particle and a more elongated, larger one.
fn two_geometries(p: &Particle) -> [Particle; 2] {
    let rx = 1.2 * p.rx;
    [*p, Particle { rx, ry: 0.7 * rx, rz: 0.7 * rx, ..*p }]
}

const POWER_MULTIPLES: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 5.0];
const MEASUREMENT_TORR: f64 = 100.0;

fn power_runs(cfg: &Config, opts: &FigureOptions) -> Result<Vec<(Particle, f64, PipelineResult)>, CliError> {
    let gas = gas_at_torr(cfg, MEASUREMENT_TORR);
    let pc = pipeline_config(opts);
    let jobs: Vec<(Particle, f64)> = two_geometries(&cfg.particle)
        .iter()
        .flat_map(|p| POWER_MULTIPLES.iter().map(move |m| (*p, m * cfg.beam.power)))
        .collect();
    jobs.par_iter()
        .enumerate()
        .map(|(k, &(p, power))| {
            let r = run_pipeline(&p, &cfg.beam.with_power(power), &gas, opts.seed.wrapping_add(k as u64), &pc)?;
            Ok((p, power, r))
        })
        .collect()
}

fn power_scaling(cfg: &Config, opts: &FigureOptions) -> Result<FigureData, CliError> {
    let runs = power_runs(cfg, opts)?;
    let mut main = Table::new([
        "rx_m",
        "ry_m",
        "power_W",
        "measured_theta_Hz",
        "measured_y_Hz",
        "sqrt_fit_theta_Hz",
        "sqrt_fit_y_Hz",
    ]);
    let mut fits = Table::new(["rx_m", "ry_m", "A_theta_Hz_per_rtW", "residual_theta", "A_y_Hz_per_rtW", "residual_y"]);
    let mut summary = Vec::new();
    for chunk in runs.chunks(POWER_MULTIPLES.len()) {
        let p = chunk[0].0;
        let theta: Vec<(f64, f64)> = chunk.iter().map(|(_, w, r)| (*w, r.torsional.fit.omega_hz())).collect();
        let com: Vec<(f64, f64)> = chunk.iter().map(|(_, w, r)| (*w, r.com.fit.omega_hz())).collect();
        let ft = fit_sqrt_power(&theta)?;
        let fy = fit_sqrt_power(&com)?;
        for ((&(w, t), &(_, y)), _) in theta.iter().zip(&com).zip(chunk) {
            main.push([p.rx, p.ry, w, t, y, ft.a * w.sqrt(), fy.a * w.sqrt()].map(Cell::from).to_vec());
        }
        fits.push([p.rx, p.ry, ft.a, ft.residual, fy.a, fy.residual].map(Cell::from).to_vec());
        summary.push(json!({
            "rx_m": p.rx, "ry_m": p.ry,
            "A_theta_Hz_per_rtW": ft.a, "residual_theta": ft.residual,
            "A_y_Hz_per_rtW": fy.a, "residual_y": fy.residual,
        }));
    }
    Ok(FigureData {
        main,
        side: vec![("fit", fits)],
        summary: json!({ "pressure_Torr": MEASUREMENT_TORR, "fits": summary }),
    })
}

fn frequency_ratio(cfg: &Config, opts: &FigureOptions) -> Result<FigureData, CliError> {
    let runs = power_runs(cfg, opts)?;
    let mut main = Table::new(["rx_m", "ry_m", "power_W", "ratio_theta_y", "ratio_stderr", "ratio_model"]);
    for (p, power, r) in &runs {
        let q = r.torsional.fit.omega / r.com.fit.omega;
        let rel = (r.torsional.fit.stderr.omega / r.torsional.fit.omega).hypot(r.com.fit.stderr.omega / r.com.fit.omega);
        main.push([p.rx, p.ry, *power, q, q * rel, r.frequencies.ratio()].map(Cell::from).to_vec());
    }
    Ok(FigureData {
        main,
        side: Vec::new(),
        summary: json!({ "pressure_Torr": MEASUREMENT_TORR }),
    })
}

const PRESSURES_TORR: [f64; 6] = [2.0, 5.0, 10.0, 20.0, 50.0, 100.0];

fn pressure_scan(cfg: &Config, opts: &FigureOptions) -> Result<FigureData, CliError> {
    let p0 = cfg.particle;
    let particles: Vec<Particle> = [p0.aspect(), 0.6, 0.9]
        .iter()
        .map(|&a| Particle { ry: a * p0.rx, rz: a * p0.rx, ..p0 })
        .collect();
    let pc = pipeline_config(opts);
    let jobs: Vec<(usize, f64)> = (0..particles.len())
        .flat_map(|i| PRESSURES_TORR.iter().map(move |&t| (i, t)))
        .collect();
    let fits: Vec<(f64, f64)> = jobs
        .par_iter()
        .enumerate()
        .map(|(k, &(i, torr))| {
            let gas = gas_at_torr(cfg, torr);
            let r = run_pipeline(&particles[i], &cfg.beam, &gas, opts.seed.wrapping_add(k as u64), &pc)?;
            Ok((r.torsional.fit.omega, gas::damping_rates(&particles[i], &gas).anisotropy()))
        })
        .collect::<Result<_, CliError>>()?;

    let mut main = Table::new([
        "rx_m",
        "ry_m",
        "pressure_Torr",
        "omega_theta_Hz",
        "normalized_omega_theta",
        "gamma_x_over_gamma_y",
    ]);
    let mut side = Table::new(["rx_m", "ry_m", "mean_omega_theta_Hz", "normalized_std"]);
    let mut pooled = Vec::new();
    for (i, p) in particles.iter().enumerate() {
        let rows = &fits[i * PRESSURES_TORR.len()..(i + 1) * PRESSURES_TORR.len()];
        let points: Vec<(f64, f64)> = PRESSURES_TORR.iter().zip(rows).map(|(&t, &(w, _))| (t, w)).collect();
        let stat = pressure_independence(&points)?;
        for (&torr, &(w, aniso)) in PRESSURES_TORR.iter().zip(rows) {
            pooled.push(w / stat.mean);
            main.push([p.rx, p.ry, torr, angular_to_hz(w), w / stat.mean, aniso].map(Cell::from).to_vec());
        }
        side.push([p.rx, p.ry, angular_to_hz(stat.mean), stat.normalized_std].map(Cell::from).to_vec());
    }
    let n = pooled.len() as f64;
    let mean = pooled.iter().sum::<f64>() / n;
    let spread = (pooled.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(FigureData {
        main,
        side: vec![("summary", side)],
        summary: json!({ "pooled_normalized_std": spread }),
    })
}

fn potentials(cfg: &Config) -> Result<FigureData, CliError> {
    let trap = optics::OpticalTrap::new(&cfg.particle, &cfg.beam)?;
    let n = 201;
    let mut main = Table::new(["y_m", "U_y_J", "rx_theta_m", "U_theta_J"]);
    for i in 0..n {
        let t = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
        let y = 1.5 * cfg.beam.waist * t;
        let theta = 0.5 * PI * t;
        main.push(
            [y, trap.potential(y, 0.0), cfg.particle.rx * theta, trap.potential(0.0, theta)]
                .map(Cell::from)
                .to_vec(),
        );
    }
    let f = trap.frequencies();
    Ok(FigureData {
        main,
        side: Vec::new(),
        summary: json!({
            "omega_y_Hz": angular_to_hz(f.omega_y),
            "omega_theta_Hz": angular_to_hz(f.omega_theta),
        }),
    })
}

fn size_grid() -> Vec<f64> {
    (0..57).map(|i| 10e-9 + 2.5e-9 * i as f64).collect()
}

fn size_dependence(cfg: &Config) -> Result<FigureData, CliError> {
    let aspect = cfg.particle.aspect();
    let mut main = Table::new(["rx_m", "omega_y_Hz", "omega_theta_Hz"]);
    for rx in size_grid() {
        let p = Particle { rx, ry: aspect * rx, rz: aspect * rx, ..cfg.particle };
        let f = optics::frequencies(&p, &cfg.beam)?;
        main.push([rx, angular_to_hz(f.omega_y), angular_to_hz(f.omega_theta)].map(Cell::from).to_vec());
    }
    Ok(FigureData {
        main,
        side: Vec::new(),
        summary: json!({ "aspect": aspect }),
    })
}

fn quality_factors(cfg: &Config) -> Result<FigureData, CliError> {
    let base = cfg.gas.unwrap_or_else(|| GasEnvironment::air(0.0));
    let mut main = Table::new(["pressure_Torr", "Q_y", "Q_theta"]);
    for torr in log_grid(1e-10, 1e2, 49) {
        let q = gas::quality_factors(&cfg.particle, &cfg.beam, &base.with_pressure(torr * TORR))?;
        main.push([torr, q.q_y.as_f64(), q.q_theta.as_f64()].map(Cell::from).to_vec());
    }
    let q = gas::quality_factors(&cfg.particle, &cfg.beam, &base.with_pressure(1e-8 * TORR))?;
    Ok(FigureData {
        main,
        side: Vec::new(),
        summary: json!({ "Q_theta_over_Q_y": q.q_theta.as_f64() / q.q_y.as_f64() }),
    })
}

const ASPECTS: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];

fn enhancement(cfg: &Config) -> Result<FigureData, CliError> {
    let mut main = Table::new(["rx_m", "aspect", "ratio_theta_y"]);
    for aspect in ASPECTS {
        for rx in size_grid() {
            let p = Particle { rx, ry: aspect * rx, rz: aspect * rx, ..cfg.particle };
            main.push([rx, aspect, optics::frequency_ratio(&p, &cfg.beam)?].map(Cell::from).to_vec());
        }
    }
    Ok(FigureData {
        main,
        side: Vec::new(),
        summary: Value::Null,
    })
}

fn couplings(cfg: &Config) -> Result<FigureData, CliError> {
    let cav = cfg.cavity()?;
    let mut main = Table::new(["length_m", "g_theta_Hz", "g_y_Hz"]);
    for length in log_grid(1e-4, 1e-2, 41) {
        let setup = CoolingSetup::new(cav.with_length(length), cfg.particle, cfg.beam, 0.0);
        let gt = cooling::coupling_torsional(&setup)?;
        let gy = cooling::coupling_com(&setup.for_com())?;
        main.push([length, angular_to_hz(gt), angular_to_hz(gy)].map(Cell::from).to_vec());
    }
    Ok(FigureData {
        main,
        side: Vec::new(),
        summary: Value::Null,
    })
}

fn cooling_curves(cfg: &Config, opts: &FigureOptions) -> Result<FigureData, CliError> {
    let cav = cfg.cavity()?;
    let gas = cfg.gas()?;
    let lengths = match opts.cavity_length {
        Some(l) => vec![l],
        None => vec![0.5e-3, 5e-3],
    };
    let rates = gas::damping_rates(&cfg.particle, &gas);
    let mut main = Table::new([
        "length_m",
        "n_photons",
        "n_theta",
        "n_y",
        "weak_coupling_theta",
        "weak_coupling_y",
    ]);
    let mut summary = Vec::new();
    for length in lengths {
        let setup = CoolingSetup::new(cav.with_length(length), cfg.particle, cfg.beam, 0.0);
        let modes = cooling::modes(&setup, rates.gamma_theta, rates.gamma_y)?;
        let hi = weak_coupling_limit(modes[1].coupling, setup.cavity.decay_rate());
        let sweep = cooling_sweep(&setup, modes, &log_grid(1.0, hi, 200), gas.temperature)?;
        for p in &sweep.points {
            let [t, y] = p.modes;
            main.push(vec![
                length.into(),
                p.photons.into(),
                t.n_ss.into(),
                y.n_ss.into(),
                t.weak_coupling.into(),
                y.weak_coupling.into(),
            ]);
        }
        let min = |k: usize| {
            sweep.points.iter().filter(|p| p.modes[k].weak_coupling).map(|p| p.modes[k].n_ss).fold(f64::INFINITY, f64::min)
        };
        summary.push(json!({
            "length_m": length,
            "min_n_theta": min(0),
            "min_n_y": min(1),
            "theta_ground_state": sweep.reaches_ground_state(0),
            "y_ground_state": sweep.reaches_ground_state(1),
        }));
    }
    Ok(FigureData {
        main,
        side: Vec::new(),
        summary: Value::Array(summary),
    })
}

pub fn figure(id: FigureId, cfg: &Config, opts: &FigureOptions) -> Result<FigureData, CliError> {
    match id {
        FigureId::PowerScaling => power_scaling(cfg, opts),
        FigureId::PressureIndependence => pressure_scan(cfg, opts),
        FigureId::FrequencyRatio => frequency_ratio(cfg, opts),
        FigureId::Potentials => potentials(cfg),
        FigureId::SizeDependence => size_dependence(cfg),
        FigureId::QualityFactors => quality_factors(cfg),
        FigureId::Enhancement => enhancement(cfg),
        FigureId::Couplings => couplings(cfg),
        FigureId::Cooling => cooling_curves(cfg, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_lengths() {
        assert_eq!(segment_for(1 << 22), 1 << 18);
        assert_eq!(segment_for(1 << 18), 1 << 14);
        assert_eq!(segment_for(100), 1024);
        assert_eq!(segment_for(3 << 16), 1 << 13);
    }

    #[test]
    fn size_panel_has_flat_com_frequency() {
        let d = size_dependence(&Config::torsion_reference()).unwrap();
        let y = d.main.column("omega_y_Hz").unwrap();
        assert!(y.iter().all(|v| (v / 220e3 - 1.0).abs() < 0.02));
        let t = d.main.column("omega_theta_Hz").unwrap();
        assert!(t.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn short_cavity_panel() {
        let opts = FigureOptions { cavity_length: Some(0.5e-3), steps: 0, seed: 0 };
        let d = cooling_curves(&Config::cooling_reference(), &opts).unwrap();
        let nt = d.main.column("n_theta").unwrap();
        let ny = d.main.column("n_y").unwrap();
        assert!(nt.iter().any(|&n| n < 1.0));
        assert!(ny.iter().all(|&n| n > 1.0));
    }
}
