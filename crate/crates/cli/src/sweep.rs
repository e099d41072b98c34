//! Grid evaluation of the closed-form model outputs over config parameters.

use levitodyn_core::cooling::{coupling_com, coupling_torsional, CoolingSetup};
use levitodyn_core::constants::angular_to_hz;
use levitodyn_core::{gas, optics, sensing, Config, Error};
use rayon::prelude::*;

use crate::error::CliError;
use crate::grid::Axis;
use crate::output::{Cell, Table};

pub const SWEEPABLE: &[&str] = &[
    "power",
    "waist",
    "wavelength",
    "rx",
    "aspect",
    "density",
    "eps_r",
    "pressure",
    "temperature",
    "accommodation",
    "cavity_length",
    "finesse",
];

fn apply(cfg: &mut Config, name: &str, value: f64) -> Result<(), CliError> {
    let missing = |section: &str| CliError::new("config", format!("sweeping `{name}` needs a `{section}` section"));
    let aspect = cfg.particle.aspect();
    match name {
        "power" => cfg.beam.power = value,
        "waist" => cfg.beam.waist = value,
        "wavelength" => cfg.beam.wavelength = value,
        "rx" => {
            cfg.particle.rx = value;
            cfg.particle.ry = aspect * value;
            cfg.particle.rz = aspect * value;
        }
        "aspect" => {
            cfg.particle.ry = value * cfg.particle.rx;
            cfg.particle.rz = value * cfg.particle.rx;
        }
        "density" => cfg.particle.density = value,
        "eps_r" => cfg.particle.eps_r = value,
        "pressure" => cfg.gas.as_mut().ok_or_else(|| missing("gas"))?.pressure = value,
        "temperature" => cfg.gas.as_mut().ok_or_else(|| missing("gas"))?.temperature = value,
        "accommodation" => cfg.gas.as_mut().ok_or_else(|| missing("gas"))?.accommodation = value,
        "cavity_length" => cfg.cavity.as_mut().ok_or_else(|| missing("cavity"))?.length = value,
        "finesse" => cfg.cavity.as_mut().ok_or_else(|| missing("cavity"))?.finesse = value,
        other => {
            return Err(CliError::usage(format!(
                "unknown sweep parameter `{other}`; sweepable: {}",
                SWEEPABLE.join(", ")
            )))
        }
    }
    Ok(())
}

fn output_columns(cfg: &Config) -> Vec<&'static str> {
    let mut cols = vec!["omega_y_Hz", "omega_theta_Hz", "frequency_ratio", "chi_x", "chi_y"];
    if cfg.gas.is_some() {
        cols.extend([
            "gamma_x",
            "gamma_y",
            "gamma_theta",
            "Q_y",
            "Q_theta",
            "Q_y_times_p",
            "Q_theta_times_p",
            "M_min_per_rtHz",
        ]);
    }
    if cfg.cavity.is_some() {
        cols.extend(["g_theta_Hz", "g_y_Hz", "g_theta_L2", "g_y_L2"]);
    }
    cols
}

fn evaluate(cfg: &Config) -> Result<Vec<Cell>, CliError> {
    cfg.validate().into_result()?;
    let chi = optics::susceptibilities(&cfg.particle)?;
    let f = optics::frequencies(&cfg.particle, &cfg.beam)?;
    let mut row: Vec<Cell> = vec![
        angular_to_hz(f.omega_y).into(),
        angular_to_hz(f.omega_theta).into(),
        f.ratio().into(),
        chi.chi_x.into(),
        chi.chi_y.into(),
    ];
    if let Some(g) = &cfg.gas {
        let q = gas::quality_factors(&cfg.particle, &cfg.beam, g)?;
        let (qy, qt) = (q.q_y.as_f64(), q.q_theta.as_f64());
        let m_min = sensing::torque_sensitivity(g.temperature, cfg.particle.moment_of_inertia(), f.omega_theta, qt);
        row.extend([
            q.rates.gamma_x,
            q.rates.gamma_y,
            q.rates.gamma_theta,
            qy,
            qt,
            qy * g.pressure,
            qt * g.pressure,
            m_min.per_rt_hz,
        ]
        .map(Cell::from));
    }
    if let Some(cav) = &cfg.cavity {
        let setup = CoolingSetup::new(*cav, cfg.particle, cfg.beam, 0.0);
        let gt = match coupling_torsional(&setup) {
            Ok(g) => g,
            Err(Error::NoTorsionalMode) => f64::NAN,
            Err(e) => return Err(e.into()),
        };
        let gy = coupling_com(&setup.for_com())?;
        let l2 = cav.length * cav.length;
        row.extend([angular_to_hz(gt), angular_to_hz(gy), gt * l2, gy * l2].map(Cell::from));
    }
    Ok(row)
}

/// Cartesian product of the axes, first axis slowest. Row order does not
/// depend on the thread pool.
pub fn run_sweep(base: &Config, axes: &[Axis], force_log: bool) -> Result<Table, CliError> {
    if axes.is_empty() {
        return Err(CliError::usage("sweep needs at least one --axis"));
    }
    let mut grids = Vec::new();
    for axis in axes {
        let mut probe = base.clone();
        apply(&mut probe, &axis.name, axis.range.start)?;
        grids.push(crate::grid::range_values(&axis.range, force_log)?);
    }
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for grid in &grids {
        points = points
            .into_iter()
            .flat_map(|p| {
                grid.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }

    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .map(|values| {
            let mut cfg = base.clone();
            for (axis, &v) in axes.iter().zip(values) {
                apply(&mut cfg, &axis.name, v)?;
            }
            let mut row: Vec<Cell> = values.iter().map(|&v| Cell::Num(v)).collect();
            row.extend(evaluate(&cfg)?);
            Ok(row)
        })
        .collect::<Result<_, CliError>>()?;

    let mut columns: Vec<String> = axes.iter().map(|a| a.name.clone()).collect();
    columns.extend(output_columns(base).into_iter().map(String::from));
    let mut table = Table::new(columns);
    for row in rows {
        table.push(row);
    }
    Ok(table)
}
