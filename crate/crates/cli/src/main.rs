mod error;
mod figures;
mod grid;
mod output;
mod sweep;

use clap::{Args, Parser, Subcommand, ValueEnum};
use levitodyn_core::constants::{angular_to_hz, hz_to_angular};
use levitodyn_core::cooling::{self, cooling_sweep, log_grid, weak_coupling_limit, CoolingSetup};
use levitodyn_core::dynamics::{
    default_timestep, ForceModel, InitialCondition, SimulationConfig, Simulator, State,
};
use levitodyn_core::spectral::{fit_lorentzian, welch_psd, Spectrum, Window};
use levitodyn_core::{gas, optics, sensing, Config};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use error::CliError;
use figures::{FigureId, FigureOptions};
use grid::{parse_axis, parse_band, parse_count, parse_f64, parse_range, range_values, Axis, Range};
use output::{format_num, warn, Cell, RunManifest, Sink, Table};

/// Torsional and COM dynamics of optically levitated nonspherical
/// nanoparticles.
#[derive(Debug, Parser)]
#[command(name = "levitodyn", version, about)]
struct Cli {
    /// JSON config file (default: built-in 50/40/40 nm diamond preset).
    #[arg(long, global = true, env = "LEVITODYN_CONFIG")]
    config: Option<PathBuf>,
    /// Output file; a `<out>.manifest.json` is written beside it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads for sweeps, ensembles and figure pipelines.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Machine-readable results on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Trap frequencies, optionally over a power grid.
    Freqs {
        /// Power grid `P0:P1:N[:log]` in W.
        #[arg(long, value_parser = parse_range)]
        power_sweep: Option<Range>,
        #[arg(long)]
        log: bool,
    },
    /// Depolarization factors and susceptibilities.
    Chi {
        /// Aspect grid `a0:a1:N[:log]` at fixed rx.
        #[arg(long, value_parser = parse_range)]
        aspect_sweep: Option<Range>,
    },
    /// Gas damping rates and quality factors.
    Damping {
        /// Pressure grid `p0:p1:N[:log]` in Pa.
        #[arg(long, value_parser = parse_range)]
        pressure_sweep: Option<Range>,
        #[arg(long)]
        log: bool,
    },
    /// Langevin trajectory of (y, θ).
    Simulate(SimulateArgs),
    /// Welch power spectral density of one trajectory column.
    Psd {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "theta_rad")]
        col: String,
        #[arg(long, value_parser = parse_count, default_value = "65536")]
        segment: usize,
        #[arg(long, default_value_t = 0.5)]
        overlap: f64,
        #[arg(long, value_enum, default_value_t = WindowArg::Hann)]
        window: WindowArg,
        /// Sample interval; read from the `t_s` column when omitted.
        #[arg(long, value_parser = parse_f64)]
        dt: Option<f64>,
    },
    /// Lorentzian fit of a spectrum within a band.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        /// Band `lo:hi` in Hz.
        #[arg(long, value_parser = parse_band)]
        band: (f64, f64),
    },
    /// Sideband-cooling steady state over a drive grid.
    Cool {
        #[arg(long, value_parser = parse_f64)]
        cavity_length: Option<f64>,
        /// Intracavity photon grid `n0:n1:N[:log]`; defaults to 1 up to the
        /// COM weak-coupling limit.
        #[arg(long, value_parser = parse_range)]
        drive_sweep: Option<Range>,
        #[arg(long)]
        log: bool,
        /// Fixed detuning in Hz; default is each mode's optimum.
        #[arg(long, value_parser = parse_f64)]
        detuning: Option<f64>,
    },
    /// Thermal-noise-limited torque sensitivity.
    Torque {
        /// Pressure in Pa (default: config gas pressure).
        #[arg(long, value_parser = parse_f64)]
        pressure: Option<f64>,
        #[arg(long, value_parser = parse_f64)]
        temperature: Option<f64>,
    },
    /// Grid evaluation over one or more `name:start:stop:count[:log]` axes.
    Sweep {
        #[arg(long = "axis", value_parser = parse_axis, required = true)]
        axes: Vec<Axis>,
        #[arg(long)]
        log: bool,
    },
    /// Data behind a figure panel.
    Figures {
        #[arg(value_enum)]
        id: FigureId,
        #[arg(long, value_parser = parse_f64)]
        cavity_length: Option<f64>,
        /// Steps per simulated trajectory (pipeline panels).
        #[arg(long, value_parser = parse_count, default_value = "4194304")]
        steps: usize,
        /// Also write a gnuplot script beside the CSV.
        #[arg(long)]
        gnuplot: bool,
    },
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_parser = parse_f64)]
    dt: Option<f64>,
    #[arg(long, value_parser = parse_count, default_value = "100000")]
    steps: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Harmonic)]
    mode: ModeArg,
    /// Bath temperature (default: config gas temperature).
    #[arg(long, value_parser = parse_f64)]
    temperature: Option<f64>,
    #[arg(long, value_enum, default_value_t = InitialArg::Thermal)]
    initial: InitialArg,
    /// Number of independent trajectories (one file each).
    #[arg(long, value_parser = parse_count, default_value = "1")]
    ensemble: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Harmonic,
    #[value(name = "full-potential", alias = "full_potential")]
    FullPotential,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InitialArg {
    Thermal,
    Rest,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WindowArg {
    Hann,
    #[value(alias = "rect")]
    Rectangular,
}

struct Context {
    config_path: Option<PathBuf>,
    seed: u64,
    sink: Sink,
}

impl Context {
    fn load_config(&self, fallback: Config) -> Result<Config, CliError> {
        let cfg = match &self.config_path {
            Some(path) => load_config_file(path)?,
            None => fallback,
        };
        let report = cfg.validate();
        for w in &report.warnings {
            warn(w);
        }
        report.into_result()?;
        Ok(cfg)
    }

    fn manifest(&self, config: Option<&Config>, seeds: Vec<u64>) -> RunManifest {
        let snapshot = config
            .map(|c| serde_json::from_str(&c.to_json()).unwrap_or(Value::Null))
            .unwrap_or(Value::Null);
        RunManifest::new(snapshot, seeds)
    }
}

/// A config file, or a run manifest whose config snapshot is replayed.
fn load_config_file(path: &Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::new("config", format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::new("config", format!("{}: {e}", path.display())))?;
    let body = match value.get("config") {
        Some(inner) if value.get("tool").is_some() => inner.clone(),
        _ => value,
    };
    Ok(Config::from_json(&body.to_string())?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = CliError::usage(e.to_string().trim_end());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.jobs {
            if n == 0 {
                return Err(CliError::usage("--jobs must be at least 1"));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(|e| CliError::new("runtime", e.to_string()))?
    };
    let ctx = Context {
        config_path: cli.config,
        seed: cli.seed,
        sink: Sink::new(cli.out, cli.json),
    };
    pool.install(|| dispatch(ctx, cli.command))
}

fn dispatch(mut ctx: Context, command: Command) -> Result<(), CliError> {
    match command {
        Command::Freqs { power_sweep, log } => {
            let cfg = ctx.load_config(Config::torsion_reference())?;
            let powers = match &power_sweep {
                Some(r) => range_values(r, log)?,
                None => vec![cfg.beam.power],
            };
            let mut t = Table::new(["power_W", "omega_y_Hz", "omega_theta_Hz"]);
            for p in powers {
                let f = optics::frequencies(&cfg.particle, &cfg.beam.with_power(p))?;
                t.push(vec![p.into(), angular_to_hz(f.omega_y).into(), angular_to_hz(f.omega_theta).into()]);
            }
            ctx.sink.table(&t)?;
            let m = ctx.manifest(Some(&cfg), vec![]);
            ctx.sink.finish(m)
        }
        Command::Chi { aspect_sweep } => {
            let cfg = ctx.load_config(Config::torsion_reference())?;
            let aspects = match &aspect_sweep {
                Some(r) => range_values(r, false)?,
                None => vec![cfg.particle.aspect()],
            };
            let mut t = Table::new(["aspect", "L_x", "L_y", "L_z", "chi_x", "chi_y", "delta_chi"]);
            for a in aspects {
                let p = levitodyn_core::Particle {
                    ry: a * cfg.particle.rx,
                    rz: a * cfg.particle.rx,
                    ..cfg.particle
                };
                let chi = optics::susceptibilities(&p)?;
                let [lx, ly, lz] = chi.depolarization;
                t.push([a, lx, ly, lz, chi.chi_x, chi.chi_y, chi.anisotropy()].map(Cell::from).to_vec());
            }
            ctx.sink.table(&t)?;
            let m = ctx.manifest(Some(&cfg), vec![]);
            ctx.sink.finish(m)
        }
        Command::Damping { pressure_sweep, log } => {
            let cfg = ctx.load_config(Config::torsion_reference())?;
            let base = cfg.gas()?;
            let pressures = match &pressure_sweep {
                Some(r) => range_values(r, log)?,
                None => vec![base.pressure],
            };
            let mut t = Table::new(["pressure_Pa", "gamma_x", "gamma_y", "gamma_theta", "Q_y", "Q_theta"]);
            let mut outside = 0;
            for p in pressures {
                let g = base.with_pressure(p);
                if g.regime(&cfg.particle) != levitodyn_core::model::FlowRegime::FreeMolecular && p > 0.0 {
                    outside += 1;
                }
                let q = gas::quality_factors(&cfg.particle, &cfg.beam, &g)?;
                t.push(
                    [p, q.rates.gamma_x, q.rates.gamma_y, q.rates.gamma_theta, q.q_y.as_f64(), q.q_theta.as_f64()]
                        .map(Cell::from)
                        .to_vec(),
                );
            }
            if outside > 0 {
                warn(format!("{outside} pressure point(s) lie outside the free-molecular regime"));
            }
            ctx.sink.table(&t)?;
            let m = ctx.manifest(Some(&cfg), vec![]);
            ctx.sink.finish(m)
        }
        Command::Simulate(args) => simulate(ctx, args),
        Command::Psd {
            input,
            col,
            segment,
            overlap,
            window,
            dt,
        } => {
            let (series, dt) = read_series(&input, &col, dt)?;
            let window = match window {
                WindowArg::Hann => Window::Hann,
                WindowArg::Rectangular => Window::Rectangular,
            };
            let spec = welch_psd(&series, dt, segment, overlap, window)?;
            let mut t = Table::new(["freq_Hz", "psd"]);
            for (f, p) in spec.freqs.iter().zip(&spec.psd) {
                t.push(vec![(*f).into(), (*p).into()]);
            }
            ctx.sink.table(&t)?;
            let mut m = ctx.manifest(None, vec![]);
            m.parameters = json!({
                "input": input.display().to_string(), "column": col, "dt": dt,
                "segment_len": spec.segment_len, "overlap": spec.overlap,
                "window": spec.window, "segments": spec.segments,
            });
            ctx.sink.finish(m)
        }
        Command::Fit { input, band } => {
            let spec = read_spectrum(&input)?;
            let fit = fit_lorentzian(&spec, band)?;
            if fit.multiple_peaks {
                warn("fit band contains more than one peak");
            }
            let to_hz = |w: f64| w / (2.0 * std::f64::consts::PI);
            let doc = json!({
                "omega_Hz": fit.omega_hz(),
                "gamma_Hz": fit.gamma_hz(),
                "amplitude": fit.amplitude,
                "floor": fit.floor,
                "stderr": {
                    "omega_Hz": to_hz(fit.stderr.omega),
                    "gamma_Hz": to_hz(fit.stderr.gamma),
                    "amplitude": fit.stderr.amplitude,
                    "floor": fit.stderr.floor,
                },
                "rms_residual": fit.rms_residual,
                "iterations": fit.iterations,
                "bins": fit.bins,
                "multiple_peaks": fit.multiple_peaks,
                "band_Hz": [band.0, band.1],
            });
            ctx.sink.document(&doc)?;
            let m = ctx.manifest(None, vec![]);
            ctx.sink.finish(m)
        }
        Command::Cool {
            cavity_length,
            drive_sweep,
            log,
            detuning,
        } => {
            let cfg = ctx.load_config(Config::cooling_reference())?;
            let mut cav = cfg.cavity()?;
            if let Some(l) = cavity_length {
                cav = cav.with_length(l);
            }
            let gas = cfg.gas()?;
            let mut setup = CoolingSetup::new(cav, cfg.particle, cfg.beam, 0.0);
            setup.detuning = detuning.map(hz_to_angular);
            let rates = gas::damping_rates(&cfg.particle, &gas);
            let modes = cooling::modes(&setup, rates.gamma_theta, rates.gamma_y)?;
            let drives = match &drive_sweep {
                Some(r) => range_values(r, log)?,
                None => log_grid(1.0, weak_coupling_limit(modes[1].coupling, cav.decay_rate()), 100),
            };
            let sweep = cooling_sweep(&setup, modes, &drives, gas.temperature)?;
            let mut t = Table::new([
                "n_photons",
                "n_theta",
                "n_y",
                "A_minus_theta",
                "A_plus_theta",
                "A_minus_y",
                "A_plus_y",
                "gamma_opt_theta",
                "gamma_opt_y",
                "weak_coupling_theta",
                "weak_coupling_y",
            ]);
            for p in &sweep.points {
                let [a, b] = p.modes;
                t.push(vec![
                    p.photons.into(),
                    a.n_ss.into(),
                    b.n_ss.into(),
                    a.a_minus.into(),
                    a.a_plus.into(),
                    b.a_minus.into(),
                    b.a_plus.into(),
                    a.gamma_opt.into(),
                    b.gamma_opt.into(),
                    a.weak_coupling.into(),
                    b.weak_coupling.into(),
                ]);
            }
            if sweep.points.iter().any(|p| p.modes.iter().any(|m| m.heating)) {
                warn("some drive points heat a mode (blue detuning)");
            }
            ctx.sink.table(&t)?;
            let mut m = ctx.manifest(Some(&cfg), vec![]);
            m.parameters = json!({
                "cavity_length_m": cav.length,
                "kappa_Hz": angular_to_hz(sweep.kappa),
                "g_theta_Hz": angular_to_hz(modes[0].coupling),
                "g_y_Hz": angular_to_hz(modes[1].coupling),
                "detuning_theta_Hz": angular_to_hz(sweep.detunings[0]),
                "detuning_y_Hz": angular_to_hz(sweep.detunings[1]),
            });
            ctx.sink.finish(m)
        }
        Command::Torque { pressure, temperature } => {
            let cfg = ctx.load_config(Config::torsion_reference())?;
            let mut g = cfg.gas()?;
            if let Some(p) = pressure {
                g.pressure = p;
            }
            if let Some(t) = temperature {
                g.temperature = t;
            }
            let q = gas::quality_factors(&cfg.particle, &cfg.beam, &g)?;
            let inertia = cfg.particle.moment_of_inertia();
            let s = sensing::torque_sensitivity(g.temperature, inertia, q.frequencies.omega_theta, q.q_theta.as_f64());
            let doc = json!({
                "M_min_per_rtHz": s.per_rt_hz,
                "Q_theta": q.q_theta.as_f64(),
                "omega_theta_Hz": angular_to_hz(q.frequencies.omega_theta),
                "I": inertia,
                "pressure_Pa": g.pressure,
                "temperature_K": g.temperature,
            });
            ctx.sink.document(&doc)?;
            let m = ctx.manifest(Some(&cfg), vec![]);
            ctx.sink.finish(m)
        }
        Command::Sweep { axes, log } => {
            let cfg = ctx.load_config(Config::torsion_reference())?;
            let t = sweep::run_sweep(&cfg, &axes, log)?;
            ctx.sink.table(&t)?;
            let m = ctx.manifest(Some(&cfg), vec![]);
            ctx.sink.finish(m)
        }
        Command::Figures {
            id,
            cavity_length,
            steps,
            gnuplot,
        } => {
            let cfg = ctx.load_config(id.default_config())?;
            let opts = FigureOptions {
                cavity_length,
                steps,
                seed: ctx.seed,
            };
            let data = figures::figure(id, &cfg, &opts)?;
            ctx.sink.gnuplot = gnuplot;
            if ctx.sink.json && ctx.sink.out.is_none() {
                let side: serde_json::Map<String, Value> =
                    data.side.iter().map(|(k, t)| (k.to_string(), t.to_json())).collect();
                output::print_json(&json!({ "data": data.main.to_json(), "tables": side, "summary": data.summary }))?;
            } else {
                ctx.sink.table(&data.main)?;
                for (suffix, t) in &data.side {
                    ctx.sink.side_table(suffix, t)?;
                }
            }
            let seeds = if id.uses_pipeline() { vec![ctx.seed] } else { vec![] };
            let mut m = ctx.manifest(Some(&cfg), seeds);
            m.parameters = json!({ "figure": format!("{id:?}"), "steps": steps, "cavity_length_m": cavity_length, "summary": data.summary });
            ctx.sink.finish(m)
        }
    }
}

const TRAJECTORY_COLUMNS: [&str; 5] = ["t_s", "y_m", "vy_ms", "theta_rad", "omega_rads"];

fn write_trajectory<W: Write>(sim: &Simulator, dt: f64, w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRAJECTORY_COLUMNS)?;
    let mut failure: Option<csv::Error> = None;
    sim.run(|i, s: &State| {
        if failure.is_none() {
            let row = [i as f64 * dt, s.y, s.vy, s.theta, s.omega].map(format_num);
            if let Err(e) = out.write_record(&row) {
                failure = Some(e);
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    out.flush()?;
    Ok(())
}

fn numbered(path: &Path, k: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{k:03}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{k:03}"),
    };
    path.with_file_name(name)
}

fn simulate(mut ctx: Context, args: SimulateArgs) -> Result<(), CliError> {
    let cfg = ctx.load_config(Config::torsion_reference())?;
    let gas = cfg.gas()?;
    let f = optics::frequencies(&cfg.particle, &cfg.beam)?;
    if args.steps < 2 {
        return Err(CliError::usage("--steps must be at least 2"));
    }
    let base = SimulationConfig {
        dt: args.dt.unwrap_or_else(|| default_timestep(&f)),
        n_steps: args.steps - 1,
        seed: ctx.seed,
        stream: 0,
        mode: match args.mode {
            ModeArg::Harmonic => ForceModel::Harmonic,
            ModeArg::FullPotential => ForceModel::FullPotential,
        },
        temperature: args.temperature.unwrap_or(gas.temperature),
        initial: match args.initial {
            InitialArg::Thermal => InitialCondition::Thermal,
            InitialArg::Rest => InitialCondition::Rest,
        },
    };
    // validate (dt guard etc.) before touching any file
    Simulator::new(&cfg.particle, &cfg.beam, &gas, &base)?;

    if args.ensemble <= 1 {
        let sim = Simulator::new(&cfg.particle, &cfg.beam, &gas, &base)?;
        match ctx.sink.out.clone() {
            Some(path) => {
                let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
                write_trajectory(&sim, base.dt, BufWriter::new(file))?;
                ctx.sink.register(&path);
            }
            None => write_trajectory(&sim, base.dt, BufWriter::new(io::stdout().lock()))?,
        }
    } else {
        let out = ctx
            .sink
            .out
            .clone()
            .ok_or_else(|| CliError::usage("--ensemble needs --out"))?;
        let paths: Vec<PathBuf> = (0..args.ensemble).map(|k| numbered(&out, k)).collect();
        paths
            .par_iter()
            .enumerate()
            .map(|(k, path)| {
                let cfg_k = SimulationConfig { stream: k as u64, ..base };
                let sim = Simulator::new(&cfg.particle, &cfg.beam, &gas, &cfg_k)?;
                let file = File::create(path).map_err(|e| CliError::io(path, e))?;
                write_trajectory(&sim, base.dt, BufWriter::new(file))
            })
            .collect::<Result<Vec<()>, CliError>>()?;
        for p in &paths {
            ctx.sink.register(p);
        }
    }
    let mut m = ctx.manifest(Some(&cfg), vec![ctx.seed]);
    m.parameters = json!({
        "simulation": base,
        "ensemble": args.ensemble,
        "streams": (0..args.ensemble.max(1)).collect::<Vec<_>>(),
    });
    ctx.sink.finish(m)
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|_| CliError::new("csv", format!("{}: row {} is not numeric", path.display(), i + 1)))?;
        rows.push(row);
    }
    Ok((headers, rows))
}

fn column_index(headers: &[String], name: &str, path: &Path) -> Result<usize, CliError> {
    headers.iter().position(|h| h == name).ok_or_else(|| {
        CliError::new(
            "csv",
            format!("{}: no column `{name}` (have {})", path.display(), headers.join(", ")),
        )
    })
}

fn read_series(path: &Path, col: &str, dt: Option<f64>) -> Result<(Vec<f64>, f64), CliError> {
    let (headers, rows) = read_table(path)?;
    let k = column_index(&headers, col, path)?;
    let series: Vec<f64> = rows.iter().map(|r| r[k]).collect();
    let dt = match dt {
        Some(dt) => dt,
        None => {
            let t = column_index(&headers, "t_s", path)?;
            if rows.len() < 2 {
                return Err(CliError::new("insufficient_data", "need at least two samples to infer dt"));
            }
            rows[1][t] - rows[0][t]
        }
    };
    Ok((series, dt))
}

fn read_spectrum(path: &Path) -> Result<Spectrum, CliError> {
    let (headers, rows) = read_table(path)?;
    let f = column_index(&headers, "freq_Hz", path)?;
    let p = column_index(&headers, "psd", path)?;
    Ok(Spectrum::from_values(
        rows.iter().map(|r| r[f]).collect(),
        rows.iter().map(|r| r[p]).collect(),
    )?)
}
