//! `snaposc`: closed-form design, simulation, sweeps and calibration for the
//! bistable-beam electrothermal oscillator.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use snaposc_core::io::{
    read_dataset_csv, sig9, write_events_csv, write_pattern_csv, write_trace_csv,
};
use snaposc_core::{
    design_current, export_pattern_timeline, fit_thermal_params, infer_conductivity, min_current,
    oscillation_period, pull_time, scale_actuator, Direction, Error, FitOptions, OscillatorConfig,
    PeriodModel, Simulator, ThermalParams,
};

use crate::config::ConfigFile;

#[derive(Parser, Debug)]
#[command(
    name = "snaposc",
    version,
    about = "Electrothermal snap-through oscillator toolkit"
)]
struct Cli {
    /// JSON configuration file; the built-in parameter set is used when absent.
    #[arg(long, global = true, conflicts_with = "paper_defaults")]
    config: Option<PathBuf>,
    /// Use the built-in fitted parameter set of the 69.0 mm actuator.
    #[arg(long, global = true)]
    paper_defaults: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    /// `name,value,unit` rows.
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DirectionArg {
    Thru,
    Back,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Thru => Direction::Thru,
            DirectionArg::Back => Direction::Back,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepMode {
    Analytic,
    Sim,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form oscillation period, including the configured snap dwell.
    Period {
        /// Supply current, A; overrides `drive.current_A`.
        #[arg(long)]
        current: Option<f64>,
    },
    /// Time for a cold actuator to reach the snap temperature.
    PullTime {
        #[arg(long)]
        current: Option<f64>,
        #[arg(long, value_enum, default_value_t = DirectionArg::Thru)]
        direction: DirectionArg,
    },
    /// Lowest supply current that can sustain oscillation.
    MinCurrent {
        #[arg(long, value_enum, default_value_t = DirectionArg::Thru)]
        direction: DirectionArg,
    },
    /// Supply current for a target period.
    Design {
        /// s
        #[arg(long)]
        target_period: f64,
    },
    /// Actuator constants rescaled to a new length.
    Scale {
        /// mm
        #[arg(long)]
        length: f64,
    },
    /// Time-domain simulation from a cold start.
    Simulate {
        #[arg(long)]
        current: Option<f64>,
        /// Simulated window, s; overrides `simulation.t_end_s`.
        #[arg(long)]
        t_end: Option<f64>,
        /// Step, s; overrides `simulation.dt_s`.
        #[arg(long)]
        dt: Option<f64>,
        /// Snap dwell, s; overrides `simulation.snap_duration_s`.
        #[arg(long)]
        snap_duration: Option<f64>,
        /// Trace CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Snap events CSV path; defaults to `<out stem>_events.csv` next to `--out`.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Two-channel switch pattern CSV path.
        #[arg(long)]
        pattern: Option<PathBuf>,
    },
    /// Period over a range of supply currents as `current_A,period_s,stall`.
    Sweep {
        #[arg(long)]
        current_min: f64,
        #[arg(long)]
        current_max: f64,
        /// Number of currents, endpoints included.
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = SweepMode::Analytic)]
        mode: SweepMode,
        /// Output CSV path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit thermal mass and conductivity to a `current_A,period_s` dataset.
    Fit {
        dataset: PathBuf,
        /// W·s/°C
        #[arg(long, default_value_t = 0.01)]
        init_thermal_mass: f64,
        /// W/°C
        #[arg(long, default_value_t = 0.01)]
        init_conductivity: f64,
        /// JSON report path.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Conductivity that reproduces one measured period.
    InferLambda {
        #[arg(long)]
        current: f64,
        #[arg(long)]
        period: f64,
        /// W·s/°C; defaults to the configured actuator's value.
        #[arg(long)]
        thermal_mass: Option<f64>,
    },
    /// Print the effective configuration as JSON.
    Config,
}

enum Value {
    Num(f64),
    Count(usize),
    Flag(bool),
    Text(String),
}

struct Row {
    name: &'static str,
    value: Value,
    unit: &'static str,
}

fn row(name: &'static str, value: Value, unit: &'static str) -> Row {
    Row { name, value, unit }
}

/// Three decimals from 0.1 upwards, three significant digits below.
fn human(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !x.is_finite() {
        format!("{x}")
    } else if a >= 0.1 {
        format!("{x:.3}")
    } else if a >= 1e-4 {
        let decimals = (2.0 - a.log10().floor()) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.3e}")
    }
}

impl Value {
    fn text(&self) -> String {
        match self {
            Value::Num(x) => human(*x),
            Value::Count(n) => n.to_string(),
            Value::Flag(b) => b.to_string(),
            Value::Text(s) => s.clone(),
        }
    }

    fn csv(&self) -> String {
        match self {
            Value::Num(x) => sig9(*x),
            Value::Count(n) => n.to_string(),
            Value::Flag(b) => u8::from(*b).to_string(),
            Value::Text(s) => s.clone(),
        }
    }
}

/// A lone row prints as `value unit` in text mode.
fn emit(format: Format, rows: &[Row]) {
    match format {
        Format::Csv => {
            println!("name,value,unit");
            for r in rows {
                println!("{},{},{}", r.name, r.value.csv(), r.unit);
            }
        }
        Format::Text if rows.len() == 1 => {
            let r = &rows[0];
            let line = format!("{} {}", r.value.text(), r.unit);
            println!("{}", line.trim_end());
        }
        Format::Text => {
            for r in rows {
                let line = format!("{}: {} {}", r.name, r.value.text(), r.unit);
                println!("{}", line.trim_end());
            }
        }
    }
}

fn load_config(cli: &Cli) -> Result<ConfigFile> {
    match &cli.config {
        Some(path) if !cli.paper_defaults => ConfigFile::load(path),
        _ => Ok(ConfigFile::paper_defaults()),
    }
}

fn with_current(cfg: &ConfigFile, current: Option<f64>) -> Result<OscillatorConfig> {
    let mut osc = cfg.oscillator()?;
    if let Some(i) = current {
        if !(i.is_finite() && i >= 0.0) {
            return Err(Error::InvalidParameter {
                field: "--current".into(),
                reason: format!("must be finite and >= 0, got {i}"),
            }
            .into());
        }
        osc.supply_current = i;
    }
    Ok(osc)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn sweep_currents(min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && min > 0.0 && max >= min) {
        return Err(Error::InvalidParameter {
            field: "--current-min/--current-max".into(),
            reason: format!("need 0 < min <= max, got [{min}, {max}]"),
        }
        .into());
    }
    if steps == 0 {
        return Err(Error::InvalidParameter {
            field: "--steps".into(),
            reason: "must be >= 1".into(),
        }
        .into());
    }
    if steps == 1 {
        return Ok(vec![min]);
    }
    Ok((0..steps)
        .map(|k| min + (max - min) * k as f64 / (steps - 1) as f64)
        .collect())
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let fmt = cli.format;
    match &cli.command {
        Command::Period { current } => {
            let osc = with_current(&cfg, *current)?;
            let est = oscillation_period(&osc, true)?;
            let mut rows = vec![row("period", Value::Num(est.period), "s")];
            if est.model == PeriodModel::Extended {
                rows.push(row("model", Value::Text("extended".into()), ""));
            }
            emit(fmt, &rows);
        }
        Command::PullTime { current, direction } => {
            let osc = with_current(&cfg, *current)?;
            let dir = Direction::from(*direction);
            let t = pull_time(osc.supply_current, &osc.beam, osc.actuator(dir), dir)?;
            emit(fmt, &[row("pull_time", Value::Num(t), "s")]);
        }
        Command::MinCurrent { direction } => {
            let osc = cfg.oscillator()?;
            let dir = Direction::from(*direction);
            let i = min_current(&osc.beam, osc.actuator(dir), dir);
            emit(fmt, &[row("min_current", Value::Num(i), "A")]);
        }
        Command::Design { target_period } => {
            let osc = cfg.oscillator()?;
            let dp = design_current(*target_period, &osc.beam, &osc.actuator_1)?;
            if dp.cooling_warning {
                eprintln!(
                    "warning: half period {} s is shorter than the {} s cooling time; oscillation may not be sustained",
                    human(target_period / 2.0),
                    human(dp.cooling_time)
                );
            }
            let rows = [
                row("current", Value::Num(dp.current), "A"),
                row("cooling_time", Value::Num(dp.cooling_time), "s"),
                row("cooling_warning", Value::Flag(dp.cooling_warning), ""),
            ];
            match fmt {
                Format::Text => emit(fmt, &rows[..1]),
                Format::Csv => emit(fmt, &rows),
            }
        }
        Command::Scale { length } => {
            let osc = cfg.oscillator()?;
            let a = scale_actuator(&osc.actuator_1, *length)?;
            let i_min = min_current(&osc.beam, &a, Direction::Thru);
            emit(
                fmt,
                &[
                    row("length", Value::Num(a.length), "mm"),
                    row("resistance", Value::Num(a.resistance), "ohm"),
                    row("stiffness", Value::Num(a.stiffness), "N/mm"),
                    row("thermal_coeff", Value::Num(a.thermal_coeff), "N/C"),
                    row("thermal_mass", Value::Num(a.thermal_mass), "Ws/C"),
                    row("conductivity", Value::Num(a.conductivity), "W/C"),
                    row("time_constant", Value::Num(a.time_constant()), "s"),
                    row("min_current", Value::Num(i_min), "A"),
                ],
            );
        }
        Command::Simulate {
            current,
            t_end,
            dt,
            snap_duration,
            out,
            events,
            pattern,
        } => {
            let mut osc = with_current(&cfg, *current)?;
            if let Some(s) = snap_duration {
                osc.snap_duration = *s;
            }
            osc.validate()?;
            let mut opts = cfg.run_options();
            opts.dt = dt.unwrap_or(opts.dt);
            opts.t_end = t_end.unwrap_or(opts.t_end);
            let (trace, summary) = Simulator::new(osc)?.run(&opts)?;
            if let Some(path) = out {
                let mut w = create(path)?;
                write_trace_csv(&trace, &mut w)?;
                w.flush()?;
            }
            let events_path = events.clone().or_else(|| {
                out.as_ref().map(|p| {
                    let stem = p
                        .file_stem()
                        .map_or("trace".into(), |s| s.to_string_lossy().into_owned());
                    p.with_file_name(format!("{stem}_events.csv"))
                })
            });
            if let Some(path) = events_path {
                let mut w = create(&path)?;
                write_events_csv(&trace, &mut w)?;
                w.flush()?;
            }
            if let Some(path) = pattern {
                let mut w = create(path)?;
                write_pattern_csv(&export_pattern_timeline(&trace), &mut w)?;
                w.flush()?;
            }
            let mut rows = Vec::new();
            if let Some(p) = summary.mean_period {
                rows.push(row("mean_period", Value::Num(p), "s"));
            }
            rows.push(row("cycle_count", Value::Count(summary.cycle_count), ""));
            rows.push(row("snap_count", Value::Count(summary.snap_count), ""));
            rows.push(row("stalled", Value::Flag(summary.stalled), ""));
            if let Some(w) = summary.stall_position {
                rows.push(row("stall_position", Value::Num(w), "mm"));
            }
            emit(fmt, &rows);
        }
        Command::Sweep {
            current_min,
            current_max,
            steps,
            mode,
            out,
        } => {
            let currents = sweep_currents(*current_min, *current_max, *steps)?;
            let base = cfg.oscillator()?;
            let opts = cfg.run_options();
            let results: Vec<(f64, Option<f64>, bool)> = currents
                .par_iter()
                .map(|&i| -> Result<(f64, Option<f64>, bool)> {
                    let osc = base.clone().with_current(i);
                    match mode {
                        SweepMode::Analytic => match oscillation_period(&osc, true) {
                            Ok(est) => Ok((i, Some(est.period), false)),
                            Err(Error::NoOscillation { .. }) => Ok((i, None, true)),
                            Err(e) => Err(e.into()),
                        },
                        SweepMode::Sim => {
                            let (_, s) = Simulator::new(osc)?.run(&opts)?;
                            let period = if s.stalled { None } else { s.mean_period };
                            Ok((i, period, s.stalled))
                        }
                    }
                })
                .collect::<Result<_>>()?;
            let mut text = String::from("current_A,period_s,stall\n");
            for (i, p, stall) in results {
                let p = p.map(sig9).unwrap_or_default();
                text.push_str(&format!("{},{p},{}\n", sig9(i), u8::from(stall)));
            }
            match out {
                Some(path) => {
                    let mut w = create(path)?;
                    w.write_all(text.as_bytes())?;
                    w.flush()?;
                }
                None => print!("{text}"),
            }
        }
        Command::Fit {
            dataset,
            init_thermal_mass,
            init_conductivity,
            report,
        } => {
            let file = File::open(dataset)
                .with_context(|| format!("cannot open dataset {}", dataset.display()))?;
            let data = read_dataset_csv(file)?;
            let osc = cfg.oscillator()?;
            let options = FitOptions {
                snap_duration: osc.snap_duration,
                ..FitOptions::default()
            };
            let init = ThermalParams::new(*init_thermal_mass, *init_conductivity);
            let fit = fit_thermal_params(&data, init, &osc.beam, &osc.actuator_1, &options)?;
            if !fit.converged {
                eprintln!(
                    "warning: fit stopped after {} iterations without converging (gradient norm {:e})",
                    fit.iterations, fit.gradient_norm
                );
            }
            if let Some(path) = report {
                let doc = serde_json::json!({
                    "dataset": dataset.display().to_string(),
                    "points": data.len(),
                    "thermal_mass_Ws_per_C": fit.thermal_mass,
                    "conductivity_W_per_C": fit.conductivity,
                    "rss_s2": fit.rss,
                    "residuals_s": fit.residuals,
                    "r_squared": fit.r_squared,
                    "converged": fit.converged,
                    "iterations": fit.iterations,
                    "gradient_norm": fit.gradient_norm,
                });
                let mut w = create(path)?;
                serde_json::to_writer_pretty(&mut w, &doc)?;
                writeln!(w)?;
                w.flush()?;
            }
            emit(
                fmt,
                &[
                    row("thermal_mass", Value::Num(fit.thermal_mass), "Ws/C"),
                    row("conductivity", Value::Num(fit.conductivity), "W/C"),
                    row("r_squared", Value::Num(fit.r_squared), ""),
                    row("rss", Value::Num(fit.rss), "s^2"),
                    row("converged", Value::Flag(fit.converged), ""),
                    row("iterations", Value::Count(fit.iterations), ""),
                ],
            );
        }
        Command::InferLambda {
            current,
            period,
            thermal_mass,
        } => {
            let osc = cfg.oscillator()?;
            let c = thermal_mass.unwrap_or(osc.actuator_1.thermal_mass);
            let lambda = infer_conductivity(*current, *period, c, &osc.beam, &osc.actuator_1)?;
            emit(fmt, &[row("conductivity", Value::Num(lambda), "W/C")]);
        }
        Command::Config => {
            if fmt == Format::Csv {
                bail!(Error::InvalidParameter {
                    field: "--format".into(),
                    reason: "the config command only prints JSON".into(),
                });
            }
            println!("{}", cfg.to_json());
        }
    }
    Ok(())
}

/// Exit code and error name: 2 validation, 3 model-infeasible, 4 I/O.
fn classify(err: &anyhow::Error) -> (u8, &'static str) {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            let code = match e {
                Error::InvalidParameter { .. }
                | Error::InvalidCharacteristics(_)
                | Error::InvalidTolerance(_)
                | Error::Parse(_) => 2,
                Error::Io(_) => 4,
                _ => 3,
            };
            return (code, e.name());
        }
        if let Some(e) = cause.downcast_ref::<serde_json::Error>() {
            return if e.is_io() { (4, "Io") } else { (2, "Parse") };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return (4, "Io");
        }
    }
    (1, "Error")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, name) = classify(&err);
            eprintln!("error[{name}]: {err:#}");
            ExitCode::from(code)
        }
    }
}
