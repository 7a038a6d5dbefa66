use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use log::{info, warn};
use thermrom_core::compare::Runtimes;
use thermrom_core::oracle::sample_times;
use thermrom_core::rom::{predict, PowerSchedule, SourceSchedule};
use thermrom_core::{
    characterize, compare_traces, fit_h, simulate, Boundary, CharacterizedModel, PowerProfile, SystemConfig,
    TemperatureTrace,
};

use crate::Command;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            config,
            duration,
            dx,
            sample_dt,
            out,
        } => cmd_simulate(&config, duration, dx, sample_dt, &out),
        Command::Characterize {
            config,
            tm,
            dx,
            out,
            report,
            trials_dir,
        } => cmd_characterize(&config, tm, dx, &out, report.as_deref(), trials_dir.as_deref()),
        Command::Predict {
            model,
            schedule,
            config,
            duration,
            sample_dt,
            out,
        } => cmd_predict(
            &model,
            schedule.as_deref(),
            config.as_deref(),
            duration,
            sample_dt,
            &out,
        ),
        Command::Compare {
            trace_a,
            trace_b,
            t0,
            oracle_seconds,
            rom_seconds,
            out,
        } => {
            let runtimes = oracle_seconds.zip(rom_seconds).map(|(o, r)| Runtimes::new(o, r));
            cmd_compare(&trace_a, &trace_b, t0, runtimes, out.as_deref())
        }
        Command::FitH {
            config,
            duration,
            dx,
            power,
            out,
        } => cmd_fit_h(&config, duration, dx, power, out.as_deref()),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_config(path: &Path) -> Result<SystemConfig> {
    SystemConfig::from_json(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn write_trace(trace: &TemperatureTrace, path: &Path) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    trace.write_csv(std::io::BufWriter::new(file))?;
    Ok(())
}

fn read_trace(path: &Path) -> Result<TemperatureTrace> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    TemperatureTrace::read_csv(file).with_context(|| format!("in {}", path.display()))
}

fn cmd_simulate(config: &Path, duration: f64, dx: f64, sample_dt: f64, out: &Path) -> Result<()> {
    let system = load_config(config)?;
    let start = Instant::now();
    let trace = simulate(&system, duration, dx, sample_dt)?;
    info!(
        "simulated {duration} s in {:.3} s wall clock",
        start.elapsed().as_secs_f64()
    );
    write_trace(&trace, out)
}

/// `<dir>/<stem>.<suffix>` for a sibling of `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map_or_else(|| "model".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn cmd_characterize(
    config: &Path,
    t_m: f64,
    dx: f64,
    out: &Path,
    report: Option<&Path>,
    trials_dir: Option<&Path>,
) -> Result<()> {
    let system = load_config(config)?;
    if system.bodies().len() == 1 && system.boundary() == Boundary::Insulated {
        warn!("a single insulated body follows the linear curve exactly; nothing to characterize");
    }
    let start = Instant::now();
    let ch = characterize(&system, t_m, dx)?;
    info!(
        "ran {} unit trial(s) in {:.3} s",
        ch.trials.len(),
        start.elapsed().as_secs_f64()
    );
    for w in &ch.report.warnings {
        warn!("{w}");
    }
    for spread in &ch.report.rate_disagreements {
        warn!(
            "body `{}`: rates from different trials differ by {:.0}%",
            spread.body_id,
            100.0 * spread.relative_spread
        );
    }

    write(out, &ch.model.to_json()?)?;
    let report_path = report.map_or_else(|| sibling(out, "report.json"), Path::to_path_buf);
    write(&report_path, &serde_json::to_string_pretty(&ch.report)?)?;
    for trial in &ch.trials {
        let name = format!("trial.{}.csv", trial.source_id);
        let path = match trials_dir {
            Some(dir) => {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                let stem = out
                    .file_stem()
                    .map_or_else(|| "model".into(), |s| s.to_string_lossy().into_owned());
                dir.join(format!("{stem}.{name}"))
            }
            None => sibling(out, &name),
        };
        write_trace(&trial.to_trace()?, &path)?;
    }
    Ok(())
}

fn cmd_predict(
    model: &Path,
    schedule: Option<&Path>,
    config: Option<&Path>,
    duration: f64,
    sample_dt: f64,
    out: &Path,
) -> Result<()> {
    let model = CharacterizedModel::from_json(&read(model)?).with_context(|| format!("in {}", model.display()))?;
    let profiles: Vec<PowerProfile> = match (schedule, config) {
        (Some(path), _) => PowerSchedule::from_json(&read(path)?)
            .with_context(|| format!("in {}", path.display()))?
            .resolve(&model)?,
        (None, Some(path)) => schedule_from_config(&load_config(path)?).resolve(&model)?,
        (None, None) => unreachable!("clap requires one of --schedule and --config"),
    };
    if !(duration.is_finite() && duration >= 0.0 && sample_dt.is_finite() && sample_dt > 0.0) {
        return Err(thermrom_core::Error::InvalidConfig {
            field: "duration/sample_dt".into(),
            reason: format!("need duration >= 0 and sample_dt > 0, got {duration} and {sample_dt}"),
        }
        .into());
    }
    let times = sample_times(duration, sample_dt);
    let start = Instant::now();
    let trace = predict(&model, &profiles, &times)?;
    info!(
        "predicted {} samples in {:.6} s wall clock",
        times.len(),
        start.elapsed().as_secs_f64()
    );
    write_trace(&trace, out)
}

/// Schedule holding the powers of every powered body in `system`.
fn schedule_from_config(system: &SystemConfig) -> PowerSchedule {
    PowerSchedule {
        sources: system
            .bodies()
            .iter()
            .filter(|b| !b.power().is_zero())
            .map(|b| SourceSchedule {
                id: b.id().to_string(),
                power: b.power().clone(),
            })
            .collect(),
    }
}

fn cmd_compare(a: &Path, b: &Path, t0: f64, runtimes: Option<Runtimes>, out: Option<&Path>) -> Result<()> {
    let mut report = compare_traces(&read_trace(a)?, &read_trace(b)?, t0)?;
    if let Some(r) = runtimes {
        report = report.with_runtimes(r);
    }
    print!("{report}");
    if let Some(path) = out {
        write(path, &serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

fn cmd_fit_h(config: &Path, duration: f64, dx: f64, power: Option<f64>, out: Option<&Path>) -> Result<()> {
    let system = load_config(config)?;
    let power = power.unwrap_or_else(|| system.bodies().first().map_or(0.0, |b| b.power().power_at(0.0)));
    let fit = fit_h(&system, power, duration, dx)?;
    println!(
        "R = {:.6} K/W, h = {:.4} W/(m²·K), A = {:.6e} m²",
        fit.r_bf, fit.h_est, fit.area
    );
    if let Some(path) = out {
        write(path, &serde_json::to_string_pretty(&fit)?)?;
    }
    Ok(())
}
