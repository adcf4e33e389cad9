use std::path::{Path, PathBuf};

use qreading_core::calibrate::{estimate_efficiencies, estimate_noise, NoiseEstimate};
use qreading_core::discriminate::{classical_bound, coherent_error_probability};
use qreading_core::frames::FrameSet;
use qreading_core::montecarlo::{classically_correlated_set, simulate_noise_frames, simulate_set, NoiseFrameKind};
use qreading_core::pipeline::{
    read_memory, run_experiment, run_experiment_on_sets, sweep, theory_point, write_reports_csv, write_theory_csv,
    MemoryImage,
};
use qreading_core::Hypothesis;
use serde_json::json;

use crate::config::{parse_grid, Config};
use crate::manifest::OutputDir;
use crate::{BoundsArgs, CalibrateArgs, CliError, Command, Common, ExperimentArgs, Format, ReadArgs, SimulateArgs, SweepArgs};

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Bounds(a) => cmd_bounds(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Read(a) => cmd_read(a),
    }
}

/// Defaults, then the config file, then `flags`.
fn resolve(common: &Common, mut flags: Config) -> Result<Config, CliError> {
    flags.seed = common.seed.or(flags.seed);
    let file = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    Ok(Config::defaults().merged(&file).merged(&flags))
}

fn out_dir(common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(qreading_core::Error::from)?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn frames_bytes(set: &FrameSet, format: Format) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => set.write_csv(&mut buf)?,
        Format::Json => set.write_jsonl(&mut buf)?,
    }
    Ok(buf)
}

fn frames_name(stem: &str, format: Format) -> String {
    match format {
        Format::Csv => format!("{stem}.csv"),
        Format::Json => format!("{stem}.jsonl"),
    }
}

fn parse_frames(path: &str, bytes: &[u8]) -> Result<FrameSet, CliError> {
    let jsonl = Path::new(path).extension().is_some_and(|e| e == "jsonl" || e == "json");
    Ok(if jsonl {
        FrameSet::read_jsonl(bytes)?
    } else {
        FrameSet::read_csv(bytes)?
    })
}

fn report_written(outputs: &[crate::manifest::FileDigest], dir: &Path) {
    for o in outputs {
        println!("wrote {}", dir.join(&o.path).display());
    }
}

fn cmd_bounds(a: BoundsArgs) -> Result<(), CliError> {
    let mut flags = Config::default();
    flags.bounds.tau0 = a.tau0;
    flags.bounds.tau1 = a.tau1;
    flags.bounds.eta_s = a.eta_s;
    flags.bounds.n_grid = a.n_grid.clone();
    let cfg = resolve(&a.common, flags)?;
    let b = &cfg.bounds;
    let (tau0, tau1, eta) = (b.tau0.unwrap_or(0.8), b.tau1.unwrap_or(1.0), b.eta_s.unwrap_or(1.0));
    if !(0.0..=1.0).contains(&tau0) || !(0.0..=1.0).contains(&tau1) {
        return Err(CliError::Usage(format!("tau0 and tau1 must lie in [0, 1], got {tau0}, {tau1}")));
    }
    if tau0 > tau1 {
        return Err(CliError::Usage(format!("tau0 ({tau0}) must not exceed tau1 ({tau1})")));
    }
    if tau0 == 0.0 {
        return Err(CliError::Usage("tau0 must be positive for the photon-counting threshold".into()));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(CliError::Usage(format!("eta-s must lie in (0, 1], got {eta}")));
    }
    let grid = parse_grid(b.n_grid.as_deref().unwrap_or("1:1000"))?;
    if grid.iter().any(|&n| n < 0.0) {
        return Err(CliError::Usage("photon numbers must be non-negative".into()));
    }
    let (t0, t1) = (eta * tau0, eta * tau1);
    let mut rows = Vec::with_capacity(grid.len());
    for &n in &grid {
        let pc = if t0 == t1 || n == 0.0 {
            0.5
        } else {
            coherent_error_probability(n, t0, t1)?
        };
        rows.push((n, classical_bound(n, t0, t1), pc));
    }
    let bytes = match a.common.format {
        Format::Csv => {
            let mut s = String::from("N,c_bound,p_err_cla_pc\n");
            for (n, c, pc) in &rows {
                s.push_str(&format!("{n},{c},{pc}\n"));
            }
            s.into_bytes()
        }
        Format::Json => json_bytes(
            &rows
                .iter()
                .map(|(n, c, pc)| json!({"N": n, "c_bound": c, "p_err_cla_pc": pc}))
                .collect::<Vec<_>>(),
        )?,
    };
    match &a.common.out {
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
        }
        Some(dir) => {
            let mut out = OutputDir::create(dir)?;
            let name = match a.common.format {
                Format::Csv => "bounds.csv",
                Format::Json => "bounds.json",
            };
            out.write(name, &bytes)?;
            report_written(&out.finish("bounds", &cfg)?, dir);
        }
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), CliError> {
    let mut flags = Config::default();
    a.pair.apply(&mut flags);
    flags.simulate.truth = a.truth.clone();
    flags.simulate.classical = a.classical;
    flags.simulate.noise_frames = a.noise_frames;
    flags.simulate.bias = a.bias;
    let cfg = resolve(&a.common, flags)?;
    let exp = cfg.simulation()?;
    let sim = exp.sim_config();
    let truths = match cfg.simulate.truth.as_deref().unwrap_or("both") {
        "0" => vec![Hypothesis::Tau0],
        "1" => vec![Hypothesis::Tau1],
        "both" => Hypothesis::BOTH.to_vec(),
        other => return Err(CliError::Config(format!("simulate.truth must be 0, 1 or both, got `{other}`"))),
    };
    let classical = cfg.simulate.classical.unwrap_or(false);
    let dir = out_dir(&a.common);
    let mut out = OutputDir::create(&dir)?;
    let format = a.common.format;
    for h in truths {
        let set = if classical {
            classically_correlated_set(&sim, h)?
        } else {
            simulate_set(&sim, h)?
        };
        let stem = format!("frames_tau{}", h.index());
        out.write(&frames_name(&stem, format), &frames_bytes(&set, format)?)?;
    }
    let noise_frames = cfg.simulate.noise_frames.unwrap_or(0);
    if noise_frames > 0 {
        let bias = cfg.simulate.bias.unwrap_or(0.0);
        for (kind, stem) in [(NoiseFrameKind::Dark, "dark"), (NoiseFrameKind::Shutter, "shutter")] {
            let set = simulate_noise_frames(&sim, kind, noise_frames, bias)?;
            out.write(&frames_name(stem, format), &frames_bytes(&set, format)?)?;
        }
    }
    report_written(&out.finish("simulate", &cfg)?, &dir);
    Ok(())
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<(), CliError> {
    let mut flags = Config::default();
    flags.calibrate.frames = a.frames.clone();
    flags.calibrate.dark = a.dark.clone();
    flags.calibrate.shutter = a.shutter.clone();
    flags.calibrate.straylight_mean = a.straylight;
    flags.calibrate.electronic_variance = a.electronic_variance;
    let cfg = resolve(&a.common, flags)?;
    let c = &cfg.calibrate;
    let frames_path = c
        .frames
        .as_deref()
        .ok_or_else(|| CliError::Usage("calibrate needs --frames <file>".into()))?;
    let dir = out_dir(&a.common);
    let mut out = OutputDir::create(&dir)?;
    let frames = parse_frames(frames_path, &out.read_input(frames_path)?)?;
    let noise = match (c.dark.as_deref(), c.shutter.as_deref()) {
        (Some(d), Some(s)) => {
            let dark = parse_frames(d, &out.read_input(d)?)?;
            let shutter = parse_frames(s, &out.read_input(s)?)?;
            estimate_noise(&dark, &shutter)?
        }
        (None, None) => NoiseEstimate::known(
            c.straylight_mean.unwrap_or(0.0),
            c.electronic_variance.unwrap_or(0.0),
        ),
        _ => return Err(CliError::Usage("--dark and --shutter must be given together".into())),
    };
    let result = estimate_efficiencies(&frames, &noise)?;
    out.write("calibration.json", &json_bytes(&result)?)?;
    if result.out_of_range {
        eprintln!(
            "warning: efficiency estimate outside (0, 1]: eta_s = {}, eta_i = {}",
            result.eta_s, result.eta_i
        );
    }
    report_written(&out.finish("calibrate", &cfg)?, &dir);
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs) -> Result<(), CliError> {
    let mut flags = Config::default();
    a.pair.apply(&mut flags);
    flags.experiment.frames0 = a.frames0.clone();
    flags.experiment.frames1 = a.frames1.clone();
    let cfg = resolve(&a.common, flags)?;
    let dir = out_dir(&a.common);
    let mut out = OutputDir::create(&dir)?;
    let (report, exp) = match (cfg.experiment.frames0.as_deref(), cfg.experiment.frames1.as_deref()) {
        (Some(p0), Some(p1)) => {
            // ingested data need not match frames_per_set
            let exp = cfg.simulation()?;
            let set0 = parse_frames(p0, &out.read_input(p0)?)?;
            let set1 = parse_frames(p1, &out.read_input(p1)?)?;
            (run_experiment_on_sets(&exp, &set0, &set1)?, exp)
        }
        (None, None) => {
            let exp = cfg.experiment()?;
            (run_experiment(&exp)?, exp)
        }
        _ => return Err(CliError::Usage("frames0 and frames1 must be given together".into())),
    };
    let theory = theory_point(&exp)?;
    match a.common.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_reports_csv(&[report], &mut buf)?;
            out.write("report.csv", &buf)?;
            let mut buf = Vec::new();
            write_theory_csv(&[theory], &mut buf)?;
            out.write("theory.csv", &buf)?;
        }
        Format::Json => out.write("report.json", &json_bytes(&json!({"report": report, "theory": theory}))?)?,
    }
    report_written(&out.finish("experiment", &cfg)?, &dir);
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<(), CliError> {
    let mut flags = Config::default();
    a.pair.apply(&mut flags);
    if let Some(g) = &a.tau0_grid {
        flags.sweep.tau0_grid = Some(parse_grid(g)?);
    }
    if let Some(n) = &a.n_list {
        flags.sweep.n_list = Some(parse_grid(n)?);
    }
    let cfg = resolve(&a.common, flags)?;
    let exp = cfg.experiment()?;
    let grid = cfg.sweep.tau0_grid.clone().unwrap_or_default();
    let n_list = cfg.sweep.n_list.clone().unwrap_or_default();
    let result = sweep(&exp, &grid, &n_list)?;
    let dir = out_dir(&a.common);
    let mut out = OutputDir::create(&dir)?;
    match a.common.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_reports_csv(&result.reports, &mut buf)?;
            out.write("sweep.csv", &buf)?;
            let mut buf = Vec::new();
            write_theory_csv(&result.theory, &mut buf)?;
            out.write("theory.csv", &buf)?;
        }
        Format::Json => out.write("sweep.json", &json_bytes(&result)?)?,
    }
    report_written(&out.finish("sweep", &cfg)?, &dir);
    Ok(())
}

fn cmd_read(a: ReadArgs) -> Result<(), CliError> {
    let mut flags = Config::default();
    a.pair.apply(&mut flags);
    flags.read.image = a.image.clone();
    flags.read.cells = a.cells;
    let cfg = resolve(&a.common, flags)?;
    let exp = cfg.simulation()?;
    let dir = out_dir(&a.common);
    let mut out = OutputDir::create(&dir)?;
    let image = match cfg.read.image.as_deref() {
        Some(path) => {
            let bytes = out.read_input(path)?;
            MemoryImage::parse(&String::from_utf8_lossy(&bytes))?
        }
        None => MemoryImage::pseudo_random(cfg.read.cells.unwrap_or(1000), exp.seed ^ 0x1A6E)?,
    };
    let readout = read_memory(&image, &exp)?;
    let decoded: String = readout.decoded.iter().map(|b| char::from(b'0' + b)).collect();
    out.write("decoded.txt", format!("{decoded}\n").as_bytes())?;
    out.write(
        "readout.json",
        &json_bytes(&json!({
            "cells": image.cells(),
            "errors": readout.errors,
            "bit_error_rate": readout.bit_error_rate,
            "ber_interval": readout.ber_interval,
            "information_per_cell": readout.information_per_cell,
        }))?,
    )?;
    println!(
        "read {} cells: {} errors, BER {:.4}, {:.4} bits/cell",
        image.cells(),
        readout.errors,
        readout.bit_error_rate,
        readout.information_per_cell
    );
    report_written(&out.finish("read", &cfg)?, &dir);
    Ok(())
}
