//! Configuration schema and precedence: flags override the file, which
//! overrides the built-in defaults.
//!
//! The same schema is used for TOML config files and for the `config` object
//! of a run manifest, so `--config manifest.json` replays a run.

use std::path::Path;

use qreading_core::discriminate::ChannelPair;
use qreading_core::montecarlo::{Sampling, Transmitter};
use qreading_core::photon_stats::PairStatistics;
use qreading_core::pipeline::{BoundEnergy, ExperimentConfig, RuleKind};
use serde::{Deserialize, Serialize};

use crate::CliError;

macro_rules! merge_fields {
    ($base:expr, $over:expr, $($field:ident),+ $(,)?) => {
        $( if $over.$field.is_some() { $base.$field = $over.$field.clone(); } )+
    };
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_i: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_signal_photons: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub straylight_signal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub straylight_idler: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub electronic_variance: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_s: Option<f64>,
    /// `start:end[:step]` or a comma-separated list.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// `0`, `1` or `both`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<String>,
    /// Independent arms with matching marginals instead of TMSV pairs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classical: Option<bool>,
    /// Also write this many dark-region and shutter-closed frames.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_frames: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frames: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dark: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shutter: Option<String>,
    /// Used when no dark/shutter frames are given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub straylight_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub electronic_variance: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// Labeled frame files to analyse instead of simulating.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frames0: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frames1: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau0_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadSection {
    /// File of `0`/`1` characters; a seeded random image is used otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frames_per_set: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsets: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transmitter: Option<Transmitter>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Sampling>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_energy: Option<BoundEnergy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibrate_from_data: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_statistics: Option<PairStatistics>,
    #[serde(default)]
    pub pair: PairSection,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub calibrate: CalibrateSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub read: ReadSection,
}

impl Config {
    /// Defaults of the reference lab setup: `N = 1.15·10⁵`, `η_S = 0.78`, `η_I = 0.77`,
    /// `Δ²_el = 10⁴`, 10⁴ frames per set.
    pub fn defaults() -> Self {
        Self {
            seed: Some(0),
            frames_per_set: Some(10_000),
            subsets: Some(10),
            transmitter: Some(Transmitter::Tmsv),
            sampling: Some(Sampling::ExactPair),
            rule: Some(RuleKind::Auto),
            bound_energy: Some(BoundEnergy::Detected),
            calibrate_from_data: Some(false),
            pair_statistics: Some(PairStatistics::Poisson),
            pair: PairSection {
                tau0: Some(0.993),
                tau1: Some(1.0),
                eta_s: Some(0.78),
                eta_i: Some(0.77),
                mean_signal_photons: Some(1.15e5),
                straylight_signal: Some(0.0),
                straylight_idler: Some(0.0),
                electronic_variance: Some(1e4),
            },
            bounds: BoundsSection {
                tau0: Some(0.8),
                tau1: Some(1.0),
                eta_s: Some(1.0),
                n_grid: Some("1:1000".into()),
            },
            simulate: SimulateSection {
                truth: Some("both".into()),
                classical: Some(false),
                noise_frames: Some(0),
                bias: Some(0.0),
            },
            calibrate: CalibrateSection {
                straylight_mean: Some(0.0),
                electronic_variance: Some(0.0),
                ..CalibrateSection::default()
            },
            experiment: ExperimentSection::default(),
            sweep: SweepSection {
                tau0_grid: Some((990..1000).map(|k| k as f64 / 1000.0).collect()),
                n_list: Some(vec![1.15e5]),
            },
            read: ReadSection {
                image: None,
                cells: Some(1000),
            },
        }
    }

    /// Field-wise override: every value set in `over` wins.
    pub fn merged(mut self, over: &Config) -> Self {
        merge_fields!(
            self,
            over,
            seed,
            frames_per_set,
            subsets,
            transmitter,
            sampling,
            rule,
            bound_energy,
            calibrate_from_data,
            pair_statistics
        );
        merge_fields!(
            self.pair,
            over.pair,
            tau0,
            tau1,
            eta_s,
            eta_i,
            mean_signal_photons,
            straylight_signal,
            straylight_idler,
            electronic_variance
        );
        merge_fields!(self.bounds, over.bounds, tau0, tau1, eta_s, n_grid);
        merge_fields!(self.simulate, over.simulate, truth, classical, noise_frames, bias);
        merge_fields!(
            self.calibrate,
            over.calibrate,
            frames,
            dark,
            shutter,
            straylight_mean,
            electronic_variance
        );
        merge_fields!(self.experiment, over.experiment, frames0, frames1);
        merge_fields!(self.sweep, over.sweep, tau0_grid, n_list);
        merge_fields!(self.read, over.read, image, cells);
        self
    }

    /// Reads a TOML config file, or a JSON run manifest / JSON config.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        if is_json {
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let inner = value.get("config").cloned().unwrap_or(value);
            serde_json::from_value(inner).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
    }

    fn pair(&self) -> Result<ChannelPair, CliError> {
        let p = &self.pair;
        let get = |name: &str, v: Option<f64>| v.ok_or_else(|| CliError::Config(format!("pair.{name} is not set")));
        let pair = ChannelPair {
            tau0: get("tau0", p.tau0)?,
            tau1: get("tau1", p.tau1)?,
            eta_s: get("eta_s", p.eta_s)?,
            eta_i: get("eta_i", p.eta_i)?,
            mean_signal_photons: get("mean_signal_photons", p.mean_signal_photons)?,
            straylight_signal: get("straylight_signal", p.straylight_signal)?,
            straylight_idler: get("straylight_idler", p.straylight_idler)?,
            electronic_variance: get("electronic_variance", p.electronic_variance)?,
        };
        pair.validate()?;
        Ok(pair)
    }

    /// The experiment settings, with the frame/subset divisibility check.
    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let cfg = self.experiment_unchecked()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The experiment settings, checked only as far as simulation needs.
    pub fn simulation(&self) -> Result<ExperimentConfig, CliError> {
        let cfg = self.experiment_unchecked()?;
        cfg.sim_config().validate()?;
        Ok(cfg)
    }

    fn experiment_unchecked(&self) -> Result<ExperimentConfig, CliError> {
        let missing = |name: &str| CliError::Config(format!("{name} is not set"));
        let cfg = ExperimentConfig {
            pair: self.pair()?,
            transmitter: self.transmitter.ok_or_else(|| missing("transmitter"))?,
            frames_per_set: self.frames_per_set.ok_or_else(|| missing("frames_per_set"))?,
            rule: self.rule.ok_or_else(|| missing("rule"))?,
            subsets: self.subsets.ok_or_else(|| missing("subsets"))?,
            seed: self.seed.ok_or_else(|| missing("seed"))?,
            sampling: self.sampling.ok_or_else(|| missing("sampling"))?,
            pair_statistics: self.pair_statistics.ok_or_else(|| missing("pair_statistics"))?,
            calibrate_from_data: self.calibrate_from_data.ok_or_else(|| missing("calibrate_from_data"))?,
            bound_energy: self.bound_energy.ok_or_else(|| missing("bound_energy"))?,
        };
        Ok(cfg)
    }
}

/// Parses `start:end[:step]` (inclusive) or `a,b,c`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |msg: String| CliError::Usage(format!("grid `{spec}`: {msg}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
    let values = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() > 3 {
            return Err(bad("expected start:end[:step]".into()));
        }
        let (start, end) = (num(parts[0])?, num(parts[1])?);
        let step = if parts.len() == 3 { num(parts[2])? } else { 1.0 };
        if !(step > 0.0) || end < start {
            return Err(bad("need step > 0 and end >= start".into()));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize + 1;
        if count > 10_000_000 {
            return Err(bad("too many points".into()));
        }
        (0..count).map(|k| start + step * k as f64).collect()
    } else {
        spec.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad("values must be finite".into()));
    }
    Ok(values)
}
