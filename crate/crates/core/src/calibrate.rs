//! Efficiency, straylight and read-noise estimation from frame data.
//!
//! The efficiencies follow the extended Klyshko method: the channel unbalance
//! `γ = ⟨n_S⟩/⟨n_I⟩` and the noise-reduction statistic
//!
//! ```text
//! σ = Var(n_S − γ n_I)/⟨n_S + γ n_I⟩ · ⟨n_S⟩/⟨n_S − N_SL⟩ − (Δ²_el + ⟨N_SL⟩)/⟨n_S − N_SL⟩
//! ```
//!
//! give `η_S = (1 + γ)/2 − σ` and `η_I = η_S/γ`. Only the signal arm carries
//! noise corrections. Uncertainties are the standard deviation of each
//! estimate over equal contiguous subsets of the frames.
//!
//! Regions are assumed larger than the coherence area; pre-integrated frames
//! carry no spatial information to check this.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::FrameSet;
use crate::stats::{mean, std_dev, subset_ranges, variance};

/// Number of subsets used for error bars.
pub const DEFAULT_SUBSETS: usize = 10;

/// A point estimate on the full data with its subset standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

/// Straylight mean and read-noise variance per integrated region.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseEstimate {
    pub straylight_mean: f64,
    pub electronic_variance: f64,
    #[serde(default)]
    pub sigma_straylight_mean: f64,
    #[serde(default)]
    pub sigma_electronic_variance: f64,
    /// Electronic pedestal, the mean of the shutter-closed counts.
    #[serde(default)]
    pub offset: f64,
}

impl NoiseEstimate {
    /// Noise parameters known exactly (e.g. the simulation's configuration).
    pub fn known(straylight_mean: f64, electronic_variance: f64) -> Self {
        Self {
            straylight_mean,
            electronic_variance,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Uncertainties {
    pub gamma: f64,
    pub sigma: f64,
    pub eta_s: f64,
    pub eta_i: f64,
    pub straylight_mean: f64,
    pub electronic_variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub gamma: f64,
    pub sigma: f64,
    pub eta_s: f64,
    pub eta_i: f64,
    pub straylight_mean: f64,
    pub electronic_variance: f64,
    pub uncertainties: Uncertainties,
    /// Set when an efficiency estimate falls outside (0, 1].
    pub out_of_range: bool,
}

fn subsets_for(len: usize) -> Vec<std::ops::Range<usize>> {
    // every subset needs two frames for a variance
    subset_ranges(len, DEFAULT_SUBSETS.min(len / 2).max(1))
}

fn spread(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    std_dev(values)
}

fn gamma_of(s: &[f64], i: &[f64]) -> Result<f64> {
    let mi = mean(i);
    if !(mi > 0.0) {
        return Err(Error::EmptyIdler);
    }
    Ok(mean(s) / mi)
}

/// `γ = ⟨n_S⟩/⟨n_I⟩`.
pub fn estimate_gamma(frames: &FrameSet) -> Result<Estimate> {
    if frames.len() < 2 {
        return Err(Error::InvalidParameter("gamma needs at least two frames".into()));
    }
    let (s, i) = (frames.signal(), frames.idler());
    let value = gamma_of(&s, &i)?;
    let parts = subsets_for(frames.len())
        .into_iter()
        .map(|r| gamma_of(&s[r.clone()], &i[r]))
        .collect::<Result<Vec<_>>>()?;
    Ok(Estimate {
        value,
        sigma: spread(&parts),
    })
}

fn sigma_of(s: &[f64], i: &[f64], gamma: f64, straylight: f64, electronic_variance: f64) -> Result<f64> {
    let ms = mean(s);
    let corrected = ms - straylight;
    if !(corrected > 0.0) {
        return Err(Error::DivisionDomain(format!(
            "mean signal minus straylight is {corrected}, must be positive"
        )));
    }
    let diff: Vec<f64> = s.iter().zip(i).map(|(a, b)| a - gamma * b).collect();
    let sum_mean = ms + gamma * mean(i);
    Ok(variance(&diff) / sum_mean * ms / corrected - (electronic_variance + straylight) / corrected)
}

/// The noise-corrected correlation statistic `σ_{γ,B}`.
pub fn estimate_sigma(frames: &FrameSet, gamma: f64, straylight_mean: f64, electronic_variance: f64) -> Result<f64> {
    if frames.len() < 2 {
        return Err(Error::InvalidParameter("sigma needs at least two frames".into()));
    }
    for (name, v) in [
        ("gamma", gamma),
        ("straylight_mean", straylight_mean),
        ("electronic_variance", electronic_variance),
    ] {
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
        }
    }
    sigma_of(&frames.signal(), &frames.idler(), gamma, straylight_mean, electronic_variance)
}

struct Klyshko {
    gamma: f64,
    sigma: f64,
    eta_s: f64,
    eta_i: f64,
}

fn klyshko(s: &[f64], i: &[f64], noise: &NoiseEstimate) -> Result<Klyshko> {
    let gamma = gamma_of(s, i)?;
    let sigma = sigma_of(s, i, gamma, noise.straylight_mean, noise.electronic_variance)?;
    let eta_s = (1.0 + gamma) / 2.0 - sigma;
    Ok(Klyshko {
        gamma,
        sigma,
        eta_s,
        eta_i: eta_s / gamma,
    })
}

/// `η_S = (1 + γ)/2 − σ`, `η_I = η_S/γ` with subset error bars. Out-of-range
/// efficiencies are reported and flagged, not rejected: a value near zero
/// means the arms carry no photon-number correlation.
pub fn estimate_efficiencies(frames: &FrameSet, noise: &NoiseEstimate) -> Result<CalibrationResult> {
    if frames.len() < 2 {
        return Err(Error::InvalidParameter("calibration needs at least two frames".into()));
    }
    let (s, i) = (frames.signal(), frames.idler());
    let full = klyshko(&s, &i, noise)?;
    let parts = subsets_for(frames.len())
        .into_iter()
        .map(|r| klyshko(&s[r.clone()], &i[r], noise))
        .collect::<Result<Vec<_>>>()?;
    let sd = |f: fn(&Klyshko) -> f64| spread(&parts.iter().map(f).collect::<Vec<_>>());
    let in_range = |eta: f64| eta > 0.0 && eta <= 1.0;
    Ok(CalibrationResult {
        gamma: full.gamma,
        sigma: full.sigma,
        eta_s: full.eta_s,
        eta_i: full.eta_i,
        straylight_mean: noise.straylight_mean,
        electronic_variance: noise.electronic_variance,
        uncertainties: Uncertainties {
            gamma: sd(|k| k.gamma),
            sigma: sd(|k| k.sigma),
            eta_s: sd(|k| k.eta_s),
            eta_i: sd(|k| k.eta_i),
            straylight_mean: noise.sigma_straylight_mean,
            electronic_variance: noise.sigma_electronic_variance,
        },
        out_of_range: !(in_range(full.eta_s) && in_range(full.eta_i)),
    })
}

/// Straylight from dark-region frames and read noise from shutter-closed
/// frames, both taken from the signal-region column. The shutter mean is the
/// electronic offset and is subtracted from the dark mean.
pub fn estimate_noise(dark_frames: &FrameSet, shutter_frames: &FrameSet) -> Result<NoiseEstimate> {
    if dark_frames.is_empty() {
        return Err(Error::InvalidParameter("no dark frames".into()));
    }
    if shutter_frames.len() < 2 {
        return Err(Error::InvalidParameter("read noise needs at least two shutter frames".into()));
    }
    let dark = dark_frames.signal();
    let shutter = shutter_frames.signal();
    let offset = mean(&shutter);
    let dark_parts: Vec<f64> = subset_ranges(dark.len(), DEFAULT_SUBSETS)
        .into_iter()
        .map(|r| mean(&dark[r]) - offset)
        .collect();
    let shutter_parts: Vec<f64> = subsets_for(shutter.len())
        .into_iter()
        .map(|r| variance(&shutter[r]))
        .collect();
    Ok(NoiseEstimate {
        straylight_mean: mean(&dark) - offset,
        electronic_variance: variance(&shutter),
        sigma_straylight_mean: spread(&dark_parts),
        sigma_electronic_variance: spread(&shutter_parts),
        offset,
    })
}
