//! Seeded frame generator emulating the integrated CCD regions.
//!
//! Every frame draws from its own counter-based ChaCha streams keyed by
//! `(seed, set tag, arm)` with the frame id as stream number, so a set is
//! bit-identical however its frames are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::discriminate::{gaussian_likelihood_model, ChannelPair};
use crate::error::{Error, Result};
use crate::frames::{FrameRecord, FrameSet};
use crate::photon_stats::PairStatistics;
use crate::Hypothesis;

/// Exact pair sampling is refused above this mean photon number.
pub const EXACT_PAIR_MAX_PHOTONS: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transmitter {
    Tmsv,
    Coherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Photon-level draws: pair number, binomial losses, noise.
    ExactPair,
    /// Draws from the bivariate normal approximation.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub transmitter: Transmitter,
    pub pair: ChannelPair,
    pub frames_per_set: usize,
    pub rng_seed: u64,
    pub sampling: Sampling,
    #[serde(default)]
    pub pair_statistics: PairStatistics,
}

impl SimConfig {
    pub fn new(transmitter: Transmitter, pair: ChannelPair, frames_per_set: usize, rng_seed: u64) -> Self {
        Self {
            transmitter,
            pair,
            frames_per_set,
            rng_seed,
            sampling: Sampling::ExactPair,
            pair_statistics: PairStatistics::Poisson,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pair.validate()?;
        if self.frames_per_set == 0 {
            return Err(Error::InvalidParameter("frames_per_set must be >= 1".into()));
        }
        if let PairStatistics::MultiThermal { modes: 0 } = self.pair_statistics {
            return Err(Error::InvalidParameter("multithermal mode count must be >= 1".into()));
        }
        if self.sampling == Sampling::ExactPair && self.pair.mean_signal_photons > EXACT_PAIR_MAX_PHOTONS {
            return Err(Error::RuntimeGuard(format!(
                "exact pair sampling is limited to N <= {EXACT_PAIR_MAX_PHOTONS:e}, got {:e}",
                self.pair.mean_signal_photons
            )));
        }
        Ok(())
    }
}

/// Which family of frames a stream belongs to; part of the RNG key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetKind {
    Measurement,
    ClassicallyCorrelated,
    Dark,
    Shutter,
    MemoryCell,
}

impl SetKind {
    fn code(self) -> u64 {
        match self {
            SetKind::Measurement => 1,
            SetKind::ClassicallyCorrelated => 2,
            SetKind::Dark => 3,
            SetKind::Shutter => 4,
            SetKind::MemoryCell => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
enum Arm {
    Pairs = 0,
    Signal = 1,
    Idler = 2,
    SignalStray = 3,
    IdlerStray = 4,
    SignalRead = 5,
    IdlerRead = 6,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Per-frame random substreams.
#[derive(Debug, Clone, Copy)]
pub struct FrameStream {
    key: u64,
    frame_id: u64,
}

impl FrameStream {
    pub fn new(seed: u64, kind: SetKind, truth: Option<Hypothesis>, frame_id: u64) -> Self {
        let truth_code = truth.map_or(0, |h| h.index() as u64 + 1);
        let key = splitmix64(splitmix64(seed) ^ (kind.code() << 8 | truth_code));
        Self { key, frame_id }
    }

    fn arm(&self, arm: Arm) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.key ^ arm as u64));
        rng.set_stream(self.frame_id);
        rng
    }
}

fn poisson(mean: f64, rng: &mut ChaCha8Rng) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng)
}

fn binomial(trials: u64, p: f64, rng: &mut ChaCha8Rng) -> u64 {
    if trials == 0 || p <= 0.0 {
        return 0;
    }
    Binomial::new(trials, p.min(1.0)).expect("valid probability").sample(rng)
}

fn read_noise(variance: f64, rng: &mut ChaCha8Rng) -> f64 {
    if variance <= 0.0 {
        return 0.0;
    }
    let z: f64 = StandardNormal.sample(rng);
    variance.sqrt() * z
}

fn pair_count(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> u64 {
    let n = cfg.pair.mean_signal_photons;
    let mean = match cfg.pair_statistics {
        PairStatistics::Poisson => n,
        PairStatistics::MultiThermal { modes } => {
            if n <= 0.0 {
                0.0
            } else {
                let m = modes as f64;
                Gamma::new(m, n / m).expect("positive shape and scale").sample(rng)
            }
        }
    };
    poisson(mean, rng) as u64
}

/// A simulated frame plus how many of its two counts were clamped at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulatedFrame {
    pub record: FrameRecord,
    pub clamped: u8,
}

fn clamp_counts(n_s: f64, n_i: f64) -> (f64, f64, u8) {
    let clamped = u8::from(n_s < 0.0) + u8::from(n_i < 0.0);
    (n_s.max(0.0), n_i.max(0.0), clamped)
}

/// Generates one frame under channel `truth`.
pub fn simulate_frame(cfg: &SimConfig, truth: Hypothesis, stream: &FrameStream) -> Result<SimulatedFrame> {
    cfg.validate()?;
    Ok(simulate_frame_unchecked(cfg, truth, stream))
}

fn simulate_frame_unchecked(cfg: &SimConfig, truth: Hypothesis, stream: &FrameStream) -> SimulatedFrame {
    let p = &cfg.pair;
    let tau = p.tau(truth);
    let (n_s, n_i) = match (cfg.transmitter, cfg.sampling) {
        (Transmitter::Tmsv, Sampling::ExactPair) => {
            let pairs = pair_count(cfg, &mut stream.arm(Arm::Pairs));
            let mut sig = stream.arm(Arm::Signal);
            // cell first, then detection: two independent thinnings
            let through_cell = binomial(pairs, tau, &mut sig);
            let detected_s = binomial(through_cell, p.eta_s, &mut sig);
            let detected_i = binomial(pairs, p.eta_i, &mut stream.arm(Arm::Idler));
            (
                detected_s as f64 + noise(p.straylight_signal, p.electronic_variance, stream, Arm::SignalStray, Arm::SignalRead),
                detected_i as f64 + noise(p.straylight_idler, p.electronic_variance, stream, Arm::IdlerStray, Arm::IdlerRead),
            )
        }
        (Transmitter::Coherent, Sampling::ExactPair) => {
            let detected = poisson(p.eta_s * tau * p.mean_signal_photons, &mut stream.arm(Arm::Signal));
            (
                detected + noise(p.straylight_signal, p.electronic_variance, stream, Arm::SignalStray, Arm::SignalRead),
                0.0,
            )
        }
        (Transmitter::Tmsv, Sampling::Gaussian) => {
            let model = gaussian_likelihood_model(p, truth, false).expect("validated pair");
            let z1: f64 = StandardNormal.sample(&mut stream.arm(Arm::Signal));
            let z2: f64 = StandardNormal.sample(&mut stream.arm(Arm::Idler));
            model.transform(z1, z2)
        }
        (Transmitter::Coherent, Sampling::Gaussian) => {
            let mean = p.signal_mean(truth);
            let z: f64 = StandardNormal.sample(&mut stream.arm(Arm::Signal));
            (mean + (mean + p.electronic_variance).sqrt() * z, 0.0)
        }
    };
    let (n_s, n_i, clamped) = clamp_counts(n_s, n_i);
    SimulatedFrame {
        record: FrameRecord {
            frame_id: stream.frame_id,
            n_s,
            n_i,
            truth: Some(truth),
        },
        clamped,
    }
}

fn noise(straylight: f64, read_variance: f64, stream: &FrameStream, stray: Arm, read: Arm) -> f64 {
    poisson(straylight, &mut stream.arm(stray)) + read_noise(read_variance, &mut stream.arm(read))
}

/// Generation statistics of a set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimStats {
    /// Number of individual counts clamped at zero.
    pub clamped_values: usize,
}

fn collect_frames<F>(count: usize, f: F) -> Vec<SimulatedFrame>
where
    F: Fn(u64) -> SimulatedFrame + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count as u64).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count as u64).map(f).collect()
    }
}

fn assemble(frames: Vec<SimulatedFrame>) -> (FrameSet, SimStats) {
    let clamped_values = frames.iter().map(|f| f.clamped as usize).sum();
    (
        FrameSet::new(frames.into_iter().map(|f| f.record).collect()),
        SimStats { clamped_values },
    )
}

pub fn simulate_set_with_stats(cfg: &SimConfig, truth: Hypothesis) -> Result<(FrameSet, SimStats)> {
    cfg.validate()?;
    let frames = collect_frames(cfg.frames_per_set, |id| {
        let stream = FrameStream::new(cfg.rng_seed, SetKind::Measurement, Some(truth), id);
        simulate_frame_unchecked(cfg, truth, &stream)
    });
    Ok(assemble(frames))
}

/// `frames_per_set` frames under channel `truth`, labeled with it.
pub fn simulate_set(cfg: &SimConfig, truth: Hypothesis) -> Result<FrameSet> {
    Ok(simulate_set_with_stats(cfg, truth)?.0)
}

/// Frames whose signal and idler counts are independent, with the same
/// marginal means and noise as the TMSV set: the unsqueezed reference cloud.
pub fn classically_correlated_set(cfg: &SimConfig, truth: Hypothesis) -> Result<FrameSet> {
    cfg.validate()?;
    let p = cfg.pair;
    let frames = collect_frames(cfg.frames_per_set, |id| {
        let stream = FrameStream::new(cfg.rng_seed, SetKind::ClassicallyCorrelated, Some(truth), id);
        let mean_s = p.eta_s * p.tau(truth) * p.mean_signal_photons;
        let mean_i = p.eta_i * p.mean_signal_photons;
        let (n_s, n_i) = match cfg.sampling {
            Sampling::ExactPair => (
                poisson(mean_s, &mut stream.arm(Arm::Signal))
                    + noise(p.straylight_signal, p.electronic_variance, &stream, Arm::SignalStray, Arm::SignalRead),
                poisson(mean_i, &mut stream.arm(Arm::Idler))
                    + noise(p.straylight_idler, p.electronic_variance, &stream, Arm::IdlerStray, Arm::IdlerRead),
            ),
            Sampling::Gaussian => {
                let z1: f64 = StandardNormal.sample(&mut stream.arm(Arm::Signal));
                let z2: f64 = StandardNormal.sample(&mut stream.arm(Arm::Idler));
                let (ms, mi) = (mean_s + p.straylight_signal, mean_i + p.straylight_idler);
                (
                    ms + (ms + p.electronic_variance).sqrt() * z1,
                    mi + (mi + p.electronic_variance).sqrt() * z2,
                )
            }
        };
        let (n_s, n_i, clamped) = clamp_counts(n_s, n_i);
        SimulatedFrame {
            record: FrameRecord {
                frame_id: id,
                n_s,
                n_i,
                truth: Some(truth),
            },
            clamped,
        }
    });
    Ok(assemble(frames).0)
}

/// Calibration frames without any SPDC light.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFrameKind {
    /// A dark region: straylight plus read noise.
    Dark,
    /// Shutter closed: read noise only.
    Shutter,
}

/// Dark-region or shutter-closed frames. `bias` is the electronic offset
/// added to every count (real read-out sits on a positive pedestal).
pub fn simulate_noise_frames(cfg: &SimConfig, kind: NoiseFrameKind, count: usize, bias: f64) -> Result<FrameSet> {
    cfg.validate()?;
    let p = cfg.pair;
    let set_kind = match kind {
        NoiseFrameKind::Dark => SetKind::Dark,
        NoiseFrameKind::Shutter => SetKind::Shutter,
    };
    let frames = collect_frames(count, |id| {
        let stream = FrameStream::new(cfg.rng_seed, set_kind, None, id);
        let (stray_s, stray_i) = match kind {
            NoiseFrameKind::Dark => (p.straylight_signal, p.straylight_idler),
            NoiseFrameKind::Shutter => (0.0, 0.0),
        };
        let n_s = bias + noise(stray_s, p.electronic_variance, &stream, Arm::SignalStray, Arm::SignalRead);
        let n_i = bias + noise(stray_i, p.electronic_variance, &stream, Arm::IdlerStray, Arm::IdlerRead);
        let (n_s, n_i, clamped) = clamp_counts(n_s, n_i);
        SimulatedFrame {
            record: FrameRecord {
                frame_id: id,
                n_s,
                n_i,
                truth: None,
            },
            clamped,
        }
    });
    Ok(assemble(frames).0)
}

/// One frame for a memory cell storing `bit`, keyed by the cell index.
pub(crate) fn simulate_cell(cfg: &SimConfig, bit: Hypothesis, cell: u64) -> FrameRecord {
    let stream = FrameStream::new(cfg.rng_seed, SetKind::MemoryCell, Some(bit), cell);
    simulate_frame_unchecked(cfg, bit, &stream).record
}
