//! End-to-end experiments: simulate (or ingest) labeled frame sets, decide
//! every frame, estimate error probabilities with subset error bars, and turn
//! them into information gains.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calibrate::{estimate_efficiencies, NoiseEstimate, DEFAULT_SUBSETS};
use crate::discriminate::{
    binary_entropy, classical_bound, gains, gaussian_error_probability, gaussian_likelihood_model,
    pair_model_error_probability, poisson_error_probability, poisson_threshold, threshold_error_probability_gaussian,
    ChannelPair, DecisionRule, GainReport, GaussianSignalModel, PoissonPairModel, GAUSSIAN_VALIDITY_FLOOR,
};
use crate::error::{Error, Result};
use crate::frames::{FrameRecord, FrameSet};
use crate::montecarlo::{simulate_cell, simulate_set, Sampling, SimConfig, Transmitter};
use crate::photon_stats::PairStatistics;
use crate::stats::{std_dev, subset_ranges, wilson_interval};
use crate::Hypothesis;

pub const REPORT_CSV_HEADER: &str = "tau0,N,p_err_q,p_err_cla_pc,c_bound,g_a,g_a_sigma,g_emp,g_emp_sigma";
pub const THEORY_CSV_HEADER: &str = "tau0,N,p_err_q,p_err_cla_pc,c_bound,g_a,g_emp";

/// How the joint (signal, idler) receiver models the counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    /// Exact pair model for small noiseless photon-level data, Gaussian otherwise.
    #[default]
    Auto,
    Gaussian,
    ExactPair,
}

/// Energy at which the classical bound is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundEnergy {
    /// `C(η_s N, η_s τ₀, η_s τ₁)`: a classical probe whose detected energy
    /// matches the quantum signal's.
    #[default]
    Detected,
    /// `C(N, η_s τ₀, η_s τ₁)`: efficiency folded into the channels only.
    Incident,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub pair: ChannelPair,
    pub transmitter: Transmitter,
    pub frames_per_set: usize,
    pub rule: RuleKind,
    pub subsets: usize,
    pub seed: u64,
    pub sampling: Sampling,
    pub pair_statistics: PairStatistics,
    /// Build the joint receiver from efficiencies calibrated on the `τ₁` set
    /// instead of the configured ones.
    pub calibrate_from_data: bool,
    pub bound_energy: BoundEnergy,
}

impl ExperimentConfig {
    pub fn new(pair: ChannelPair, frames_per_set: usize, seed: u64) -> Self {
        Self {
            pair,
            transmitter: Transmitter::Tmsv,
            frames_per_set,
            rule: RuleKind::Auto,
            subsets: DEFAULT_SUBSETS,
            seed,
            sampling: Sampling::ExactPair,
            pair_statistics: PairStatistics::Poisson,
            calibrate_from_data: false,
            bound_energy: BoundEnergy::Detected,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sim_config().validate()?;
        if self.subsets == 0 || !self.frames_per_set.is_multiple_of(self.subsets) {
            return Err(Error::InvalidParameter(format!(
                "subsets ({}) must divide frames_per_set ({})",
                self.subsets, self.frames_per_set
            )));
        }
        Ok(())
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            transmitter: self.transmitter,
            pair: self.pair,
            frames_per_set: self.frames_per_set,
            rng_seed: self.seed,
            sampling: self.sampling,
            pair_statistics: self.pair_statistics,
        }
    }

    fn exact_regime(&self) -> bool {
        self.pair.mean_signal_photons <= GAUSSIAN_VALIDITY_FLOOR && self.pair.electronic_variance == 0.0
    }
}

/// Classical bound for the configured energy convention.
pub fn reference_bound(pair: &ChannelPair, energy: BoundEnergy) -> f64 {
    let n = match energy {
        BoundEnergy::Detected => pair.eta_s * pair.mean_signal_photons,
        BoundEnergy::Incident => pair.mean_signal_photons,
    };
    classical_bound(n, pair.eta_s * pair.tau0, pair.eta_s * pair.tau1)
}

/// Joint photon-counting receiver for TMSV frames.
pub fn quantum_rule(pair: &ChannelPair, kind: RuleKind, sampling: Sampling) -> Result<DecisionRule> {
    let exact = match kind {
        RuleKind::ExactPair => true,
        RuleKind::Gaussian => false,
        RuleKind::Auto => {
            sampling == Sampling::ExactPair
                && pair.mean_signal_photons <= GAUSSIAN_VALIDITY_FLOOR
                && pair.electronic_variance == 0.0
        }
    };
    if exact {
        Ok(DecisionRule::ExactPair {
            h0: PoissonPairModel::new(pair, Hypothesis::Tau0)?,
            h1: PoissonPairModel::new(pair, Hypothesis::Tau1)?,
        })
    } else {
        Ok(DecisionRule::GaussianLikelihood {
            h0: gaussian_likelihood_model(pair, Hypothesis::Tau0, false)?,
            h1: gaussian_likelihood_model(pair, Hypothesis::Tau1, false)?,
        })
    }
}

fn signal_gaussian(pair: &ChannelPair, h: Hypothesis) -> GaussianSignalModel {
    let mean = pair.signal_mean(h);
    GaussianSignalModel {
        mean,
        variance: mean + pair.electronic_variance,
    }
}

/// Signal-only photon-counting receiver: the Poisson threshold on the
/// effective means `η_s τ N + s_S`.
pub fn classical_rule(pair: &ChannelPair) -> Result<DecisionRule> {
    pair.validate()?;
    let (mu0, mu1) = (pair.signal_mean(Hypothesis::Tau0), pair.signal_mean(Hypothesis::Tau1));
    match poisson_threshold(mu0, mu1) {
        Ok(threshold) => Ok(DecisionRule::CoherentThreshold { threshold }),
        // τ₀ = 0 without background: any count means τ₁
        Err(_) if mu0 == 0.0 && mu1 > 0.0 && pair.electronic_variance == 0.0 => {
            Ok(DecisionRule::CoherentThreshold { threshold: 0.0 })
        }
        // identical models tie everywhere and decide τ₀
        Err(_) => Ok(DecisionRule::SignalGaussian {
            h0: signal_gaussian(pair, Hypothesis::Tau0),
            h1: signal_gaussian(pair, Hypothesis::Tau1),
        }),
    }
}

/// Error probability on the full data plus its subset spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub value: f64,
    pub sigma: f64,
    pub per_subset: Vec<f64>,
}

fn wrong_flags(frames: &[FrameRecord], rule: &DecisionRule) -> Result<Vec<bool>> {
    let judge = |f: &FrameRecord| -> Result<bool> {
        let truth = f.truth.ok_or(Error::UnlabeledData)?;
        Ok(rule.decide(f.n_s, f.n_i)? != truth)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        frames.par_iter().map(judge).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        frames.iter().map(judge).collect()
    }
}

fn rate(flags: &[bool]) -> f64 {
    flags.iter().filter(|&&w| w).count() as f64 / flags.len() as f64
}

fn spread(values: &[f64]) -> f64 {
    if values.len() < 2 {
        0.0
    } else {
        std_dev(values)
    }
}

/// Fraction of wrong decisions with both hypotheses weighted equally:
/// `½ (wrong₀/n₀ + wrong₁/n₁)`, frames grouped by their truth label. The
/// error bar is the standard deviation over `subsets` contiguous slices of
/// each group.
pub fn empirical_error_probability(
    set0: &FrameSet,
    set1: &FrameSet,
    rule: &DecisionRule,
    subsets: usize,
) -> Result<ErrorEstimate> {
    let all: Vec<FrameRecord> = set0.frames.iter().chain(&set1.frames).copied().collect();
    let flags = wrong_flags(&all, rule)?;
    let mut groups: [Vec<bool>; 2] = [Vec::new(), Vec::new()];
    for (f, w) in all.iter().zip(flags) {
        groups[f.truth.expect("checked while judging").index()].push(w);
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::InvalidParameter(
            "both hypotheses need at least one labeled frame".into(),
        ));
    }
    let value = 0.5 * (rate(&groups[0]) + rate(&groups[1]));
    let parts = subsets.max(1).min(groups[0].len()).min(groups[1].len());
    let r0 = subset_ranges(groups[0].len(), parts);
    let r1 = subset_ranges(groups[1].len(), parts);
    let per_subset: Vec<f64> = r0
        .into_iter()
        .zip(r1)
        .map(|(a, b)| 0.5 * (rate(&groups[0][a]) + rate(&groups[1][b])))
        .collect();
    Ok(ErrorEstimate {
        value,
        sigma: spread(&per_subset),
        per_subset,
    })
}

fn receiver_pair(cfg: &ExperimentConfig, set1: &FrameSet) -> Result<ChannelPair> {
    if !cfg.calibrate_from_data {
        return Ok(cfg.pair);
    }
    let mut pair = cfg.pair;
    let noise = NoiseEstimate::known(pair.straylight_signal, pair.electronic_variance);
    let cal = estimate_efficiencies(set1, &noise)?;
    if pair.tau1 <= 0.0 {
        return Err(Error::InvalidParameter("calibration needs tau1 > 0".into()));
    }
    let clamp = |eta: f64| eta.clamp(1e-6, 1.0);
    pair.eta_s = clamp(cal.eta_s / pair.tau1);
    pair.eta_i = clamp(cal.eta_i);
    Ok(pair)
}

/// Builds the report from already decided error estimates.
fn assemble_report(pair: &ChannelPair, c_bound: f64, q: &ErrorEstimate, cl: &ErrorEstimate) -> GainReport {
    let g = gains(q.value, cl.value, c_bound);
    let h_c = binary_entropy(c_bound);
    let ga: Vec<f64> = q.per_subset.iter().map(|&p| h_c - binary_entropy(p)).collect();
    let ge: Vec<f64> = q
        .per_subset
        .iter()
        .zip(&cl.per_subset)
        .map(|(&p, &c)| binary_entropy(c) - binary_entropy(p))
        .collect();
    GainReport {
        tau0: pair.tau0,
        tau1: pair.tau1,
        mean_signal_photons: pair.mean_signal_photons,
        p_err_quantum: q.value,
        sigma_p_err_quantum: q.sigma,
        p_err_classical_pc: cl.value,
        sigma_p_err_classical_pc: cl.sigma,
        c_bound,
        h_quantum: g.h_quantum,
        h_classical_pc: g.h_classical_pc,
        h_bound: g.h_bound,
        gain_a: g.gain_a,
        sigma_gain_a: spread(&ga),
        gain_emp: g.gain_emp,
        sigma_gain_emp: spread(&ge),
    }
}

/// Gains on two labeled sets (simulated or ingested). The quantum column
/// decides with the joint receiver; the classical column applies the
/// signal-only threshold to the same frames. A coherent transmitter has no
/// idler, so both columns use the threshold.
pub fn run_experiment_on_sets(cfg: &ExperimentConfig, set0: &FrameSet, set1: &FrameSet) -> Result<GainReport> {
    cfg.pair.validate()?;
    if !set0.is_labeled() || !set1.is_labeled() {
        return Err(Error::UnlabeledData);
    }
    let classical = classical_rule(&cfg.pair)?;
    let cl = empirical_error_probability(set0, set1, &classical, cfg.subsets)?;
    let q = match cfg.transmitter {
        Transmitter::Tmsv => {
            let pair = receiver_pair(cfg, set1)?;
            let rule = quantum_rule(&pair, cfg.rule, cfg.sampling)?;
            empirical_error_probability(set0, set1, &rule, cfg.subsets)?
        }
        Transmitter::Coherent => cl.clone(),
    };
    Ok(assemble_report(&cfg.pair, reference_bound(&cfg.pair, cfg.bound_energy), &q, &cl))
}

/// Simulates both truth sets and reports gains with 1σ error bars.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<GainReport> {
    cfg.validate()?;
    let (set0, set1) = simulate_pair_of_sets(cfg)?;
    run_experiment_on_sets(cfg, &set0, &set1)
}

/// The `τ₀` and `τ₁` frame sets of an experiment.
pub fn simulate_pair_of_sets(cfg: &ExperimentConfig) -> Result<(FrameSet, FrameSet)> {
    let sim = cfg.sim_config();
    Ok((simulate_set(&sim, Hypothesis::Tau0)?, simulate_set(&sim, Hypothesis::Tau1)?))
}

/// Model prediction for one `(τ₀, N)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryPoint {
    pub tau0: f64,
    pub mean_signal_photons: f64,
    pub p_err_quantum: f64,
    pub p_err_classical_pc: f64,
    pub c_bound: f64,
    pub gain_a: f64,
    pub gain_emp: f64,
}

fn theory_classical(pair: &ChannelPair, exact: bool) -> Result<f64> {
    if pair.is_degenerate() {
        return Ok(0.5);
    }
    let (mu0, mu1) = (pair.signal_mean(Hypothesis::Tau0), pair.signal_mean(Hypothesis::Tau1));
    if mu0 == 0.0 && pair.electronic_variance == 0.0 {
        // only the zero count is ambiguous
        return Ok(0.5 * (-mu1).exp());
    }
    if exact {
        return poisson_error_probability(mu0, mu1);
    }
    let threshold = match classical_rule(pair)? {
        DecisionRule::CoherentThreshold { threshold } => threshold,
        _ => return Ok(0.5),
    };
    Ok(threshold_error_probability_gaussian(
        threshold,
        signal_gaussian(pair, Hypothesis::Tau0),
        signal_gaussian(pair, Hypothesis::Tau1),
    ))
}

/// Error probabilities predicted by the exact pair model (small noiseless
/// `N`) or the bivariate normal model, and the resulting gains.
pub fn theory_point(cfg: &ExperimentConfig) -> Result<TheoryPoint> {
    let pair = &cfg.pair;
    pair.validate()?;
    let exact = cfg.exact_regime();
    let p_cl = theory_classical(pair, exact)?;
    let p_q = match cfg.transmitter {
        Transmitter::Coherent => p_cl,
        Transmitter::Tmsv if pair.is_degenerate() => 0.5,
        Transmitter::Tmsv if exact => pair_model_error_probability(
            &PoissonPairModel::new(pair, Hypothesis::Tau0)?,
            &PoissonPairModel::new(pair, Hypothesis::Tau1)?,
        ),
        Transmitter::Tmsv => gaussian_error_probability(
            &gaussian_likelihood_model(pair, Hypothesis::Tau0, false)?,
            &gaussian_likelihood_model(pair, Hypothesis::Tau1, false)?,
        ),
    };
    let c_bound = reference_bound(pair, cfg.bound_energy);
    let g = gains(p_q, p_cl, c_bound);
    Ok(TheoryPoint {
        tau0: pair.tau0,
        mean_signal_photons: pair.mean_signal_photons,
        p_err_quantum: p_q,
        p_err_classical_pc: p_cl,
        c_bound,
        gain_a: g.gain_a,
        gain_emp: g.gain_emp,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub reports: Vec<GainReport>,
    pub theory: Vec<TheoryPoint>,
}

/// One experiment per `(τ₀, N)` cell, ordered by `N` then `τ₀`, all with the
/// template's seed, plus the model curves on the same grid.
pub fn sweep(template: &ExperimentConfig, tau0_grid: &[f64], n_list: &[f64]) -> Result<SweepResult> {
    if tau0_grid.is_empty() || n_list.is_empty() {
        return Err(Error::InvalidParameter("sweep grids must be non-empty".into()));
    }
    let mut reports = Vec::with_capacity(tau0_grid.len() * n_list.len());
    let mut theory = Vec::with_capacity(reports.capacity());
    for &n in n_list {
        for &tau0 in tau0_grid {
            let mut cfg = *template;
            cfg.pair.tau0 = tau0;
            cfg.pair.mean_signal_photons = n;
            reports.push(run_experiment(&cfg)?);
            theory.push(theory_point(&cfg)?);
        }
    }
    Ok(SweepResult { reports, theory })
}

pub fn write_reports_csv<W: Write>(reports: &[GainReport], mut w: W) -> Result<()> {
    writeln!(w, "{REPORT_CSV_HEADER}")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.tau0,
            r.mean_signal_photons,
            r.p_err_quantum,
            r.p_err_classical_pc,
            r.c_bound,
            r.gain_a,
            r.sigma_gain_a,
            r.gain_emp,
            r.sigma_gain_emp
        )?;
    }
    Ok(())
}

pub fn write_theory_csv<W: Write>(points: &[TheoryPoint], mut w: W) -> Result<()> {
    writeln!(w, "{THEORY_CSV_HEADER}")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            p.tau0, p.mean_signal_photons, p.p_err_quantum, p.p_err_classical_pc, p.c_bound, p.gain_a, p.gain_emp
        )?;
    }
    Ok(())
}

/// Bits stored in a row of memory cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryImage {
    bits: Vec<u8>,
}

impl MemoryImage {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidParameter("memory image must hold at least one cell".into()));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidParameter(format!("memory bits must be 0 or 1, got {b}")));
        }
        Ok(Self { bits })
    }

    /// Parses `0`/`1` characters, ignoring whitespace.
    pub fn parse(text: &str) -> Result<Self> {
        let bits = text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidParameter(format!("unexpected character `{other}` in memory image"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(bits)
    }

    /// Uniformly random bits from a seed.
    pub fn pseudo_random(cells: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::new((0..cells).map(|_| rng.random_range(0..2u8)).collect())
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn cells(&self) -> usize {
        self.bits.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryReadout {
    pub decoded: Vec<u8>,
    pub errors: usize,
    pub bit_error_rate: f64,
    /// 95 % Wilson interval of the bit error rate.
    pub ber_interval: (f64, f64),
    /// `1 − H(BER)` bits per cell.
    pub information_per_cell: f64,
}

/// Writes `image` into simulated cells (bit 0 → `τ₀`), reads one frame per
/// cell and decodes it with the experiment's receiver.
pub fn read_memory(image: &MemoryImage, cfg: &ExperimentConfig) -> Result<MemoryReadout> {
    let sim = cfg.sim_config();
    sim.validate()?;
    let rule = match cfg.transmitter {
        Transmitter::Tmsv => quantum_rule(&cfg.pair, cfg.rule, cfg.sampling)?,
        Transmitter::Coherent => classical_rule(&cfg.pair)?,
    };
    let decoded = image
        .bits
        .iter()
        .enumerate()
        .map(|(cell, &b)| {
            let truth = Hypothesis::from_index(b as usize).expect("validated bit");
            let f = simulate_cell(&sim, truth, cell as u64);
            Ok(rule.decide(f.n_s, f.n_i)?.index() as u8)
        })
        .collect::<Result<Vec<u8>>>()?;
    let errors = decoded.iter().zip(&image.bits).filter(|(a, b)| a != b).count();
    let ber = errors as f64 / image.cells() as f64;
    Ok(MemoryReadout {
        decoded,
        errors,
        bit_error_rate: ber,
        ber_interval: wilson_interval(errors, image.cells(), 1.96),
        information_per_cell: 1.0 - binary_entropy(ber),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lab_pair(tau0: f64) -> ChannelPair {
        ChannelPair::new(tau0, 1.0, 0.78, 0.77, 1.15e5)
            .unwrap()
            .with_electronic_variance(1e4)
            .unwrap()
    }

    fn labeled(truth: Hypothesis, n: usize, offset: f64) -> FrameSet {
        FrameSet::new(
            (0..n)
                .map(|k| FrameRecord {
                    frame_id: k as u64,
                    n_s: offset + (k % 7) as f64,
                    n_i: (k % 5) as f64,
                    truth: Some(truth),
                })
                .collect(),
        )
    }

    #[test]
    fn perfect_rule_has_zero_error() {
        let set0 = labeled(Hypothesis::Tau0, 100, 0.0);
        let set1 = labeled(Hypothesis::Tau1, 100, 100.0);
        let rule = DecisionRule::CoherentThreshold { threshold: 50.0 };
        let e = empirical_error_probability(&set0, &set1, &rule, 10).unwrap();
        assert_eq!((e.value, e.sigma), (0.0, 0.0));
        assert_eq!(e.per_subset.len(), 10);
    }

    #[test]
    fn constant_rule_has_half_error_with_unequal_sets() {
        let set0 = labeled(Hypothesis::Tau0, 30, 0.0);
        let set1 = labeled(Hypothesis::Tau1, 70, 0.0);
        let rule = DecisionRule::CoherentThreshold { threshold: 1e9 };
        let e = empirical_error_probability(&set0, &set1, &rule, 10).unwrap();
        assert_eq!(e.value, 0.5);
    }

    #[test]
    fn unlabeled_data_is_rejected() {
        let mut set0 = labeled(Hypothesis::Tau0, 10, 0.0);
        set0.frames[3].truth = None;
        let set1 = labeled(Hypothesis::Tau1, 10, 0.0);
        let rule = DecisionRule::CoherentThreshold { threshold: 0.0 };
        assert!(matches!(
            empirical_error_probability(&set0, &set1, &rule, 10),
            Err(Error::UnlabeledData)
        ));
    }

    #[test]
    fn random_rule_has_half_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut set = |truth| {
            FrameSet::new(
                (0..5000)
                    .map(|k| FrameRecord { frame_id: k, n_s: rng.random::<f64>(), n_i: 0.0, truth: Some(truth) })
                    .collect(),
            )
        };
        let (set0, set1) = (set(Hypothesis::Tau0), set(Hypothesis::Tau1));
        let rule = DecisionRule::CoherentThreshold { threshold: 0.5 };
        let e = empirical_error_probability(&set0, &set1, &rule, 10).unwrap();
        assert!((e.value - 0.5).abs() < 3.0 * e.sigma / 10f64.sqrt());
    }

    #[test]
    fn lab_parameters_beat_the_classical_bound() {
        let cfg = ExperimentConfig::new(lab_pair(0.993), 10_000, 2);
        let report = run_experiment(&cfg).unwrap();
        assert!(report.p_err_quantum < report.c_bound, "{report:?}");
        let expected = classical_bound(0.78 * 1.15e5, 0.78 * 0.993, 0.78);
        assert!((report.c_bound - expected).abs() < 1e-15);
        assert!(report.gain_emp > 0.0);
    }

    #[test]
    fn merged_channels_have_no_gain() {
        let cfg = ExperimentConfig::new(lab_pair(1.0), 1000, 3);
        let r = run_experiment(&cfg).unwrap();
        assert_eq!((r.p_err_quantum, r.p_err_classical_pc, r.c_bound), (0.5, 0.5, 0.5));
        assert_eq!((r.gain_a, r.gain_emp), (0.0, 0.0));
    }

    #[test]
    fn label_swap_invariance() {
        let cfg = ExperimentConfig::new(lab_pair(0.993), 2000, 4);
        let (set0, set1) = simulate_pair_of_sets(&cfg).unwrap();
        let rule = quantum_rule(&cfg.pair, RuleKind::Gaussian, cfg.sampling).unwrap();
        let e = empirical_error_probability(&set0, &set1, &rule, 10).unwrap();
        let DecisionRule::GaussianLikelihood { h0, h1 } = rule else { unreachable!() };
        let swapped_rule = DecisionRule::GaussianLikelihood { h0: h1, h1: h0 };
        let relabel = |s: &FrameSet| {
            let mut s = s.clone();
            for f in &mut s.frames {
                f.truth = f.truth.map(Hypothesis::flipped);
            }
            s
        };
        let e2 = empirical_error_probability(&relabel(&set1), &relabel(&set0), &swapped_rule, 10).unwrap();
        assert_eq!(e.value, e2.value);
    }

    #[test]
    fn theory_matches_simulation_at_lab_scale() {
        let cfg = ExperimentConfig::new(lab_pair(0.993), 10_000, 5);
        let report = run_experiment(&cfg).unwrap();
        let theory = theory_point(&cfg).unwrap();
        // standard error of the full-set estimate from the subset spread
        let se = |s: f64| s / (cfg.subsets as f64).sqrt();
        assert!((report.p_err_quantum - theory.p_err_quantum).abs() < 3.0 * se(report.sigma_p_err_quantum) + 1e-3);
        assert!(
            (report.p_err_classical_pc - theory.p_err_classical_pc).abs()
                < 3.0 * se(report.sigma_p_err_classical_pc) + 1e-3
        );
    }

    #[test]
    fn exact_pair_theory_matches_small_simulation() {
        let pair = ChannelPair::new(0.5, 1.0, 0.9, 0.9, 20.0).unwrap();
        let cfg = ExperimentConfig::new(pair, 20_000, 6);
        let report = run_experiment(&cfg).unwrap();
        let theory = theory_point(&cfg).unwrap();
        let sd = (theory.p_err_quantum * (1.0 - theory.p_err_quantum) / 40_000.0).sqrt();
        assert!((report.p_err_quantum - theory.p_err_quantum).abs() < 4.0 * sd, "{report:?} {theory:?}");
    }

    #[test]
    fn error_bars_shrink_with_frames() {
        let small = run_experiment(&ExperimentConfig::new(lab_pair(0.993), 2500, 7)).unwrap();
        let large = run_experiment(&ExperimentConfig::new(lab_pair(0.993), 10_000, 7)).unwrap();
        let ratio = small.sigma_p_err_quantum / large.sigma_p_err_quantum;
        assert!(ratio > 1.0 && ratio < 3.0, "{ratio}");
    }

    #[test]
    fn single_cell_sweep_equals_experiment() {
        let cfg = ExperimentConfig::new(lab_pair(0.995), 1000, 8);
        let s = sweep(&cfg, &[0.995], &[1.15e5]).unwrap();
        assert_eq!(s.reports, vec![run_experiment(&cfg).unwrap()]);
        assert!(sweep(&cfg, &[], &[1.0]).is_err());
    }

    #[test]
    fn subsets_must_divide_frames() {
        let mut cfg = ExperimentConfig::new(lab_pair(0.995), 1005, 8);
        assert!(cfg.validate().is_err());
        cfg.frames_per_set = 1000;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn memory_round_trips() {
        let image = MemoryImage::pseudo_random(1000, 1).unwrap();
        let easy = ExperimentConfig::new(ChannelPair::new(0.2, 1.0, 0.8, 0.8, 1e6).unwrap(), 10, 2);
        let out = read_memory(&image, &easy).unwrap();
        assert_eq!(out.errors, 0);
        assert_eq!(out.decoded, image.bits());
        assert_eq!(out.information_per_cell, 1.0);

        let blind = ExperimentConfig::new(ChannelPair::new(0.9, 0.9, 0.8, 0.8, 1e4).unwrap(), 10, 2);
        let out = read_memory(&image, &blind).unwrap();
        // every cell decodes as 0, so the error count is the number of ones
        let ones = image.bits().iter().filter(|&&b| b == 1).count();
        assert_eq!(out.errors, ones);
        assert!(out.ber_interval.0 < 0.5 + 0.05 && out.ber_interval.1 > 0.5 - 0.05);
    }

    #[test]
    fn memory_ber_agrees_with_frame_estimate() {
        let cfg = ExperimentConfig::new(lab_pair(0.993), 10_000, 9);
        let report = run_experiment(&cfg).unwrap();
        let image = MemoryImage::pseudo_random(20_000, 10).unwrap();
        let out = read_memory(&image, &cfg).unwrap();
        let p = report.p_err_quantum;
        let sd = (p * (1.0 - p) / 20_000.0 + p * (1.0 - p) / 20_000.0).sqrt();
        assert!((out.bit_error_rate - p).abs() < 3.0 * sd, "{} vs {p}", out.bit_error_rate);
    }

    #[test]
    fn memory_image_parsing() {
        assert_eq!(MemoryImage::parse("01 1\n0").unwrap().bits(), &[0, 1, 1, 0]);
        assert!(MemoryImage::parse("012").is_err());
        assert!(MemoryImage::parse("").is_err());
    }

    #[test]
    fn report_csv_layout() {
        let cfg = ExperimentConfig::new(lab_pair(0.995), 1000, 11);
        let s = sweep(&cfg, &[0.995, 0.999], &[1.15e5]).unwrap();
        let mut buf = Vec::new();
        write_reports_csv(&s.reports, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), REPORT_CSV_HEADER);
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().starts_with("0.995,115000,"));
    }
}
