//! Bayesian photon-counting receivers for a pair of loss channels.
//!
//! With equal priors the Bayes rule picks the hypothesis with the larger
//! likelihood; ties go to `τ₀`. Closed-form thresholds exist for a coherent
//! probe (Poisson counts) and for an ideal-idler TMSV probe; the generic rule
//! compares log-likelihoods from any [`JointCountModel`].

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{check_non_negative, check_unit_interval, Error, Result};
use crate::photon_stats::{tmsv_joint_after_channels, tmsv_joint_ideal, JointCountPmf, LossChannel, TmsvSource};
use crate::stats::normal_cdf;
use crate::Hypothesis;

/// Below this mean photon number the Gaussian approximation is not trusted.
pub const GAUSSIAN_VALIDITY_FLOOR: f64 = 1e3;

/// One discrimination problem: the two cell transmittances, the detection
/// efficiencies and the detector noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPair {
    pub tau0: f64,
    pub tau1: f64,
    pub eta_s: f64,
    pub eta_i: f64,
    /// Mean photon number sent to the memory cell per frame.
    pub mean_signal_photons: f64,
    /// Mean straylight counts per integrated region.
    #[serde(default)]
    pub straylight_signal: f64,
    #[serde(default)]
    pub straylight_idler: f64,
    /// Read-noise variance per integrated region.
    #[serde(default)]
    pub electronic_variance: f64,
}

impl ChannelPair {
    pub fn new(tau0: f64, tau1: f64, eta_s: f64, eta_i: f64, mean_signal_photons: f64) -> Result<Self> {
        let pair = Self {
            tau0,
            tau1,
            eta_s,
            eta_i,
            mean_signal_photons,
            straylight_signal: 0.0,
            straylight_idler: 0.0,
            electronic_variance: 0.0,
        };
        pair.validate()?;
        Ok(pair)
    }

    /// Ideal detection on both arms.
    pub fn lossless(tau0: f64, tau1: f64, mean_signal_photons: f64) -> Result<Self> {
        Self::new(tau0, tau1, 1.0, 1.0, mean_signal_photons)
    }

    /// Same straylight mean on both regions.
    pub fn with_straylight(mut self, mean: f64) -> Result<Self> {
        self.straylight_signal = mean;
        self.straylight_idler = mean;
        self.validate()?;
        Ok(self)
    }

    pub fn with_electronic_variance(mut self, variance: f64) -> Result<Self> {
        self.electronic_variance = variance;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_interval("tau0", self.tau0)?;
        check_unit_interval("tau1", self.tau1)?;
        if self.tau0 > self.tau1 {
            return Err(Error::InvalidParameter(format!(
                "tau0 ({}) must not exceed tau1 ({})",
                self.tau0, self.tau1
            )));
        }
        for (name, eta) in [("eta_s", self.eta_s), ("eta_i", self.eta_i)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1], got {eta}")));
            }
        }
        check_non_negative("mean_signal_photons", self.mean_signal_photons)?;
        check_non_negative("straylight_signal", self.straylight_signal)?;
        check_non_negative("straylight_idler", self.straylight_idler)?;
        check_non_negative("electronic_variance", self.electronic_variance)?;
        Ok(())
    }

    pub fn tau(&self, h: Hypothesis) -> f64 {
        match h {
            Hypothesis::Tau0 => self.tau0,
            Hypothesis::Tau1 => self.tau1,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.tau0 == self.tau1
    }

    /// Mean signal counts under `h`, straylight included.
    pub fn signal_mean(&self, h: Hypothesis) -> f64 {
        self.eta_s * self.tau(h) * self.mean_signal_photons + self.straylight_signal
    }

    pub fn idler_mean(&self) -> f64 {
        self.eta_i * self.mean_signal_photons + self.straylight_idler
    }
}

/// Minimum error probability reachable by any classical-state transmitter
/// with mean energy `n`: `(1 − √(1 − e^{−N(√τ₁ − √τ₀)²}))/2`.
pub fn classical_bound(n: f64, tau0: f64, tau1: f64) -> f64 {
    let x = n * (tau1.sqrt() - tau0.sqrt()).powi(2);
    // 1 − √(1 − y) = y / (1 + √(1 − y)) avoids cancellation for large x.
    let y = (-x).exp();
    let root = (-(-x).exp_m1()).sqrt();
    0.5 * y / (1.0 + root)
}

/// Detection efficiency on the signal arm is indistinguishable from extra
/// cell loss: returns `(η_s τ₀, η_s τ₁)`. Applies to the classical bound too.
pub fn substitute_efficiency(pair: &ChannelPair) -> (f64, f64) {
    (pair.eta_s * pair.tau0, pair.eta_s * pair.tau1)
}

/// Count threshold separating Poisson means `mu0 < mu1`: `(μ₁ − μ₀)/ln(μ₁/μ₀)`.
pub fn poisson_threshold(mu0: f64, mu1: f64) -> Result<f64> {
    if !(mu0 > 0.0) || !mu1.is_finite() {
        return Err(Error::DegenerateChannels(format!(
            "Poisson threshold needs a positive lower mean, got {mu0}"
        )));
    }
    if mu0 >= mu1 {
        return Err(Error::DegenerateChannels(format!(
            "Poisson threshold needs mu0 < mu1, got {mu0} and {mu1}"
        )));
    }
    Ok((mu1 - mu0) / (mu1 / mu0).ln())
}

fn check_channel_order(tau0: f64, tau1: f64) -> Result<()> {
    check_unit_interval("tau0", tau0)?;
    check_unit_interval("tau1", tau1)?;
    if tau0 == tau1 {
        return Err(Error::DegenerateChannels(format!("tau0 = tau1 = {tau0}")));
    }
    if tau0 > tau1 {
        return Err(Error::InvalidParameter(format!("tau0 ({tau0}) > tau1 ({tau1})")));
    }
    Ok(())
}

/// Coherent-probe threshold `λ(τ₁ − τ₀)/ln(τ₁/τ₀)`; counts at or below it decide `τ₀`.
pub fn coherent_threshold(lambda: f64, tau0: f64, tau1: f64) -> Result<f64> {
    check_channel_order(tau0, tau1)?;
    if tau0 == 0.0 {
        return Err(Error::DegenerateChannels("tau0 = 0 leaves the threshold undefined".into()));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    poisson_threshold(lambda * tau0, lambda * tau1)
}

/// Success probability of the threshold rule between `Poisson(mu0)` and
/// `Poisson(mu1)` via regularized upper incomplete gamma functions.
pub fn poisson_success_probability(mu0: f64, mu1: f64) -> Result<f64> {
    let k = poisson_threshold(mu0, mu1)?.floor();
    // P(Poisson(μ) ≤ k) = Q(k + 1, μ)
    let below0 = gamma_ur(k + 1.0, mu0);
    let below1 = gamma_ur(k + 1.0, mu1);
    Ok(0.5 * (1.0 + below0 - below1))
}

pub fn coherent_success_probability(lambda: f64, tau0: f64, tau1: f64) -> Result<f64> {
    coherent_threshold(lambda, tau0, tau1)?;
    poisson_success_probability(lambda * tau0, lambda * tau1)
}

/// Error probability of the same rule, `½(P(k + 1, μ₀) + Q(k + 1, μ₁))`,
/// kept accurate when it is far below machine epsilon.
pub fn poisson_error_probability(mu0: f64, mu1: f64) -> Result<f64> {
    let k = poisson_threshold(mu0, mu1)?.floor();
    Ok(0.5 * (gamma_lr(k + 1.0, mu0) + gamma_ur(k + 1.0, mu1)))
}

pub fn coherent_error_probability(lambda: f64, tau0: f64, tau1: f64) -> Result<f64> {
    coherent_threshold(lambda, tau0, tau1)?;
    poisson_error_probability(lambda * tau0, lambda * tau1)
}

/// Linear TMSV decision boundary `n_th(n_I) = slope · n_I` for an ideal idler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TmsvThreshold {
    slope: f64,
    /// `τ₁ = 1`: the boundary itself belongs to `τ₁` (except at the origin).
    unit_tau1: bool,
}

impl TmsvThreshold {
    pub fn new(tau0: f64, tau1: f64) -> Result<Self> {
        check_channel_order(tau0, tau1)?;
        if tau0 == 0.0 {
            return Err(Error::InvalidParameter("TMSV threshold needs tau0 > 0".into()));
        }
        if tau1 == 1.0 {
            return Ok(Self {
                slope: 1.0,
                unit_tau1: true,
            });
        }
        let ratio = (tau1 / tau0).ln() / ((1.0 - tau0) / (1.0 - tau1)).ln();
        Ok(Self {
            slope: 1.0 / (ratio + 1.0),
            unit_tau1: false,
        })
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn threshold(&self, n_i: f64) -> f64 {
        self.slope * n_i
    }

    pub fn decide(&self, n_s: f64, n_i: f64) -> Hypothesis {
        let th = self.threshold(n_i);
        let pick_tau0 = if self.unit_tau1 {
            // On the diagonal the likelihood ratio is τ₀^{-n} > 1 for n > 0.
            n_s < th || (n_s == th && n_i == 0.0)
        } else {
            n_s <= th
        };
        if pick_tau0 {
            Hypothesis::Tau0
        } else {
            Hypothesis::Tau1
        }
    }
}

pub fn tmsv_threshold(n_i: f64, tau0: f64, tau1: f64) -> Result<f64> {
    Ok(TmsvThreshold::new(tau0, tau1)?.threshold(n_i))
}

/// Success probability of the linear TMSV rule with an ideal idler, summed
/// over the two threshold regions of the exact single-mode likelihoods.
pub fn tmsv_success_probability(n: f64, tau0: f64, tau1: f64) -> Result<f64> {
    let rule = TmsvThreshold::new(tau0, tau1)?;
    let src = TmsvSource::single_mode(n)?;
    let like0 = tmsv_joint_after_channels(&src, tau0, 1.0)?;
    let like1 = tmsv_joint_after_channels(&src, tau1, 1.0)?;
    let mut ps = 0.0;
    for (n_s, n_i, p0) in like0.iter() {
        ps += match rule.decide(n_s as f64, n_i as f64) {
            Hypothesis::Tau0 => p0,
            Hypothesis::Tau1 => like1.get(n_s, n_i),
        };
    }
    Ok(0.5 * ps)
}

pub fn tmsv_error_probability(n: f64, tau0: f64, tau1: f64) -> Result<f64> {
    Ok(1.0 - tmsv_success_probability(n, tau0, tau1)?)
}

/// Bayes success probability `½ Σ max(P(n|τ₀), P(n|τ₁))` over two tables.
pub fn bayes_success_probability(like0: &JointCountPmf, like1: &JointCountPmf) -> f64 {
    let (s0, i0) = like0.cutoffs();
    let (s1, i1) = like1.cutoffs();
    let mut ps = 0.0;
    for n_s in 0..=s0.max(s1) {
        for n_i in 0..=i0.max(i1) {
            ps += like0.get(n_s, n_i).max(like1.get(n_s, n_i));
        }
    }
    0.5 * ps
}

/// TMSV error probability with lossy detection on both arms. The cell and the
/// signal efficiency act as two separate binomial thinnings.
pub fn tmsv_error_probability_lossy(n: f64, tau0: f64, tau1: f64, eta_s: f64, eta_i: f64) -> Result<f64> {
    check_channel_order(tau0, tau1)?;
    let ideal = tmsv_joint_ideal(&TmsvSource::single_mode(n)?)?;
    let detect_s = LossChannel::new(eta_s)?;
    let detect_i = LossChannel::new(eta_i)?;
    let table = |tau: f64| -> Result<JointCountPmf> {
        Ok(ideal
            .apply_signal_loss(&LossChannel::new(tau)?)
            .apply_signal_loss(&detect_s)
            .apply_idler_loss(&detect_i))
    };
    Ok(1.0 - bayes_success_probability(&table(tau0)?, &table(tau1)?))
}

/// A likelihood over count pairs. Counts are real because read noise makes
/// them fractional; discrete models return `-inf` off their lattice.
pub trait JointCountModel: Send + Sync {
    fn log_likelihood(&self, n_s: f64, n_i: f64) -> f64;
}

fn as_count(x: f64) -> Option<usize> {
    (x >= 0.0 && x.fract() == 0.0 && x < usize::MAX as f64).then_some(x as usize)
}

impl JointCountModel for JointCountPmf {
    fn log_likelihood(&self, n_s: f64, n_i: f64) -> f64 {
        match (as_count(n_s), as_count(n_i)) {
            (Some(s), Some(i)) => self.get(s, i).ln(),
            _ => f64::NEG_INFINITY,
        }
    }
}

/// Generic Bayes rule with equal priors, comparing log-likelihoods.
pub fn bayes_decide(
    n_s: f64,
    n_i: f64,
    model0: &dyn JointCountModel,
    model1: &dyn JointCountModel,
) -> Result<Hypothesis> {
    let l0 = model0.log_likelihood(n_s, n_i);
    let l1 = model1.log_likelihood(n_s, n_i);
    if l0 == f64::NEG_INFINITY && l1 == f64::NEG_INFINITY {
        return Err(Error::ModelEvaluation { n_s, n_i });
    }
    Ok(if l1 > l0 { Hypothesis::Tau1 } else { Hypothesis::Tau0 })
}

fn ln_poisson(k: f64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if k == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k * mean.ln() - mean - ln_gamma(k + 1.0)
}

/// Poisson signal counts; the idler is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonSignalModel {
    pub mean: f64,
}

impl JointCountModel for PoissonSignalModel {
    fn log_likelihood(&self, n_s: f64, _n_i: f64) -> f64 {
        match as_count(n_s) {
            Some(k) => ln_poisson(k as f64, self.mean),
            None => f64::NEG_INFINITY,
        }
    }
}

/// Normal signal counts; the idler is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSignalModel {
    pub mean: f64,
    pub variance: f64,
}

impl JointCountModel for GaussianSignalModel {
    fn log_likelihood(&self, n_s: f64, _n_i: f64) -> f64 {
        let v = self.variance.max(f64::MIN_POSITIVE);
        -0.5 * ((n_s - self.mean).powi(2) / v + (2.0 * std::f64::consts::PI * v).ln())
    }
}

/// Bivariate normal approximation of the (signal, idler) counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianJointModel {
    pub mean_s: f64,
    pub mean_i: f64,
    pub var_s: f64,
    pub var_i: f64,
    pub cov: f64,
}

impl GaussianJointModel {
    pub fn correlation(&self) -> f64 {
        self.cov / (self.var_s * self.var_i).sqrt()
    }

    pub fn signal_marginal(&self) -> GaussianSignalModel {
        GaussianSignalModel {
            mean: self.mean_s,
            variance: self.var_s,
        }
    }

    /// Covariance with a small ridge when it is (numerically) singular, as
    /// for perfectly correlated noiseless arms.
    fn regularized(&self) -> (f64, f64, f64) {
        let det = self.var_s * self.var_i - self.cov * self.cov;
        if det > 1e-12 * self.var_s * self.var_i {
            (self.var_s, self.var_i, self.cov)
        } else {
            let ridge = 1e-9 * (self.var_s + self.var_i) + f64::MIN_POSITIVE;
            (self.var_s + ridge, self.var_i + ridge, self.cov)
        }
    }

    /// Conditional distribution of `n_s` given `n_i`: (mean, variance).
    pub fn signal_given_idler(&self, n_i: f64) -> (f64, f64) {
        let (vs, vi, c) = self.regularized();
        (self.mean_s + c / vi * (n_i - self.mean_i), vs - c * c / vi)
    }

    /// Draws one correlated pair from standard normals `z1`, `z2`.
    pub fn transform(&self, z1: f64, z2: f64) -> (f64, f64) {
        let (vs, vi, c) = self.regularized();
        let ss = vs.sqrt();
        let x = self.mean_s + ss * z1;
        let y = self.mean_i + c / ss * z1 + (vi - c * c / vs).max(0.0).sqrt() * z2;
        (x, y)
    }
}

impl JointCountModel for GaussianJointModel {
    fn log_likelihood(&self, n_s: f64, n_i: f64) -> f64 {
        let (vs, vi, c) = self.regularized();
        let det = vs * vi - c * c;
        let (dx, dy) = (n_s - self.mean_s, n_i - self.mean_i);
        let q = (vi * dx * dx - 2.0 * c * dx * dy + vs * dy * dy) / det;
        -0.5 * (q + det.ln()) - (2.0 * std::f64::consts::PI).ln()
    }
}

/// Bivariate normal likelihood of the counts under hypothesis `h`.
///
/// Pair number `~ Poisson(N)`, thinned independently by `η_s τ` and `η_i`;
/// straylight adds independent Poisson counts and read noise adds variance:
/// `Var_S = η_s τ N + s_S + Δ²`, `Var_I = η_i N + s_I + Δ²`, `Cov = η_s τ η_i N`.
/// `strict` rejects mean photon numbers below [`GAUSSIAN_VALIDITY_FLOOR`].
pub fn gaussian_likelihood_model(pair: &ChannelPair, h: Hypothesis, strict: bool) -> Result<GaussianJointModel> {
    pair.validate()?;
    let n = pair.mean_signal_photons;
    if strict && n <= GAUSSIAN_VALIDITY_FLOOR {
        return Err(Error::InvalidRegime(format!(
            "Gaussian likelihood needs N > {GAUSSIAN_VALIDITY_FLOOR}, got {n}"
        )));
    }
    let a = pair.eta_s * pair.tau(h);
    let b = pair.eta_i;
    Ok(GaussianJointModel {
        mean_s: a * n + pair.straylight_signal,
        mean_i: b * n + pair.straylight_idler,
        var_s: a * n + pair.straylight_signal + pair.electronic_variance,
        var_i: b * n + pair.straylight_idler + pair.electronic_variance,
        cov: a * b * n,
    })
}

/// Exact pair-model counts without read noise. The pair number `~ Poisson(N)`
/// splits into three independent Poisson parts: pairs seen on both arms,
/// signal-only (plus straylight) and idler-only (plus straylight).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonPairModel {
    pub both: f64,
    pub signal_only: f64,
    pub idler_only: f64,
}

impl PoissonPairModel {
    pub fn new(pair: &ChannelPair, h: Hypothesis) -> Result<Self> {
        pair.validate()?;
        if pair.electronic_variance > 0.0 {
            return Err(Error::InvalidRegime(
                "the exact pair model has no read noise; use the Gaussian model".into(),
            ));
        }
        let n = pair.mean_signal_photons;
        let a = pair.eta_s * pair.tau(h);
        let b = pair.eta_i;
        Ok(Self {
            both: a * b * n,
            signal_only: a * (1.0 - b) * n + pair.straylight_signal,
            idler_only: (1.0 - a) * b * n + pair.straylight_idler,
        })
    }

    pub fn means(&self) -> (f64, f64) {
        (self.both + self.signal_only, self.both + self.idler_only)
    }
}

impl JointCountModel for PoissonPairModel {
    fn log_likelihood(&self, n_s: f64, n_i: f64) -> f64 {
        let (Some(s), Some(i)) = (as_count(n_s), as_count(n_i)) else {
            return f64::NEG_INFINITY;
        };
        let terms: Vec<f64> = (0..=s.min(i))
            .map(|z| {
                ln_poisson(z as f64, self.both)
                    + ln_poisson((s - z) as f64, self.signal_only)
                    + ln_poisson((i - z) as f64, self.idler_only)
            })
            .collect();
        log_sum_exp(&terms)
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn poisson_pmf_vec(mean: f64, len: usize) -> Vec<f64> {
    (0..len).map(|k| ln_poisson(k as f64, mean).exp()).collect()
}

/// Exact Bayes error probability `½ Σ min(P₀, P₁)` of two pair models,
/// summed over a window holding all but a negligible fraction of the mass.
pub fn pair_model_error_probability(m0: &PoissonPairModel, m1: &PoissonPairModel) -> f64 {
    let span = |mean: f64| (mean + 12.0 * mean.sqrt() + 20.0).ceil() as usize;
    let z_len = span(m0.both.max(m1.both)) + 1;
    let x_len = span(m0.signal_only.max(m1.signal_only)) + 1;
    let y_len = span(m0.idler_only.max(m1.idler_only)) + 1;
    let tables = |m: &PoissonPairModel| {
        (
            poisson_pmf_vec(m.both, z_len),
            poisson_pmf_vec(m.signal_only, x_len),
            poisson_pmf_vec(m.idler_only, y_len),
        )
    };
    let (z0, x0, y0) = tables(m0);
    let (z1, x1, y1) = tables(m1);
    let likelihood = |z: &[f64], x: &[f64], y: &[f64], s: usize, i: usize| -> f64 {
        let lo = s.saturating_sub(x.len() - 1).max(i.saturating_sub(y.len() - 1));
        let hi = s.min(i).min(z.len() - 1);
        (lo..=hi).map(|k| z[k] * x[s - k] * y[i - k]).sum()
    };
    let mut err = 0.0;
    for s in 0..z_len + x_len {
        for i in 0..z_len + y_len {
            let l0 = likelihood(&z0, &x0, &y0, s, i);
            let l1 = likelihood(&z1, &x1, &y1, s, i);
            err += l0.min(l1);
        }
    }
    0.5 * err
}

/// Probability mass of `N(mean, sd²)` on `{u : a u² + b u + c > 0}`.
fn normal_mass_where_positive(a: f64, b: f64, c: f64, mean: f64, sd: f64) -> f64 {
    let cdf = |u: f64| normal_cdf((u - mean) / sd);
    let scale = b.abs().max(c.abs()).max(1.0);
    if a.abs() <= 1e-12 * scale {
        if b == 0.0 {
            return if c > 0.0 { 1.0 } else { 0.0 };
        }
        let root = -c / b;
        return if b > 0.0 { 1.0 - cdf(root) } else { cdf(root) };
    }
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 {
        return if a > 0.0 { 1.0 } else { 0.0 };
    }
    let sq = disc.sqrt();
    // numerically stable roots
    let q = -0.5 * (b + b.signum() * sq);
    let (r1, r2) = {
        let (u, v) = (q / a, c / q);
        (u.min(v), u.max(v))
    };
    let inside = cdf(r2) - cdf(r1);
    if a > 0.0 {
        1.0 - inside
    } else {
        inside
    }
}

/// Error probability of the Bayes rule between two bivariate normal models.
///
/// For each idler value the log-likelihood difference is quadratic in `n_s`,
/// so the signal integral is a sum of normal CDF terms; the idler integral is
/// done with composite Simpson quadrature.
pub fn gaussian_error_probability(m0: &GaussianJointModel, m1: &GaussianJointModel) -> f64 {
    let sd_i = |m: &GaussianJointModel| m.var_i.sqrt();
    let lo = (m0.mean_i - 10.0 * sd_i(m0)).min(m1.mean_i - 10.0 * sd_i(m1));
    let hi = (m0.mean_i + 10.0 * sd_i(m0)).max(m1.mean_i + 10.0 * sd_i(m1));
    const STEPS: usize = 4000;
    let h = (hi - lo) / STEPS as f64;

    let integrand = |y: f64| -> f64 {
        let (mu0, v0) = m0.signal_given_idler(y);
        let (mu1, v1) = m1.signal_given_idler(y);
        let (sd0, sd1) = (v0.sqrt(), v1.sqrt());
        let centre = 0.5 * (mu0 + mu1);
        let scale = sd0.min(sd1);
        let diff = |u: f64| {
            let x = centre + scale * u;
            m1.log_likelihood(x, y) - m0.log_likelihood(x, y)
        };
        // exact quadratic through three points in the scaled coordinate
        let (dm, d0, dp) = (diff(-1.0), diff(0.0), diff(1.0));
        let a = 0.5 * (dp + dm) - d0;
        let b = 0.5 * (dp - dm);
        let c = d0;
        let wrong_given_0 = normal_mass_where_positive(a, b, c, (mu0 - centre) / scale, sd0 / scale);
        let wrong_given_1 = 1.0 - normal_mass_where_positive(a, b, c, (mu1 - centre) / scale, sd1 / scale);
        let f0 = gaussian_pdf(y, m0.mean_i, m0.var_i);
        let f1 = gaussian_pdf(y, m1.mean_i, m1.var_i);
        f0 * wrong_given_0 + f1 * wrong_given_1
    };

    let mut sum = integrand(lo) + integrand(hi);
    for k in 1..STEPS {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * integrand(lo + k as f64 * h);
    }
    0.5 * sum * h / 3.0
}

fn gaussian_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Error probability of a signal-count threshold (`n_s ≤ t` decides `τ₀`)
/// when the signal counts are normal under each hypothesis.
pub fn threshold_error_probability_gaussian(threshold: f64, h0: GaussianSignalModel, h1: GaussianSignalModel) -> f64 {
    let above0 = 1.0 - normal_cdf((threshold - h0.mean) / h0.variance.sqrt());
    let below1 = normal_cdf((threshold - h1.mean) / h1.variance.sqrt());
    0.5 * (above0 + below1)
}

/// Binary Shannon entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

/// Entropies and information gains of a quantum strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub h_quantum: f64,
    pub h_classical_pc: f64,
    pub h_bound: f64,
    /// Bits per cell over the optimal classical bound.
    pub gain_a: f64,
    /// Bits per cell over the classical photon-counting receiver.
    pub gain_emp: f64,
}

pub fn gains(p_err_quantum: f64, p_err_classical_pc: f64, c_bound: f64) -> Gains {
    let h_quantum = binary_entropy(p_err_quantum);
    let h_classical_pc = binary_entropy(p_err_classical_pc);
    let h_bound = binary_entropy(c_bound);
    Gains {
        h_quantum,
        h_classical_pc,
        h_bound,
        gain_a: h_bound - h_quantum,
        gain_emp: h_classical_pc - h_quantum,
    }
}

/// Error probabilities, entropies and gains for one `(τ₀, N)` setting, with
/// 1σ error bars from the subset procedure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub tau0: f64,
    pub tau1: f64,
    pub mean_signal_photons: f64,
    pub p_err_quantum: f64,
    pub sigma_p_err_quantum: f64,
    pub p_err_classical_pc: f64,
    pub sigma_p_err_classical_pc: f64,
    pub c_bound: f64,
    pub h_quantum: f64,
    pub h_classical_pc: f64,
    pub h_bound: f64,
    pub gain_a: f64,
    pub sigma_gain_a: f64,
    pub gain_emp: f64,
    pub sigma_gain_emp: f64,
}

/// A per-frame decision procedure.
#[derive(Debug, Clone, PartialEq)]
pub enum DecisionRule {
    /// Signal counts at or below the threshold decide `τ₀`.
    CoherentThreshold { threshold: f64 },
    TmsvThreshold(TmsvThreshold),
    LikelihoodTable { h0: JointCountPmf, h1: JointCountPmf },
    GaussianLikelihood { h0: GaussianJointModel, h1: GaussianJointModel },
    SignalGaussian { h0: GaussianSignalModel, h1: GaussianSignalModel },
    ExactPair { h0: PoissonPairModel, h1: PoissonPairModel },
}

impl DecisionRule {
    pub fn decide(&self, n_s: f64, n_i: f64) -> Result<Hypothesis> {
        match self {
            DecisionRule::CoherentThreshold { threshold } => Ok(if n_s <= *threshold {
                Hypothesis::Tau0
            } else {
                Hypothesis::Tau1
            }),
            DecisionRule::TmsvThreshold(rule) => Ok(rule.decide(n_s, n_i)),
            DecisionRule::LikelihoodTable { h0, h1 } => bayes_decide(n_s, n_i, h0, h1),
            DecisionRule::GaussianLikelihood { h0, h1 } => bayes_decide(n_s, n_i, h0, h1),
            DecisionRule::SignalGaussian { h0, h1 } => bayes_decide(n_s, n_i, h0, h1),
            DecisionRule::ExactPair { h0, h1 } => bayes_decide(n_s, n_i, h0, h1),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            DecisionRule::CoherentThreshold { .. } => "coherent-threshold",
            DecisionRule::TmsvThreshold(_) => "tmsv-threshold",
            DecisionRule::LikelihoodTable { .. } => "likelihood-table",
            DecisionRule::GaussianLikelihood { .. } => "gaussian-likelihood",
            DecisionRule::SignalGaussian { .. } => "signal-gaussian",
            DecisionRule::ExactPair { .. } => "exact-pair",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photon_stats::PhotonDistribution;

    /// Poisson pmf by direct recursion, independent of the crate's constructors.
    fn poisson_pmf(mean: f64, len: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(len);
        let mut p = (-mean).exp();
        for k in 0..len {
            out.push(p);
            p *= mean / (k as f64 + 1.0);
        }
        out
    }

    #[test]
    fn classical_bound_examples() {
        assert_eq!(classical_bound(100.0, 0.7, 0.7), 0.5);
        assert_eq!(classical_bound(0.0, 0.2, 1.0), 0.5);
        // direct evaluation of the closed form
        let x: f64 = 100.0 * (1.0 - 0.8f64.sqrt()).powi(2);
        let direct = (1.0 - (1.0 - (-x).exp()).sqrt()) / 2.0;
        let c = classical_bound(100.0, 0.8, 1.0);
        assert!((c - direct).abs() < 1e-15);
        assert!((c - 0.0901).abs() < 5e-5, "{c}");
        // stays positive far in the tail
        assert!(classical_bound(1e9, 0.5, 1.0) >= 0.0);
        assert!(classical_bound(2000.0, 0.5, 1.0) > 0.0);
    }

    #[test]
    fn classical_bound_is_monotone() {
        let mut prev = 0.5;
        for n in 1..2000 {
            let c = classical_bound(n as f64, 0.8, 1.0);
            assert!(c <= prev && (0.0..=0.5).contains(&c));
            prev = c;
        }
        let mut prev = 0.5;
        for k in 0..=100 {
            let c = classical_bound(50.0, 1.0 - k as f64 / 100.0, 1.0);
            assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn substitution_examples() {
        let p = ChannelPair::lossless(0.8, 1.0, 10.0).unwrap();
        assert_eq!(substitute_efficiency(&p), (0.8, 1.0));
        let p = ChannelPair::new(0.99, 1.0, 0.78, 0.77, 1e5).unwrap();
        let (a, b) = substitute_efficiency(&p);
        assert!((a - 0.7722).abs() < 1e-15 && b == 0.78);
    }

    #[test]
    fn lossy_bound_never_beats_ideal_bound() {
        for n in [1.0, 10.0, 100.0, 1e3, 1e5] {
            for t0 in [0.1, 0.5, 0.9, 0.99] {
                for t1 in [0.95, 1.0] {
                    if t0 >= t1 {
                        continue;
                    }
                    for eta in [0.3, 0.78, 0.99] {
                        let c_ideal = classical_bound(n, t0, t1);
                        let c_lossy = classical_bound(n, eta * t0, eta * t1);
                        assert!(c_lossy >= c_ideal - 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn coherent_threshold_examples() {
        let th = coherent_threshold(100.0, 0.8, 1.0).unwrap();
        assert!((th - 20.0 / 1.25f64.ln()).abs() < 1e-12);
        assert!((th - 89.63).abs() < 5e-3);
        // τ₀ → τ₁ converges to λ τ₁
        let th = coherent_threshold(100.0, 1.0 - 1e-9, 1.0).unwrap();
        assert!((th - 100.0).abs() < 1e-5);
        let th = coherent_threshold(1e-9, 0.5, 1.0).unwrap();
        assert!(th > 0.0 && th < 1e-8);
        assert!(matches!(coherent_threshold(1.0, 0.5, 0.5), Err(Error::DegenerateChannels(_))));
        assert!(matches!(coherent_threshold(1.0, 0.0, 0.5), Err(Error::DegenerateChannels(_))));
    }

    #[test]
    fn coherent_success_matches_brute_force() {
        for (lambda, t0, t1) in [(100.0, 0.8, 1.0), (7.0, 0.3, 0.9), (200.0, 0.95, 0.99), (0.5, 0.2, 1.0)] {
            let th = coherent_threshold(lambda, t0, t1).unwrap();
            let len = 2000;
            let (p0, p1) = (poisson_pmf(lambda * t0, len), poisson_pmf(lambda * t1, len));
            let brute: f64 = 0.5
                * (0..len)
                    .map(|n| if n as f64 <= th { p0[n] } else { p1[n] })
                    .sum::<f64>();
            let closed = coherent_success_probability(lambda, t0, t1).unwrap();
            assert!((closed - brute).abs() < 1e-9, "{lambda} {t0} {t1}");
            let err = coherent_error_probability(lambda, t0, t1).unwrap();
            assert!((err - (1.0 - closed)).abs() < 1e-12);
            assert!((0.0..=0.5).contains(&err));
        }
        let err = coherent_error_probability(50.0, 1.0 - 1e-12, 1.0).unwrap();
        assert!((err - 0.5).abs() < 1e-6);
    }

    #[test]
    fn photon_counting_never_beats_classical_bound() {
        for lambda in [10.0, 30.0, 100.0, 300.0, 1e3, 3e3, 1e4] {
            for t0 in [0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99] {
                let pc = coherent_error_probability(lambda, t0, 1.0).unwrap();
                assert!(pc >= classical_bound(lambda, t0, 1.0), "{lambda} {t0}");
            }
        }
    }

    #[test]
    fn tmsv_threshold_examples() {
        let r = TmsvThreshold::new(0.9, 0.99).unwrap();
        let want = 1.0 / (1.1f64.ln() / 10f64.ln() + 1.0);
        assert!((r.slope() - want).abs() < 1e-15);
        assert!((r.slope() - 0.9603).abs() < 5e-5);
        assert_eq!(TmsvThreshold::new(0.9, 1.0).unwrap().slope(), 1.0);
        assert!((TmsvThreshold::new(0.9, 1.0 - 1e-12).unwrap().slope() - 1.0) < 0.02);
        assert_eq!(tmsv_threshold(0.0, 0.5, 0.9).unwrap(), 0.0);
        assert_eq!(r.decide(0.0, 0.0), Hypothesis::Tau0);
        assert_eq!(r.decide(1.0, 0.0), Hypothesis::Tau1);
        assert!(matches!(TmsvThreshold::new(0.5, 0.5), Err(Error::DegenerateChannels(_))));
    }

    /// Exhaustive Bayes success `½ Σ max` written independently of the library.
    fn tmsv_brute_success(n: f64, t0: f64, t1: f64) -> f64 {
        let c = PhotonDistribution::thermal(n).unwrap();
        let binom = |k: usize, m: usize, t: f64| -> f64 {
            if k > m {
                return 0.0;
            }
            let lc = ln_gamma(m as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((m - k) as f64 + 1.0);
            let lt = if k == 0 { 0.0 } else { k as f64 * t.ln() };
            let lr = if m == k { 0.0 } else { (m - k) as f64 * (1.0 - t).ln() };
            (lc + lt + lr).exp()
        };
        let mut s = 0.0;
        for n_i in 0..c.pmf().len() {
            for n_s in 0..=n_i {
                let l0 = c.get(n_i) * binom(n_s, n_i, t0);
                let l1 = c.get(n_i) * binom(n_s, n_i, t1);
                s += l0.max(l1);
            }
        }
        0.5 * s
    }

    #[test]
    fn tmsv_success_matches_exhaustive_bayes() {
        for (n, t0, t1) in [(5.0, 0.5, 0.9), (2.0, 0.3, 0.6), (10.0, 0.9, 0.99), (5.0, 0.5, 1.0)] {
            let closed = tmsv_success_probability(n, t0, t1).unwrap();
            let brute = tmsv_brute_success(n, t0, t1);
            assert!((closed - brute).abs() < 1e-9, "{n} {t0} {t1}: {closed} vs {brute}");
        }
        let err = tmsv_error_probability(5.0, 0.9 - 1e-9, 0.9).unwrap();
        assert!((err - 0.5).abs() < 1e-6);
    }

    #[test]
    fn tmsv_beats_classical_bound_somewhere() {
        let mut found = false;
        for n in [1.0, 2.0, 5.0, 10.0] {
            for t0 in [0.5, 0.7, 0.9, 0.95] {
                let q = tmsv_error_probability(n, t0, 1.0).unwrap();
                if q < classical_bound(n, t0, 1.0) {
                    found = true;
                }
            }
        }
        assert!(found);
    }

    #[test]
    fn thresholds_agree_with_bayes_rule() {
        // coherent: Eq. threshold vs generic likelihood comparison
        for lambda in [1.0, 5.0, 20.0] {
            for (t0, t1) in [(0.2, 0.7), (0.5, 1.0), (0.8, 0.95)] {
                let th = coherent_threshold(lambda, t0, t1).unwrap();
                let (m0, m1) = (
                    PoissonSignalModel { mean: lambda * t0 },
                    PoissonSignalModel { mean: lambda * t1 },
                );
                for n in 0..80 {
                    let n = n as f64;
                    if n == th {
                        continue;
                    }
                    let want = if n < th { Hypothesis::Tau0 } else { Hypothesis::Tau1 };
                    assert_eq!(bayes_decide(n, 0.0, &m0, &m1).unwrap(), want);
                }
            }
        }
        // TMSV: linear threshold vs exact tables
        for n in [1.0, 5.0, 20.0] {
            for (t0, t1) in [(0.2, 0.7), (0.5, 0.9), (0.8, 1.0)] {
                let src = TmsvSource::single_mode(n).unwrap();
                let l0 = tmsv_joint_after_channels(&src, t0, 1.0).unwrap();
                let l1 = tmsv_joint_after_channels(&src, t1, 1.0).unwrap();
                let rule = TmsvThreshold::new(t0, t1).unwrap();
                for n_i in 0..60usize {
                    for n_s in 0..=n_i {
                        let (s, i) = (n_s as f64, n_i as f64);
                        if l0.get(n_s, n_i) == 0.0 && l1.get(n_s, n_i) == 0.0 {
                            continue;
                        }
                        if s == rule.threshold(i) && t1 < 1.0 {
                            continue;
                        }
                        assert_eq!(
                            rule.decide(s, i),
                            bayes_decide(s, i, &l0, &l1).unwrap(),
                            "N={n} τ=({t0},{t1}) n=({n_s},{n_i})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn bayes_decide_tie_and_underflow() {
        let m = PoissonSignalModel { mean: 3.0 };
        assert_eq!(bayes_decide(2.0, 0.0, &m, &m).unwrap(), Hypothesis::Tau0);
        assert!(matches!(
            bayes_decide(2.5, 0.0, &m, &m),
            Err(Error::ModelEvaluation { .. })
        ));
        // ideal TMSV with τ₁ = 1: off-diagonal counts are impossible under τ₁
        let src = TmsvSource::single_mode(2.0).unwrap();
        let l0 = tmsv_joint_after_channels(&src, 0.6, 1.0).unwrap();
        let l1 = tmsv_joint_after_channels(&src, 1.0, 1.0).unwrap();
        assert_eq!(bayes_decide(3.0, 3.0, &l0, &l1).unwrap(), Hypothesis::Tau1);
        assert_eq!(bayes_decide(2.0, 3.0, &l0, &l1).unwrap(), Hypothesis::Tau0);
        assert_eq!(bayes_decide(0.0, 0.0, &l0, &l1).unwrap(), Hypothesis::Tau0);
    }

    #[test]
    fn gaussian_model_examples() {
        let p = ChannelPair::lossless(0.5, 1.0, 1e5).unwrap();
        let m = gaussian_likelihood_model(&p, Hypothesis::Tau1, true).unwrap();
        assert_eq!((m.mean_s, m.mean_i, m.var_s, m.var_i, m.cov), (1e5, 1e5, 1e5, 1e5, 1e5));
        let p = ChannelPair::new(0.99, 1.0, 0.78, 0.77, 1e5).unwrap();
        let m = gaussian_likelihood_model(&p, Hypothesis::Tau0, true).unwrap();
        assert!((m.correlation() - (0.78f64 * 0.99 * 0.77).sqrt()).abs() < 1e-12);
        let s = m.signal_marginal();
        assert!((s.mean - s.variance).abs() < 1e-9);
        let small = ChannelPair::lossless(0.5, 1.0, 100.0).unwrap();
        assert!(matches!(
            gaussian_likelihood_model(&small, Hypothesis::Tau0, true),
            Err(Error::InvalidRegime(_))
        ));
        assert!(gaussian_likelihood_model(&small, Hypothesis::Tau0, false).is_ok());
        // singular covariance still evaluates
        let p = ChannelPair::lossless(0.5, 1.0, 1e4).unwrap();
        let m = gaussian_likelihood_model(&p, Hypothesis::Tau1, false).unwrap();
        assert!(m.log_likelihood(1e4, 1e4).is_finite());
        assert!(m.log_likelihood(1e4, 1e4) > m.log_likelihood(1e4 + 10.0, 1e4));
    }

    #[test]
    fn pair_model_sums_to_one_and_matches_gaussian_moments() {
        let p = ChannelPair::new(0.9, 1.0, 0.8, 0.7, 6.0).unwrap();
        let m = PoissonPairModel::new(&p, Hypothesis::Tau0).unwrap();
        let mut mass = 0.0;
        let (mut ms, mut mi, mut msi) = (0.0, 0.0, 0.0);
        for s in 0..60 {
            for i in 0..60 {
                let w = m.log_likelihood(s as f64, i as f64).exp();
                mass += w;
                ms += w * s as f64;
                mi += w * i as f64;
                msi += w * (s * i) as f64;
            }
        }
        let g = gaussian_likelihood_model(&p, Hypothesis::Tau0, false).unwrap();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!((ms - g.mean_s).abs() < 1e-10);
        assert!((mi - g.mean_i).abs() < 1e-10);
        assert!((msi - ms * mi - g.cov).abs() < 1e-9);
        assert!(PoissonPairModel::new(&p.with_electronic_variance(1.0).unwrap(), Hypothesis::Tau0).is_err());
    }

    #[test]
    fn pair_model_error_matches_enumeration() {
        let p = ChannelPair::new(0.5, 1.0, 0.9, 0.8, 8.0).unwrap();
        let (m0, m1) = (
            PoissonPairModel::new(&p, Hypothesis::Tau0).unwrap(),
            PoissonPairModel::new(&p, Hypothesis::Tau1).unwrap(),
        );
        let mut brute = 0.0;
        for s in 0..80 {
            for i in 0..80 {
                let (a, b) = (
                    m0.log_likelihood(s as f64, i as f64).exp(),
                    m1.log_likelihood(s as f64, i as f64).exp(),
                );
                brute += 0.5 * a.min(b);
            }
        }
        assert!((pair_model_error_probability(&m0, &m1) - brute).abs() < 1e-12);
    }

    #[test]
    fn gaussian_error_probability_reduces_to_one_dimension() {
        // Independent idler carrying no information: the problem is a 1-D
        // equal-variance test with error Φ(−Δ/2σ).
        let m0 = GaussianJointModel { mean_s: 0.0, mean_i: 5.0, var_s: 4.0, var_i: 9.0, cov: 0.0 };
        let m1 = GaussianJointModel { mean_s: 3.0, ..m0 };
        let want = normal_cdf(-3.0 / 4.0);
        assert!((gaussian_error_probability(&m0, &m1) - want).abs() < 1e-9);
        // identical models: every count ties to τ₀, half the frames are wrong
        assert!((gaussian_error_probability(&m0, &m0) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn gaussian_error_probability_matches_grid_integration() {
        let p = ChannelPair::new(0.993, 1.0, 0.78, 0.77, 1.15e5)
            .unwrap()
            .with_electronic_variance(1e4)
            .unwrap();
        let m0 = gaussian_likelihood_model(&p, Hypothesis::Tau0, true).unwrap();
        let m1 = gaussian_likelihood_model(&p, Hypothesis::Tau1, true).unwrap();
        // brute force: ½ ∫∫ min(f0, f1) on a fine rectangular grid
        let (sx, sy) = (m1.var_s.sqrt(), m1.var_i.sqrt());
        let (x0, x1) = (m0.mean_s - 9.0 * sx, m1.mean_s + 9.0 * sx);
        let (y0, y1) = (m1.mean_i - 9.0 * sy, m1.mean_i + 9.0 * sy);
        let steps = 1500;
        let (hx, hy) = ((x1 - x0) / steps as f64, (y1 - y0) / steps as f64);
        let mut acc = 0.0;
        for a in 0..steps {
            for b in 0..steps {
                let (x, y) = (x0 + (a as f64 + 0.5) * hx, y0 + (b as f64 + 0.5) * hy);
                acc += m0.log_likelihood(x, y).exp().min(m1.log_likelihood(x, y).exp());
            }
        }
        let brute = 0.5 * acc * hx * hy;
        let fast = gaussian_error_probability(&m0, &m1);
        assert!((fast - brute).abs() < 1e-4, "{fast} vs {brute}");
    }

    #[test]
    fn entropy_and_gain_examples() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert_eq!(binary_entropy(0.5), 1.0);
        let p: f64 = 0.0901;
        let direct = -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
        assert!((binary_entropy(p) - direct).abs() < 1e-15);
        assert!((binary_entropy(p) - 0.4365).abs() < 5e-4);

        for x in [0.0, 0.1, 0.25, 0.5] {
            let g = gains(x, x, x);
            assert_eq!((g.gain_a, g.gain_emp), (0.0, 0.0));
        }
        assert_eq!(gains(0.0, 0.5, 0.5).gain_a, 1.0);
        let g = gains(0.05, 0.2, 0.1);
        assert!(g.gain_emp >= g.gain_a);
    }

    #[test]
    fn efficiency_substitution_exact_equivalence() {
        for (n, t0, t1, eta) in [(3.0, 0.5, 1.0, 0.78), (5.0, 0.6, 0.9, 0.5), (8.0, 0.9, 1.0, 0.9)] {
            let lossy = tmsv_error_probability_lossy(n, t0, t1, eta, 1.0).unwrap();
            let subst = tmsv_error_probability(n, eta * t0, eta * t1).unwrap();
            assert!((lossy - subst).abs() < 1e-9, "{lossy} vs {subst}");
        }
    }

    #[test]
    fn channel_pair_validation() {
        assert!(ChannelPair::lossless(0.9, 0.8, 1.0).is_err());
        assert!(ChannelPair::lossless(0.9, 0.9, 1.0).is_ok());
        assert!(ChannelPair::new(0.9, 1.0, 0.0, 1.0, 1.0).is_err());
        assert!(ChannelPair::lossless(0.9, 1.0, -1.0).is_err());
        assert!(ChannelPair::lossless(0.9, 1.0, 1.0).unwrap().with_straylight(-2.0).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn channels() -> impl Strategy<Value = (f64, f64)> {
            (0.01f64..1.0, 0.01f64..1.0).prop_filter_map("distinct", |(a, b)| {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                (hi - lo > 1e-3).then_some((lo, hi))
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn coherent_counting_never_beats_bound(n in 1e-3f64..2e3, (t0, t1) in channels()) {
                let pc = coherent_error_probability(n, t0, t1).unwrap();
                let c = classical_bound(n, t0, t1);
                prop_assert!(pc >= c - 1e-12);
                prop_assert!((0.0..=0.5).contains(&pc));
            }

            #[test]
            fn error_and_success_are_complementary(n in 1e-2f64..200.0, (t0, t1) in channels()) {
                let err = coherent_error_probability(n, t0, t1).unwrap();
                let ok = coherent_success_probability(n, t0, t1).unwrap();
                prop_assert!((err + ok - 1.0).abs() < 1e-12);
            }
        }
    }
}
