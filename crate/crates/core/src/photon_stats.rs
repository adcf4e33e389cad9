//! Photon-number statistics: univariate distributions, binomial loss channels
//! and the joint (signal, idler) counts of a two-mode squeezed vacuum source.
//!
//! Every infinite sum is truncated at a support cutoff chosen so that the
//! neglected tail carries less than [`TAIL_MASS`] probability.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_non_negative, check_unit_interval, Error, Result};

/// Upper bound on the probability mass dropped by truncating a support.
pub const TAIL_MASS: f64 = 1e-12;

/// Allowed deviation of a pmf's total mass from one.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Binomial terms with more trials than this are evaluated in log space.
const LOG_SPACE_TRIALS: u64 = 100;

/// A photon-number pmf on `0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    pmf: Vec<f64>,
}

impl PhotonDistribution {
    /// Validates non-negativity and normalization (within [`NORMALIZATION_TOL`]).
    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::InvalidParameter("empty pmf".into()));
        }
        if let Some(bad) = pmf.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pmf entries must be finite and non-negative, found {bad}"
            )));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidParameter(format!(
                "pmf sums to {total}, not 1 within {NORMALIZATION_TOL}"
            )));
        }
        Ok(Self { pmf })
    }

    /// Rescales arbitrary non-negative weights to unit mass.
    pub fn renormalized(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cannot renormalize weights with total {total}"
            )));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    /// Fock state `|n⟩`: all mass at `n`.
    pub fn fock(n: usize) -> Self {
        let mut pmf = vec![0.0; n + 1];
        pmf[n] = 1.0;
        Self { pmf }
    }

    /// Poisson distribution (coherent state) of the given mean.
    pub fn poisson(mean: f64) -> Result<Self> {
        check_non_negative("Poisson mean", mean)?;
        if mean == 0.0 {
            return Ok(Self::fock(0));
        }
        Ok(Self {
            pmf: truncated_by_ratio(-mean, |n| mean / (n as f64 + 1.0)),
        })
    }

    /// Single-mode thermal (Bose–Einstein) distribution `Nⁿ/(1+N)ⁿ⁺¹`.
    pub fn thermal(mean: f64) -> Result<Self> {
        Self::multithermal(1, mean)
    }

    /// Total count of `modes` independent thermal modes with `mean_per_mode`
    /// photons each (negative binomial).
    pub fn multithermal(modes: u64, mean_per_mode: f64) -> Result<Self> {
        check_non_negative("mean photons per mode", mean_per_mode)?;
        if modes == 0 {
            return Err(Error::InvalidParameter("mode count must be >= 1".into()));
        }
        if mean_per_mode == 0.0 {
            return Ok(Self::fock(0));
        }
        let m = modes as f64;
        let p = mean_per_mode / (1.0 + mean_per_mode);
        let log_p0 = -m * mean_per_mode.ln_1p();
        Ok(Self {
            pmf: truncated_by_ratio(log_p0, |n| (n as f64 + m) / (n as f64 + 1.0) * p),
        })
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn n_max(&self) -> usize {
        self.pmf.len() - 1
    }

    /// Probability of `n` photons; zero beyond the support.
    pub fn get(&self, n: usize) -> f64 {
        self.pmf.get(n).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.pmf.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.pmf
            .iter()
            .enumerate()
            .map(|(n, p)| (n as f64 - mu).powi(2) * p)
            .sum()
    }

    /// Total-variation distance `½ Σ |p − q|`.
    pub fn total_variation(&self, other: &PhotonDistribution) -> f64 {
        let len = self.pmf.len().max(other.pmf.len());
        0.5 * (0..len)
            .map(|n| (self.get(n) - other.get(n)).abs())
            .sum::<f64>()
    }
}

/// Builds `p(0..)` from `log p(0)` and the ratio `p(n+1)/p(n)`, which must be
/// non-increasing in `n`. Stops once the geometric tail bound drops below
/// a tenth of [`TAIL_MASS`].
fn truncated_by_ratio(log_p0: f64, ratio: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut pmf = Vec::new();
    let mut log_p = log_p0;
    let mut n = 0usize;
    loop {
        let p = log_p.exp();
        pmf.push(p);
        let r = ratio(n);
        if r < 1.0 && p * r / (1.0 - r) < 0.1 * TAIL_MASS {
            break;
        }
        log_p += r.ln();
        n += 1;
    }
    pmf
}

/// `B(n | m, τ) = C(m, n) τⁿ (1 − τ)^{m−n}`: probability that `n` of `m`
/// photons survive a channel of transmittance `τ`.
pub fn binomial_kernel(n: u64, m: u64, tau: f64) -> f64 {
    if n > m {
        return 0.0;
    }
    if tau <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if tau >= 1.0 {
        return if n == m { 1.0 } else { 0.0 };
    }
    let k = m - n;
    if m <= LOG_SPACE_TRIALS {
        choose(m, n) * tau.powi(n as i32) * (1.0 - tau).powi(k as i32)
    } else {
        (ln_choose(m, n) + n as f64 * tau.ln() + k as f64 * (-tau).ln_1p()).exp()
    }
}

fn choose(m: u64, n: u64) -> f64 {
    let k = n.min(m - n);
    (1..=k).fold(1.0, |acc, i| acc * (m - k + i) as f64 / i as f64)
}

fn ln_choose(m: u64, n: u64) -> f64 {
    ln_gamma(m as f64 + 1.0) - ln_gamma(n as f64 + 1.0) - ln_gamma((m - n) as f64 + 1.0)
}

/// `[B(0|m,τ), …, B(m|m,τ)]`.
fn binomial_row(m: u64, tau: f64) -> Vec<f64> {
    (0..=m).map(|n| binomial_kernel(n, m, tau)).collect()
}

/// A pure-loss (attenuation) channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossChannel {
    tau: f64,
}

impl LossChannel {
    pub fn new(tau: f64) -> Result<Self> {
        check_unit_interval("transmittance", tau)?;
        Ok(Self { tau })
    }

    pub fn transmittance(&self) -> f64 {
        self.tau
    }

    /// Two channels in series act as one channel with the product transmittance.
    pub fn then(&self, other: &LossChannel) -> LossChannel {
        LossChannel {
            tau: self.tau * other.tau,
        }
    }
}

/// Compounds a photon-number pmf with the binomial kernel of `channel`:
/// `P(n) = Σ_m P₀(m) B(n | m, τ)`.
pub fn apply_loss(dist: &PhotonDistribution, channel: &LossChannel) -> PhotonDistribution {
    let tau = channel.transmittance();
    let mut out = vec![0.0; dist.pmf.len()];
    for (m, &p) in dist.pmf.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (n, slot) in out.iter_mut().enumerate().take(m + 1) {
            *slot += p * binomial_kernel(n as u64, m as u64, tau);
        }
    }
    PhotonDistribution { pmf: out }
}

pub fn compose_losses(tau: f64, eta: f64) -> Result<LossChannel> {
    Ok(LossChannel::new(tau)?.then(&LossChannel::new(eta)?))
}

/// A (multimode) two-mode squeezed vacuum source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TmsvSource {
    mean_photons: f64,
    modes: u64,
}

impl TmsvSource {
    /// `mean_photons` is the mean per-mode photon number of each arm.
    pub fn new(mean_photons: f64, modes: u64) -> Result<Self> {
        check_non_negative("TMSV mean photon number", mean_photons)?;
        if modes == 0 {
            return Err(Error::InvalidParameter("TMSV mode count must be >= 1".into()));
        }
        Ok(Self {
            mean_photons,
            modes,
        })
    }

    pub fn single_mode(mean_photons: f64) -> Result<Self> {
        Self::new(mean_photons, 1)
    }

    pub fn mean_photons(&self) -> f64 {
        self.mean_photons
    }

    pub fn modes(&self) -> u64 {
        self.modes
    }

    /// Photon-number distribution of either arm on its own.
    pub fn arm_distribution(&self) -> Result<PhotonDistribution> {
        PhotonDistribution::multithermal(self.modes, self.mean_photons)
    }

    fn require_single_mode(&self) -> Result<()> {
        if self.modes != 1 {
            return Err(Error::InvalidParameter(format!(
                "exact joint statistics are implemented for a single mode, got {} modes",
                self.modes
            )));
        }
        Ok(())
    }
}

/// A joint pmf over `(n_s, n_i)` stored row-major with `n_s` as the row.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCountPmf {
    signal_len: usize,
    idler_len: usize,
    data: Vec<f64>,
}

impl JointCountPmf {
    pub fn new(signal_len: usize, idler_len: usize, data: Vec<f64>) -> Result<Self> {
        if signal_len == 0 || idler_len == 0 || data.len() != signal_len * idler_len {
            return Err(Error::InvalidParameter(format!(
                "joint pmf of shape {signal_len}x{idler_len} cannot hold {} entries",
                data.len()
            )));
        }
        if data.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidParameter("joint pmf has negative entries".into()));
        }
        let total: f64 = data.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidParameter(format!(
                "joint pmf sums to {total}"
            )));
        }
        Ok(Self {
            signal_len,
            idler_len,
            data,
        })
    }

    /// Largest representable `n_s` and `n_i`.
    pub fn cutoffs(&self) -> (usize, usize) {
        (self.signal_len - 1, self.idler_len - 1)
    }

    pub fn get(&self, n_s: usize, n_i: usize) -> f64 {
        if n_s >= self.signal_len || n_i >= self.idler_len {
            return 0.0;
        }
        self.data[n_s * self.idler_len + n_i]
    }

    pub fn total_mass(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn signal_marginal(&self) -> Vec<f64> {
        self.data
            .chunks(self.idler_len)
            .map(|row| row.iter().sum())
            .collect()
    }

    pub fn idler_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.idler_len];
        for row in self.data.chunks(self.idler_len) {
            for (o, p) in out.iter_mut().zip(row) {
                *o += p;
            }
        }
        out
    }

    /// Iterates `(n_s, n_i, p)` over the stored support.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.data
            .iter()
            .enumerate()
            .map(move |(k, &p)| (k / self.idler_len, k % self.idler_len, p))
    }

    /// Sends the signal arm through `channel`, leaving the idler untouched.
    pub fn apply_signal_loss(&self, channel: &LossChannel) -> JointCountPmf {
        let tau = channel.transmittance();
        let mut out = vec![0.0; self.data.len()];
        for m in 0..self.signal_len {
            let row = binomial_row(m as u64, tau);
            for (n_s, &b) in row.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                for n_i in 0..self.idler_len {
                    out[n_s * self.idler_len + n_i] += b * self.data[m * self.idler_len + n_i];
                }
            }
        }
        JointCountPmf {
            data: out,
            ..*self
        }
    }

    /// Sends the idler arm through `channel`, leaving the signal untouched.
    pub fn apply_idler_loss(&self, channel: &LossChannel) -> JointCountPmf {
        let tau = channel.transmittance();
        let rows: Vec<Vec<f64>> = (0..self.idler_len)
            .map(|m| binomial_row(m as u64, tau))
            .collect();
        let mut out = vec![0.0; self.data.len()];
        for n_s in 0..self.signal_len {
            let base = n_s * self.idler_len;
            for (m, row) in rows.iter().enumerate() {
                let p = self.data[base + m];
                if p == 0.0 {
                    continue;
                }
                for (n_i, &b) in row.iter().enumerate() {
                    out[base + n_i] += p * b;
                }
            }
        }
        JointCountPmf {
            data: out,
            ..*self
        }
    }
}

/// Ideal TMSV counts: mass `Nⁿ/(1+N)ⁿ⁺¹` on the diagonal `n_s = n_i = n`.
pub fn tmsv_joint_ideal(src: &TmsvSource) -> Result<JointCountPmf> {
    src.require_single_mode()?;
    let weights = src.arm_distribution()?;
    let len = weights.pmf.len();
    let mut data = vec![0.0; len * len];
    for (n, &p) in weights.pmf.iter().enumerate() {
        data[n * len + n] = p;
    }
    Ok(JointCountPmf {
        signal_len: len,
        idler_len: len,
        data,
    })
}

/// TMSV counts after independent losses on both arms:
/// `P(n_s, n_i) = Σ_n |c_N(n)|² B(n_s | n, τ_s) B(n_i | n, τ_i)`.
pub fn tmsv_joint_after_channels(src: &TmsvSource, tau_s: f64, tau_i: f64) -> Result<JointCountPmf> {
    src.require_single_mode()?;
    check_unit_interval("signal transmittance", tau_s)?;
    check_unit_interval("idler transmittance", tau_i)?;
    let weights = src.arm_distribution()?;
    let len = weights.pmf.len();
    let mut data = vec![0.0; len * len];
    for (n, &c) in weights.pmf.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let row_s = binomial_row(n as u64, tau_s);
        let row_i = binomial_row(n as u64, tau_i);
        for (n_s, &bs) in row_s.iter().enumerate() {
            let w = c * bs;
            if w == 0.0 {
                continue;
            }
            let base = n_s * len;
            for (n_i, &bi) in row_i.iter().enumerate() {
                data[base + n_i] += w * bi;
            }
        }
    }
    Ok(JointCountPmf {
        signal_len: len,
        idler_len: len,
        data,
    })
}

/// Statistics of the total pair number collected in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum PairStatistics {
    /// The `ν ≪ 1` limit of many thermal modes.
    #[default]
    Poisson,
    /// Exact negative binomial over a finite number of thermal modes.
    MultiThermal { modes: u64 },
}

impl PairStatistics {
    /// Distribution of the total pair number for a mean of `mean_pairs`.
    pub fn total_count_distribution(&self, mean_pairs: f64) -> Result<PhotonDistribution> {
        match *self {
            PairStatistics::Poisson => PhotonDistribution::poisson(mean_pairs),
            PairStatistics::MultiThermal { modes } => {
                PhotonDistribution::multithermal(modes, mean_pairs / modes.max(1) as f64)
            }
        }
    }
}

/// Mean pair count per frame for the Monte Carlo pair model.
///
/// With many modes carrying `ν ≪ 1` photons each, the pair number is Poisson
/// with mean equal to the total energy, independent of how it splits over modes.
pub fn pair_source_sampler_params(_src: &TmsvSource, energy_total: f64) -> Result<f64> {
    check_non_negative("total energy", energy_total)?;
    Ok(energy_total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exact binomial from integer arithmetic, independent of `binomial_kernel`.
    fn naive_binomial(n: u64, m: u64, tau: f64) -> f64 {
        if n > m {
            return 0.0;
        }
        let mut c: u128 = 1;
        for i in 0..n {
            c = c * (m - i) as u128 / (i + 1) as u128;
        }
        c as f64 * tau.powi(n as i32) * (1.0 - tau).powi((m - n) as i32)
    }

    #[test]
    fn binomial_kernel_examples() {
        assert_eq!(binomial_kernel(0, 1, 0.5), 0.5);
        assert_eq!(binomial_kernel(2, 2, 1.0), 1.0);
        assert!((binomial_kernel(1, 3, 0.2) - 0.384).abs() < 1e-15);
        assert_eq!(binomial_kernel(4, 3, 0.2), 0.0);
        assert_eq!(binomial_kernel(0, 7, 0.0), 1.0);
    }

    #[test]
    fn binomial_kernel_log_space_matches_direct() {
        // m = 101..120 crosses into the log-space branch.
        for m in 95..120u64 {
            for n in [0, 1, m / 3, m / 2, m - 1, m] {
                let want = naive_binomial(n, m, 0.37);
                let got = binomial_kernel(n, m, 0.37);
                assert!((got - want).abs() <= 1e-12 * want.max(1e-300), "n={n} m={m}");
            }
        }
        // huge m stays finite and normalized
        let s: f64 = (0..=100_000).map(|n| binomial_kernel(n, 100_000, 0.78)).sum();
        assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn apply_loss_on_single_photon() {
        let out = apply_loss(&PhotonDistribution::fock(1), &LossChannel::new(0.5).unwrap());
        assert_eq!(out.pmf(), &[0.5, 0.5]);
    }

    #[test]
    fn thinned_poisson_is_poisson() {
        let thinned = apply_loss(
            &PhotonDistribution::poisson(10.0).unwrap(),
            &LossChannel::new(0.5).unwrap(),
        );
        let target = PhotonDistribution::poisson(5.0).unwrap();
        for n in 0..thinned.pmf().len().max(target.pmf().len()) {
            assert!((thinned.get(n) - target.get(n)).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn thinned_thermal_is_thermal() {
        let src = PhotonDistribution::thermal(1.0).unwrap();
        // brute-force compounding, written out without apply_loss
        let mut brute = vec![0.0; src.pmf().len()];
        for (m, p) in src.pmf().iter().enumerate() {
            for (n, slot) in brute.iter_mut().enumerate().take(m + 1) {
                *slot += p * naive_binomial(n as u64, m as u64, 0.5);
            }
        }
        let closed = |n: usize| 0.5f64.powi(n as i32) / 1.5f64.powi(n as i32 + 1);
        let thinned = apply_loss(&src, &LossChannel::new(0.5).unwrap());
        for (n, b) in brute.iter().enumerate() {
            assert!((b - closed(n)).abs() < 1e-9);
            assert!((thinned.get(n) - closed(n)).abs() < 1e-9);
        }
    }

    #[test]
    fn compose_losses_examples() {
        assert_eq!(compose_losses(1.0, 0.78).unwrap().transmittance(), 0.78);
        assert!((compose_losses(0.99, 0.78).unwrap().transmittance() - 0.7722).abs() < 1e-15);
        assert!(compose_losses(1.2, 0.5).is_err());

        let d = PhotonDistribution::thermal(3.0).unwrap();
        let (tau, eta) = (LossChannel::new(0.9).unwrap(), LossChannel::new(0.78).unwrap());
        let a = apply_loss(&apply_loss(&d, &tau), &eta);
        let b = apply_loss(&apply_loss(&d, &eta), &tau);
        let c = apply_loss(&d, &tau.then(&eta));
        for n in 0..a.pmf().len() {
            assert!((a.get(n) - b.get(n)).abs() < 1e-9);
            assert!((a.get(n) - c.get(n)).abs() < 1e-9);
        }
    }

    #[test]
    fn constructors_respect_tail_policy() {
        for mean in [0.1, 1.0, 10.0, 250.0] {
            for d in [
                PhotonDistribution::poisson(mean).unwrap(),
                PhotonDistribution::thermal(mean).unwrap(),
            ] {
                assert!((1.0 - d.total_mass()).abs() < TAIL_MASS);
            }
        }
        assert!(PhotonDistribution::new(vec![0.5, 0.4]).is_err());
        assert!(PhotonDistribution::new(vec![1.5, -0.5]).is_err());
        let r = PhotonDistribution::renormalized(vec![1.0, 3.0]).unwrap();
        assert_eq!(r.pmf(), &[0.25, 0.75]);
    }

    #[test]
    fn ideal_tmsv_examples() {
        let vac = tmsv_joint_ideal(&TmsvSource::single_mode(0.0).unwrap()).unwrap();
        assert_eq!(vac.get(0, 0), 1.0);
        assert_eq!(vac.total_mass(), 1.0);

        let one = tmsv_joint_ideal(&TmsvSource::single_mode(1.0).unwrap()).unwrap();
        for n in 0..30 {
            assert!((one.get(n, n) - 0.5f64.powi(n as i32 + 1)).abs() < 1e-15);
            assert_eq!(one.get(n, n + 1), 0.0);
        }
        let thermal = PhotonDistribution::thermal(1.0).unwrap();
        for (n, (s, i)) in one.signal_marginal().iter().zip(one.idler_marginal()).enumerate() {
            assert_eq!(*s, thermal.get(n));
            assert_eq!(i, thermal.get(n));
        }
        assert!(tmsv_joint_ideal(&TmsvSource::new(1.0, 3).unwrap()).is_err());
    }

    #[test]
    fn tmsv_after_channels_examples() {
        let src = TmsvSource::single_mode(1.0).unwrap();
        let j = tmsv_joint_after_channels(&src, 0.5, 1.0).unwrap();
        // (1/2)^2 · B(0|1, 0.5)
        assert!((j.get(0, 1) - 0.125).abs() < 1e-15);
        // idler-lossless closed form |c(n_i)|² B(n_s|n_i, τ)
        for n_i in 0..20 {
            for n_s in 0..=n_i + 1 {
                let want = 0.5f64.powi(n_i as i32 + 1) * naive_binomial(n_s as u64, n_i as u64, 0.5);
                assert!((j.get(n_s, n_i) - want).abs() < 1e-15);
            }
        }
        assert_eq!(
            tmsv_joint_after_channels(&src, 1.0, 1.0).unwrap(),
            tmsv_joint_ideal(&src).unwrap()
        );

        let src = TmsvSource::single_mode(2.5).unwrap();
        let j = tmsv_joint_after_channels(&src, 0.6, 0.8).unwrap();
        let sig = apply_loss(&src.arm_distribution().unwrap(), &LossChannel::new(0.6).unwrap());
        let idl = apply_loss(&src.arm_distribution().unwrap(), &LossChannel::new(0.8).unwrap());
        for (n, p) in j.signal_marginal().iter().enumerate() {
            assert!((p - sig.get(n)).abs() < 1e-12);
        }
        for (n, p) in j.idler_marginal().iter().enumerate() {
            assert!((p - idl.get(n)).abs() < 1e-12);
        }
        // sequential per-arm compounding gives the same table
        let seq = tmsv_joint_ideal(&src)
            .unwrap()
            .apply_signal_loss(&LossChannel::new(0.6).unwrap())
            .apply_idler_loss(&LossChannel::new(0.8).unwrap());
        for (n_s, n_i, p) in j.iter() {
            assert!((p - seq.get(n_s, n_i)).abs() < 1e-12);
        }
    }

    #[test]
    fn pair_rate_examples() {
        let src = TmsvSource::new(1e-3, 1_000_000).unwrap();
        assert_eq!(pair_source_sampler_params(&src, 0.0).unwrap(), 0.0);
        assert_eq!(pair_source_sampler_params(&src, 1.15e5).unwrap(), 1.15e5);
        assert!(pair_source_sampler_params(&src, -1.0).is_err());
    }

    #[test]
    fn multithermal_approaches_poisson() {
        // Brute-force negative binomial straight from its definition.
        let (m, nu) = (1_000_000f64, 1e-3f64);
        let p = nu / (1.0 + nu);
        let nb: Vec<f64> = (0..3000u64)
            .map(|n| {
                let n = n as f64;
                (ln_gamma(n + m) - ln_gamma(m) - ln_gamma(n + 1.0) + n * p.ln() + m * (1.0 - p).ln())
                    .exp()
            })
            .collect();
        let brute = PhotonDistribution::new(nb).unwrap();
        let poisson = PhotonDistribution::poisson(1000.0).unwrap();
        let tv = brute.total_variation(&poisson);
        assert!(tv < 1e-3, "tv = {tv}");
        let built = PairStatistics::MultiThermal { modes: 1_000_000 }
            .total_count_distribution(1000.0)
            .unwrap();
        assert!(built.total_variation(&brute) < 1e-9);
    }

    #[test]
    fn composition_identity_exhaustive() {
        for n_tot in 0..=30u64 {
            for ti in 0..=10 {
                for ei in 0..=10 {
                    let (tau, eta) = (ti as f64 / 10.0, ei as f64 / 10.0);
                    for n in 0..=n_tot {
                        let lhs: f64 = (n..=n_tot)
                            .map(|m| naive_binomial(m, n_tot, tau) * naive_binomial(n, m, eta))
                            .sum();
                        let rhs = binomial_kernel(n, n_tot, tau * eta);
                        assert!((lhs - rhs).abs() < 1e-12, "N={n_tot} n={n} τ={tau} η={eta}");
                    }
                }
            }
        }
    }

    fn arb_pmf() -> impl Strategy<Value = PhotonDistribution> {
        proptest::collection::vec(0.0f64..1.0, 1..40).prop_filter_map("zero weights", |w| {
            PhotonDistribution::renormalized(w).ok()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn loss_preserves_mass_and_scales_mean(d in arb_pmf(), ti in 0usize..=20) {
            let tau = ti as f64 / 20.0;
            let out = apply_loss(&d, &LossChannel::new(tau).unwrap());
            prop_assert!((out.total_mass() - 1.0).abs() < 1e-9);
            prop_assert!(out.pmf().iter().all(|p| *p >= 0.0));
            prop_assert!((out.mean() - tau * d.mean()).abs() < 1e-9);
        }

        #[test]
        fn sequential_losses_commute(d in arb_pmf(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (ca, cb) = (LossChannel::new(a).unwrap(), LossChannel::new(b).unwrap());
            let x = apply_loss(&apply_loss(&d, &ca), &cb);
            let y = apply_loss(&d, &compose_losses(b, a).unwrap());
            for n in 0..x.pmf().len() {
                prop_assert!((x.get(n) - y.get(n)).abs() < 1e-9);
            }
        }
    }
}
