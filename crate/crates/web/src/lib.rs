//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string; the page parses it and draws on a
//! canvas. The plain-Rust functions behind the exports are public so they can
//! be tested natively.

use qreading_core::discriminate::{classical_bound, coherent_error_probability, ChannelPair};
use qreading_core::montecarlo::{classically_correlated_set, simulate_set, SimConfig, Transmitter};
use qreading_core::pipeline::{sweep, ExperimentConfig};
use qreading_core::{Error, Hypothesis, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Frames per set are capped so a click never stalls the page.
pub const MAX_FRAMES: usize = 20_000;

#[derive(Serialize)]
struct BoundsPoint {
    n: f64,
    c_bound: f64,
    p_err_cla_pc: f64,
}

/// Log-spaced curve of the classical bound and the coherent photon-counting
/// error from `n_min` to `n_max`, with `eta_s` folded into both channels.
pub fn bounds_curve_json(tau0: f64, tau1: f64, eta_s: f64, n_min: f64, n_max: f64, points: usize) -> Result<String> {
    if !(n_min > 0.0 && n_max > n_min) || points < 2 {
        return Err(Error::InvalidParameter("need 0 < n_min < n_max and at least two points".into()));
    }
    if !(0.0 < eta_s && eta_s <= 1.0) || !(0.0 < tau0 && tau0 <= tau1 && tau1 <= 1.0) {
        return Err(Error::InvalidParameter("need 0 < tau0 <= tau1 <= 1 and 0 < eta_s <= 1".into()));
    }
    let (t0, t1) = (eta_s * tau0, eta_s * tau1);
    let step = (n_max / n_min).ln() / (points - 1) as f64;
    let curve = (0..points)
        .map(|k| {
            let n = n_min * (step * k as f64).exp();
            let pc = if t0 == t1 { 0.5 } else { coherent_error_probability(n, t0, t1)? };
            Ok(BoundsPoint {
                n,
                c_bound: classical_bound(n, t0, t1),
                p_err_cla_pc: pc,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(serde_json::to_string(&curve)?)
}

fn check_frames(frames: usize) -> Result<()> {
    if frames > MAX_FRAMES {
        return Err(Error::InvalidParameter(format!("at most {MAX_FRAMES} frames per set in the browser")));
    }
    Ok(())
}

/// Simulated gains and model curves over `steps` values of tau0 in
/// `[tau0_start, tau0_end]`, with tau1 = 1.
#[allow(clippy::too_many_arguments)]
pub fn gain_sweep_json(
    eta_s: f64,
    eta_i: f64,
    photons: f64,
    electronic_variance: f64,
    tau0_start: f64,
    tau0_end: f64,
    steps: usize,
    frames: usize,
    seed: u64,
) -> Result<String> {
    check_frames(frames)?;
    if steps == 0 || !(tau0_start <= tau0_end) {
        return Err(Error::InvalidParameter("need steps >= 1 and tau0_start <= tau0_end".into()));
    }
    let pair = ChannelPair::new(tau0_start, 1.0, eta_s, eta_i, photons)?.with_electronic_variance(electronic_variance)?;
    let mut template = ExperimentConfig::new(pair, frames, seed);
    template.subsets = (2..=10).rev().find(|s| frames.is_multiple_of(*s)).unwrap_or(1);
    let grid: Vec<f64> = if steps == 1 {
        vec![tau0_start]
    } else {
        (0..steps)
            .map(|k| tau0_start + (tau0_end - tau0_start) * k as f64 / (steps - 1) as f64)
            .collect()
    };
    Ok(serde_json::to_string(&sweep(&template, &grid, &[photons])?)?)
}

#[derive(Serialize)]
struct Scatter {
    signal: Vec<f64>,
    idler: Vec<f64>,
    correlation: f64,
}

/// Signal and idler counts of simulated frames through a cell of
/// transmittance `tau`; `classical` swaps in independent arms with the same
/// marginals.
#[allow(clippy::too_many_arguments)]
pub fn joint_scatter_json(
    tau: f64,
    eta_s: f64,
    eta_i: f64,
    photons: f64,
    electronic_variance: f64,
    frames: usize,
    seed: u64,
    classical: bool,
) -> Result<String> {
    check_frames(frames)?;
    let pair = ChannelPair::new(tau, tau, eta_s, eta_i, photons)?.with_electronic_variance(electronic_variance)?;
    let cfg = SimConfig::new(Transmitter::Tmsv, pair, frames, seed);
    let set = if classical {
        classically_correlated_set(&cfg, Hypothesis::Tau1)?
    } else {
        simulate_set(&cfg, Hypothesis::Tau1)?
    };
    let signal: Vec<f64> = set.frames.iter().map(|f| f.n_s).collect();
    let idler: Vec<f64> = set.frames.iter().map(|f| f.n_i).collect();
    let correlation = qreading_core::stats::correlation(&signal, &idler);
    let correlation = if correlation.is_finite() { correlation } else { 0.0 };
    Ok(serde_json::to_string(&Scatter {
        signal,
        idler,
        correlation,
    })?)
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn bounds_curve(tau0: f64, tau1: f64, eta_s: f64, n_min: f64, n_max: f64, points: usize) -> std::result::Result<String, JsError> {
    js(bounds_curve_json(tau0, tau1, eta_s, n_min, n_max, points))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn gain_sweep(
    eta_s: f64,
    eta_i: f64,
    photons: f64,
    electronic_variance: f64,
    tau0_start: f64,
    tau0_end: f64,
    steps: usize,
    frames: usize,
    seed: u64,
) -> std::result::Result<String, JsError> {
    js(gain_sweep_json(eta_s, eta_i, photons, electronic_variance, tau0_start, tau0_end, steps, frames, seed))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn joint_scatter(
    tau: f64,
    eta_s: f64,
    eta_i: f64,
    photons: f64,
    electronic_variance: f64,
    frames: usize,
    seed: u64,
    classical: bool,
) -> std::result::Result<String, JsError> {
    js(joint_scatter_json(tau, eta_s, eta_i, photons, electronic_variance, frames, seed, classical))
}
