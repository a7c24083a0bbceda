//! Shared instance generators and independent reference computations.
//!
//! Nothing here calls the library's SINR, rate or PSNR code: the oracles
//! re-derive them from the model definitions so they can disagree.

#![allow(dead_code)]

pub mod rational;

use noma_video::channel::ChannelState;
use noma_video::phy::{AmcParams, FeasiblePowerSet, GroupLink};
use noma_video::phy::build_feasible_set;
use noma_video::quality::{RdLibrary, RdParams};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BANDWIDTH_HZ: f64 = 140e3;

pub struct Instance {
    pub channel: ChannelState,
    pub link: GroupLink,
    pub fset: FeasiblePowerSet,
}

/// A random group with a nonempty feasible set: `n` fixture streams,
/// Rayleigh-like gains sorted weakest first, SNR drawn from `snrs`.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, snrs: &[f64]) -> Instance {
    let lib = RdLibrary::default_fixtures();
    loop {
        let streams: Vec<RdParams> = (0..n).map(|_| lib.records().choose(rng).unwrap().clone()).collect();
        let mut gains: Vec<f64> = (0..n)
            .map(|_| {
                let u: f64 = rng.random_range(1e-6..1.0);
                let d: f64 = rng.random_range(0.1..2.0);
                -u.ln() / (1.0 + d * d)
            })
            .collect();
        gains.sort_by(f64::total_cmp);
        if gains.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        let snr = *snrs.choose(rng).unwrap();
        let channel =
            ChannelState::new(gains, ChannelState::noise_for_snr(1.0, snr), BANDWIDTH_HZ, 1.0, 2.0).unwrap();
        let link = GroupLink::new(streams, AmcParams::default(), BANDWIDTH_HZ).unwrap();
        let fset = build_feasible_set(&channel, &link.sinr_bounds().unwrap()).unwrap();
        if !fset.is_empty() {
            return Instance { channel, link, fset };
        }
    }
}

pub fn instances(seed: u64, count: usize, n: usize, snrs: &[f64]) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(&mut rng, n, snrs)).collect()
}

/// SINR of UE `k` under SIC, straight from the definition.
pub fn sinr(gains: &[f64], noise: f64, p: &[f64], k: usize) -> f64 {
    let above: f64 = p[k + 1..].iter().sum();
    gains[k] * p[k] / (gains[k] * above + noise)
}

fn rate_at_psnr(s: &RdParams, q: f64) -> f64 {
    let mse = 255.0f64.powi(2) * 10f64.powf(-q / 10.0);
    s.theta / (mse + s.alpha) + s.beta
}

/// Saturating PSNR of one stream at SINR `gamma`; `None` below its minimum.
pub fn psnr(s: &RdParams, gamma: f64) -> Option<f64> {
    let rate = 0.905 * BANDWIDTH_HZ * (1.0 + gamma / 1.34).log2();
    let lo = rate_at_psnr(s, s.q_min_db);
    if rate < lo * (1.0 - 1e-9) {
        return None;
    }
    let r = rate.clamp(lo, rate_at_psnr(s, s.q_max_db));
    let mse = s.theta / (r - s.beta) - s.alpha;
    Some(10.0 * (255.0f64.powi(2) / mse).log10())
}

/// Average PSNR of a power vector, `None` if some UE misses its minimum.
pub fn average_psnr(inst: &Instance, p: &[f64]) -> Option<f64> {
    let ch = &inst.channel;
    let mut sum = 0.0;
    for (k, s) in inst.link.streams.iter().enumerate() {
        sum += psnr(s, sinr(&ch.gains_sq, ch.noise_var, p, k))?;
    }
    Some(sum / p.len() as f64)
}

/// Best average PSNR over the grid `P_k = i_k/m · P_max` with `Σ i_k ≤ m`
/// for a two-UE group.
pub fn grid_optimum(inst: &Instance, m: usize) -> f64 {
    let budget = inst.channel.power_budget_w;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=m {
        for j in 0..=m - i {
            let p = [i as f64 / m as f64 * budget, j as f64 / m as f64 * budget];
            if let Some(q) = average_psnr(inst, &p) {
                best = best.max(q);
            }
        }
    }
    best
}

/// Largest `λ` with `λ·v` reachable by a feasible power vector, by bisection
/// on the closed-form minimal powers for an SINR target.
pub fn bisect_projection(inst: &Instance, v: &[f64]) -> f64 {
    let ch = &inst.channel;
    let b = &inst.fset.bounds;
    let reachable = |lambda: f64| -> bool {
        let target: Vec<f64> = v.iter().zip(&b.gamma_min).map(|(x, lo)| (lambda * x).max(*lo)).collect();
        if target.iter().zip(&b.gamma_max).any(|(t, hi)| *t > *hi) {
            return false;
        }
        powers_for_target(inst, &target).iter().sum::<f64>() <= ch.power_budget_w
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while reachable(hi) {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if reachable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Powers meeting the SINR target `t` exactly, strongest UE first:
/// `P_k = t_k·(Σ_{i>k} P_i + σ²/|h_k|²)`.
pub fn powers_for_target(inst: &Instance, t: &[f64]) -> Vec<f64> {
    let ch = &inst.channel;
    let mut p = vec![0.0; t.len()];
    let mut above = 0.0;
    for k in (0..t.len()).rev() {
        p[k] = t[k] * (above + ch.noise_var / ch.gains_sq[k]);
        above += p[k];
    }
    p
}

/// A random feasible power vector: the least power meeting an SINR target
/// drawn on a random ray from `γ_min` toward `γ_max`, no farther out than
/// the budget allows.
pub fn sample_feasible_power(inst: &Instance, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let b = &inst.fset.bounds;
    let n = b.gamma_min.len();
    let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let target = |s: f64| -> Vec<f64> {
        (0..n).map(|k| b.gamma_min[k] + s * u[k] * (b.gamma_max[k] - b.gamma_min[k])).collect()
    };
    let fits = |s: f64| powers_for_target(inst, &target(s)).iter().sum::<f64>() <= inst.channel.power_budget_w;
    let (mut lo, mut hi) = (0.0, 1.0);
    if fits(hi) {
        lo = hi;
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if fits(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    powers_for_target(inst, &target(lo * rng.random::<f64>()))
}
