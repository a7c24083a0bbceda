//! Low-complexity greedy power allocation over discrete power blocks.
//!
//! The budget is cut into `L` equal blocks. Phase I walks from the strongest
//! UE to the weakest and hands each one blocks until its minimum quality is
//! met. Phase II awards every remaining block to the UE whose extra block
//! gives the highest group-average PSNR while all quality bounds still hold.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelState, PowerVector};
use crate::error::{Error, Result};
use crate::phy::{GroupLink, SinrBounds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GreedyConfig {
    pub n_blocks: usize,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        GreedyConfig { n_blocks: 100 }
    }
}

/// Objective-evaluation counts. Phase I costs one evaluation per awarded
/// block; each Phase II round costs `N` per-UE PSNRs plus one average for
/// each of the `N` candidates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GreedyCounters {
    pub phase1_evals: usize,
    pub phase2_evals: usize,
    pub phase2_rounds: usize,
}

impl GreedyCounters {
    pub fn total(&self) -> usize {
        self.phase1_evals + self.phase2_evals
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedySolution {
    pub power: PowerVector,
    pub blocks: Vec<usize>,
    pub unused_blocks: usize,
    pub psnr: f64,
    pub per_ue_psnr: Vec<f64>,
    pub sinr: Vec<f64>,
    pub counters: GreedyCounters,
}

// Relative slack when comparing SINRs against band edges.
const EDGE: f64 = 1e-12;

/// Bounds a block for UE `k` can break: `k`'s own maximum and every minimum.
/// A UE already above its maximum after Phase I only saturates.
fn admissible(gammas: &[f64], k: usize, bounds: &SinrBounds) -> bool {
    gammas[k] <= bounds.gamma_max[k] * (1.0 + EDGE)
        && gammas.iter().zip(&bounds.gamma_min).all(|(g, lo)| *g >= lo * (1.0 - EDGE))
}

fn powers(blocks: &[usize], block_w: f64) -> Vec<f64> {
    blocks.iter().map(|&b| b as f64 * block_w).collect()
}

fn average(link: &GroupLink, gammas: &[f64], bounds: &SinrBounds) -> Result<f64> {
    let q = link.psnr_in_band(gammas, bounds)?;
    Ok(q.iter().sum::<f64>() / q.len() as f64)
}

/// Greedy block allocation. Fails with [`Error::Infeasible`] when the blocks
/// run out before every UE reaches its minimum quality.
pub fn solve_greedy(ch: &ChannelState, link: &GroupLink, cfg: &GreedyConfig) -> Result<GreedySolution> {
    ch.validate()?;
    if cfg.n_blocks == 0 {
        return Err(Error::config("greedy needs at least one power block"));
    }
    let n = ch.len();
    if link.len() != n {
        return Err(Error::domain("stream count differs from group size"));
    }
    let bounds = link.sinr_bounds()?;
    let block_w = ch.power_budget_w / cfg.n_blocks as f64;
    let mut blocks = vec![0usize; n];
    let mut left = cfg.n_blocks;
    let mut counters = GreedyCounters::default();

    // Phase I. A UE's SINR only depends on its own and stronger UEs' powers,
    // so serving strongest first fixes each minimum for good.
    for k in (0..n).rev() {
        loop {
            let gammas = ch.own_sinrs(&powers(&blocks, block_w));
            if gammas[k] >= bounds.gamma_min[k] * (1.0 - EDGE) {
                break;
            }
            if left == 0 {
                return Err(Error::Infeasible(format!(
                    "{} blocks do not reach the minimum quality of UE {k}",
                    cfg.n_blocks
                )));
            }
            blocks[k] += 1;
            left -= 1;
            counters.phase1_evals += 1;
        }
    }

    // Phase II.
    while left > 0 {
        counters.phase2_rounds += 1;
        let mut best: Option<(usize, f64)> = None;
        for k in 0..n {
            counters.phase2_evals += n + 1;
            blocks[k] += 1;
            let gammas = ch.own_sinrs(&powers(&blocks, block_w));
            blocks[k] -= 1;
            if !admissible(&gammas, k, &bounds) {
                continue;
            }
            let score = average(link, &gammas, &bounds)?;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((k, score));
            }
        }
        // The award stands even when the average dips: a UE pinned at its
        // maximum can only be passed by first raising the stronger UEs.
        let Some((k, _)) = best else { break };
        blocks[k] += 1;
        left -= 1;
    }

    let p = powers(&blocks, block_w);
    let sinr = ch.own_sinrs(&p);
    let per_ue_psnr = link.psnr_in_band(&sinr, &bounds)?;
    Ok(GreedySolution {
        power: PowerVector(p),
        blocks,
        unused_blocks: left,
        psnr: per_ue_psnr.iter().sum::<f64>() / n as f64,
        per_ue_psnr,
        sinr,
        counters,
    })
}
