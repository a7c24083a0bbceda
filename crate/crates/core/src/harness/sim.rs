//! Monte Carlo loop: drop UEs, group them, fade every GOP, allocate power.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{solve_noma_mt, solve_oma_simple};
use crate::channel::{group_users, partition_zones, sample_channel, ChannelState, GroupingStrategy, NomaGroup, UserEquipment};
use crate::error::{Error, Result};
use crate::greedy::solve_greedy;
use crate::monotonic::solve_polyblock;
use crate::phy::{amc_rate, build_feasible_set, GroupLink};
use crate::quality::{Complexity, RdLibrary, RdParams};

use super::config::{ScenarioConfig, Scheme};
use super::svc::{discrete_rate_set, snap_index, SvcLayering};

const TAG_PLACEMENT: u64 = 1;
const TAG_GROUPING: u64 = 2;
const TAG_FADING: u64 = 3;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream seed for a tuple of indices under one master seed.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix(master), |acc, &p| splitmix(acc ^ splitmix(p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Infeasible,
    NonConvergence,
}

/// One UE's share of a scheme's allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct UeOutcome {
    /// Position in SIC order, 0 = weakest channel.
    pub rank: usize,
    pub ue_id: usize,
    pub zone: usize,
    pub stream: String,
    pub complexity: Complexity,
    pub gain_sq: f64,
    pub power_coeff: f64,
    pub sinr: f64,
    pub rate_bps: f64,
    pub psnr_db: f64,
    pub snapped_rate_bps: f64,
    pub snapped_psnr_db: f64,
}

/// Outcome of one scheme on one group at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub strategy: GroupingStrategy,
    pub trial: usize,
    pub gop: usize,
    pub snr_db: f64,
    pub group: usize,
    pub scheme: Scheme,
    pub status: Status,
    /// Empty unless `status` is `Ok`.
    pub ues: Vec<UeOutcome>,
    pub avg_psnr_db: f64,
    pub avg_snapped_psnr_db: f64,
    pub iterations: Option<usize>,
    pub bound_gap: Option<f64>,
    /// Solve time, recorded only with `record_timing`.
    pub wall_time_us: u64,
}

impl TrialRecord {
    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }

    /// Weakest-channel UE of the group.
    pub fn weakest(&self) -> Option<&UeOutcome> {
        self.ues.first()
    }
}

/// Continuous allocation produced by one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub power_coeff: Vec<f64>,
    pub sinr: Vec<f64>,
    pub rate_bps: Vec<f64>,
    pub psnr_db: Vec<f64>,
    pub iterations: Option<usize>,
    pub bound_gap: Option<f64>,
}

/// Runs one scheme on one channel snapshot.
pub fn allocate(ch: &ChannelState, link: &GroupLink, scheme: Scheme, cfg: &ScenarioConfig) -> Result<Allocation> {
    let rates = |sinr: &[f64]| sinr.iter().map(|g| amc_rate(link.bandwidth_hz, *g, link.amc)).collect();
    let coeffs = |p: &[f64]| p.iter().map(|x| x / ch.power_budget_w).collect();
    match scheme {
        Scheme::Polyblock => {
            let fset = build_feasible_set(ch, &link.sinr_bounds()?)?;
            if fset.is_empty() {
                return Err(Error::Infeasible("minimum SINRs exceed the power budget".into()));
            }
            let s = solve_polyblock(&fset, link, &cfg.solver)?;
            Ok(Allocation {
                power_coeff: coeffs(&s.power.0),
                rate_bps: rates(&s.sinr),
                sinr: s.sinr,
                psnr_db: s.per_ue_psnr,
                iterations: Some(s.iterations),
                bound_gap: Some(s.bound_gap),
            })
        }
        Scheme::Greedy => {
            let s = solve_greedy(ch, link, &cfg.greedy)?;
            Ok(Allocation {
                power_coeff: coeffs(&s.power.0),
                rate_bps: rates(&s.sinr),
                sinr: s.sinr,
                psnr_db: s.per_ue_psnr,
                iterations: Some(s.counters.phase2_rounds),
                bound_gap: None,
            })
        }
        Scheme::NomaMt => {
            let r = solve_noma_mt(ch, link)?;
            let coeff = r.power_coefficients(ch.power_budget_w);
            let p: Vec<f64> = coeff.iter().map(|c| c * ch.power_budget_w).collect();
            Ok(Allocation {
                power_coeff: coeff,
                sinr: ch.own_sinrs(&p),
                rate_bps: r.rate_bps,
                psnr_db: r.per_ue_psnr,
                iterations: None,
                bound_gap: None,
            })
        }
        Scheme::Oma => {
            let r = solve_oma_simple(ch, link)?;
            Ok(Allocation {
                power_coeff: r.power_coefficients(ch.power_budget_w),
                sinr: ch.gains_sq.iter().map(|g| g * ch.power_budget_w / ch.noise_var).collect(),
                rate_bps: r.rate_bps,
                psnr_db: r.per_ue_psnr,
                iterations: None,
                bound_gap: None,
            })
        }
    }
}

/// Largest achievable SVC rate not above `rate` and its PSNR.
pub fn snap_rate(params: &RdParams, layering: &SvcLayering, rate: f64) -> Result<(f64, f64)> {
    let set = discrete_rate_set(params, layering)?;
    let idx = snap_index(&set, rate)
        .or_else(|| (rate >= set[0] * (1.0 - 1e-6)).then_some(0))
        .ok_or(Error::InfeasibleRate { rate_bps: rate, min_rate_bps: set[0] })?;
    Ok((set[idx], params.psnr_of_rate(set[idx])?))
}

fn place_ues(cfg: &ScenarioConfig, lib: &RdLibrary, trial: usize) -> Result<Vec<UserEquipment>> {
    let complexity = |s: &str| lib.get(s, cfg.p_rtp).map(|p| p.complexity);
    if !cfg.ues.is_empty() {
        return cfg
            .ues
            .iter()
            .enumerate()
            .map(|(id, u)| {
                let mut ue = UserEquipment::new(id, u.distance, u.stream.clone(), complexity(&u.stream)?);
                ue.quality_req = u.quality_req;
                Ok(ue)
            })
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[TAG_PLACEMENT, trial as u64]));
    let (r0, r1) = (cfg.min_distance.powi(2), cfg.cell_radius.powi(2));
    cfg.streams
        .iter()
        .enumerate()
        .map(|(id, s)| {
            // Uniform over the annulus: the squared radius is uniform.
            let d = (r0 + rng.random::<f64>() * (r1 - r0)).sqrt();
            Ok(UserEquipment::new(id, d, s.clone(), complexity(s)?))
        })
        .collect()
}

/// Fading snapshot of one group, re-sorted into SIC order.
fn fade_group(cfg: &ScenarioConfig, group: &NomaGroup, trial: usize, gop: usize) -> Result<Vec<(UserEquipment, f64)>> {
    let mut faded = group
        .ues
        .iter()
        .map(|ue| {
            let seed = derive_seed(cfg.seed, &[TAG_FADING, trial as u64, gop as u64, ue.id as u64]);
            Ok((ue.clone(), sample_channel(ue, seed, cfg.path_loss_exp)?.norm_sqr()))
        })
        .collect::<Result<Vec<_>>>()?;
    faded.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.id.cmp(&b.0.id)));
    Ok(faded)
}

fn trial_groups(cfg: &ScenarioConfig, lib: &RdLibrary, trial: usize) -> Result<Vec<NomaGroup>> {
    let ues = place_ues(cfg, lib, trial)?;
    let zones = partition_zones(&ues, cfg.n_zones, cfg.edge_tolerance)?;
    group_users(&zones, cfg.grouping, derive_seed(cfg.seed, &[TAG_GROUPING, trial as u64]))
}

/// One group of one trial and GOP, exactly as the simulation sees it.
#[derive(Debug, Clone)]
pub struct GroupInstance {
    /// SIC order, weakest first.
    pub ues: Vec<UserEquipment>,
    pub channel: ChannelState,
    pub link: GroupLink,
}

pub fn group_instance(cfg: &ScenarioConfig, trial: usize, gop: usize, group: usize, snr_db: f64) -> Result<GroupInstance> {
    cfg.validate()?;
    let lib = cfg.library()?;
    let groups = trial_groups(cfg, &lib, trial)?;
    let g = groups
        .get(group)
        .ok_or_else(|| Error::config(format!("group {group} out of range (scenario has {})", groups.len())))?;
    let faded = fade_group(cfg, g, trial, gop)?;
    let params = faded
        .iter()
        .map(|(ue, _)| lib.get(&ue.requested_stream, cfg.p_rtp).cloned())
        .collect::<Result<Vec<_>>>()?;
    let noise = ChannelState::noise_for_snr(cfg.power_budget_w, snr_db);
    let gains = faded.iter().map(|(_, g)| *g).collect();
    Ok(GroupInstance {
        channel: ChannelState::new(gains, noise, cfg.bandwidth_hz, cfg.power_budget_w, cfg.path_loss_exp)?,
        link: GroupLink::new(params, cfg.amc, cfg.bandwidth_hz)?,
        ues: faded.into_iter().map(|(u, _)| u).collect(),
    })
}

fn run_trial(cfg: &ScenarioConfig, lib: &RdLibrary, trial: usize) -> Result<Vec<TrialRecord>> {
    let groups = trial_groups(cfg, lib, trial)?;
    let mut out = Vec::new();
    for gop in 0..cfg.gops_per_trial {
        for (gi, group) in groups.iter().enumerate() {
            let faded = fade_group(cfg, group, trial, gop)?;
            let params = faded
                .iter()
                .map(|(ue, _)| lib.get(&ue.requested_stream, cfg.p_rtp).cloned())
                .collect::<Result<Vec<_>>>()?;
            let link = GroupLink::new(params.clone(), cfg.amc, cfg.bandwidth_hz)?;
            let gains: Vec<f64> = faded.iter().map(|(_, g)| *g).collect();
            for &snr in &cfg.snr_db {
                let noise = ChannelState::noise_for_snr(cfg.power_budget_w, snr);
                let ch = ChannelState::new(gains.clone(), noise, cfg.bandwidth_hz, cfg.power_budget_w, cfg.path_loss_exp)?;
                for &scheme in &cfg.solvers {
                    let start = Instant::now();
                    let result = allocate(&ch, &link, scheme, cfg);
                    // Zero unless requested, so records stay reproducible.
                    let wall_time_us = if cfg.record_timing { start.elapsed().as_micros() as u64 } else { 0 };
                    let mut rec = TrialRecord {
                        strategy: cfg.grouping,
                        trial,
                        gop,
                        snr_db: snr,
                        group: gi,
                        scheme,
                        status: Status::Ok,
                        ues: Vec::new(),
                        avg_psnr_db: f64::NAN,
                        avg_snapped_psnr_db: f64::NAN,
                        iterations: None,
                        bound_gap: None,
                        wall_time_us,
                    };
                    match result {
                        Ok(a) => {
                            for (rank, ((ue, g), p)) in faded.iter().zip(&params).enumerate() {
                                let (snapped_rate_bps, snapped_psnr_db) = snap_rate(p, &cfg.svc, a.rate_bps[rank])?;
                                rec.ues.push(UeOutcome {
                                    rank,
                                    ue_id: ue.id,
                                    zone: ue.zone,
                                    stream: ue.requested_stream.clone(),
                                    complexity: ue.complexity,
                                    gain_sq: *g,
                                    power_coeff: a.power_coeff[rank],
                                    sinr: a.sinr[rank],
                                    rate_bps: a.rate_bps[rank],
                                    psnr_db: a.psnr_db[rank],
                                    snapped_rate_bps,
                                    snapped_psnr_db,
                                });
                            }
                            let n = rec.ues.len() as f64;
                            rec.avg_psnr_db = rec.ues.iter().map(|u| u.psnr_db).sum::<f64>() / n;
                            rec.avg_snapped_psnr_db = rec.ues.iter().map(|u| u.snapped_psnr_db).sum::<f64>() / n;
                            rec.iterations = a.iterations;
                            rec.bound_gap = a.bound_gap;
                        }
                        Err(e) if e.is_infeasible() => {
                            log::debug!("trial {trial} gop {gop} group {gi} {snr} dB {scheme}: {e}");
                            rec.status = Status::Infeasible;
                        }
                        Err(e @ Error::NonConvergence { .. }) => {
                            log::warn!("trial {trial} gop {gop} group {gi} {snr} dB {scheme}: {e}");
                            rec.status = Status::NonConvergence;
                        }
                        Err(e) => return Err(e),
                    }
                    out.push(rec);
                }
            }
        }
    }
    Ok(out)
}

/// Runs every trial of the scenario; trials execute in parallel and the
/// records come back sorted by (trial, GOP, SNR, group, scheme).
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let lib = cfg.library()?;
    let per_trial = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &lib, t))
        .collect::<Result<Vec<_>>>()?;
    let snr_rank = |s: f64| cfg.snr_db.iter().position(|x| *x == s).unwrap_or(usize::MAX);
    let mut records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    records.sort_by_key(|r| (r.trial, r.gop, snr_rank(r.snr_db), r.group, r.scheme));
    Ok(records)
}

/// Runs the scenario once per grouping strategy.
pub fn grouping_compare(cfg: &ScenarioConfig, strategies: &[GroupingStrategy]) -> Result<Vec<TrialRecord>> {
    let mut all = Vec::new();
    for &s in strategies {
        let c = ScenarioConfig { grouping: s, ..cfg.clone() };
        all.extend(run_scenario(&c)?);
    }
    Ok(all)
}
