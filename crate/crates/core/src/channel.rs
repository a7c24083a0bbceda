//! Downlink channel model, zone partitioning, NOMA grouping and SIC SINR.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quality::Complexity;

/// Relative distance from a zone border within which a UE counts as an edge UE.
pub const DEFAULT_EDGE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QualityReq {
    LatencySensitive,
    QualitySensitive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserEquipment {
    pub id: usize,
    pub distance_m: f64,
    /// 1-based zone index; zone 1 is the farthest (weakest) zone.
    pub zone: usize,
    pub requested_stream: String,
    pub quality_req: QualityReq,
    pub complexity: Complexity,
}

impl UserEquipment {
    pub fn new(id: usize, distance_m: f64, stream: impl Into<String>, complexity: Complexity) -> Self {
        UserEquipment {
            id,
            distance_m,
            zone: 0,
            requested_stream: stream.into(),
            quality_req: QualityReq::QualitySensitive,
            complexity,
        }
    }
}

/// Per-group channel snapshot, ordered weakest to strongest for SIC.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub gains_sq: Vec<f64>,
    pub noise_var: f64,
    pub bandwidth_hz: f64,
    pub power_budget_w: f64,
    pub path_loss_exp: f64,
}

impl ChannelState {
    pub fn new(
        gains_sq: Vec<f64>,
        noise_var: f64,
        bandwidth_hz: f64,
        power_budget_w: f64,
        path_loss_exp: f64,
    ) -> Result<Self> {
        let ch = ChannelState { gains_sq, noise_var, bandwidth_hz, power_budget_w, path_loss_exp };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gains_sq.is_empty() {
            return Err(Error::domain("channel needs at least one UE"));
        }
        if self.gains_sq.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(Error::domain("channel gains must be positive and finite"));
        }
        if self.gains_sq.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::domain("channel gains must be ordered weakest first"));
        }
        for (name, v) in [
            ("noise variance", self.noise_var),
            ("bandwidth", self.bandwidth_hz),
            ("power budget", self.power_budget_w),
            ("path-loss exponent", self.path_loss_exp),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.gains_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains_sq.is_empty()
    }

    /// Noise variance for an SNR defined as `10·log10(P/σ²)`.
    pub fn noise_for_snr(power_budget_w: f64, snr_db: f64) -> f64 {
        power_budget_w / 10f64.powf(snr_db / 10.0)
    }

    /// SINR of UE `target`'s stream as seen by UE `detector` (both 0-based).
    pub fn sinr(&self, p: &PowerVector, detector: usize, target: usize) -> Result<f64> {
        sinr(self, p, detector, target)
    }

    /// Own-stream SINR of every UE.
    pub fn own_sinrs(&self, p: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut tail = 0.0;
        let mut out = vec![0.0; n];
        for k in (0..n).rev() {
            let g = self.gains_sq[k];
            out[k] = g * p[k] / (g * tail + self.noise_var);
            tail += p[k];
        }
        out
    }
}

/// Nonnegative per-UE transmit powers of one NOMA group.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerVector(pub Vec<f64>);

impl PowerVector {
    pub fn new(p: Vec<f64>, budget_w: f64) -> Result<Self> {
        if p.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::domain("transmit powers must be nonnegative"));
        }
        let total: f64 = p.iter().sum();
        if total > budget_w * (1.0 + 1e-12) {
            return Err(Error::domain(format!("total power {total} exceeds budget {budget_w}")));
        }
        Ok(PowerVector(p))
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// SIC SINR for UE `detector` decoding UE `target`'s stream.
///
/// Streams of UEs stronger than `target` remain as interference; weaker ones
/// were cancelled earlier. Indices are 0-based and ordered weakest first.
pub fn sinr(ch: &ChannelState, p: &PowerVector, detector: usize, target: usize) -> Result<f64> {
    let n = ch.len();
    if p.0.len() != n {
        return Err(Error::domain("power vector length differs from group size"));
    }
    if detector >= n || target > detector {
        return Err(Error::domain(format!(
            "SIC cannot decode stream {target} at UE {detector}"
        )));
    }
    let g = ch.gains_sq[detector];
    let interference: f64 = p.0[target + 1..].iter().map(|pi| g * pi).sum();
    Ok(g * p.0[target] / (interference + ch.noise_var))
}

/// Channel coefficient `g / sqrt(1 + d^η)` for a given small-scale fade.
pub fn channel_gain(distance_m: f64, path_loss_exp: f64, fading: Complex64) -> Complex64 {
    fading / (1.0 + distance_m.powf(path_loss_exp)).sqrt()
}

/// Draws a unit-variance circularly symmetric complex Gaussian.
pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let half = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid sigma");
    Complex64::new(half.sample(rng), half.sample(rng))
}

/// Rayleigh-faded channel coefficient for `ue`, deterministic in `seed`.
pub fn sample_channel(ue: &UserEquipment, seed: u64, path_loss_exp: f64) -> Result<Complex64> {
    if !(ue.distance_m > 0.0) {
        return Err(Error::domain("UE distance must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(channel_gain(ue.distance_m, path_loss_exp, sample_fading(&mut rng)))
}

/// Splits UEs into `n_zones` equal zones by distance, farthest zone first.
///
/// Latency-sensitive UEs within `edge_tolerance` (relative) of a border are
/// moved to the weaker side, swapping with the nearest non-latency-sensitive
/// UE there so zone sizes stay equal.
pub fn partition_zones(
    ues: &[UserEquipment],
    n_zones: usize,
    edge_tolerance: f64,
) -> Result<Vec<Vec<UserEquipment>>> {
    if n_zones == 0 || ues.is_empty() || !ues.len().is_multiple_of(n_zones) {
        return Err(Error::config(format!(
            "{} UEs cannot be split into {n_zones} equal zones",
            ues.len()
        )));
    }
    if let Some(u) = ues.iter().find(|u| !(u.distance_m > 0.0)) {
        return Err(Error::domain(format!("UE {} has nonpositive distance", u.id)));
    }
    let per_zone = ues.len() / n_zones;
    let mut sorted = ues.to_vec();
    // Farthest first; ties by id for determinism.
    sorted.sort_by(|a, b| b.distance_m.total_cmp(&a.distance_m).then(a.id.cmp(&b.id)));
    let mut zones: Vec<Vec<UserEquipment>> = sorted.chunks(per_zone).map(<[_]>::to_vec).collect();

    for upper in 1..n_zones {
        let lower = upper - 1;
        let border = 0.5
            * (zones[lower].last().expect("nonempty").distance_m
                + zones[upper].first().expect("nonempty").distance_m);
        let edge: Vec<usize> = (0..per_zone)
            .filter(|&i| {
                let u = &zones[upper][i];
                u.quality_req == QualityReq::LatencySensitive
                    && (u.distance_m - border).abs() <= edge_tolerance * border
            })
            .collect();
        for i in edge {
            // Nearest-to-BS UE of the weaker zone that is free to move up.
            let swap = (0..per_zone)
                .rev()
                .find(|&k| zones[lower][k].quality_req != QualityReq::LatencySensitive);
            if let Some(k) = swap {
                let a = zones[upper][i].clone();
                let b = std::mem::replace(&mut zones[lower][k], a);
                zones[upper][i] = b;
            }
        }
    }
    for (z, zone) in zones.iter_mut().enumerate() {
        zone.sort_by(|a, b| b.distance_m.total_cmp(&a.distance_m).then(a.id.cmp(&b.id)));
        for u in zone.iter_mut() {
            u.zone = z + 1;
        }
    }
    Ok(zones)
}

/// Content-aware grouping strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupingStrategy {
    /// Weak zones get low-complexity content, strong zones high-complexity.
    #[serde(rename = "WLBH")]
    Wlbh,
    /// Weak zones get high-complexity content.
    #[serde(rename = "WHBL")]
    Whbl,
    /// Random content placement and random pairing.
    #[serde(rename = "WRBR")]
    Wrbr,
    /// Requests unchanged, paired by list order.
    ByIndex,
}

impl fmt::Display for GroupingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupingStrategy::Wlbh => "WLBH",
            GroupingStrategy::Whbl => "WHBL",
            GroupingStrategy::Wrbr => "WRBR",
            GroupingStrategy::ByIndex => "ByIndex",
        })
    }
}

impl FromStr for GroupingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "WLBH" => Ok(GroupingStrategy::Wlbh),
            "WHBL" => Ok(GroupingStrategy::Whbl),
            "WRBR" => Ok(GroupingStrategy::Wrbr),
            "BYINDEX" => Ok(GroupingStrategy::ByIndex),
            _ => Err(Error::config(format!("unknown grouping strategy '{s}'"))),
        }
    }
}

/// One NOMA group: one UE per zone, weakest zone first.
#[derive(Debug, Clone, PartialEq)]
pub struct NomaGroup {
    pub ues: Vec<UserEquipment>,
}

/// Forms `M` NOMA groups from `N` zones of `M` UEs each.
pub fn group_users(
    zones: &[Vec<UserEquipment>],
    strategy: GroupingStrategy,
    seed: u64,
) -> Result<Vec<NomaGroup>> {
    let n_zones = zones.len();
    if n_zones == 0 {
        return Err(Error::config("no zones to group"));
    }
    let m = zones[0].len();
    if m == 0 || zones.iter().any(|z| z.len() != m) {
        return Err(Error::config("every zone must hold the same number of UEs"));
    }
    let mut zones: Vec<Vec<UserEquipment>> = zones.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut requests: Vec<(String, Complexity)> = zones
        .iter()
        .flatten()
        .map(|u| (u.requested_stream.clone(), u.complexity))
        .collect();
    let reassign = match strategy {
        GroupingStrategy::Wlbh => {
            requests.sort_by_key(|r| r.1);
            true
        }
        GroupingStrategy::Whbl => {
            requests.sort_by_key(|r| std::cmp::Reverse(r.1));
            true
        }
        GroupingStrategy::Wrbr => {
            requests.shuffle(&mut rng);
            true
        }
        GroupingStrategy::ByIndex => false,
    };
    if reassign {
        for (u, (stream, cx)) in zones.iter_mut().flatten().zip(requests) {
            u.requested_stream = stream;
            u.complexity = cx;
        }
        if matches!(strategy, GroupingStrategy::Wlbh | GroupingStrategy::Whbl)
            && zones.iter().any(|z| z.iter().any(|u| u.complexity != z[0].complexity))
        {
            return Err(Error::config(format!(
                "{strategy} needs complexity counts that fill whole zones"
            )));
        }
    }

    let orders: Vec<Vec<usize>> = zones
        .iter()
        .map(|_| {
            let mut idx: Vec<usize> = (0..m).collect();
            if strategy == GroupingStrategy::Wrbr {
                idx.shuffle(&mut rng);
            }
            idx
        })
        .collect();
    Ok((0..m)
        .map(|g| NomaGroup {
            ues: (0..n_zones).map(|z| zones[z][orders[z][g]].clone()).collect(),
        })
        .collect())
}
