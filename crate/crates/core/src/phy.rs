//! AMC rate mapping, PSNR↔SINR composition and the linear feasible power set.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelState;
use crate::error::{Error, Result};
use crate::quality::RdParams;

/// Rate adjustment `c1` and SNR gap `c2` of the AMC scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmcParams {
    pub c1: f64,
    pub c2: f64,
}

impl Default for AmcParams {
    fn default() -> Self {
        AmcParams { c1: 0.905, c2: 1.34 }
    }
}

impl AmcParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c1 <= 1.0) {
            return Err(Error::domain(format!("c1 must lie in (0, 1], got {}", self.c1)));
        }
        if !(self.c2 >= 1.0) {
            return Err(Error::domain(format!("c2 must be at least 1, got {}", self.c2)));
        }
        Ok(())
    }
}

/// Achievable rate `c1·B·log2(1 + γ/c2)` in bit/s.
pub fn amc_rate(bandwidth_hz: f64, gamma: f64, amc: AmcParams) -> f64 {
    amc.c1 * bandwidth_hz * (1.0 + gamma / amc.c2).log2()
}

/// SINR needed to carry `rate_bps`.
pub fn sinr_for_rate(bandwidth_hz: f64, rate_bps: f64, amc: AmcParams) -> f64 {
    amc.c2 * ((rate_bps / (amc.c1 * bandwidth_hz)).exp2() - 1.0)
}

/// Decoded PSNR of a stream received at SINR `gamma`; saturates at `q_max`.
pub fn psnr_of_sinr(params: &RdParams, amc: AmcParams, bandwidth_hz: f64, gamma: f64) -> Result<f64> {
    params.psnr_of_rate(amc_rate(bandwidth_hz, gamma, amc))
}

/// The SINR at which a stream decodes at exactly `q_db`.
pub fn sinr_bound_of_psnr(params: &RdParams, amc: AmcParams, bandwidth_hz: f64, q_db: f64) -> Result<f64> {
    let rate = params.rate_of_psnr(q_db)?;
    if !(rate > 0.0) {
        return Err(Error::domain(format!("{}: F(q) = {rate} is not positive", params.stream)));
    }
    Ok(sinr_for_rate(bandwidth_hz, rate, amc))
}

/// Per-UE SINR bounds equivalent to the PSNR bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrBounds {
    pub gamma_min: Vec<f64>,
    pub gamma_max: Vec<f64>,
}

impl SinrBounds {
    pub fn validate(&self) -> Result<()> {
        if self.gamma_min.len() != self.gamma_max.len() {
            return Err(Error::domain("SINR bound vectors differ in length"));
        }
        for (lo, hi) in self.gamma_min.iter().zip(&self.gamma_max) {
            if !(*lo >= 0.0 && lo < hi) || !hi.is_finite() {
                return Err(Error::domain(format!("invalid SINR band [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.gamma_min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma_min.is_empty()
    }
}

/// The streams of one NOMA group together with the link they share.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupLink {
    pub streams: Vec<RdParams>,
    pub amc: AmcParams,
    pub bandwidth_hz: f64,
}

impl GroupLink {
    pub fn new(streams: Vec<RdParams>, amc: AmcParams, bandwidth_hz: f64) -> Result<Self> {
        amc.validate()?;
        for s in &streams {
            s.validate()?;
        }
        if !(bandwidth_hz > 0.0) {
            return Err(Error::domain("bandwidth must be positive"));
        }
        Ok(GroupLink { streams, amc, bandwidth_hz })
    }

    pub fn len(&self) -> usize {
        self.streams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }

    pub fn q_min(&self) -> Vec<f64> {
        self.streams.iter().map(|s| s.q_min_db).collect()
    }

    pub fn q_max(&self) -> Vec<f64> {
        self.streams.iter().map(|s| s.q_max_db).collect()
    }

    pub fn sinr_bounds(&self) -> Result<SinrBounds> {
        let mut gamma_min = Vec::with_capacity(self.len());
        let mut gamma_max = Vec::with_capacity(self.len());
        for s in &self.streams {
            gamma_min.push(sinr_bound_of_psnr(s, self.amc, self.bandwidth_hz, s.q_min_db)?);
            gamma_max.push(sinr_bound_of_psnr(s, self.amc, self.bandwidth_hz, s.q_max_db)?);
        }
        let b = SinrBounds { gamma_min, gamma_max };
        b.validate()?;
        Ok(b)
    }

    /// Saturating per-UE PSNR; errors below the base-layer SINR.
    pub fn psnr(&self, n: usize, gamma: f64) -> Result<f64> {
        psnr_of_sinr(&self.streams[n], self.amc, self.bandwidth_hz, gamma)
    }

    /// PSNR from the raw inverse model, without clamping to the band.
    pub fn psnr_unclamped(&self, n: usize, gamma: f64) -> Result<f64> {
        self.streams[n].psnr_of_rate_unclamped(amc_rate(self.bandwidth_hz, gamma, self.amc))
    }

    /// Per-UE PSNRs for a vector of own-stream SINRs.
    pub fn psnr_vector(&self, gammas: &[f64]) -> Result<Vec<f64>> {
        gammas.iter().enumerate().map(|(n, g)| self.psnr(n, *g)).collect()
    }

    /// Per-UE PSNRs for SINRs that meet `γ_min` up to solver round-off;
    /// shortfalls within `1e-6` relative are read as exactly `γ_min`.
    pub fn psnr_in_band(&self, gammas: &[f64], bounds: &SinrBounds) -> Result<Vec<f64>> {
        gammas
            .iter()
            .zip(&bounds.gamma_min)
            .enumerate()
            .map(|(n, (&g, &lo))| {
                if g < lo && g >= lo * (1.0 - 1e-6) {
                    self.psnr(n, lo)
                } else {
                    self.psnr(n, g)
                }
            })
            .collect()
    }

    /// Average PSNR objective over SINR space:
    /// `−(10/N)·log10 Π (θ/(c1·B·log2(1+z/c2) − β) − α) + 20·log10 255`.
    pub fn psi(&self, z: &[f64]) -> Result<f64> {
        let n = self.len() as f64;
        let mut log_prod = 0.0;
        for (s, &zn) in self.streams.iter().zip(z) {
            let excess = amc_rate(self.bandwidth_hz, zn, self.amc) - s.beta;
            let factor = s.theta / excess - s.alpha;
            if !(excess > 0.0) || !(factor > 0.0) {
                return Err(Error::domain(format!("psi undefined at z = {zn} for {}", s.stream)));
            }
            log_prod += factor.log10();
        }
        Ok(-10.0 / n * log_prod + 20.0 * 255f64.log10())
    }
}

/// Which constraint a row of the feasible power set encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Budget,
    NonNegative(usize),
    SinrMin(usize),
    SinrMax(usize),
}

/// One row `coeffs · p ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerRow {
    pub kind: RowKind,
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl PowerRow {
    pub fn slack(&self, p: &[f64]) -> f64 {
        self.rhs - self.coeffs.iter().zip(p).map(|(a, x)| a * x).sum::<f64>()
    }
}

/// The polytope of power vectors meeting the budget and the SINR band.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasiblePowerSet {
    pub rows: Vec<PowerRow>,
    pub channel: ChannelState,
    pub bounds: SinrBounds,
}

/// Linearizes `γ_min ≤ γ_n(P) ≤ γ_max` and adds the budget and sign rows.
///
/// Each SINR row is divided through by `|h_n|²`, so `γ_n(P) ≥ γ` reads
/// `−P_n + γ·Σ_{i>n} P_i ≤ −γ·σ²/|h_n|²`.
pub fn build_feasible_set(ch: &ChannelState, bounds: &SinrBounds) -> Result<FeasiblePowerSet> {
    ch.validate()?;
    bounds.validate()?;
    let n = ch.len();
    if bounds.len() != n {
        return Err(Error::domain("SINR bounds do not match the group size"));
    }
    let mut rows = Vec::with_capacity(3 * n + 1);
    rows.push(PowerRow { kind: RowKind::Budget, coeffs: vec![1.0; n], rhs: ch.power_budget_w });
    for k in 0..n {
        let mut c = vec![0.0; n];
        c[k] = -1.0;
        rows.push(PowerRow { kind: RowKind::NonNegative(k), coeffs: c, rhs: 0.0 });
    }
    for k in 0..n {
        let noise = ch.noise_var / ch.gains_sq[k];
        let g_lo = bounds.gamma_min[k];
        if g_lo > 0.0 {
            let mut c = vec![0.0; n];
            c[k] = -1.0;
            c.iter_mut().skip(k + 1).for_each(|x| *x = g_lo);
            rows.push(PowerRow { kind: RowKind::SinrMin(k), coeffs: c, rhs: -g_lo * noise });
        }
        let g_hi = bounds.gamma_max[k];
        let mut c = vec![0.0; n];
        c[k] = 1.0;
        c.iter_mut().skip(k + 1).for_each(|x| *x = -g_hi);
        rows.push(PowerRow { kind: RowKind::SinrMax(k), coeffs: c, rhs: g_hi * noise });
    }
    Ok(FeasiblePowerSet { rows, channel: ch.clone(), bounds: bounds.clone() })
}

impl FeasiblePowerSet {
    pub fn dim(&self) -> usize {
        self.channel.len()
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        p.len() == self.dim() && self.rows.iter().all(|r| r.slack(p) >= -tol)
    }

    /// Componentwise-smallest powers that reach SINR targets `z`, solved
    /// from the strongest UE down.
    pub fn min_power_for(&self, z: &[f64]) -> Vec<f64> {
        let ch = &self.channel;
        let mut p = vec![0.0; ch.len()];
        let mut tail = 0.0;
        for k in (0..ch.len()).rev() {
            p[k] = z[k] * (tail + ch.noise_var / ch.gains_sq[k]);
            tail += p[k];
        }
        p
    }

    /// Whether the set is empty: the cheapest way to meet every `γ_min`
    /// already exceeds the budget.
    pub fn is_empty(&self) -> bool {
        let p = self.min_power_for(&self.bounds.gamma_min);
        p.iter().sum::<f64>() > self.channel.power_budget_w * (1.0 + 1e-12)
    }

    /// Checks the SIC decodability conditions `γ_n^ñ(P) ≥ γ_ñ^min` for every
    /// stronger detector `n > ñ`.
    pub fn sic_conditions_hold(&self, p: &[f64], rel_tol: f64) -> bool {
        let ch = &self.channel;
        let n = ch.len();
        for target in 0..n {
            let tail: f64 = p[target + 1..].iter().sum();
            for detector in target + 1..n {
                let g = ch.gains_sq[detector];
                let gamma = g * p[target] / (g * tail + ch.noise_var);
                if gamma < self.bounds.gamma_min[target] * (1.0 - rel_tol) {
                    return false;
                }
            }
        }
        true
    }
}
