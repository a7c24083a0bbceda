//! Reference schemes: minimum-threshold NOMA and bandwidth-split OMA.

use serde::Serialize;

use crate::channel::ChannelState;
use crate::error::{Error, Result};
use crate::phy::{amc_rate, GroupLink};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Baseline {
    NomaMt,
    OmaSimple,
}

/// How the shared resource was divided.
#[derive(Debug, Clone, PartialEq)]
pub enum Allocation {
    /// Transmit power per UE in watts.
    Power(Vec<f64>),
    /// Fraction of the bandwidth per UE; each slice uses the full budget.
    Bandwidth(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub scheme: Baseline,
    pub allocation: Allocation,
    pub rate_bps: Vec<f64>,
    pub per_ue_psnr: Vec<f64>,
    pub psnr: f64,
}

impl BaselineResult {
    /// Share of the budget per UE: `P_n/P_max` for NOMA, and the bandwidth
    /// fraction (time-averaged power share) for OMA.
    pub fn power_coefficients(&self, budget_w: f64) -> Vec<f64> {
        match &self.allocation {
            Allocation::Power(p) => p.iter().map(|x| x / budget_w).collect(),
            Allocation::Bandwidth(rho) => rho.clone(),
        }
    }
}

/// NOMA with every UE except the strongest held at its minimum SINR.
///
/// Given the strongest UE's power `x`, the weaker UEs' minimum powers are
/// affine in `x`, so the budget fixes `x` directly. The strongest UE stops
/// at `γ_max` if the budget would carry it further.
pub fn solve_noma_mt(ch: &ChannelState, link: &GroupLink) -> Result<BaselineResult> {
    ch.validate()?;
    let n = ch.len();
    if link.len() != n {
        return Err(Error::domain("stream count differs from group size"));
    }
    let bounds = link.sinr_bounds()?;
    let top = n - 1;
    let weaker = |x: f64| -> Vec<f64> {
        let mut p = vec![0.0; n];
        p[top] = x;
        let mut tail = x;
        for k in (0..top).rev() {
            p[k] = bounds.gamma_min[k] * (tail + ch.noise_var / ch.gains_sq[k]);
            tail += p[k];
        }
        p
    };
    let t0: f64 = weaker(0.0).iter().sum();
    let slope = weaker(1.0).iter().sum::<f64>() - t0;
    let x_budget = (ch.power_budget_w - t0) / slope;
    let x_cap = bounds.gamma_max[top] * ch.noise_var / ch.gains_sq[top];
    let x_min = bounds.gamma_min[top] * ch.noise_var / ch.gains_sq[top];
    let x = x_budget.min(x_cap);
    if x < x_min * (1.0 - 1e-12) {
        return Err(Error::Infeasible("minimum SINRs exceed the power budget".into()));
    }
    let p = weaker(x.max(x_min));
    let sinr = ch.own_sinrs(&p);
    let per_ue_psnr = link.psnr_in_band(&sinr, &bounds)?;
    let rate_bps = sinr.iter().map(|g| amc_rate(link.bandwidth_hz, *g, link.amc)).collect();
    Ok(BaselineResult {
        scheme: Baseline::NomaMt,
        allocation: Allocation::Power(p),
        rate_bps,
        psnr: per_ue_psnr.iter().sum::<f64>() / n as f64,
        per_ue_psnr,
    })
}

/// Grid resolution of the bandwidth split.
pub const OMA_STEPS: usize = 100;

fn compositions(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut dyn FnMut(&[usize])) {
    if parts == 1 {
        prefix.push(total);
        out(prefix);
        prefix.pop();
        return;
    }
    for k in 1..=total.saturating_sub(parts - 1) {
        prefix.push(k);
        compositions(total - k, parts - 1, prefix, out);
        prefix.pop();
    }
}

/// Orthogonal access: UE `n` gets bandwidth share `ρ_n` at full power, so
/// its rate is `c1·ρ_n·B·log2(1 + |h_n|²P/(c2·σ²))`. The split maximizing
/// the average saturating PSNR is found on a grid of step `1/OMA_STEPS`;
/// ties go to the split closest to uniform, then to the first in
/// lexicographic order.
pub fn solve_oma_simple(ch: &ChannelState, link: &GroupLink) -> Result<BaselineResult> {
    ch.validate()?;
    let n = ch.len();
    if link.len() != n {
        return Err(Error::domain("stream count differs from group size"));
    }
    if n > OMA_STEPS {
        return Err(Error::domain("more UEs than bandwidth grid steps"));
    }
    let full: Vec<f64> = (0..n)
        .map(|k| amc_rate(link.bandwidth_hz, ch.gains_sq[k] * ch.power_budget_w / ch.noise_var, link.amc))
        .collect();
    let uniform = 1.0 / n as f64;
    // (psnr, distance to uniform, split)
    let mut best: Option<(f64, f64, Vec<usize>)> = None;
    compositions(OMA_STEPS, n, &mut Vec::with_capacity(n), &mut |split| {
        let mut sum = 0.0;
        for (k, &s) in split.iter().enumerate() {
            let rate = full[k] * s as f64 / OMA_STEPS as f64;
            match link.streams[k].psnr_of_rate(rate) {
                Ok(q) => sum += q,
                Err(_) => return,
            }
        }
        let avg = sum / n as f64;
        let dist = split
            .iter()
            .map(|&s| (s as f64 / OMA_STEPS as f64 - uniform).abs())
            .fold(0.0, f64::max);
        let better = match &best {
            None => true,
            Some((b, d, _)) => avg > b + 1e-12 || ((avg - b).abs() <= 1e-12 && dist < d - 1e-12),
        };
        if better {
            best = Some((avg, dist, split.to_vec()));
        }
    });
    let (_, _, split) = best.ok_or_else(|| Error::Infeasible("no bandwidth split meets every minimum".into()))?;
    let rho: Vec<f64> = split.iter().map(|&s| s as f64 / OMA_STEPS as f64).collect();
    let rate_bps: Vec<f64> = full.iter().zip(&rho).map(|(r, p)| r * p).collect();
    let per_ue_psnr: Vec<f64> = rate_bps
        .iter()
        .zip(&link.streams)
        .map(|(r, s)| s.psnr_of_rate(*r))
        .collect::<Result<_>>()?;
    Ok(BaselineResult {
        scheme: Baseline::OmaSimple,
        allocation: Allocation::Bandwidth(rho),
        rate_bps,
        psnr: per_ue_psnr.iter().sum::<f64>() / n as f64,
        per_ue_psnr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::AmcParams;
    use crate::quality::RdLibrary;

    fn link(names: &[&str]) -> GroupLink {
        let lib = RdLibrary::default_fixtures();
        let s = names.iter().map(|n| lib.get(n, 0.05).unwrap().clone()).collect();
        GroupLink::new(s, AmcParams::default(), 140e3).unwrap()
    }

    fn channel(g: Vec<f64>, snr: f64) -> ChannelState {
        ChannelState::new(g, ChannelState::noise_for_snr(1.0, snr), 140e3, 1.0, 2.0).unwrap()
    }

    #[test]
    fn noma_mt_holds_weak_ue_at_minimum() {
        let l = link(&["Foreman", "Football"]);
        let ch = channel(vec![0.3, 0.9], 20.0);
        let r = solve_noma_mt(&ch, &l).unwrap();
        assert!((r.per_ue_psnr[0] - l.q_min()[0]).abs() < 1e-9);
        let Allocation::Power(p) = &r.allocation else { panic!() };
        let b = l.sinr_bounds().unwrap();
        let capped = (ch.own_sinrs(p)[1] - b.gamma_max[1]).abs() < 1e-9 * b.gamma_max[1];
        assert!(capped || (p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noma_mt_reports_infeasible() {
        let l = link(&["Mobile", "Football"]);
        assert!(solve_noma_mt(&channel(vec![0.001, 0.002], 0.0), &l).unwrap_err().is_infeasible());
    }

    #[test]
    fn oma_symmetric_users_split_evenly() {
        let l = link(&["Crew", "Crew"]);
        let r = solve_oma_simple(&channel(vec![0.5, 0.5], 12.0), &l).unwrap();
        assert_eq!(r.allocation, Allocation::Bandwidth(vec![0.5, 0.5]));
    }

    #[test]
    fn oma_single_user_takes_everything() {
        let l = link(&["Crew"]);
        let r = solve_oma_simple(&channel(vec![0.5], 20.0), &l).unwrap();
        assert_eq!(r.allocation, Allocation::Bandwidth(vec![1.0]));
    }

    #[test]
    fn three_user_compositions_count() {
        let mut count = 0;
        compositions(10, 3, &mut Vec::new(), &mut |s| {
            assert_eq!(s.iter().sum::<usize>(), 10);
            count += 1;
        });
        assert_eq!(count, 36);
    }
}
