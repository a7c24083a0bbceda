//! Globally optimal power allocation by polyblock outer approximation.
//!
//! The average-PSNR objective is an increasing function `ψ` of the SINR
//! vector, so the problem is a monotonic program over
//! `Z = G ∩ H`, where `G` (normal) collects SINR vectors dominated by some
//! feasible power vector and `H` (conormal) is `z ⪰ γ_min`. A shrinking
//! sequence of polyblocks encloses `Z`; each vertex is projected onto the
//! upper boundary of `G` with a Dinkelbach iteration whose subproblem is a
//! max–min linear program.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::channel::PowerVector;
use crate::error::{Error, Result};
use crate::lp::{solve_lp, Constraint, LinearProgram};
use crate::phy::{FeasiblePowerSet, GroupLink, SinrBounds};

/// Rule for picking the vertex to refine next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Largest bound `ψ(v)`. Stopping on this vertex certifies the
    /// incumbent to within the `ε`-induced gap.
    UpperBound,
    /// Largest `ψ(Φ(v))`. Can stop on a vertex while another vertex
    /// still bounds a better point.
    Projection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub selection: Selection,
    /// Relative distance `‖v − Φ(v)‖/‖v‖` (Euclidean) at which the
    /// selected vertex is accepted.
    pub epsilon: f64,
    /// Dinkelbach stopping threshold on the max–min residual.
    pub delta: f64,
    pub max_iterations: usize,
    pub max_dinkelbach: usize,
    pub lp_tolerance: f64,
    /// Drop dominated and `H`-infeasible vertices each iteration.
    pub prune: bool,
    /// Multiplier on the initial vertex; values above 1 loosen the first box.
    pub initial_scale: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            selection: Selection::UpperBound,
            epsilon: 1e-3,
            delta: 1e-6,
            max_iterations: 10_000,
            max_dinkelbach: 100,
            lp_tolerance: 1e-10,
            prune: true,
            initial_scale: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.delta > 0.0 && self.lp_tolerance > 0.0) {
            return Err(Error::config("solver tolerances must be positive"));
        }
        if self.max_iterations == 0 || self.max_dinkelbach == 0 {
            return Err(Error::config("iteration caps must be at least 1"));
        }
        if !(self.initial_scale >= 1.0) {
            return Err(Error::config("initial_scale must be at least 1"));
        }
        Ok(())
    }
}

/// Result of projecting a vertex onto the boundary of `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Largest `α` with `α·v ∈ G`.
    pub lambda: f64,
    /// `Φ(v) = λ·v`.
    pub point: Vec<f64>,
    /// Power vector attaining `γ(P) ⪰ Φ(v)`.
    pub power: Vec<f64>,
    /// Dinkelbach iterates, starting with the warm-start value.
    pub lambda_trace: Vec<f64>,
    /// Terminal residual `max_P min_n w_n·(f_n − λ·v_n·ξ_n)`, with
    /// `w_n = 1/(v_n·ξ_n)` at the previous iterate.
    pub residual: f64,
    pub lp_solves: usize,
}

/// Max–min subproblem `max_{P∈𝒫} min_n w_n·(f_n(P) − λ·v_n·ξ_n(P))` in
/// epigraph form, with `f_n = |h_n|²P_n`, `ξ_n = |h_n|²Σ_{i>n}P_i + σ²` and
/// positive weights `w`.
fn dinkelbach_step(
    v: &[f64],
    fset: &FeasiblePowerSet,
    lambda: f64,
    weights: &[f64],
    tol: f64,
) -> Result<(f64, Vec<f64>)> {
    let ch = &fset.channel;
    let n = ch.len();
    // Variables: P_0..P_{n-1}, t (free).
    let mut obj = vec![0.0; n + 1];
    obj[n] = 1.0;
    let mut lp = LinearProgram::new(obj).with_free(n);
    for k in 0..n {
        if v[k] <= 0.0 {
            continue;
        }
        let g = ch.gains_sq[k] * weights[k];
        let lv = lambda * v[k];
        let mut c = vec![0.0; n + 1];
        c[k] = -g;
        for x in c.iter_mut().take(n).skip(k + 1) {
            *x = lv * g;
        }
        c[n] = 1.0;
        lp.push(Constraint::le(c, -lv * ch.noise_var * weights[k]));
    }
    for row in &fset.rows {
        let mut c = row.coeffs.clone();
        c.push(0.0);
        lp.push(Constraint::le(c, row.rhs));
    }
    let sol = solve_lp(&lp, tol)?;
    let mut p = sol.x;
    p.truncate(n);
    p.iter_mut().for_each(|x| *x = x.max(0.0));
    Ok((sol.objective, p))
}

/// `ξ_n(P)` for every UE.
fn interference(fset: &FeasiblePowerSet, p: &[f64]) -> Vec<f64> {
    let ch = &fset.channel;
    let mut tail = 0.0;
    let mut out = vec![0.0; p.len()];
    for k in (0..p.len()).rev() {
        out[k] = ch.gains_sq[k] * tail + ch.noise_var;
        tail += p[k];
    }
    out
}

fn ratio_min(v: &[f64], fset: &FeasiblePowerSet, p: &[f64]) -> f64 {
    let gammas = fset.channel.own_sinrs(p);
    gammas
        .iter()
        .zip(v)
        .filter(|(_, &vk)| vk > 0.0)
        .map(|(g, vk)| g / vk)
        .fold(f64::INFINITY, f64::min)
}

/// Projects `v` onto the upper boundary of `G` starting from `λ = 0`.
pub fn project(v: &[f64], fset: &FeasiblePowerSet, cfg: &SolverConfig) -> Result<Projection> {
    project_from(v, fset, cfg, 0.0)
}

/// Dinkelbach projection warm-started at `lambda0`, which must satisfy
/// `lambda0·v ∈ G` (e.g. a parent vertex's `λ` for one of its children).
pub fn project_from(
    v: &[f64],
    fset: &FeasiblePowerSet,
    cfg: &SolverConfig,
    lambda0: f64,
) -> Result<Projection> {
    if v.len() != fset.dim() || v.iter().any(|x| !(*x >= 0.0)) || !v.iter().any(|x| *x > 0.0) {
        return Err(Error::domain("projection needs a nonnegative, nonzero vertex"));
    }
    let mut lambda = lambda0.max(0.0);
    let mut trace = vec![lambda];
    // Weights 1/(v_n·ξ_n) at the previous iterate make each term approximate
    // the ratio gap `γ_n/v_n − λ`, which keeps convergence superlinear;
    // ξ_n(0) = σ² seeds them.
    let weigh = |xi: &[f64]| -> Vec<f64> {
        v.iter().zip(xi).map(|(vn, x)| if *vn > 0.0 { 1.0 / (vn * x) } else { 0.0 }).collect()
    };
    let mut weights = weigh(&vec![fset.channel.noise_var; v.len()]);
    for it in 0..cfg.max_dinkelbach {
        let (residual, power) = dinkelbach_step(v, fset, lambda, &weights, cfg.lp_tolerance)?;
        let next = ratio_min(v, fset, &power);
        if residual <= cfg.delta {
            // `next` is attained by `power`; keep the larger certified value.
            let lambda = if residual >= -cfg.delta { lambda.max(next) } else { next };
            if lambda > *trace.last().expect("nonempty") {
                trace.push(lambda);
            }
            return Ok(Projection {
                lambda,
                point: v.iter().map(|x| lambda * x).collect(),
                power,
                lambda_trace: trace,
                residual,
                lp_solves: it + 1,
            });
        }
        lambda = next;
        trace.push(lambda);
        weights = weigh(&interference(fset, &power));
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_dinkelbach,
        detail: format!("Dinkelbach projection stalled at lambda = {lambda}"),
    })
}

/// One vertex of the polyblock with its cached projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub z: Vec<f64>,
    pub projection: Option<Projection>,
    /// `ψ(Φ(z))`, or `−∞` when `Φ(z)` falls outside `H`.
    pub score: f64,
    /// `ψ` at `z` clipped into the SINR band: an upper bound over the box.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub z: Vec<f64>,
    pub power: Vec<f64>,
    pub psi: f64,
}

/// Current outer approximation of the feasible SINR region.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyblock {
    pub vertices: Vec<Vertex>,
    pub iteration: usize,
    pub best: Option<Incumbent>,
    pub upper_bound: f64,
}

/// Removes vertices whose box misses `H` and vertices dominated by another.
pub fn prune_vertices(mut pb: Polyblock, bounds: &SinrBounds) -> Polyblock {
    pb.vertices.retain(|v| in_h(&v.z, bounds));
    let n = pb.vertices.len();
    let mut keep = vec![true; n];
    for i in 0..n {
        for j in 0..n {
            if i == j || !keep[j] {
                continue;
            }
            let (a, b) = (&pb.vertices[i].z, &pb.vertices[j].z);
            if a.iter().zip(b).all(|(x, y)| x <= y) && (a != b || j < i) {
                keep[i] = false;
                break;
            }
        }
    }
    let mut it = keep.into_iter();
    pb.vertices.retain(|_| it.next().expect("same length"));
    pb
}

const H_SLACK: f64 = 1e-9;

fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y)
}

fn in_h(z: &[f64], bounds: &SinrBounds) -> bool {
    z.iter().zip(&bounds.gamma_min).all(|(x, lo)| *x >= lo * (1.0 - H_SLACK))
}

/// `ψ` after clipping into the SINR band, which leaves `ψ` unchanged on
/// `Z` and keeps it finite on vertices above `γ_max`.
fn psi_clipped(link: &GroupLink, bounds: &SinrBounds, z: &[f64]) -> Result<f64> {
    let clipped: Vec<f64> = z
        .iter()
        .zip(bounds.gamma_min.iter().zip(&bounds.gamma_max))
        .map(|(x, (lo, hi))| x.clamp(*lo, *hi))
        .collect();
    link.psi(&clipped)
}

/// Per-iteration convergence record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationTrace {
    pub iteration: usize,
    pub vertices: usize,
    pub upper_bound: f64,
    pub incumbent: f64,
    /// `‖v − Φ(v)‖/‖v‖` of the selected vertex.
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyblockSolution {
    pub power: PowerVector,
    /// Mean saturating PSNR at `power`.
    pub psnr: f64,
    pub per_ue_psnr: Vec<f64>,
    pub sinr: Vec<f64>,
    /// `ψ` at the SINRs the returned power vector achieves.
    pub incumbent_psi: f64,
    /// `ψ(v) − ψ(Φ(v))` at the terminal vertex.
    pub bound_gap: f64,
    /// Largest vertex bound minus the incumbent at termination.
    pub global_gap: f64,
    pub relative_gap: f64,
    pub iterations: usize,
    pub lp_solves: usize,
    pub trace: Vec<IterationTrace>,
    /// Every Dinkelbach `λ` sequence computed during the solve.
    pub lambda_traces: Vec<Vec<f64>>,
    pub max_residual: f64,
}

fn cmp_vertices(rule: Selection, a: &Vertex, b: &Vertex, bound_a: f64, bound_b: f64) -> Ordering {
    let primary = match rule {
        Selection::UpperBound => bound_b.total_cmp(&bound_a),
        Selection::Projection => b.score.total_cmp(&a.score).then(bound_b.total_cmp(&bound_a)),
    };
    // Ties go to the lexicographically smallest vertex.
    primary
        .then_with(|| {
            a.z.iter()
                .zip(&b.z)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

/// Polyblock outer approximation for the average-PSNR power allocation.
pub fn solve_polyblock(fset: &FeasiblePowerSet, link: &GroupLink, cfg: &SolverConfig) -> Result<PolyblockSolution> {
    solve_polyblock_observed(fset, link, cfg, |_| {})
}

/// [`solve_polyblock`], handing the polyblock to `observe` at the start of
/// every iteration.
pub fn solve_polyblock_observed(
    fset: &FeasiblePowerSet,
    link: &GroupLink,
    cfg: &SolverConfig,
    mut observe: impl FnMut(&Polyblock),
) -> Result<PolyblockSolution> {
    cfg.validate()?;
    let ch = &fset.channel;
    let bounds = &fset.bounds;
    let n = ch.len();
    if link.len() != n {
        return Err(Error::domain("stream count differs from group size"));
    }

    let mut lp_solves = 0;
    let mut lambda_traces = Vec::new();
    let mut max_residual: f64 = 0.0;
    let mut best: Option<Incumbent> = None;

    let mut make_vertex = |z: Vec<f64>, warm: f64, best: &mut Option<Incumbent>| -> Result<Vertex> {
        // Z lies below γ_max, so clipping keeps the polyblock an outer
        // approximation and removes the flat saturated part of ψ.
        let z: Vec<f64> = z.iter().zip(&bounds.gamma_max).map(|(x, hi)| x.min(*hi)).collect();
        let proj = project_from(&z, fset, cfg, warm)?;
        lp_solves += proj.lp_solves;
        max_residual = max_residual.max(proj.residual);
        lambda_traces.push(proj.lambda_trace.clone());
        let score = if in_h(&proj.point, bounds) {
            psi_clipped(link, bounds, &proj.point)?
        } else {
            f64::NEG_INFINITY
        };
        if score.is_finite() {
            // γ(P) ⪰ Φ(z), so the power vector itself may score higher.
            let achieved = psi_clipped(link, bounds, &fset.channel.own_sinrs(&proj.power))?.max(score);
            if best.as_ref().is_none_or(|b| achieved > b.psi) {
                *best = Some(Incumbent { z: proj.point.clone(), power: proj.power.clone(), psi: achieved });
            }
        }
        let bound = psi_clipped(link, bounds, &z)?;
        Ok(Vertex { z, projection: Some(proj), score, bound })
    };

    let v1: Vec<f64> = (0..n)
        .map(|k| cfg.initial_scale * ch.gains_sq[k] * ch.power_budget_w / ch.noise_var)
        .collect();
    if !in_h(&v1, bounds) {
        return Err(Error::Infeasible("full power cannot reach every minimum SINR".into()));
    }
    let root = match make_vertex(v1, 0.0, &mut best) {
        Err(Error::Infeasible(msg)) => return Err(Error::Infeasible(msg)),
        other => other?,
    };
    let mut pb = Polyblock { vertices: vec![root], iteration: 0, best: None, upper_bound: f64::INFINITY };
    let mut trace = Vec::new();

    for j in 1..=cfg.max_iterations {
        pb.iteration = j;
        if pb.vertices.is_empty() {
            break;
        }
        let ub: Vec<f64> = pb.vertices.iter().map(|v| v.bound).collect();
        pb.upper_bound = ub.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        pb.best = best.clone();
        observe(&pb);

        let sel = (0..pb.vertices.len())
            .min_by(|&a, &b| cmp_vertices(cfg.selection, &pb.vertices[a], &pb.vertices[b], ub[a], ub[b]))
            .expect("nonempty");
        let chosen = pb.vertices[sel].clone();
        let proj = chosen.projection.as_ref().expect("vertices carry projections");
        let rel_gap = (1.0 - proj.lambda).max(0.0);
        let incumbent = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.psi);
        trace.push(IterationTrace {
            iteration: j,
            vertices: pb.vertices.len(),
            upper_bound: pb.upper_bound,
            incumbent,
            relative_gap: rel_gap,
        });

        if chosen.score.is_finite() && rel_gap <= cfg.epsilon {
            let inc = best.clone().expect("finite score implies an incumbent");
            let bound_gap = ub[sel] - chosen.score;
            return finish(fset, link, inc, bound_gap, pb.upper_bound, rel_gap, j, lp_solves, trace, lambda_traces, max_residual);
        }

        // Cut the box above the projected point out of the polyblock: every
        // vertex strictly above it is replaced by its n children.
        // The SINRs the projection's power vector reaches dominate Φ(v) and
        // lie in Z after clipping, so they cut a larger box when the
        // selected vertex still sits strictly above them.
        let reached: Vec<f64> = ch
            .own_sinrs(&proj.power)
            .iter()
            .zip(&bounds.gamma_max)
            .zip(&proj.point)
            .map(|((g, hi), x)| g.min(*hi).max(*x))
            .collect();
        let x = if chosen.z.iter().zip(&reached).all(|(a, b)| a > b) { &reached } else { &proj.point };
        let mut above = Vec::new();
        for (i, v) in std::mem::take(&mut pb.vertices).into_iter().enumerate() {
            if i == sel || v.z.iter().zip(x).all(|(a, b)| a > b) {
                above.push(v);
            } else {
                pb.vertices.push(v);
            }
        }
        let mut fresh: Vec<(Vec<f64>, f64)> = Vec::new();
        for parent in &above {
            let warm = parent.projection.as_ref().map_or(0.0, |p| p.lambda.min(1.0));
            for k in 0..n {
                let mut z = parent.z.clone();
                z[k] = x[k].min(z[k]);
                // The other coordinates are the parent's, which lie in H.
                if z[k] < bounds.gamma_min[k] * (1.0 - H_SLACK) {
                    continue;
                }
                fresh.push((z, warm));
            }
        }
        if cfg.prune {
            // Survivors are mutually non-dominated and none lies below a removed
            // parent, so a child never dominates a survivor: only children
            // need checking, against survivors and each other.
            let mut keep = vec![true; fresh.len()];
            for i in 0..fresh.len() {
                let z = &fresh[i].0;
                if pb.vertices.iter().any(|w| dominates(&w.z, z))
                    || (0..fresh.len()).any(|j| j != i && keep[j] && dominates(&fresh[j].0, z) && (fresh[j].0 != *z || j < i))
                {
                    keep[i] = false;
                }
            }
            let mut it = keep.into_iter();
            fresh.retain(|_| it.next().expect("same length"));
        }
        for (z, warm) in fresh {
            let child = make_vertex(z, warm, &mut best)?;
            pb.vertices.push(child);
        }
    }

    match best {
        Some(inc) if pb.vertices.is_empty() => {
            // Every remaining box lay outside H: the incumbent is optimal.
            finish(fset, link, inc, 0.0, f64::NEG_INFINITY, 0.0, pb.iteration, lp_solves, trace, lambda_traces, max_residual)
        }
        None if pb.vertices.is_empty() => Err(Error::Infeasible("no SINR vector meets every minimum".into())),
        _ => Err(Error::NonConvergence {
            iterations: cfg.max_iterations,
            detail: format!(
                "polyblock with {} vertices, bound {:.6}, incumbent {:.6}",
                pb.vertices.len(),
                pb.upper_bound,
                best.map_or(f64::NAN, |b| b.psi)
            ),
        }),
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    fset: &FeasiblePowerSet,
    link: &GroupLink,
    inc: Incumbent,
    bound_gap: f64,
    upper_bound: f64,
    relative_gap: f64,
    iterations: usize,
    lp_solves: usize,
    trace: Vec<IterationTrace>,
    lambda_traces: Vec<Vec<f64>>,
    max_residual: f64,
) -> Result<PolyblockSolution> {
    let sinr = fset.channel.own_sinrs(&inc.power);
    let per_ue_psnr = link.psnr_in_band(&sinr, &fset.bounds)?;
    let psnr = per_ue_psnr.iter().sum::<f64>() / per_ue_psnr.len() as f64;
    Ok(PolyblockSolution {
        power: PowerVector(inc.power),
        psnr,
        per_ue_psnr,
        sinr,
        incumbent_psi: inc.psi,
        bound_gap,
        global_gap: (upper_bound - inc.psi).max(0.0),
        relative_gap,
        iterations,
        lp_solves,
        trace,
        lambda_traces,
        max_residual,
    })
}

/// Writes an iteration trace as CSV.
pub fn write_trace<W: Write>(trace: &[IterationTrace], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for t in trace {
        w.serialize(t)?;
    }
    w.flush()?;
    Ok(())
}
