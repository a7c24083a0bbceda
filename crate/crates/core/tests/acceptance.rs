//! The ten acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary so the lines always print. Failing criteria are
//! reported but only fail the run with `ACCEPTANCE_STRICT=1`.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Instant;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use noma_video::channel::GroupingStrategy;
use noma_video::greedy::{solve_greedy, GreedyConfig};
use noma_video::harness::report::aggregate;
use noma_video::harness::{gop_layer_bytes, grouping_compare, ScenarioConfig, Scheme, SvcLayering, TrialRecord};
use noma_video::lp::solve_lp;
use noma_video::monotonic::{solve_polyblock, SolverConfig};
use noma_video::packetizer::{
    assemble_tb, erasure_recoverability, layer_loss_probability, layout_tsb, Side, UxpProfile,
};
use noma_video::quality::RdLibrary;
use noma_video::Error;

use common::rational::{random_lp, vertex_optimum};
use common::{average_psnr, grid_optimum, instances, sinr};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// The instance set shared by the first two criteria.
fn oracle_instances() -> Vec<common::Instance> {
    instances(0xACCE_0001, 25, 2, &[10.0, 15.0, 20.0, 25.0, 30.0])
}

fn c1_oracle_optimality() -> Verdict {
    let worst = oracle_instances()
        .par_iter()
        .map(|inst| {
            let pb = solve_polyblock(&inst.fset, &inst.link, &SolverConfig::default()).expect("polyblock");
            let own = average_psnr(inst, &pb.power.0).expect("polyblock output meets every minimum");
            let grid = grid_optimum(inst, 2000);
            (own - grid).abs().max((pb.psnr - own).abs())
        })
        .reduce(|| 0.0, f64::max);
    verdict(worst <= 0.05, format!("max |polyblock - grid| = {worst:.2e} dB over 25 instances (tol 0.05)"))
}

fn c2_greedy_near_optimal() -> Verdict {
    // Polyblock stops within its ε gap of the optimum, so "never above"
    // allows 1e-6 dB of solver tolerance.
    let (mut below, mut above) = (0.0f64, f64::NEG_INFINITY);
    for inst in oracle_instances() {
        let pb = solve_polyblock(&inst.fset, &inst.link, &SolverConfig::default()).expect("polyblock");
        let gr = solve_greedy(&inst.channel, &inst.link, &GreedyConfig { n_blocks: 100 }).expect("greedy");
        below = below.max(pb.psnr - gr.psnr);
        above = above.max(gr.psnr - pb.psnr);
    }
    verdict(
        below <= 0.3 && above <= 1e-6,
        format!("max(polyblock - greedy) = {below:.4} dB (tol 0.3), max(greedy - polyblock) = {above:.1e} dB (tol 1e-6)"),
    )
}

/// The default scenario run under all three grouping strategies; WLBH is
/// the default strategy, so its records are the plain simulation output.
struct Scenario {
    cfg: ScenarioConfig,
    records: Vec<TrialRecord>,
}

impl Scenario {
    fn run() -> Scenario {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/default_scenario.toml");
        let cfg = ScenarioConfig::load(path).expect("default scenario");
        let strategies = [GroupingStrategy::Wlbh, GroupingStrategy::Wrbr, GroupingStrategy::Whbl];
        let records = grouping_compare(&cfg, &strategies).expect("scenario runs");
        Scenario { cfg, records }
    }

    fn default_records(&self) -> Vec<TrialRecord> {
        self.records.iter().filter(|r| r.strategy == self.cfg.grouping).cloned().collect()
    }
}

fn c3_table1_shape(sc: &Scenario) -> Verdict {
    let summary = aggregate(&sc.default_records()).expect("records");
    let mut pass = true;
    let mut parts = Vec::new();
    for scheme in [Scheme::Polyblock, Scheme::Greedy] {
        let c: Vec<f64> = [10.0, 20.0, 30.0].iter().map(|&s| summary.weak_coeff(s, scheme).unwrap_or(f64::NAN)).collect();
        pass &= c.iter().all(|x| *x > 0.5) && c[0] < c[1] && c[1] < c[2];
        parts.push(format!("{scheme} {:.3}/{:.3}/{:.3}", c[0], c[1], c[2]));
    }
    verdict(pass, format!("weaker-UE coefficient at 10/20/30 dB: {}", parts.join(", ")))
}

fn c4_fig4_ordering(sc: &Scenario) -> Verdict {
    // Solver ordering is an optimality claim and is checked on the
    // continuous PSNR the solvers maximize; the gap to the baselines is a
    // delivered-quality claim and is checked after SVC rate snapping.
    let summary = aggregate(&sc.default_records()).expect("records");
    let mut pass = true;
    let mut min_order = f64::INFINITY;
    let mut min_gap = f64::INFINITY;
    let mut snapped_order = f64::INFINITY;
    for &snr in &[10.0, 15.0, 20.0, 25.0, 30.0] {
        let row = |s| summary.fig4_at(snr, s).expect("fig4 row");
        let (pb, gr) = (row(Scheme::Polyblock), row(Scheme::Greedy));
        let base = row(Scheme::NomaMt).mean_psnr_db.max(row(Scheme::Oma).mean_psnr_db);
        let order = pb.mean_continuous_psnr_db - gr.mean_continuous_psnr_db;
        let gap = gr.mean_psnr_db.min(pb.mean_psnr_db) - base;
        pass &= order >= -1e-9 && gap > 0.0;
        min_order = min_order.min(order);
        min_gap = min_gap.min(gap);
        snapped_order = snapped_order.min(pb.mean_psnr_db - gr.mean_psnr_db);
    }
    verdict(
        pass,
        format!(
            "min(polyblock - greedy) = {min_order:.4} dB continuous ({snapped_order:.4} snapped); \
             min(proposed - best baseline) = {min_gap:.3} dB snapped"
        ),
    )
}

fn c5_table2_ordering(sc: &Scenario) -> Verdict {
    let summary = aggregate(&sc.records).expect("records");
    let trials = sc.cfg.trials;
    let mut pass = trials >= 200;
    let mut parts = Vec::new();
    for scheme in [Scheme::Polyblock, Scheme::Greedy] {
        for snr in [15.0, 25.0] {
            let avg = |s| {
                summary
                    .table2
                    .iter()
                    .find(|r| r.strategy == s && r.snr_db == snr && r.scheme == scheme && r.stream == "Average")
                    .map(|r| r.mean_psnr_db)
                    .unwrap_or(f64::NAN)
            };
            let (l, r, h) = (avg(GroupingStrategy::Wlbh), avg(GroupingStrategy::Wrbr), avg(GroupingStrategy::Whbl));
            pass &= l >= r && r >= h;
            parts.push(format!("{scheme}@{snr}: {l:.3}/{r:.3}/{h:.3}"));
        }
    }
    verdict(pass, format!("WLBH/WRBR/WHBL over {trials} trials, paired cells: {}", parts.join(", ")))
}

fn c6_fairness(sc: &Scenario) -> Verdict {
    // Judged on the continuous allocation; the snapped share is reported.
    let lib = RdLibrary::default_fixtures();
    let q_min = |s: &str| lib.get(s, sc.cfg.p_rtp).expect("fixture").q_min_db;
    let at15: Vec<&TrialRecord> =
        sc.records.iter().filter(|r| r.strategy == sc.cfg.grouping && r.snr_db == 15.0).collect();
    let mut ok: BTreeMap<(usize, usize, usize), bool> = BTreeMap::new();
    for r in &at15 {
        *ok.entry((r.trial, r.gop, r.group)).or_insert(true) &= r.is_ok();
    }
    let feasible = |r: &&&TrialRecord| ok[&(r.trial, r.gop, r.group)];
    let mut mt_dev: f64 = 0.0;
    let mut share = Vec::new();
    for scheme in [Scheme::NomaMt, Scheme::Polyblock, Scheme::Greedy] {
        let recs: Vec<_> = at15.iter().filter(|r| r.scheme == scheme).filter(feasible).collect();
        let (mut above, mut above_snapped) = (0usize, 0usize);
        for r in &recs {
            let w = r.weakest().expect("feasible record");
            let lo = q_min(&w.stream);
            if scheme == Scheme::NomaMt {
                mt_dev = mt_dev.max((w.psnr_db - lo).abs());
            }
            above += usize::from(w.psnr_db > lo + 1e-6);
            above_snapped += usize::from(w.snapped_psnr_db > lo + 1e-6);
        }
        let n = recs.len().max(1) as f64;
        share.push((scheme, above as f64 / n, above_snapped as f64 / n, recs.len()));
    }
    let pass = mt_dev <= 0.1 && share[1..].iter().all(|s| s.1 >= 0.8);
    let detail = share[1..]
        .iter()
        .map(|(s, a, b, n)| format!("{s} {:.1}% ({:.1}% snapped) of {n}", 100.0 * a, 100.0 * b))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(pass, format!("NOMA-MT max |Q - Qmin| = {mt_dev:.1e} dB; weakest UE above Qmin: {detail}"))
}

fn c7_certification() -> Verdict {
    let cfg = SolverConfig::default();
    // Groups of two, as in the scenario, across the whole SNR range.
    let insts = instances(0xACCE_0007, 100, 2, &[5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0]);
    let mut failures = Vec::new();
    let mut worst_gap: f64 = 0.0;
    let mut worst_residual = f64::NEG_INFINITY;
    for (i, inst) in insts.iter().enumerate() {
        let s = match solve_polyblock(&inst.fset, &inst.link, &cfg) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("instance {i}: {e}"));
                continue;
            }
        };
        let ub_ok = s.trace.windows(2).all(|w| w[1].upper_bound <= w[0].upper_bound + 1e-12);
        let inc_ok = s.trace.windows(2).all(|w| w[1].incumbent >= w[0].incumbent - 1e-12);
        let gap = s.trace.last().map_or(f64::INFINITY, |t| t.relative_gap);
        let lambda_ok = s.lambda_traces.iter().all(|t| t.windows(2).all(|w| w[1] >= w[0]));
        worst_gap = worst_gap.max(gap);
        worst_residual = worst_residual.max(s.max_residual);
        if !(ub_ok && inc_ok && gap <= cfg.epsilon && lambda_ok && s.max_residual <= cfg.delta) {
            failures.push(format!("instance {i}: ub {ub_ok} inc {inc_ok} gap {gap:.2e} lambda {lambda_ok}"));
        }
    }
    // Three-user groups are outside the scenario; report how often they
    // reach the tolerance within the iteration cap, without scoring it.
    let three = instances(0xACCE_0107, 10, 3, &[15.0, 25.0, 35.0]);
    let converged = three.iter().filter(|i| solve_polyblock(&i.fset, &i.link, &cfg).is_ok()).count();
    eprintln!("  c7 diagnostic: {converged}/{} three-user instances reach ε within {} iterations", three.len(), cfg.max_iterations);
    let mut lp_err: f64 = 0.0;
    for seed in 0..50 {
        let lp = random_lp(seed, 5, 6);
        let exact = vertex_optimum(&lp);
        let got = solve_lp(&lp.to_lp(), 1e-10);
        match (exact, got) {
            (Some(x), Ok(s)) => lp_err = lp_err.max((x - s.objective).abs() / x.abs().max(1.0)),
            (None, Err(Error::Infeasible(_))) => {}
            (x, g) => failures.push(format!("LP {seed}: exact {x:?}, simplex {:?}", g.map(|s| s.objective))),
        }
    }
    if lp_err > 1e-8 {
        failures.push(format!("LP error {lp_err:.1e}"));
    }
    verdict(
        failures.is_empty(),
        format!(
            "100 two-user polyblock solves: max terminal gap {worst_gap:.1e}, max residual {worst_residual:.1e}; \
             50 LPs: max error {lp_err:.1e}{}",
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join("; ")) }
        ),
    )
}

fn c8_round_trips() -> Verdict {
    let lib = RdLibrary::default_fixtures();
    let mut rt: f64 = 0.0;
    for p in lib.records() {
        for i in 0..100 {
            let q = p.q_min_db + (p.q_max_db - p.q_min_db) * i as f64 / 99.0;
            let back = p.psnr_of_rate(p.rate_of_psnr(q).unwrap()).unwrap();
            rt = rt.max((back - q).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0008);
    let insts = instances(0xACCE_0108, 20, 3, &[10.0, 20.0, 30.0]);
    let (mut member_fail, mut sic_fail) = (0, 0);
    for i in 0..10_000 {
        let inst = &insts[i % insts.len()];
        let ch = &inst.channel;
        let b = &inst.fset.bounds;
        let p = common::sample_feasible_power(inst, &mut rng);
        let in_band = (0..3).all(|k| {
            let g = sinr(&ch.gains_sq, ch.noise_var, &p, k);
            g >= b.gamma_min[k] * (1.0 - 1e-12) && g <= b.gamma_max[k] * (1.0 + 1e-12)
        });
        assert!(in_band && p.iter().sum::<f64>() <= ch.power_budget_w * (1.0 + 1e-12), "sampler left the feasible set");
        member_fail += usize::from(!inst.fset.contains(&p, 1e-12));
        // Every stronger UE decodes each weaker UE's signal at no less
        // than that UE's own SINR.
        let sic = (0..3).all(|t| {
            (t + 1..3).all(|d| {
                let above: f64 = p[t + 1..].iter().sum();
                let at_d = ch.gains_sq[d] * p[t] / (ch.gains_sq[d] * above + ch.noise_var);
                at_d >= b.gamma_min[t] * (1.0 - 1e-12)
            })
        });
        sic_fail += usize::from(!sic || !inst.fset.sic_conditions_hold(&p, 1e-12));
    }
    verdict(
        rt <= 1e-9 && member_fail == 0 && sic_fail == 0,
        format!("rate-PSNR round trip {rt:.1e} dB; 10^4 feasible points: {member_fail} outside the polytope, {sic_fail} SIC violations"),
    )
}

fn c9_greedy_complexity() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for n in [2usize, 3] {
        for l in [10usize, 100] {
            for inst in instances(0xACCE_0009 + (n * 1000 + l) as u64, 40, n, &[10.0, 20.0, 30.0]) {
                match solve_greedy(&inst.channel, &inst.link, &GreedyConfig { n_blocks: l }) {
                    Ok(s) => {
                        let bound = ((n * n + n) * l) as f64;
                        worst = worst.max(s.counters.phase2_evals as f64 / bound);
                        pass &= s.counters.phase2_evals as f64 <= bound;
                    }
                    Err(e) if e.is_infeasible() => {}
                    Err(_) => pass = false,
                }
            }
        }
    }
    verdict(pass, format!("max phase-II evaluations / (N^2+N)L = {worst:.3}"))
}

/// Exact `P(Bin(n, 1/20) > s)`.
fn binomial_tail(n: usize, s: usize) -> f64 {
    let mut tail = BigRational::zero();
    let mut choose = BigUint::one();
    let denom = BigUint::from(20u32).pow(n as u32);
    for e in 0..=n {
        if e > s {
            let num = &choose * BigUint::from(19u32).pow((n - e) as u32);
            tail += BigRational::new(num.into(), denom.clone().into());
        }
        choose = choose * BigUint::from(n - e) / BigUint::from(e + 1);
    }
    tail.to_f64().expect("probability")
}

fn c10_packetizer() -> Verdict {
    let profile = UxpProfile::default();
    let lib = RdLibrary::default_fixtures();
    let gop_secs = 8.0 / 30.0;
    let layout = |name: &str| {
        let p = lib.get(name, 0.05).unwrap();
        layout_tsb(&gop_layer_bytes(p, &SvcLayering::default(), p.max_rate(), gop_secs).unwrap(), &profile).unwrap()
    };
    let (a, b) = (layout("Crew"), layout("Mobile"));
    let schedule = assemble_tb(&a, &b, profile.rtp_payload_bytes).expect("fits");
    const TRIALS: usize = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0010);
    let mut lost_layers = vec![0usize; a.layers.len()];
    for _ in 0..TRIALS {
        let lost: BTreeSet<usize> = (0..schedule.len()).filter(|_| rng.random::<f64>() < 0.05).collect();
        let ok = erasure_recoverability(&schedule, &lost, &a, Side::A).unwrap();
        for (c, k) in lost_layers.iter_mut().zip(ok) {
            *c += usize::from(!k);
        }
    }
    let mut worst_z: f64 = 0.0;
    let mut formula_err: f64 = 0.0;
    for (l, &count) in a.layers.iter().zip(&lost_layers) {
        let p = layer_loss_probability(profile.codeword_len, l.parity, 0.05);
        formula_err = formula_err.max((p - binomial_tail(profile.codeword_len, l.parity)).abs());
        let sigma = (p * (1.0 - p) / TRIALS as f64).sqrt();
        let emp = count as f64 / TRIALS as f64;
        worst_z = worst_z.max(if sigma > 0.0 { (emp - p).abs() / sigma } else if count == 0 { 0.0 } else { f64::INFINITY });
    }
    let rows = |r: usize| noma_video::packetizer::TsbLayout { rows: r, columns: 255, layers: Vec::new() };
    let fits = assemble_tb(&rows(700), &rows(700), 1400).is_ok();
    let overflow = matches!(
        assemble_tb(&rows(700), &rows(701), 1400),
        Err(Error::PayloadOverflow { bytes: 1401, limit: 1400 })
    );
    verdict(
        worst_z <= 3.0 && formula_err <= 1e-12 && fits && overflow,
        format!(
            "max |empirical - binomial| = {worst_z:.2} sigma over 10^5 GOPs, formula vs exact tail {formula_err:.1e}; \
             1400 fits {fits}, 1401 overflows {overflow}"
        ),
    )
}

fn timed(name: &'static str, f: impl FnOnce() -> Verdict) -> (&'static str, Verdict, f64) {
    let t = Instant::now();
    let v = f();
    let secs = t.elapsed().as_secs_f64();
    eprintln!("criterion {name} evaluated in {secs:.1} s");
    (name, v, secs)
}

fn main() {
    let start = Instant::now();
    let scenario = Scenario::run();
    eprintln!("default scenario under three groupings ran in {:.1} s", start.elapsed().as_secs_f64());
    let results = [
        timed("1 oracle optimality (N=2)", c1_oracle_optimality),
        timed("2 greedy near-optimality", c2_greedy_near_optimal),
        timed("3 weak-UE power share", || c3_table1_shape(&scenario)),
        timed("4 scheme ordering over SNR", || c4_fig4_ordering(&scenario)),
        timed("5 grouping ordering", || c5_table2_ordering(&scenario)),
        timed("6 per-UE fairness", || c6_fairness(&scenario)),
        timed("7 solver certification", c7_certification),
        timed("8 model round-trips", c8_round_trips),
        timed("9 greedy complexity bound", c9_greedy_complexity),
        timed("10 packetizer statistics", c10_packetizer),
    ];
    println!();
    let mut failed = 0;
    for (name, v, _) in &results {
        println!("{} criterion {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!(
        "acceptance: {} of {} criteria pass ({:.0} s)",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    // A red criterion is a finding, not a broken build: it fails the run
    // only when asked to.
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
