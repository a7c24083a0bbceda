//! Greedy power blocks against the global optimum on random groups, and how
//! the gap shrinks as the block count grows.

use noma_video::channel::ChannelState;
use noma_video::greedy::{solve_greedy, GreedyConfig};
use noma_video::monotonic::{solve_polyblock, SolverConfig};
use noma_video::phy::{build_feasible_set, AmcParams, GroupLink};
use noma_video::quality::RdLibrary;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> noma_video::Result<()> {
    let lib = RdLibrary::default_fixtures();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    println!("{:>5} {:>10} {:>8} {:>8} {:>8} {:>8}", "SNR", "optimal", "L=10", "L=100", "L=1000", "evals");
    let mut solved = 0;
    while solved < 8 {
        let streams = vec![lib.records().choose(&mut rng).unwrap().clone(), lib.records().choose(&mut rng).unwrap().clone()];
        let mut gains = vec![rng.random_range(0.05..0.5), rng.random_range(0.5..2.0)];
        gains.sort_by(f64::total_cmp);
        let snr = [10.0, 20.0, 30.0][solved % 3];
        let link = GroupLink::new(streams, AmcParams::default(), 140e3)?;
        let ch = ChannelState::new(gains, ChannelState::noise_for_snr(1.0, snr), 140e3, 1.0, 2.0)?;
        let fset = build_feasible_set(&ch, &link.sinr_bounds()?)?;
        let Ok(opt) = solve_polyblock(&fset, &link, &SolverConfig::default()) else { continue };
        let gap = |l: usize| solve_greedy(&ch, &link, &GreedyConfig { n_blocks: l }).map(|g| (opt.psnr - g.psnr, g.counters.phase2_evals));
        let (g10, g100, g1000) = (gap(10)?, gap(100)?, gap(1000)?);
        println!("{snr:>5} {:>10.3} {:>8.3} {:>8.3} {:>8.3} {:>8}", opt.psnr, g10.0, g100.0, g1000.0, g100.1);
        solved += 1;
    }
    println!("(gaps in dB below the optimum; evals = phase-II PSNR evaluations at L=100)");
    Ok(())
}
