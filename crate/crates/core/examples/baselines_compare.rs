//! The optimal and greedy allocations against the two reference schemes on
//! the same group: minimum-quality NOMA and equal-power OMA band splitting.

use noma_video::baselines::{solve_noma_mt, solve_oma_simple};
use noma_video::channel::ChannelState;
use noma_video::greedy::{solve_greedy, GreedyConfig};
use noma_video::monotonic::{solve_polyblock, SolverConfig};
use noma_video::phy::{build_feasible_set, AmcParams, GroupLink};
use noma_video::quality::RdLibrary;

fn main() -> noma_video::Result<()> {
    let lib = RdLibrary::default_fixtures();
    let link = GroupLink::new(vec![lib.get("Foreman", 0.05)?.clone(), lib.get("Mobile", 0.05)?.clone()], AmcParams::default(), 140e3)?;
    println!("{:>5} {:>10} {:>10} {:>10} {:>10}", "SNR", "polyblock", "greedy", "NOMA-MT", "OMA");
    for snr in [10.0, 15.0, 20.0, 25.0, 30.0] {
        let ch = ChannelState::new(vec![0.3, 1.4], ChannelState::noise_for_snr(1.0, snr), 140e3, 1.0, 2.0)?;
        let fset = build_feasible_set(&ch, &link.sinr_bounds()?)?;
        let show = |r: noma_video::Result<f64>| r.map_or("infeasible".to_string(), |q| format!("{q:.3}"));
        println!(
            "{snr:>5} {:>10} {:>10} {:>10} {:>10}",
            show(solve_polyblock(&fset, &link, &SolverConfig::default()).map(|s| s.psnr)),
            show(solve_greedy(&ch, &link, &GreedyConfig::default()).map(|s| s.psnr)),
            show(solve_noma_mt(&ch, &link).map(|s| s.psnr)),
            show(solve_oma_simple(&ch, &link).map(|s| s.psnr)),
        );
    }
    println!("(average PSNR in dB over the pair)");
    Ok(())
}
