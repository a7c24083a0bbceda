//! Solves one two-UE group to global optimality and writes the polyblock
//! convergence trace: bounds per iteration, closing on the incumbent.

use noma_video::channel::ChannelState;
use noma_video::monotonic::{solve_polyblock, write_trace, SolverConfig};
use noma_video::phy::{build_feasible_set, AmcParams, GroupLink};
use noma_video::quality::RdLibrary;

fn main() -> noma_video::Result<()> {
    let lib = RdLibrary::default_fixtures();
    let link = GroupLink::new(vec![lib.get("Ice", 0.05)?.clone(), lib.get("Soccer", 0.05)?.clone()], AmcParams::default(), 140e3)?;
    let ch = ChannelState::new(vec![0.15, 0.8], ChannelState::noise_for_snr(1.0, 25.0), 140e3, 1.0, 2.0)?;
    let fset = build_feasible_set(&ch, &link.sinr_bounds()?)?;
    let sol = solve_polyblock(&fset, &link, &SolverConfig::default())?;

    println!("P = {:.4?} W, SINR = {:.2?}", sol.power.0, sol.sinr);
    println!("per-UE PSNR = {:.3?} dB, average {:.4} dB", sol.per_ue_psnr, sol.psnr);
    println!(
        "{} iterations, {} LP solves, global gap {:.2e} dB, worst Dinkelbach residual {:.1e}",
        sol.iterations, sol.lp_solves, sol.global_gap, sol.max_residual
    );
    println!("\nfirst iterations of the trace:");
    let mut buf = Vec::new();
    write_trace(&sol.trace, &mut buf)?;
    for line in String::from_utf8_lossy(&buf).lines().take(8) {
        println!("  {line}");
    }
    Ok(())
}
