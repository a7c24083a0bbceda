//! Drops six UEs, splits them into a far and a near zone, forms NOMA pairs
//! under each grouping strategy and prints the SIC SINRs of one power split.

use noma_video::channel::{group_users, partition_zones, sample_channel, ChannelState, GroupingStrategy, PowerVector, UserEquipment};
use noma_video::quality::RdLibrary;

fn main() -> noma_video::Result<()> {
    let lib = RdLibrary::default_fixtures();
    let distances = [1.9, 0.4, 1.2, 0.7, 1.6, 0.25];
    let ues: Vec<UserEquipment> = lib
        .records()
        .iter()
        .zip(distances)
        .enumerate()
        .map(|(id, (s, d))| UserEquipment::new(id, d, s.stream.clone(), s.complexity))
        .collect();
    let zones = partition_zones(&ues, 2, 0.05)?;

    for strategy in [GroupingStrategy::Wlbh, GroupingStrategy::Wrbr, GroupingStrategy::Whbl] {
        println!("{strategy}:");
        for g in group_users(&zones, strategy, 7)? {
            let names: Vec<String> = g.ues.iter().map(|u| format!("UE{} {} ({:?})", u.id, u.requested_stream, u.complexity)).collect();
            println!("  {}", names.join("  +  "));
        }
    }

    // One pair at 20 dB: |h|² from a seeded Rayleigh draw, sorted weakest first.
    let pair = &group_users(&zones, GroupingStrategy::Wlbh, 7)?[0];
    let mut gains: Vec<f64> = pair.ues.iter().map(|u| sample_channel(u, 11 + u.id as u64, 2.0).map(|h| h.norm_sqr())).collect::<Result<_, _>>()?;
    gains.sort_by(f64::total_cmp);
    let ch = ChannelState::new(gains, ChannelState::noise_for_snr(1.0, 20.0), 140e3, 1.0, 2.0)?;
    let p = PowerVector::new(vec![0.8, 0.2], 1.0)?;
    println!("\n|h|² = {:.4?}, P = {:?}", ch.gains_sq, p.0);
    for detector in 0..2 {
        for target in 0..=detector {
            println!("  UE{detector} decoding UE{target}: SINR {:.3}", ch.sinr(&p, detector, target)?);
        }
    }
    Ok(())
}
