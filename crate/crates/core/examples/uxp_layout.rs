//! Packs one GOP per UE into erasure-protected subblocks, superposes the two
//! into RTP packets and shows which layers survive a few lost packets.

use std::collections::BTreeSet;

use noma_video::harness::{gop_layer_bytes, SvcLayering};
use noma_video::packetizer::{assemble_tb, erasure_recoverability, layer_loss_probability, layout_tsb, Side, UxpProfile};
use noma_video::quality::RdLibrary;

fn main() -> noma_video::Result<()> {
    let lib = RdLibrary::default_fixtures();
    let profile = UxpProfile::default();
    let layering = SvcLayering::default();
    let gop_seconds = 8.0 / 30.0;
    let mut layouts = Vec::new();
    for (name, rate) in [("Crew", 250e3), ("Mobile", 400e3)] {
        let p = lib.get(name, 0.05)?;
        let bytes = gop_layer_bytes(p, &layering, rate, gop_seconds)?;
        let tsb = layout_tsb(&bytes, &profile)?;
        println!("{name} at {:.0} kbps: layer bytes {bytes:?}", rate / 1e3);
        for l in &tsb.layers {
            println!("  layer {} rows {:?}, s = {}, padding {}", l.layer, l.rows, l.parity, l.padding);
        }
        layouts.push(tsb);
    }
    let tb = assemble_tb(&layouts[0], &layouts[1], profile.rtp_payload_bytes)?;
    println!("{} packets of up to {} bytes", tb.len(), tb.slots.iter().map(|s| s.bytes).max().unwrap_or(0));

    for lost_count in [10, 25, 45] {
        let lost: BTreeSet<usize> = (0..lost_count).map(|i| i * 5).collect();
        let ok = erasure_recoverability(&tb, &lost, &layouts[0], Side::A)?;
        println!("{lost_count:>3} packets lost: layers decodable {ok:?}");
    }
    println!("layer loss at 5% packet loss:");
    for &(layer, s) in &profile.parity_per_class {
        println!("  layer {layer} (s = {s}): {:.2e}", layer_loss_probability(profile.codeword_len, s, 0.05));
    }
    Ok(())
}
