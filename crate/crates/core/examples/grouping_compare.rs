//! Content-aware grouping: the same drops under the three strategies,
//! compared per stream and on average with greedy allocation.

use noma_video::channel::GroupingStrategy;
use noma_video::harness::{aggregate, grouping_compare, ScenarioConfig, Scheme, AVERAGE_ROW};

fn main() -> noma_video::Result<()> {
    let cfg = ScenarioConfig { trials: 60, snr_db: vec![15.0, 25.0], solvers: vec![Scheme::Greedy], ..Default::default() };
    let strategies = [GroupingStrategy::Wlbh, GroupingStrategy::Wrbr, GroupingStrategy::Whbl];
    let summary = aggregate(&grouping_compare(&cfg, &strategies)?)?;
    for &snr in &cfg.snr_db {
        println!("{snr} dB:");
        let mut streams: Vec<&str> = Vec::new();
        for r in &summary.table2 {
            if !streams.contains(&r.stream.as_str()) {
                streams.push(&r.stream);
            }
        }
        for stream in streams.iter().filter(|s| **s != AVERAGE_ROW).chain([&AVERAGE_ROW]) {
            let cells: Vec<String> = strategies
                .iter()
                .map(|&st| {
                    summary
                        .table2
                        .iter()
                        .find(|r| r.strategy == st && r.snr_db == snr && r.stream == *stream)
                        .map_or("-".into(), |r| format!("{st} {:.2}", r.mean_psnr_db))
                })
                .collect();
            println!("  {stream:>8}: {}", cells.join("  "));
        }
    }
    Ok(())
}
