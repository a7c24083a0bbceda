//! Quality-driven power allocation for scalable video over downlink NOMA.
//!
//! UEs are split into distance zones and grouped one per zone; within a
//! group, superposition coding with SIC shares one band and one power
//! budget. Each stream's PSNR is a known increasing function of its rate,
//! the rate follows from the SINR through an AMC model, and the power
//! split maximizing the group-average PSNR is found either globally
//! ([`monotonic`]) or greedily ([`greedy`]).
//!
//! ```
//! use noma_video::channel::ChannelState;
//! use noma_video::greedy::{solve_greedy, GreedyConfig};
//! use noma_video::phy::{AmcParams, GroupLink};
//! use noma_video::quality::RdLibrary;
//!
//! let lib = RdLibrary::default_fixtures();
//! let streams = vec![lib.get("Foreman", 0.05)?.clone(), lib.get("Football", 0.05)?.clone()];
//! let link = GroupLink::new(streams, AmcParams::default(), 140e3)?;
//! let ch = ChannelState::new(vec![0.2, 0.9], ChannelState::noise_for_snr(1.0, 20.0), 140e3, 1.0, 2.0)?;
//! let sol = solve_greedy(&ch, &link, &GreedyConfig::default())?;
//! assert!(sol.power.0[0] > sol.power.0[1]);
//! # Ok::<(), noma_video::Error>(())
//! ```

// `!(x > 0.0)` rejects NaN along with nonpositive values; kept on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod channel;
pub mod error;
pub mod greedy;
pub mod harness;
pub mod lp;
pub mod monotonic;
pub mod packetizer;
pub mod phy;
pub mod quality;

pub use error::{Error, Result};
