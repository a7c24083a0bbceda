//! Scenario configuration, the Monte Carlo simulation loop and CSV reports.

pub mod config;
pub mod report;
pub mod sim;
pub mod svc;

pub use config::{ScenarioConfig, Scheme, UePlacement};
pub use report::{aggregate, write_outputs, write_records, Summary, AVERAGE_ROW};
pub use sim::{allocate, derive_seed, group_instance, grouping_compare, run_scenario, GroupInstance, snap_rate, Status, TrialRecord, UeOutcome};
pub use svc::{discrete_rate_set, gop_layer_bytes, snap_index, SvcLayering};
