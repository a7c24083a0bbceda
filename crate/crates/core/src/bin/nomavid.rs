//! Command-line front end: single-instance solves, scenario runs, SNR
//! sweeps, grouping comparisons and R-D fitting.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 when a
//! single-instance solve is infeasible, 1 otherwise.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use noma_video::channel::{ChannelState, GroupingStrategy};
use noma_video::harness::report::{Summary, AVERAGE_ROW};
use noma_video::harness::{allocate, group_instance, grouping_compare, run_scenario, write_outputs, ScenarioConfig, Scheme};
use noma_video::monotonic::{solve_polyblock, write_trace};
use noma_video::phy::{build_feasible_set, GroupLink};
use noma_video::quality::{fit_rd_params, Complexity, RdLibrary, RdPoint};
use noma_video::Error;

#[derive(Parser)]
#[command(name = "nomavid", version, about = "Quality-driven NOMA power allocation for scalable video")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one group instance and print the allocation.
    Solve(SolveArgs),
    /// Run the scenario and write CSV records and summaries.
    Simulate(RunArgs),
    /// Run the scenario over a list of SNRs.
    SweepSnr {
        #[command(flatten)]
        run: RunArgs,
        /// SNR points in dB.
        #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,25,30")]
        snr: Vec<f64>,
    },
    /// Run the scenario under each grouping strategy.
    GroupingCompare {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_value = "WLBH,WRBR,WHBL")]
        strategies: Vec<GroupingStrategy>,
    },
    /// Fit rate-PSNR parameters to measured points and print a fixture row.
    FitRd(FitArgs),
    /// Check a scenario file and print the resolved configuration.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverChoice {
    Polyblock,
    Greedy,
    NomaMt,
    Oma,
    All,
}

impl SolverChoice {
    fn schemes(self) -> Vec<Scheme> {
        match self {
            SolverChoice::Polyblock => vec![Scheme::Polyblock],
            SolverChoice::Greedy => vec![Scheme::Greedy],
            SolverChoice::NomaMt => vec![Scheme::NomaMt],
            SolverChoice::Oma => vec![Scheme::Oma],
            SolverChoice::All => Scheme::ALL.to_vec(),
        }
    }
}

#[derive(Args)]
struct Common {
    /// Scenario TOML; the reference scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    solver: Option<SolverChoice>,
    /// Polyblock termination threshold.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Number of greedy power blocks L.
    #[arg(long)]
    blocks: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Override the trial count.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// SNR in dB; the first configured SNR by default.
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    trial: usize,
    #[arg(long, default_value_t = 0)]
    gop: usize,
    #[arg(long, default_value_t = 0)]
    group: usize,
    /// Explicit squared channel gains, weakest first; needs --streams.
    #[arg(long, value_delimiter = ',', requires = "streams")]
    gains: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    streams: Option<Vec<String>>,
    /// Write the polyblock iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with columns `rate_bps` and either `psnr_db` or `mse`.
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    stream: String,
    #[arg(long, default_value = "Low")]
    complexity: Complexity,
    #[arg(long, default_value_t = 0.05)]
    p_rtp: f64,
    #[arg(long)]
    q_min: f64,
    #[arg(long)]
    q_max: f64,
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Config(String),
    Infeasible(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            e if e.is_infeasible() => Failure::Infeasible(e.to_string()),
            e => Failure::Other(e.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn load_config(common: &Common) -> std::result::Result<ScenarioConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(s) = common.solver {
        cfg.solvers = s.schemes();
    }
    if let Some(e) = common.epsilon {
        cfg.solver.epsilon = e;
    }
    if let Some(l) = common.blocks {
        cfg.greedy.n_blocks = l;
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn solve(args: &SolveArgs) -> Outcome {
    let cfg = load_config(&args.common)?;
    let snr = args.snr.unwrap_or(cfg.snr_db[0]);
    let (ch, link, labels) = match (&args.gains, &args.streams) {
        (Some(gains), Some(streams)) => {
            let lib = cfg.library()?;
            let params = streams.iter().map(|s| lib.get(s, cfg.p_rtp).cloned()).collect::<noma_video::Result<Vec<_>>>()?;
            let noise = ChannelState::noise_for_snr(cfg.power_budget_w, snr);
            let ch = ChannelState::new(gains.clone(), noise, cfg.bandwidth_hz, cfg.power_budget_w, cfg.path_loss_exp)
                .map_err(|e| Failure::Config(e.to_string()))?;
            let link = GroupLink::new(params, cfg.amc, cfg.bandwidth_hz).map_err(|e| Failure::Config(e.to_string()))?;
            (ch, link, streams.clone())
        }
        _ => {
            let inst = group_instance(&cfg, args.trial, args.gop, args.group, snr)?;
            let labels = inst.ues.iter().map(|u| format!("UE{} {}", u.id, u.requested_stream)).collect();
            (inst.channel, inst.link, labels)
        }
    };
    println!("SNR {snr} dB, |h|^2 = {:?}", ch.gains_sq);
    let mut infeasible = None;
    for &scheme in &cfg.solvers {
        match allocate(&ch, &link, scheme, &cfg) {
            Ok(a) => {
                let avg = a.psnr_db.iter().sum::<f64>() / a.psnr_db.len() as f64;
                print!("{scheme:>10}: avg PSNR {avg:.4} dB");
                if let Some(g) = a.bound_gap {
                    print!(", bound gap {g:.3e}");
                }
                if let Some(i) = a.iterations {
                    print!(", {i} iterations");
                }
                println!();
                for (k, label) in labels.iter().enumerate() {
                    println!(
                        "{:>12}  coeff {:.4}  SINR {:>10.4}  rate {:>10.0} bit/s  PSNR {:.3} dB",
                        label, a.power_coeff[k], a.sinr[k], a.rate_bps[k], a.psnr_db[k]
                    );
                }
            }
            Err(e) if e.is_infeasible() => {
                println!("{scheme:>10}: infeasible ({e})");
                infeasible = Some(e.to_string());
            }
            Err(e) => return Err(e.into()),
        }
    }
    if let Some(path) = &args.trace {
        let fset = build_feasible_set(&ch, &link.sinr_bounds()?)?;
        if !fset.is_empty() {
            let s = solve_polyblock(&fset, &link, &cfg.solver)?;
            write_trace(&s.trace, File::create(path).map_err(Error::from)?)?;
            println!("trace: {} iterations written to {}", s.trace.len(), path.display());
        }
    }
    match infeasible {
        Some(msg) => Err(Failure::Infeasible(msg)),
        None => Ok(()),
    }
}

fn print_fig4(summary: &Summary) {
    println!("{:>8} {:>10} {:>10} {:>12} {:>9} {:>8}", "SNR", "scheme", "PSNR", "continuous", "instances", "excluded");
    for r in &summary.fig4 {
        println!(
            "{:>8} {:>10} {:>10.3} {:>12.3} {:>9} {:>8}",
            r.snr_db, r.scheme, r.mean_psnr_db, r.mean_continuous_psnr_db, r.instances, r.excluded
        );
    }
}

fn run(args: &RunArgs, snr: Option<&[f64]>) -> std::result::Result<(ScenarioConfig, PathBuf), Failure> {
    let mut cfg = load_config(&args.common)?;
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = snr {
        cfg.snr_db = s.to_vec();
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok((cfg, args.out.clone()))
}

fn simulate(args: &RunArgs, snr: Option<&[f64]>) -> Outcome {
    let (cfg, out) = run(args, snr)?;
    let records = run_scenario(&cfg)?;
    let summary = write_outputs(&records, &out, cfg.record_timing)?;
    print_fig4(&summary);
    println!("wrote {} records to {}", records.len(), out.display());
    Ok(())
}

fn compare(args: &RunArgs, strategies: &[GroupingStrategy]) -> Outcome {
    let (cfg, out) = run(args, None)?;
    let records = grouping_compare(&cfg, strategies)?;
    let summary = write_outputs(&records, &out, cfg.record_timing)?;
    println!("{:>8} {:>8} {:>10} {:>10} {:>8}", "strategy", "SNR", "scheme", "PSNR", "samples");
    for r in summary.table2.iter().filter(|r| r.stream == AVERAGE_ROW) {
        println!("{:>8} {:>8} {:>10} {:>10.3} {:>8}", r.strategy, r.snr_db, r.scheme, r.mean_psnr_db, r.samples);
    }
    println!("wrote {} records to {}", records.len(), out.display());
    Ok(())
}

#[derive(serde::Deserialize)]
struct PointRow {
    rate_bps: f64,
    psnr_db: Option<f64>,
    mse: Option<f64>,
}

fn read_points(path: &Path) -> std::result::Result<Vec<RdPoint>, Failure> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<PointRow>() {
        let row = row.map_err(|e| Failure::Config(e.to_string()))?;
        let p = match (row.psnr_db, row.mse) {
            (Some(q), _) => RdPoint::from_psnr(row.rate_bps, q),
            (None, Some(m)) => RdPoint::new(row.rate_bps, m),
            (None, None) => return Err(Failure::Config("each point needs psnr_db or mse".into())),
        };
        out.push(p?);
    }
    Ok(out)
}

fn fit(args: &FitArgs) -> Outcome {
    let points = read_points(&args.points)?;
    let params = fit_rd_params(&points, (args.q_min, args.q_max), &args.stream, args.complexity, args.p_rtp)?;
    print!("{}", RdLibrary::new(vec![params])?.to_csv_string()?);
    Ok(())
}

fn validate(path: &Path) -> Outcome {
    let cfg = ScenarioConfig::load(path)?;
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    println!("{}: ok ({} UEs, {} trials, {} SNR points)", path.display(), cfg.n_ues(), cfg.trials, cfg.snr_db.len());
    print!("{}", cfg.to_toml_string()?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Simulate(a) => simulate(a, None),
        Command::SweepSnr { run, snr } => simulate(run, Some(snr)),
        Command::GroupingCompare { run, strategies } => compare(run, strategies),
        Command::FitRd(a) => fit(a),
        Command::Validate { config } => validate(config),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Infeasible(m)) => {
            eprintln!("infeasible: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
