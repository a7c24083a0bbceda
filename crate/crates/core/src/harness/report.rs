//! Record CSV and the three summary tables: average PSNR per SNR and
//! scheme, the weaker UE's power coefficient, and per-stream PSNR under each
//! grouping strategy.
//!
//! An instance (strategy, trial, GOP, SNR, group) enters the per-scheme
//! averages only if every scheme that ran on it was feasible, so all
//! schemes are averaged over the same channel draws. The per-stream table
//! compares grouping strategies, which pair UEs differently, so there the
//! unit is the whole cell (trial, GOP, SNR): it counts only if every group
//! under every strategy and scheme was feasible. Excluded records are
//! counted.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::channel::GroupingStrategy;
use crate::error::{Error, Result};

use super::config::Scheme;
use super::sim::TrialRecord;

/// Label of the per-strategy row averaging over all streams.
pub const AVERAGE_ROW: &str = "Average";

const RECORD_HEADER: [&str; 23] = [
    "strategy",
    "trial",
    "gop",
    "snr_db",
    "group",
    "scheme",
    "status",
    "rank",
    "ue_id",
    "zone",
    "stream",
    "complexity",
    "gain_sq",
    "power_coeff",
    "sinr",
    "rate_bps",
    "psnr_db",
    "snapped_rate_bps",
    "snapped_psnr_db",
    "avg_psnr_db",
    "avg_snapped_psnr_db",
    "iterations",
    "bound_gap",
];

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes one row per UE (one row with empty UE fields for failed
/// instances). Floats use the shortest round-tripping form.
pub fn write_records<W: Write>(records: &[TrialRecord], out: W, with_timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = RECORD_HEADER.to_vec();
    if with_timing {
        header.push("wall_time_us");
    }
    w.write_record(&header)?;
    for r in records {
        let status = serde_plain(&r.status);
        let head = [
            r.strategy.to_string(),
            r.trial.to_string(),
            r.gop.to_string(),
            r.snr_db.to_string(),
            r.group.to_string(),
            r.scheme.to_string(),
            status,
        ];
        let tail = [
            if r.is_ok() { r.avg_psnr_db.to_string() } else { String::new() },
            if r.is_ok() { r.avg_snapped_psnr_db.to_string() } else { String::new() },
            opt(r.iterations),
            opt(r.bound_gap),
        ];
        let timing = with_timing.then(|| r.wall_time_us.to_string());
        let blank = vec![String::new(); 12];
        let rows: Vec<Vec<String>> = if r.ues.is_empty() {
            vec![blank]
        } else {
            r.ues
                .iter()
                .map(|u| {
                    vec![
                        u.rank.to_string(),
                        u.ue_id.to_string(),
                        u.zone.to_string(),
                        u.stream.clone(),
                        u.complexity.to_string(),
                        u.gain_sq.to_string(),
                        u.power_coeff.to_string(),
                        u.sinr.to_string(),
                        u.rate_bps.to_string(),
                        u.psnr_db.to_string(),
                        u.snapped_rate_bps.to_string(),
                        u.snapped_psnr_db.to_string(),
                    ]
                })
                .collect()
        };
        for ue in rows {
            let row = head.iter().cloned().chain(ue).chain(tail.iter().cloned()).chain(timing.clone());
            w.write_record(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn serde_plain<T: Serialize>(v: &T) -> String {
    // Unit variants serialize to their (renamed) name.
    toml::Value::try_from(v).ok().and_then(|x| x.as_str().map(String::from)).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig4Row {
    pub strategy: GroupingStrategy,
    pub snr_db: f64,
    pub scheme: Scheme,
    /// Mean group-average PSNR after snapping to achievable SVC rates.
    pub mean_psnr_db: f64,
    pub mean_continuous_psnr_db: f64,
    pub instances: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub strategy: GroupingStrategy,
    pub snr_db: f64,
    /// Group index, or `all`.
    pub group: String,
    pub scheme: Scheme,
    pub mean_weak_coeff: f64,
    pub instances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2Row {
    pub strategy: GroupingStrategy,
    pub snr_db: f64,
    pub scheme: Scheme,
    pub stream: String,
    pub mean_psnr_db: f64,
    pub mean_continuous_psnr_db: f64,
    pub samples: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub fig4: Vec<Fig4Row>,
    pub table1: Vec<Table1Row>,
    pub table2: Vec<Table2Row>,
}

/// Lookups match the first strategy present when records mix several.
impl Summary {
    pub fn fig4_at(&self, snr_db: f64, scheme: Scheme) -> Option<&Fig4Row> {
        self.fig4.iter().find(|r| r.snr_db == snr_db && r.scheme == scheme)
    }

    pub fn weak_coeff(&self, snr_db: f64, scheme: Scheme) -> Option<f64> {
        self.table1
            .iter()
            .find(|r| r.snr_db == snr_db && r.scheme == scheme && r.group == "all")
            .map(|r| r.mean_weak_coeff)
    }

    pub fn table2_average(&self, strategy: GroupingStrategy, snr_db: f64) -> Option<&Table2Row> {
        self.table2
            .iter()
            .find(|r| r.strategy == strategy && r.snr_db == snr_db && r.stream == AVERAGE_ROW)
    }
}

#[derive(Default)]
struct Mean {
    sum: f64,
    sum_c: f64,
    n: usize,
}

impl Mean {
    fn add(&mut self, x: f64, c: f64) {
        self.sum += x;
        self.sum_c += c;
        self.n += 1;
    }

    fn get(&self) -> (f64, f64) {
        (self.sum / self.n as f64, self.sum_c / self.n as f64)
    }
}

fn rank_of<K: PartialEq>(seen: &[K], k: K) -> usize {
    seen.iter().position(|x| *x == k).expect("key was ranked")
}

/// First-appearance rank, for stable row order.
fn ranks<K: PartialEq + Copy>(keys: impl Iterator<Item = K>) -> Vec<K> {
    let mut seen = Vec::new();
    for k in keys {
        if !seen.contains(&k) {
            seen.push(k);
        }
    }
    seen
}

pub fn aggregate(records: &[TrialRecord]) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::domain("no records to aggregate"));
    }
    type Instance = (usize, usize, usize, u64, usize);
    let strategies = ranks(records.iter().map(|r| r.strategy));
    let snrs = ranks(records.iter().map(|r| r.snr_db.to_bits()));
    let instance = |r: &TrialRecord| -> Instance {
        (rank_of(&strategies, r.strategy), r.trial, r.gop, r.snr_db.to_bits(), r.group)
    };
    let mut feasible: HashMap<Instance, bool> = HashMap::new();
    for r in records {
        *feasible.entry(instance(r)).or_insert(true) &= r.is_ok();
    }
    let usable = |r: &TrialRecord| feasible[&instance(r)];
    let cell = |r: &TrialRecord| (r.trial, r.gop, r.snr_db.to_bits());
    let mut cell_ok: HashMap<(usize, usize, u64), bool> = HashMap::new();
    for r in records {
        *cell_ok.entry(cell(r)).or_insert(true) &= r.is_ok();
    }

    // Average PSNR per (strategy, SNR, scheme).
    let mut fig: BTreeMap<(usize, usize, Scheme), (Mean, usize)> = BTreeMap::new();
    // Weak-UE power share per (strategy, SNR, scheme, group); group usize::MAX = all.
    let mut tab1: BTreeMap<(usize, usize, Scheme, usize), Mean> = BTreeMap::new();
    // Per-stream PSNR per (strategy, SNR, scheme, stream).
    let mut tab2: BTreeMap<(usize, usize, Scheme, String), Mean> = BTreeMap::new();
    let mut tab2_excl: BTreeMap<(usize, usize, Scheme), usize> = BTreeMap::new();

    for r in records {
        let s = rank_of(&strategies, r.strategy);
        let q = rank_of(&snrs, r.snr_db.to_bits());
        if cell_ok[&cell(r)] {
            for u in &r.ues {
                tab2.entry((s, q, r.scheme, u.stream.clone())).or_default().add(u.snapped_psnr_db, u.psnr_db);
            }
            tab2.entry((s, q, r.scheme, AVERAGE_ROW.to_string()))
                .or_default()
                .add(r.avg_snapped_psnr_db, r.avg_psnr_db);
        } else {
            *tab2_excl.entry((s, q, r.scheme)).or_default() += 1;
        }
        let entry = fig.entry((s, q, r.scheme)).or_default();
        if !usable(r) {
            entry.1 += 1;
            continue;
        }
        entry.0.add(r.avg_snapped_psnr_db, r.avg_psnr_db);
        let weak = r.weakest().expect("feasible records carry UEs").power_coeff;
        tab1.entry((s, q, r.scheme, r.group)).or_default().add(weak, weak);
        tab1.entry((s, q, r.scheme, usize::MAX)).or_default().add(weak, weak);
    }

    let snr = |q: usize| f64::from_bits(snrs[q]);
    let mut summary = Summary::default();
    for ((s, q, scheme), (m, excluded)) in &fig {
        if m.n == 0 {
            summary.fig4.push(Fig4Row {
                strategy: strategies[*s],
                snr_db: snr(*q),
                scheme: *scheme,
                mean_psnr_db: f64::NAN,
                mean_continuous_psnr_db: f64::NAN,
                instances: 0,
                excluded: *excluded,
            });
            continue;
        }
        let (a, c) = m.get();
        summary.fig4.push(Fig4Row {
            strategy: strategies[*s],
            snr_db: snr(*q),
            scheme: *scheme,
            mean_psnr_db: a,
            mean_continuous_psnr_db: c,
            instances: m.n,
            excluded: *excluded,
        });
    }
    for ((s, q, scheme, g), m) in &tab1 {
        summary.table1.push(Table1Row {
            strategy: strategies[*s],
            snr_db: snr(*q),
            group: if *g == usize::MAX { "all".into() } else { g.to_string() },
            scheme: *scheme,
            mean_weak_coeff: m.get().0,
            instances: m.n,
        });
    }
    for ((s, q, scheme, stream), m) in &tab2 {
        let (a, c) = m.get();
        summary.table2.push(Table2Row {
            strategy: strategies[*s],
            snr_db: snr(*q),
            scheme: *scheme,
            stream: stream.clone(),
            mean_psnr_db: a,
            mean_continuous_psnr_db: c,
            samples: m.n,
            excluded: tab2_excl.get(&(*s, *q, *scheme)).copied().unwrap_or(0),
        });
    }
    Ok(summary)
}

fn write_rows<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `records.csv` and the three summary tables into `dir`.
pub fn write_outputs(records: &[TrialRecord], dir: &Path, with_timing: bool) -> Result<Summary> {
    std::fs::create_dir_all(dir)?;
    write_records(records, File::create(dir.join("records.csv"))?, with_timing)?;
    let summary = aggregate(records)?;
    write_rows(&summary.fig4, &dir.join("fig4_avg_psnr.csv"))?;
    write_rows(&summary.table1, &dir.join("table1_power_coeff.csv"))?;
    write_rows(&summary.table2, &dir.join("table2_grouping.csv"))?;
    Ok(summary)
}
