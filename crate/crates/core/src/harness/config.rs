//! TOML scenario description.
//!
//! Every field has a default, so an empty file is the two-zone, six-UE
//! reference scenario. Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{GroupingStrategy, QualityReq, DEFAULT_EDGE_TOLERANCE};
use crate::error::{Error, Result};
use crate::greedy::GreedyConfig;
use crate::monotonic::SolverConfig;
use crate::packetizer::{assemble_tb, layout_tsb, UxpProfile};
use crate::phy::AmcParams;
use crate::quality::RdLibrary;

use super::svc::{gop_layer_bytes, SvcLayering};

/// A power-allocation scheme the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Polyblock,
    Greedy,
    NomaMt,
    Oma,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Polyblock, Scheme::Greedy, Scheme::NomaMt, Scheme::Oma];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Polyblock => "polyblock",
            Scheme::Greedy => "greedy",
            Scheme::NomaMt => "noma-mt",
            Scheme::Oma => "oma",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::config(format!("unknown solver '{s}'")))
    }
}

/// A UE at a fixed distance; fading is still drawn per GOP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UePlacement {
    pub distance: f64,
    pub stream: String,
    #[serde(default = "quality_sensitive")]
    pub quality_req: QualityReq,
}

fn quality_sensitive() -> QualityReq {
    QualityReq::QualitySensitive
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub trials: usize,
    pub gops_per_trial: usize,
    pub n_zones: usize,
    pub ues_per_zone: usize,
    /// Radius of the disc UEs are dropped in when `ues` is empty, in the
    /// distance unit of the path-loss model `1/(1 + d^η)`.
    pub cell_radius: f64,
    pub min_distance: f64,
    pub snr_db: Vec<f64>,
    pub bandwidth_hz: f64,
    pub power_budget_w: f64,
    pub path_loss_exp: f64,
    pub p_rtp: f64,
    pub gop_size: usize,
    pub frame_rate: f64,
    pub grouping: GroupingStrategy,
    pub solvers: Vec<Scheme>,
    pub edge_tolerance: f64,
    /// R-D parameter file; the bundled fixtures when absent.
    pub fixtures: Option<PathBuf>,
    /// Requested stream of each randomly placed UE, by UE id.
    pub streams: Vec<String>,
    /// Fixed placements; overrides random dropping when nonempty.
    pub ues: Vec<UePlacement>,
    pub amc: AmcParams,
    pub solver: SolverConfig,
    pub greedy: GreedyConfig,
    pub svc: SvcLayering,
    pub uxp: UxpProfile,
    /// Adds a wall-time column to the record CSV (breaks byte-identical output).
    pub record_timing: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "reference".into(),
            seed: 2018,
            trials: 200,
            gops_per_trial: 1,
            n_zones: 2,
            ues_per_zone: 3,
            cell_radius: 2.0,
            min_distance: 0.1,
            snr_db: vec![10.0, 15.0, 20.0, 25.0, 30.0],
            bandwidth_hz: 140e3,
            power_budget_w: 1.0,
            path_loss_exp: 2.0,
            p_rtp: 0.05,
            gop_size: 8,
            frame_rate: 30.0,
            grouping: GroupingStrategy::Wlbh,
            solvers: Scheme::ALL.to_vec(),
            edge_tolerance: DEFAULT_EDGE_TOLERANCE,
            fixtures: None,
            streams: ["Foreman", "Ice", "Crew", "Football", "Mobile", "Soccer"].map(String::from).to_vec(),
            ues: Vec::new(),
            amc: AmcParams::default(),
            solver: SolverConfig::default(),
            greedy: GreedyConfig::default(),
            svc: SvcLayering::default(),
            uxp: UxpProfile::default(),
            record_timing: false,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        // Relative fixture paths resolve against the config file.
        if let (Some(f), Some(dir)) = (&cfg.fixtures, path.parent()) {
            if f.is_relative() {
                cfg.fixtures = Some(dir.join(f));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn n_ues(&self) -> usize {
        self.n_zones * self.ues_per_zone
    }

    pub fn library(&self) -> Result<RdLibrary> {
        match &self.fixtures {
            Some(path) => RdLibrary::load(path),
            None => Ok(RdLibrary::default_fixtures()),
        }
    }

    pub fn gop_seconds(&self) -> f64 {
        self.gop_size as f64 / self.frame_rate
    }

    /// Checks dimensions, stream references and that two UEs at their
    /// top rates fit one RTP payload per column.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cell_radius", self.cell_radius),
            ("bandwidth_hz", self.bandwidth_hz),
            ("power_budget_w", self.power_budget_w),
            ("path_loss_exp", self.path_loss_exp),
            ("frame_rate", self.frame_rate),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.min_distance > 0.0 && self.min_distance < self.cell_radius) {
            return Err(Error::config("min_distance must lie in (0, cell_radius)"));
        }
        if self.trials == 0 || self.gops_per_trial == 0 || self.gop_size == 0 {
            return Err(Error::config("trials, gops_per_trial and gop_size must be at least 1"));
        }
        if self.n_zones == 0 || self.ues_per_zone == 0 {
            return Err(Error::config("n_zones and ues_per_zone must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.p_rtp) {
            return Err(Error::config("p_rtp must lie in [0, 1)"));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::config("snr_db must list at least one finite value"));
        }
        if self.solvers.is_empty() {
            return Err(Error::config("select at least one solver"));
        }
        if !(self.edge_tolerance >= 0.0) {
            return Err(Error::config("edge_tolerance must be nonnegative"));
        }
        self.amc.validate().map_err(|e| Error::config(e.to_string()))?;
        self.solver.validate()?;
        if self.greedy.n_blocks == 0 {
            return Err(Error::config("greedy.n_blocks must be at least 1"));
        }
        self.svc.validate()?;
        self.uxp.validate()?;

        let requested: Vec<&str> = if self.ues.is_empty() {
            if self.streams.len() != self.n_ues() {
                return Err(Error::config(format!(
                    "{} streams listed for {} UEs",
                    self.streams.len(),
                    self.n_ues()
                )));
            }
            self.streams.iter().map(String::as_str).collect()
        } else {
            if self.ues.len() != self.n_ues() {
                return Err(Error::config(format!("{} placements for {} UEs", self.ues.len(), self.n_ues())));
            }
            if let Some(u) = self.ues.iter().find(|u| !(u.distance > 0.0)) {
                return Err(Error::config(format!("UE distance {} must be positive", u.distance)));
            }
            self.ues.iter().map(|u| u.stream.as_str()).collect()
        };
        let lib = self.library()?;
        let params = requested
            .iter()
            .map(|s| lib.get(s, self.p_rtp).cloned())
            .collect::<Result<Vec<_>>>()?;

        if self.n_zones == 2 {
            let layouts = params
                .iter()
                .map(|p| {
                    let bytes = gop_layer_bytes(p, &self.svc, p.max_rate(), self.gop_seconds())?;
                    layout_tsb(&bytes, &self.uxp)
                })
                .collect::<Result<Vec<_>>>()?;
            for (i, a) in layouts.iter().enumerate() {
                for b in &layouts[i..] {
                    assemble_tb(a, b, self.uxp.rtp_payload_bytes)?;
                }
            }
        }
        Ok(())
    }
}
