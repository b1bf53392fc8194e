//! Run configuration read from TOML files.

use serde::{Deserialize, Serialize};

use crate::detect::DetectorParams;
use crate::error::{Error, Result};
use crate::params::{Group, ResourceMap, SystemConfig};
use crate::sim::DEFAULT_SPEED_KMH;
use crate::turbo::{MobileDetector, StationaryDetector, TurboConfig};

/// Optional overrides of a preset's system parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemOverrides {
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub delta_f: Option<f64>,
    pub carrier_freq: Option<f64>,
    pub rolloff: Option<f64>,
    pub q: Option<usize>,
    pub u: Option<usize>,
    pub v: Option<usize>,
    pub code_rate: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub em_n0_db: Vec<f64>,
    pub es_em_db: Vec<f64>,
    pub velocity_kmh: Vec<f64>,
    pub csi_eps: Vec<f64>,
    /// Kept edges per factor node for R-GAMP-EP; empty keeps the
    /// configured mobile detector.
    pub r: Vec<usize>,
    pub trials: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            em_n0_db: vec![0.0, 2.0, 4.0, 6.0, 8.0],
            es_em_db: vec![5.0],
            velocity_kmh: vec![DEFAULT_SPEED_KMH],
            csi_eps: vec![0.0],
            r: Vec::new(),
            trials: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReceiverSection {
    /// `oamp-lmmse`, `r-oamp-lmmse` or `mp`.
    pub stationary: String,
    /// `gamp-ep`, `r-gamp-ep` or `mp`.
    pub mobile: String,
    /// Kept edges per factor node when `mobile = "r-gamp-ep"`.
    pub r: usize,
    pub outer_iters: usize,
    pub damping: f64,
    pub var_floor: f64,
    pub conv_threshold: f64,
    pub max_iter: usize,
    pub bp_iters: usize,
    pub perfect_sic: bool,
}

impl Default for ReceiverSection {
    fn default() -> Self {
        let t = TurboConfig::default();
        let p = t.stationary_params;
        ReceiverSection {
            stationary: "oamp-lmmse".into(),
            mobile: "gamp-ep".into(),
            r: 4,
            outer_iters: t.outer_iters,
            damping: p.damping,
            var_floor: p.var_floor,
            conv_threshold: p.conv_threshold,
            max_iter: p.max_iter,
            bp_iters: t.bp_iters,
            perfect_sic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExitSection {
    pub group: Group,
    pub em_n0_db: f64,
    pub es_em_db: f64,
    pub i_grid: Vec<f64>,
    pub fixed_other: Vec<f64>,
    pub trials: usize,
}

impl Default for ExitSection {
    fn default() -> Self {
        ExitSection {
            group: Group::Mobile,
            em_n0_db: 6.0,
            es_em_db: 5.0,
            i_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            fixed_other: vec![0.0, 0.5, 1.0],
            trials: 20,
        }
    }
}

/// Everything a CLI run reads from its configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// `desk` or `paper`.
    pub preset: String,
    pub system: SystemOverrides,
    pub sweep: SweepSection,
    pub receiver: ReceiverSection,
    pub exit: ExitSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            preset: "desk".into(),
            system: SystemOverrides::default(),
            sweep: SweepSection::default(),
            receiver: ReceiverSection::default(),
            exit: ExitSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.system_config()?;
        cfg.turbo_config()?;
        if cfg.sweep.trials == 0 || cfg.exit.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        Ok(cfg)
    }

    /// Preset with the overrides applied.
    pub fn system_config(&self) -> Result<SystemConfig> {
        let mut c = SystemConfig::preset(&self.preset)?;
        let o = &self.system;
        macro_rules! apply {
            ($($f:ident),*) => { $(if let Some(v) = o.$f { c.$f = v; })* };
        }
        apply!(m, n, delta_f, carrier_freq, rolloff, q, u, v, code_rate, seed);
        c.validate()?;
        ResourceMap::allocate(&c)?;
        Ok(c)
    }

    pub fn turbo_config(&self) -> Result<TurboConfig> {
        let r = &self.receiver;
        let stationary_detector = match r.stationary.as_str() {
            "oamp-lmmse" => StationaryDetector::OampLmmse,
            "r-oamp-lmmse" => StationaryDetector::ROampLmmse,
            "mp" => StationaryDetector::Mp,
            other => return Err(Error::Config(format!("unknown stationary detector `{other}`"))),
        };
        let mobile_detector = match r.mobile.as_str() {
            "gamp-ep" => MobileDetector::GampEp,
            "r-gamp-ep" => MobileDetector::RGampEp(r.r),
            "mp" => MobileDetector::Mp,
            other => return Err(Error::Config(format!("unknown mobile detector `{other}`"))),
        };
        let params = DetectorParams {
            damping: r.damping,
            var_floor: r.var_floor,
            conv_threshold: r.conv_threshold,
            max_iter: r.max_iter,
        };
        params.validate()?;
        if r.outer_iters == 0 {
            return Err(Error::Config("outer_iters must be at least 1".into()));
        }
        Ok(TurboConfig {
            outer_iters: r.outer_iters,
            stationary_params: params,
            mobile_params: params,
            stationary_detector,
            mobile_detector,
            bp_iters: r.bp_iters,
            perfect_sic: r.perfect_sic,
            ..TurboConfig::default()
        })
    }
}
