//! Monte Carlo BER sweeps, convergence and CSI-robustness studies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::params::SystemConfig;
use crate::sim::{LinkSimulator, TrialSeeds};
use crate::turbo::{MobileDetector, StationaryDetector, TurboConfig};

/// One operating point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub em_n0_db: f64,
    pub es_em_db: f64,
    pub velocity_kmh: f64,
    pub csi_eps: f64,
    /// Kept edges per factor node; `None` runs the configured mobile detector.
    pub r: Option<usize>,
}

impl SweepPoint {
    pub fn new(em_n0_db: f64, es_em_db: f64) -> Self {
        SweepPoint {
            em_n0_db,
            es_em_db,
            velocity_kmh: crate::sim::DEFAULT_SPEED_KMH,
            csi_eps: 0.0,
            r: None,
        }
    }
}

/// Mean BER of each group at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub em_n0_db: f64,
    pub es_em_db: f64,
    pub velocity_kmh: f64,
    pub csi_eps: f64,
    pub r: Option<usize>,
    pub q: usize,
    pub m: usize,
    pub n: usize,
    pub stationary_detector: String,
    pub mobile_detector: String,
    pub ber_s: f64,
    pub se_s: f64,
    pub ber_m: f64,
    pub se_m: f64,
    pub trials: usize,
}

/// Mean BER after each outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationPoint {
    pub iteration: usize,
    pub ber_s: f64,
    pub se_s: f64,
    pub ber_m: f64,
    pub se_m: f64,
    pub trials: usize,
}

/// Per-iteration group BERs of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialBers {
    pub ber_s: Vec<f64>,
    pub ber_m: Vec<f64>,
}

impl TrialBers {
    pub fn final_s(&self) -> f64 {
        self.ber_s.last().copied().unwrap_or(0.0)
    }

    pub fn final_m(&self) -> f64 {
        self.ber_m.last().copied().unwrap_or(0.0)
    }
}

/// Sample mean and its standard error.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn stationary_label(d: StationaryDetector) -> String {
    match d {
        StationaryDetector::OampLmmse => "oamp-lmmse".into(),
        StationaryDetector::ROampLmmse => "r-oamp-lmmse".into(),
        StationaryDetector::Mp => "mp".into(),
    }
}

pub fn mobile_label(d: MobileDetector) -> String {
    match d {
        MobileDetector::GampEp => "gamp-ep".into(),
        MobileDetector::RGampEp(r) => format!("r-gamp-ep-{r}"),
        MobileDetector::Mp => "mp".into(),
    }
}

fn point_turbo(turbo: &TurboConfig, point: &SweepPoint) -> TurboConfig {
    let mut t = turbo.clone();
    if let Some(r) = point.r {
        t.mobile_detector = MobileDetector::RGampEp(r);
    }
    t
}

fn simulator(base: &SystemConfig, point: &SweepPoint) -> Result<LinkSimulator> {
    LinkSimulator::new(base.clone().with_snr(point.em_n0_db, point.es_em_db), point.velocity_kmh)
}

/// Runs `trials` frames at one point. Trial `t` uses the streams of
/// `TrialSeeds::derive(seed, t)`, so points sharing a seed are paired.
pub fn point_trials(
    base: &SystemConfig,
    point: &SweepPoint,
    turbo: &TurboConfig,
    trials: usize,
    seed: u64,
    exec: ExecMode,
) -> Result<Vec<TrialBers>> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let sim = simulator(base, point)?;
    let t = point_turbo(turbo, point);
    map_indexed(exec, trials, |i| {
        let r = sim.run_trial(&t, point.csi_eps, TrialSeeds::derive(seed, i as u64))?;
        Ok(TrialBers {
            ber_s: r.ber_s,
            ber_m: r.ber_m,
        })
    })
    .into_iter()
    .collect()
}

pub fn summarize(base: &SystemConfig, point: &SweepPoint, turbo: &TurboConfig, results: &[TrialBers]) -> BerPoint {
    let t = point_turbo(turbo, point);
    let s: Vec<f64> = results.iter().map(TrialBers::final_s).collect();
    let m: Vec<f64> = results.iter().map(TrialBers::final_m).collect();
    let (ber_s, se_s) = mean_se(&s);
    let (ber_m, se_m) = mean_se(&m);
    BerPoint {
        em_n0_db: point.em_n0_db,
        es_em_db: point.es_em_db,
        velocity_kmh: point.velocity_kmh,
        csi_eps: point.csi_eps,
        r: point.r,
        q: base.q,
        m: base.m,
        n: base.n,
        stationary_detector: stationary_label(t.stationary_detector),
        mobile_detector: mobile_label(t.mobile_detector),
        ber_s,
        se_s,
        ber_m,
        se_m,
        trials: results.len(),
    }
}

/// Mean BER and standard error of both groups at every grid point.
pub fn ber_sweep(
    base: &SystemConfig,
    grid: &[SweepPoint],
    turbo: &TurboConfig,
    trials: usize,
    seed: u64,
    exec: ExecMode,
) -> Result<Vec<BerPoint>> {
    grid.iter()
        .map(|p| {
            let r = point_trials(base, p, turbo, trials, seed, exec)?;
            Ok(summarize(base, p, turbo, &r))
        })
        .collect()
}

/// Mean BER after every outer iteration at one point.
pub fn convergence_study(
    base: &SystemConfig,
    point: &SweepPoint,
    turbo: &TurboConfig,
    trials: usize,
    seed: u64,
    exec: ExecMode,
) -> Result<Vec<IterationPoint>> {
    let results = point_trials(base, point, turbo, trials, seed, exec)?;
    Ok(iteration_table(&results))
}

pub fn iteration_table(results: &[TrialBers]) -> Vec<IterationPoint> {
    let iters = results.iter().map(|r| r.ber_s.len().max(r.ber_m.len())).max().unwrap_or(0);
    (0..iters)
        .map(|i| {
            let s: Vec<f64> = results.iter().filter_map(|r| r.ber_s.get(i).copied()).collect();
            let m: Vec<f64> = results.iter().filter_map(|r| r.ber_m.get(i).copied()).collect();
            let (ber_s, se_s) = mean_se(&s);
            let (ber_m, se_m) = mean_se(&m);
            IterationPoint {
                iteration: i + 1,
                ber_s,
                se_s,
                ber_m,
                se_m,
                trials: results.len(),
            }
        })
        .collect()
}

/// BER at each CSI error bound in `eps`, all other coordinates from `point`.
pub fn csi_robustness(
    base: &SystemConfig,
    point: &SweepPoint,
    eps: &[f64],
    turbo: &TurboConfig,
    trials: usize,
    seed: u64,
    exec: ExecMode,
) -> Result<Vec<BerPoint>> {
    let grid: Vec<SweepPoint> = eps.iter().map(|&e| SweepPoint { csi_eps: e, ..*point }).collect();
    ber_sweep(base, &grid, turbo, trials, seed, exec)
}
