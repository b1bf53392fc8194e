//! Command-line driver for the OBNOMA link simulator.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use obnoma::analysis::exit::{exit_chart, ExitSettings};
use obnoma::analysis::sweep::{ber_sweep, convergence_study, csi_robustness, SweepPoint};
use obnoma::analysis::RunConfig;
use obnoma::exec::{with_threads, ExecMode};
use obnoma::selftest::run_selftest;
use obnoma::sim::LinkSimulator;
use obnoma::Error;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "obnoma", version, about = "Uplink OTFS-NOMA link simulator with an iterative SIC turbo receiver")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Master seed of all random streams.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Monte Carlo trials per point (overrides the config file).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Directory receiving the CSV table and JSON metadata.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads (0 uses every core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// System preset (`desk` or `paper`), overriding the config file.
    #[arg(long, global = true)]
    preset: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// BER over the configured sweep grid.
    BerSweep,
    /// Detector and decoder transfer curves with the turbo trajectory.
    ExitChart,
    /// Mean BER after each turbo iteration.
    Convergence {
        /// Outer iterations to trace.
        #[arg(long, default_value_t = 6)]
        iters: usize,
    },
    /// BER versus the relative CSI error bound.
    CsiRobustness,
    /// Quick invariant checks.
    Selftest,
}

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    config: &'a RunConfig,
    seed: u64,
    threads: usize,
    git_describe: String,
    wall_time_s: f64,
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parse(_) => Failure::Config(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn load_config(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            RunConfig::from_toml_str(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(p) = &common.preset {
        cfg.preset = p.clone();
    }
    if let Some(t) = common.trials {
        if t == 0 {
            return Err(Failure::Config("--trials must be at least 1".into()));
        }
        cfg.sweep.trials = t;
        cfg.exit.trials = t;
    }
    cfg.system_config()?;
    cfg.turbo_config()?;
    Ok(cfg)
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Failure::Run(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Failure::Run(e.to_string()))?;
    }
    w.flush().map_err(|e| Failure::Run(e.to_string()))
}

fn grid(cfg: &RunConfig) -> Vec<SweepPoint> {
    let s = &cfg.sweep;
    let rs: Vec<Option<usize>> = if s.r.is_empty() { vec![None] } else { s.r.iter().map(|&r| Some(r)).collect() };
    let mut out = Vec::new();
    for &velocity_kmh in &s.velocity_kmh {
        for &es_em_db in &s.es_em_db {
            for &csi_eps in &s.csi_eps {
                for &r in &rs {
                    for &em_n0_db in &s.em_n0_db {
                        out.push(SweepPoint {
                            em_n0_db,
                            es_em_db,
                            velocity_kmh,
                            csi_eps,
                            r,
                        });
                    }
                }
            }
        }
    }
    out
}

fn first_point(cfg: &RunConfig) -> Result<SweepPoint, Failure> {
    grid(cfg)
        .into_iter()
        .next()
        .ok_or_else(|| Failure::Config("sweep grid is empty".into()))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let common = &cli.common;
    let cfg = load_config(common)?;
    let system = cfg.system_config()?;
    let turbo = cfg.turbo_config()?;
    let exec = ExecMode::Parallel;
    let seed = common.seed;
    let started = Instant::now();

    let (name, write): (&str, Box<dyn FnOnce(&Path) -> Result<(), Failure>>) = match &cli.command {
        Command::Selftest => {
            let checks = run_selftest()?;
            let mut ok = true;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            return if ok { Ok(()) } else { Err(Failure::Run("selftest failed".into())) };
        }
        Command::BerSweep => {
            let points = grid(&cfg);
            if points.is_empty() {
                return Err(Failure::Config("sweep grid is empty".into()));
            }
            let rows = with_threads(common.threads, || ber_sweep(&system, &points, &turbo, cfg.sweep.trials, seed, exec))?;
            ("ber-sweep", Box::new(move |p: &Path| write_csv(p, &rows)))
        }
        Command::CsiRobustness => {
            let point = first_point(&cfg)?;
            let eps = if cfg.sweep.csi_eps.len() > 1 { cfg.sweep.csi_eps.clone() } else { vec![0.0, 0.05, 0.1] };
            let rows = with_threads(common.threads, || csi_robustness(&system, &point, &eps, &turbo, cfg.sweep.trials, seed, exec))?;
            ("csi-robustness", Box::new(move |p: &Path| write_csv(p, &rows)))
        }
        Command::Convergence { iters } => {
            if *iters == 0 {
                return Err(Failure::Config("--iters must be at least 1".into()));
            }
            let point = first_point(&cfg)?;
            let t = obnoma::turbo::TurboConfig { outer_iters: *iters, ..turbo.clone() };
            let rows = with_threads(common.threads, || convergence_study(&system, &point, &t, cfg.sweep.trials, seed, exec))?;
            ("convergence", Box::new(move |p: &Path| write_csv(p, &rows)))
        }
        Command::ExitChart => {
            let e = &cfg.exit;
            let sim = LinkSimulator::new(
                system.clone().with_snr(e.em_n0_db, e.es_em_db),
                cfg.sweep.velocity_kmh.first().copied().unwrap_or(obnoma::sim::DEFAULT_SPEED_KMH),
            )?;
            let settings = ExitSettings {
                i_grid: e.i_grid.clone(),
                fixed_other: e.fixed_other.clone(),
                trials: e.trials,
                seed,
                turbo: turbo.clone(),
                exec,
            };
            let chart = with_threads(common.threads, || exit_chart(&sim, e.group, &settings))?;
            println!("trajectory excess over transfer curves: {:.4}", chart.trajectory_excess());
            let rows = chart.rows();
            ("exit-chart", Box::new(move |p: &Path| write_csv(p, &rows)))
        }
    };

    fs::create_dir_all(&common.out_dir).map_err(|e| Failure::Run(format!("{}: {e}", common.out_dir.display())))?;
    let csv_path = common.out_dir.join(format!("{name}.csv"));
    write(&csv_path)?;
    let meta = Metadata {
        command: name,
        config: &cfg,
        seed,
        threads: common.threads,
        git_describe: git_describe(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Failure::Run(e.to_string()))?;
    let json_path = common.out_dir.join(format!("{name}.json"));
    fs::write(&json_path, json).map_err(|e| Failure::Run(e.to_string()))?;
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
