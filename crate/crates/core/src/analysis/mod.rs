//! Experiment drivers: mutual-information tools, EXIT charts, BER sweeps
//! and run configuration.

pub mod config;
pub mod exit;
pub mod mi;
pub mod sweep;

pub use config::RunConfig;
pub use exit::{exit_chart, ExitChart, ExitCurve, ExitSettings};
pub use mi::{estimate_mi, generate_apriori_llrs, j_function, j_inverse};
pub use sweep::{ber_sweep, convergence_study, csi_robustness, BerPoint, IterationPoint, SweepPoint};
