//! Successive-interference-cancellation detector bank.

pub mod cancel;
pub mod gamp;
pub mod gaussian;
pub mod map_oracle;
pub mod oamp;

pub use cancel::{cancel_interference, Covariance, CovarianceForm};
pub use gamp::{gamp_ep_detect, mp_detect, r_gamp_ep_detect};
pub use gaussian::{gaussian_project, project_all, DetectorOutput, DetectorParams, GaussianMsg};
pub use map_oracle::map_oracle;
pub use oamp::{oamp_lmmse_detect, r_oamp_lmmse_detect};
