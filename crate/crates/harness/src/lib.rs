//! Experiment configuration, Monte Carlo campaigns, metrics and the
//! `raa-isac` command line.

pub mod campaign;
pub mod cli;
pub mod config;
pub mod error;
pub mod metrics;

pub use campaign::{run_campaign, run_montecarlo, CampaignResult, RunManifest};
pub use config::{load_config, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use metrics::{aoa_rmse, average_missing_shots, match_estimates};
