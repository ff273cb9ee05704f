//! Experiment sweeps and the file-based pipeline around them.

mod config;
mod manifest;
pub mod pipeline;
mod run;

pub use config::{quality_vectors, Campaign, CampaignConfig, Cell, Experiment1Config};
pub use manifest::{sha256_file, FileEntry, Manifest};
pub use run::{build_initial_pool, run_campaign, trial_seed, CampaignReport, MetricsRow};
