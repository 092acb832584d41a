//! Experiment orchestration: TOML configuration, seeded Monte Carlo sweeps
//! over `Eb/N0` and CSV output.

pub mod analyze;
pub mod config;
pub mod csv;
pub mod sweep;

pub use analyze::{bound_paths, nle_table, union_bound_curve};
pub use self::csv::{emit_csv, format_sig, HEADER, write_csv, write_mse_trace, write_series};
pub use config::{
    AfdmConfig, ChannelSettings, CodeSettings, DopplerSettings, EbConvention, ExperimentConfig, Receiver, ScmaSettings,
    Waveform,
};
pub use sweep::{noise_variance, run_sweep, se_prediction, se_traces, trial_rng, BerPoint, MseStats, SweepResult, N0_FLOOR};
