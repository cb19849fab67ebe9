//! Configuration, trace serialization, measurement and calibration.

pub mod calibrate;
pub mod config;
pub mod measure;
pub mod traces;

pub use calibrate::{calibrate, Anchors, Calibration, Residual};
pub use config::{parse_config, Config, NetworkSection};
pub use measure::firing_rate;
pub use traces::{fmt_sig9, read_output, read_spikes, write_toml, write_traces, RunSummary};
