//! Reservoir-computing harness: synapse-frequency readout, online RLS
//! training, and feedback of the output into the network as pulse trains.

mod feedback;
mod metrics;
mod rls;
mod train;

pub use feedback::{encode_feedback, pulse_train_from_rate, FeedbackParams, RateEncoder};
pub use metrics::{evaluate, Metrics};
pub use rls::{readout, rls_update, RlsState};
pub use train::{reservoir_state, run_untrained, train_force, ForceRun, SignalKind, TargetSpec, TrainConfig};
