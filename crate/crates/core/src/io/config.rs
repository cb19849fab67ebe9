//! Sectioned TOML run configuration.
//!
//! ```toml
//! [network]
//! n_neurons = 100
//! rng_seed = 42
//!
//! [network.connectivity]
//! kind = "random"
//! p = 0.1
//!
//! [synapse]
//! f_max = 2000.0
//! ```
//!
//! Every section and key is optional; missing values take their defaults.
//! Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Connectivity, NetworkConfig};
use crate::neuron::NeuronParams;
use crate::reservoir::{FeedbackParams, TrainConfig};
use crate::synapse::SynapseParams;
use crate::weight::WeightParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    pub n_neurons: usize,
    pub rng_seed: u64,
    pub dt: f64,
    pub sample_interval: f64,
    pub record_membrane: bool,
    pub record_synapse: bool,
    pub record_edges: bool,
    pub connectivity: Connectivity,
}

impl Default for NetworkSection {
    fn default() -> Self {
        let n = NetworkConfig::default();
        NetworkSection {
            n_neurons: n.n_neurons,
            rng_seed: n.rng_seed,
            dt: n.dt,
            sample_interval: n.sample_interval,
            record_membrane: n.record_membrane,
            record_synapse: n.record_synapse,
            record_edges: n.record_edges,
            connectivity: n.connectivity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub network: NetworkSection,
    pub neuron: NeuronParams,
    pub synapse: SynapseParams,
    pub weight: WeightParams,
    pub train: TrainConfig,
    pub feedback: FeedbackParams,
}

impl Config {
    pub fn network_config(&self) -> NetworkConfig {
        let s = &self.network;
        NetworkConfig {
            n_neurons: s.n_neurons,
            connectivity: s.connectivity.clone(),
            neuron: self.neuron,
            synapse: self.synapse,
            weight: self.weight,
            rng_seed: s.rng_seed,
            dt: s.dt,
            sample_interval: s.sample_interval,
            record_membrane: s.record_membrane,
            record_synapse: s.record_synapse,
            record_edges: s.record_edges,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.network_config().validate()?;
        self.train.validate(self.network.dt)?;
        self.feedback.validate()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(format!("cannot serialize config: {e}")))
    }
}

/// Parses and validates a configuration. Syntax errors and unknown keys
/// report the line; range errors report the dotted key.
pub fn parse_config(text: &str) -> Result<Config> {
    let config: Config = toml::from_str(text).map_err(|e| {
        let message = e.message().trim().to_string();
        match e.span() {
            Some(span) => {
                let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                Error::Parse(format!("line {line}: {message}"))
            }
            None => Error::Parse(message),
        }
    })?;
    config.validate()?;
    Ok(config)
}
