//! Network composition and the fixed-step simulation kernel.
//!
//! Every neuron owns one output synapse. A connection routes that synapse's
//! square wave through a weight module into the excitatory or inhibitory
//! input of a downstream neuron; all pulses reaching the same input line are
//! OR-merged. Pulses produced during one step reach their targets one step
//! later, so update order within a step is irrelevant.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuron::{self, Drive, NeuronParams, NeuronState};
use crate::synapse::{self, osc_frequency, SynapseParams, SynapseState};
use crate::weight::{pulse_width, union_length, Pulse, PulseCursor, PulseTrain, WeightCode, WeightParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    #[serde(alias = "exc")]
    Excitatory,
    #[serde(alias = "inh")]
    Inhibitory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Connection {
    /// Source synapse (equal to the index of the neuron that drives it).
    pub pre: usize,
    /// Target neuron.
    pub post: usize,
    pub polarity: Polarity,
    pub code: WeightCode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Connectivity {
    None,
    /// Independent Bernoulli(`p`) draw per ordered pair, no self loops.
    Random {
        p: f64,
        #[serde(default = "half")]
        excitatory_fraction: f64,
        #[serde(default)]
        code_min: u8,
        #[serde(default = "fifteen")]
        code_max: u8,
    },
    Explicit {
        connections: Vec<Connection>,
    },
}

fn half() -> f64 {
    0.5
}

fn fifteen() -> u8 {
    15
}

impl Default for Connectivity {
    fn default() -> Self {
        Connectivity::Random {
            p: 0.1,
            excitatory_fraction: 0.5,
            code_min: 0,
            code_max: 15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub n_neurons: usize,
    pub connectivity: Connectivity,
    pub neuron: NeuronParams,
    pub synapse: SynapseParams,
    pub weight: WeightParams,
    pub rng_seed: u64,
    /// Simulation step (s).
    pub dt: f64,
    /// Interval between analog trace samples (s).
    pub sample_interval: f64,
    pub record_membrane: bool,
    pub record_synapse: bool,
    /// Keep every oscillator rising edge (un-delayed) in the traces.
    pub record_edges: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            n_neurons: 100,
            connectivity: Connectivity::default(),
            neuron: NeuronParams::default(),
            synapse: SynapseParams::default(),
            weight: WeightParams::default(),
            rng_seed: 42,
            dt: 10e-6,
            sample_interval: 100e-6,
            record_membrane: true,
            record_synapse: true,
            record_edges: false,
        }
    }
}

impl NetworkConfig {
    pub fn single_neuron() -> Self {
        NetworkConfig {
            n_neurons: 1,
            connectivity: Connectivity::None,
            ..NetworkConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_neurons < 1 {
            return Err(Error::config("network.n_neurons", "must be >= 1"));
        }
        self.neuron.validate()?;
        self.synapse.validate()?;
        self.weight.validate()?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::config("network.dt", "must be > 0"));
        }
        if self.dt > self.neuron.spike_width {
            return Err(Error::config("network.dt", "must not exceed neuron.spike_width"));
        }
        self.synapse
            .check_dt(self.dt)
            .map_err(|_| Error::config("network.dt", "dt * synapse.f_max must be < 0.5"))?;
        if !(self.sample_interval >= self.dt) {
            return Err(Error::config("network.sample_interval", "must be >= dt"));
        }
        match &self.connectivity {
            Connectivity::None => {}
            Connectivity::Random {
                p,
                excitatory_fraction,
                code_min,
                code_max,
            } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::config("network.connectivity.p", "must be in [0, 1]"));
                }
                if !(0.0..=1.0).contains(excitatory_fraction) {
                    return Err(Error::config(
                        "network.connectivity.excitatory_fraction",
                        "must be in [0, 1]",
                    ));
                }
                if *code_max > 15 || code_min > code_max {
                    return Err(Error::config(
                        "network.connectivity.code_max",
                        "codes must satisfy code_min <= code_max <= 15",
                    ));
                }
            }
            Connectivity::Explicit { connections } => {
                for (i, c) in connections.iter().enumerate() {
                    if c.pre >= self.n_neurons || c.post >= self.n_neurons {
                        return Err(Error::config(
                            format!("network.connectivity.connections[{i}]"),
                            format!(
                                "index out of range for {} neurons (pre={}, post={})",
                                self.n_neurons, c.pre, c.post
                            ),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Incoming connection as seen from the target neuron.
#[derive(Debug, Clone, Copy)]
struct Incoming {
    synapse: usize,
    width: f64,
}

#[derive(Debug, Clone)]
pub struct Network {
    config: NetworkConfig,
    connections: Vec<Connection>,
    exc_in: Vec<Vec<Incoming>>,
    inh_in: Vec<Vec<Incoming>>,
}

/// Builds the network described by `config`. Random topologies are a pure
/// function of `rng_seed`.
pub fn build_network(config: &NetworkConfig) -> Result<Network> {
    config.validate()?;
    let n = config.n_neurons;
    let connections = match &config.connectivity {
        Connectivity::None => Vec::new(),
        Connectivity::Explicit { connections } => connections.clone(),
        Connectivity::Random {
            p,
            excitatory_fraction,
            code_min,
            code_max,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
            let mut out = Vec::new();
            for pre in 0..n {
                for post in 0..n {
                    if pre == post {
                        continue;
                    }
                    if rng.gen::<f64>() < *p {
                        let polarity = if rng.gen::<f64>() < *excitatory_fraction {
                            Polarity::Excitatory
                        } else {
                            Polarity::Inhibitory
                        };
                        let code = WeightCode::new(rng.gen_range(*code_min..=*code_max))?;
                        out.push(Connection {
                            pre,
                            post,
                            polarity,
                            code,
                        });
                    }
                }
            }
            out
        }
    };
    let mut exc_in = vec![Vec::new(); n];
    let mut inh_in = vec![Vec::new(); n];
    for c in &connections {
        let inc = Incoming {
            synapse: c.pre,
            width: pulse_width(c.code, &config.weight),
        };
        match c.polarity {
            Polarity::Excitatory => exc_in[c.post].push(inc),
            Polarity::Inhibitory => inh_in[c.post].push(inc),
        }
    }
    Ok(Network {
        config: config.clone(),
        connections,
        exc_in,
        inh_in,
    })
}

impl Network {
    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn connections(&self) -> &[Connection] {
        &self.connections
    }

    pub fn n_neurons(&self) -> usize {
        self.config.n_neurons
    }

    /// Same topology with a different synapse tuning range.
    pub fn with_synapse_range(&self, f_min: f64, f_max: f64) -> Result<Network> {
        let mut config = self.config.clone();
        config.synapse = config.synapse.with_range(f_min, f_max);
        config.connectivity = Connectivity::Explicit {
            connections: self.connections.clone(),
        };
        build_network(&config)
    }
}

/// Excitatory and inhibitory pulse inputs applied to one neuron from outside
/// the network.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeuronInput {
    pub excitatory: PulseTrain,
    pub inhibitory: PulseTrain,
}

pub type ExternalInputs = BTreeMap<usize, NeuronInput>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputSample {
    pub time: f64,
    pub z: f64,
    pub target: f64,
}

/// Recorded time series of one run. Analog series are sampled on
/// `sample_times`; sample `s` of neuron/synapse `i` lives at `s * n + i`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceSet {
    pub n_neurons: usize,
    pub duration: f64,
    pub dt: f64,
    pub spikes: Vec<Vec<f64>>,
    pub sample_times: Vec<f64>,
    pub v_mem: Vec<f64>,
    pub v_syn: Vec<f64>,
    pub freq: Vec<f64>,
    pub charge_events: Vec<u64>,
    /// Oscillator rising edges per synapse; empty unless `record_edges` is set.
    pub edges: Vec<Vec<f64>>,
    pub output: Vec<OutputSample>,
}

impl TraceSet {
    pub fn spike_counts(&self) -> Vec<usize> {
        self.spikes.iter().map(Vec::len).collect()
    }

    pub fn v_syn_series(&self, synapse: usize) -> Vec<f64> {
        self.v_syn
            .iter()
            .skip(synapse)
            .step_by(self.n_neurons.max(1))
            .copied()
            .collect()
    }

    pub fn freq_series(&self, synapse: usize) -> Vec<f64> {
        self.freq
            .iter()
            .skip(synapse)
            .step_by(self.n_neurons.max(1))
            .copied()
            .collect()
    }

    pub fn v_mem_series(&self, neuron: usize) -> Vec<f64> {
        self.v_mem
            .iter()
            .skip(neuron)
            .step_by(self.n_neurons.max(1))
            .copied()
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct EdgePair {
    prev: Option<f64>,
    last: Option<f64>,
}

#[derive(Debug, Clone, Default)]
struct InputLine {
    train: PulseTrain,
    cursor: PulseCursor,
}

/// Step-by-step driver over a built network.
#[derive(Debug, Clone)]
pub struct Simulation<'a> {
    net: &'a Network,
    step: u64,
    neurons: Vec<NeuronState>,
    synapses: Vec<SynapseState>,
    edges: Vec<EdgePair>,
    ext_exc: Vec<InputLine>,
    ext_inh: Vec<InputLine>,
    bcast_exc: InputLine,
    bcast_inh: InputLine,
    decay: f64,
    sample_every: u64,
    scratch: Vec<(f64, f64)>,
    fired: Vec<bool>,
    traces: TraceSet,
}

impl<'a> Simulation<'a> {
    pub fn new(net: &'a Network, inputs: ExternalInputs) -> Result<Self> {
        let n = net.n_neurons();
        let cfg = &net.config;
        let mut ext_exc = vec![InputLine::default(); n];
        let mut ext_inh = vec![InputLine::default(); n];
        for (idx, input) in inputs {
            if idx >= n {
                return Err(Error::invalid(format!(
                    "external input for neuron {idx} but network has {n} neurons"
                )));
            }
            ext_exc[idx].train = input.excitatory;
            ext_inh[idx].train = input.inhibitory;
        }
        let sample_every = ((cfg.sample_interval / cfg.dt).round() as u64).max(1);
        Ok(Simulation {
            net,
            step: 0,
            neurons: vec![NeuronState::default(); n],
            synapses: vec![SynapseState::default(); n],
            edges: vec![EdgePair::default(); n],
            ext_exc,
            ext_inh,
            bcast_exc: InputLine::default(),
            bcast_inh: InputLine::default(),
            decay: (-cfg.dt / cfg.synapse.tau_leak).exp(),
            sample_every,
            scratch: Vec::with_capacity(64),
            fired: vec![false; n],
            traces: TraceSet {
                n_neurons: n,
                dt: cfg.dt,
                spikes: vec![Vec::new(); n],
                charge_events: vec![0; n],
                edges: if cfg.record_edges {
                    vec![Vec::new(); n]
                } else {
                    Vec::new()
                },
                ..TraceSet::default()
            },
        })
    }

    pub fn network(&self) -> &Network {
        self.net
    }

    /// Time at the start of the next step.
    pub fn time(&self) -> f64 {
        self.step as f64 * self.net.config.dt
    }

    pub fn steps_done(&self) -> u64 {
        self.step
    }

    pub fn neuron_states(&self) -> &[NeuronState] {
        &self.neurons
    }

    pub fn synapse_states(&self) -> &[SynapseState] {
        &self.synapses
    }

    /// Draws every membrane uniformly from `[0, v_th)` so neurons do not
    /// start in lockstep.
    pub fn randomize_membranes(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v_th = self.net.config.neuron.v_th;
        for s in &mut self.neurons {
            s.v_mem = rng.gen_range(0.0..v_th);
        }
    }

    pub fn set_synapse_states(&mut self, states: &[SynapseState]) {
        self.synapses.copy_from_slice(states);
    }

    /// Which neurons fired during the last step.
    pub fn fired(&self) -> &[bool] {
        &self.fired
    }

    /// Appends a pulse delivered to every neuron. Pulses must be pushed in
    /// time order and must not start before the current step.
    pub fn push_broadcast(&mut self, polarity: Polarity, pulse: Pulse) -> Result<()> {
        match polarity {
            Polarity::Excitatory => self.bcast_exc.train.push(pulse),
            Polarity::Inhibitory => self.bcast_inh.train.push(pulse),
        }
    }

    pub fn push_output(&mut self, sample: OutputSample) {
        self.traces.output.push(sample);
    }

    fn record_sample(&mut self) {
        let cfg = &self.net.config;
        self.traces.sample_times.push(self.time());
        if cfg.record_membrane {
            self.traces.v_mem.extend(self.neurons.iter().map(|s| s.v_mem));
        }
        if cfg.record_synapse {
            for s in &self.synapses {
                self.traces.v_syn.push(s.v_syn);
                self.traces.freq.push(osc_frequency(s.v_syn, &cfg.synapse));
            }
        }
    }

    /// Coverage of one input line of one neuron over `[t0, t1)`.
    fn coverage(
        scratch: &mut Vec<(f64, f64)>,
        incoming: &[Incoming],
        edges: &[EdgePair],
        ext: &mut InputLine,
        bcast: &mut InputLine,
        t0: f64,
        t1: f64,
    ) -> f64 {
        scratch.clear();
        for inc in incoming {
            let pair = edges[inc.synapse];
            let Some(last) = pair.last else { continue };
            if let Some(prev) = pair.prev {
                let end = (prev + inc.width).min(last);
                if end > t0 {
                    let lo = prev.max(t0);
                    let hi = end.min(t1);
                    if hi > lo {
                        scratch.push((lo, hi));
                    }
                }
            }
            let end = last + inc.width;
            if end > t0 && last < t1 {
                scratch.push((last.max(t0), end.min(t1)));
            }
        }
        ext.cursor.collect(&ext.train, t0, t1, scratch);
        bcast.cursor.collect(&bcast.train, t0, t1, scratch);
        union_length(scratch)
    }

    /// Advances every module by one step.
    pub fn advance(&mut self) {
        let cfg = &self.net.config;
        let dt = cfg.dt;
        if self.step.is_multiple_of(self.sample_every) {
            self.record_sample();
        }
        let t0 = self.time();
        let t1 = (self.step + 1) as f64 * dt;
        for i in 0..self.neurons.len() {
            let exc = Self::coverage(
                &mut self.scratch,
                &self.net.exc_in[i],
                &self.edges,
                &mut self.ext_exc[i],
                &mut self.bcast_exc,
                t0,
                t1,
            );
            let inh = Self::coverage(
                &mut self.scratch,
                &self.net.inh_in[i],
                &self.edges,
                &mut self.ext_inh[i],
                &mut self.bcast_inh,
                t0,
                t1,
            );
            let drive = Drive {
                exc: (exc / dt).min(1.0),
                inh: (inh / dt).min(1.0),
            };
            let (next, fired) = neuron::advance(&self.neurons[i], &cfg.neuron, drive, t0, dt);
            self.neurons[i] = next;
            self.fired[i] = fired;
            if fired {
                self.traces.spikes[i].push(t1);
            }
        }
        for j in 0..self.synapses.len() {
            let charge = if self.fired[j] {
                self.traces.charge_events[j] += 1;
                cfg.synapse.delta_up
            } else {
                0.0
            };
            let (next, edge) = synapse::advance(&self.synapses[j], &cfg.synapse, charge, self.decay, dt);
            self.synapses[j] = next;
            if let Some(offset) = edge {
                if cfg.record_edges {
                    self.traces.edges[j].push(t0 + offset);
                }
                // One-step transport delay to every downstream weight module.
                let pair = &mut self.edges[j];
                pair.prev = pair.last;
                pair.last = Some(t0 + offset + dt);
            }
        }
        self.step += 1;
    }

    /// Runs until `duration` and returns the traces.
    pub fn run_until(&mut self, duration: f64) {
        let dt = self.net.config.dt;
        let steps = (duration / dt).round() as u64;
        while self.step < steps {
            self.advance();
        }
    }

    pub fn finish(mut self) -> TraceSet {
        self.traces.duration = self.time();
        self.traces
    }
}

/// Simulates `network` for `duration` seconds with the given external pulse
/// inputs. Input pulses past the horizon are ignored.
pub fn simulate(network: &Network, external_inputs: ExternalInputs, duration: f64) -> Result<TraceSet> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::invalid(format!("duration must be > 0, got {duration}")));
    }
    let mut sim = Simulation::new(network, external_inputs)?;
    sim.run_until(duration);
    Ok(sim.finish())
}
