//! Bench measurement setups: a function generator standing in for the
//! pre-stage synapse, a single neuron feeding its synapse, and the
//! source-to-weight-to-synapse chain used to observe the synapse response.

use crate::error::{Error, Result};
use crate::network::{
    build_network, simulate, Connectivity, ExternalInputs, NetworkConfig, NeuronInput, Polarity, TraceSet,
};
use crate::neuron::NeuronParams;
use crate::synapse::{self, osc_frequency, SynapseParams, SynapseState};
use crate::weight::{shape_pulses, PulseTrain, WeightCode, WeightParams};

/// Square-wave source at `freq` shaped by a weight module with `code`.
/// Rising edges sit at `k / freq`.
pub fn source_pulses(freq: f64, code: WeightCode, weight: &WeightParams, duration: f64) -> Result<PulseTrain> {
    if !(freq > 0.0) || !freq.is_finite() {
        return Err(Error::invalid(format!("source frequency must be > 0, got {freq}")));
    }
    let n = (duration * freq).ceil() as usize;
    let edges: Vec<f64> = (0..n).map(|k| k as f64 / freq).filter(|&t| t < duration).collect();
    shape_pulses(&edges, code, weight)
}

/// Input condition for a single neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronDrive {
    /// `None` means no input at all.
    pub polarity: Option<Polarity>,
    pub input_freq: f64,
    pub code: WeightCode,
}

impl NeuronDrive {
    pub const fn none() -> Self {
        NeuronDrive {
            polarity: None,
            input_freq: 100.0,
            code: WeightCode::MAX,
        }
    }

    /// 100 Hz input at code 1100, the bench setting for the spike-trace
    /// measurements.
    pub fn bench(polarity: Option<Polarity>) -> Self {
        NeuronDrive {
            polarity,
            input_freq: 100.0,
            code: WeightCode::new(0b1100).expect("valid code"),
        }
    }

    pub fn input(&self, weight: &WeightParams, duration: f64) -> Result<NeuronInput> {
        let mut input = NeuronInput::default();
        match self.polarity {
            None => {}
            Some(Polarity::Excitatory) => {
                input.excitatory = source_pulses(self.input_freq, self.code, weight, duration)?
            }
            Some(Polarity::Inhibitory) => {
                input.inhibitory = source_pulses(self.input_freq, self.code, weight, duration)?
            }
        }
        Ok(input)
    }
}

/// Module parameters for bench scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bench {
    pub neuron: NeuronParams,
    pub synapse: SynapseParams,
    pub weight: WeightParams,
    pub dt: f64,
}

impl Default for Bench {
    fn default() -> Self {
        let net = NetworkConfig::default();
        Bench {
            neuron: net.neuron,
            synapse: net.synapse,
            weight: net.weight,
            dt: net.dt,
        }
    }
}

impl Bench {
    pub fn network_config(&self) -> NetworkConfig {
        NetworkConfig {
            n_neurons: 1,
            connectivity: Connectivity::None,
            neuron: self.neuron,
            synapse: self.synapse,
            weight: self.weight,
            dt: self.dt,
            ..NetworkConfig::default()
        }
    }

    /// One neuron under `drive` for `duration`, with its output synapse.
    pub fn run_neuron(&self, drive: &NeuronDrive, duration: f64, record_analog: bool) -> Result<TraceSet> {
        let mut cfg = self.network_config();
        cfg.record_membrane = record_analog;
        cfg.record_synapse = record_analog;
        cfg.record_edges = true;
        let net = build_network(&cfg)?;
        let mut inputs = ExternalInputs::new();
        inputs.insert(0, drive.input(&self.weight, duration)?);
        simulate(&net, inputs, duration)
    }

    /// Spike times of a lone neuron under `drive`.
    pub fn neuron_spikes(&self, drive: &NeuronDrive, duration: f64) -> Result<Vec<f64>> {
        let mut tr = self.run_neuron(drive, duration, false)?;
        Ok(std::mem::take(&mut tr.spikes[0]))
    }

    /// Mean oscillator frequency of the neuron's synapse over
    /// `[settle, settle + window)`, counted from rising edges.
    pub fn synapse_mean_frequency(&self, drive: &NeuronDrive, settle: f64, window: f64) -> Result<f64> {
        let tr = self.run_neuron(drive, settle + window, false)?;
        let n = tr.edges[0]
            .iter()
            .filter(|&&t| t >= settle && t < settle + window)
            .count();
        Ok(n as f64 / window)
    }
}

/// Analog record of the source-to-weight-to-synapse chain.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChainTrace {
    pub times: Vec<f64>,
    pub v_syn: Vec<f64>,
    pub freq: Vec<f64>,
    /// Arrival times of weight-module pulses at the synapse.
    pub events: Vec<f64>,
    pub edges: Vec<f64>,
}

/// Drives a synapse directly from a weight-shaped square source. Each
/// weight pulse injects charge in proportion to its width relative to one
/// neuron spike (`reference_width`).
pub fn square_chain(
    bench: &Bench,
    source_freq: f64,
    code: WeightCode,
    duration: f64,
    sample_interval: f64,
) -> Result<ChainTrace> {
    bench.synapse.validate()?;
    bench.synapse.check_dt(bench.dt)?;
    let pulses = source_pulses(source_freq, code, &bench.weight, duration)?;
    let dt = bench.dt;
    let decay = (-dt / bench.synapse.tau_leak).exp();
    let steps = (duration / dt).round() as u64;
    let every = ((sample_interval / dt).round() as u64).max(1);
    let mut st = SynapseState::default();
    let mut out = ChainTrace::default();
    let mut next = 0;
    for k in 0..steps {
        let t0 = k as f64 * dt;
        let t1 = (k + 1) as f64 * dt;
        let mut charge = 0.0;
        while next < pulses.len() && pulses.pulses()[next].rise < t1 {
            let p = pulses.pulses()[next];
            if p.rise >= t0 {
                let q = bench.synapse.charge_for_pulse(p.width, bench.neuron.spike_width);
                charge = 1.0 - (1.0 - charge) * (1.0 - q);
                out.events.push(p.rise);
            }
            next += 1;
        }
        if k % every == 0 {
            out.times.push(t0);
            out.v_syn.push(st.v_syn);
            out.freq.push(osc_frequency(st.v_syn, &bench.synapse));
        }
        let (n, edge) = synapse::advance(&st, &bench.synapse, charge, decay, dt);
        if let Some(o) = edge {
            out.edges.push(t0 + o);
        }
        st = n;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_edges_periodic() {
        let w = WeightParams::default();
        let t = source_pulses(100.0, WeightCode::new(12).unwrap(), &w, 0.1).unwrap();
        assert_eq!(t.len(), 10);
        assert!((t.pulses()[3].rise - 0.03).abs() < 1e-15);
        assert!(source_pulses(0.0, WeightCode::MIN, &w, 0.1).is_err());
    }

    #[test]
    fn polarity_orders_rates() {
        let b = Bench::default();
        let count = |p| b.neuron_spikes(&NeuronDrive::bench(p), 1.0).unwrap().len();
        let inh = count(Some(Polarity::Inhibitory));
        let none = count(None);
        let exc = count(Some(Polarity::Excitatory));
        assert!(inh < none && none < exc, "{inh} {none} {exc}");
    }

    #[test]
    fn chain_jumps_at_events() {
        let b = Bench::default();
        let tr = square_chain(&b, 10.0, WeightCode::MAX, 0.5, 1e-4).unwrap();
        assert_eq!(tr.events.len(), 5);
        let max = tr.v_syn.iter().cloned().fold(0.0, f64::max);
        assert!(max > 0.0);
    }
}
