//! FORCE-style online training of the readout on top of a running network.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::feedback::{encode_feedback, FeedbackParams, RateEncoder};
use super::metrics::{evaluate, Metrics};
use super::rls::{readout, rls_update, RlsState};
use crate::error::{Error, Result};
use crate::network::{Network, OutputSample, Polarity, Simulation, TraceSet};
use crate::synapse::{osc_frequency, SynapseParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    #[default]
    Sine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetSpec {
    pub kind: SignalKind,
    pub frequency: f64,
    pub amplitude: f64,
}

impl Default for TargetSpec {
    fn default() -> Self {
        TargetSpec {
            kind: SignalKind::Sine,
            frequency: 10.0,
            amplitude: 0.8,
        }
    }
}

impl TargetSpec {
    pub fn value(&self, t: f64) -> f64 {
        match self.kind {
            SignalKind::Sine => self.amplitude * (2.0 * PI * self.frequency * t).sin(),
        }
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub target: TargetSpec,
    /// Periods of supervised learning.
    pub train_periods: u32,
    /// Periods of autonomous generation after the weights are frozen.
    pub test_periods: u32,
    /// Time between readout updates (s).
    pub learn_interval: f64,
    /// `P` starts as `I / rls_init_alpha`.
    pub rls_init_alpha: f64,
    /// Synapse tuning range `[f_min, f_max]` (Hz).
    pub frequency_range: [f64; 2],
    /// Feed the target back while learning instead of the readout output.
    pub teacher_forcing: bool,
    /// Seed for the untrained baseline readout.
    pub readout_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            target: TargetSpec::default(),
            train_periods: 5,
            test_periods: 2,
            learn_interval: 1e-3,
            rls_init_alpha: 1.0,
            frequency_range: [15.0, 200.0],
            teacher_forcing: true,
            readout_seed: 7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, dt: f64) -> Result<()> {
        if !(self.target.frequency > 0.0) || !self.target.frequency.is_finite() {
            return Err(Error::config("train.target.frequency", "must be > 0"));
        }
        if !self.target.amplitude.is_finite() || self.target.amplitude == 0.0 {
            return Err(Error::config("train.target.amplitude", "must be finite and non-zero"));
        }
        if self.train_periods < 1 {
            return Err(Error::config("train.train_periods", "must be >= 1"));
        }
        if !(self.learn_interval >= dt) || !self.learn_interval.is_finite() {
            return Err(Error::config("train.learn_interval", "must be >= network dt"));
        }
        if !(self.rls_init_alpha > 0.0) {
            return Err(Error::config("train.rls_init_alpha", "must be > 0"));
        }
        let [lo, hi] = self.frequency_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::config(
                "train.frequency_range",
                "must satisfy 0 < f_min <= f_max",
            ));
        }
        if dt * hi >= 0.5 {
            return Err(Error::config(
                "train.frequency_range",
                format!("f_max = {hi} Hz is undersampled at dt = {dt}"),
            ));
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        f64::from(self.train_periods + self.test_periods) * self.target.period()
    }

    pub fn train_duration(&self) -> f64 {
        f64::from(self.train_periods) * self.target.period()
    }
}

/// Normalized instantaneous oscillator frequency of every synapse.
pub fn reservoir_state(synapses: &[crate::synapse::SynapseState], params: &SynapseParams, out: &mut Vec<f64>) {
    out.clear();
    let span = params.f_max - params.f_min;
    out.extend(synapses.iter().map(|s| {
        let f = osc_frequency(s.v_syn, params);
        if f <= 0.0 || span <= 0.0 {
            if f > 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            ((f - params.f_min) / span).clamp(0.0, 1.0)
        }
    }));
}

/// Result of one reservoir run.
#[derive(Debug, Clone)]
pub struct ForceRun {
    pub rls: RlsState,
    pub traces: TraceSet,
    /// Reservoir state at each output sample, sample-major.
    pub states: Vec<Vec<f64>>,
    /// `|z - target|` before each learning update.
    pub train_errors: Vec<f64>,
    /// Output quality over the autonomous phase.
    pub autonomous: Metrics,
}

impl ForceRun {
    /// Mean `|e|` over the updates of training period `period` (0-based).
    pub fn mean_train_error(&self, period: usize, updates_per_period: usize) -> f64 {
        let chunk = &self.train_errors[period * updates_per_period..(period + 1) * updates_per_period];
        chunk.iter().sum::<f64>() / chunk.len() as f64
    }
}

enum Readout {
    Learn,
    Fixed(Vec<f64>),
}

/// Trains the readout online: teacher-forced feedback and RLS updates for
/// `train_periods`, then frozen weights with the network driven by its own
/// output for `test_periods`.
pub fn train_force(network: &Network, train_cfg: &TrainConfig, fb: &FeedbackParams) -> Result<ForceRun> {
    run(network, train_cfg, fb, Readout::Learn)
}

/// Runs the same schedule with a fixed random readout and no learning.
/// Serves as the untrained baseline.
pub fn run_untrained(network: &Network, train_cfg: &TrainConfig, fb: &FeedbackParams) -> Result<ForceRun> {
    let n = network.n_neurons();
    let mut rng = ChaCha8Rng::seed_from_u64(train_cfg.readout_seed);
    let scale = (3.0 / n as f64).sqrt();
    let w = (0..n).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
    run(network, train_cfg, fb, Readout::Fixed(w))
}

fn run(network: &Network, cfg: &TrainConfig, fb: &FeedbackParams, mode: Readout) -> Result<ForceRun> {
    let dt = network.config().dt;
    cfg.validate(dt)?;
    fb.validate()?;
    let [lo, hi] = cfg.frequency_range;
    let net = network.with_synapse_range(lo, hi)?;
    let syn = net.config().synapse;
    let n = net.n_neurons();

    let mut sim = Simulation::new(&net, Default::default())?;
    sim.randomize_membranes(net.config().rng_seed ^ 0x9e37_79b9_7f4a_7c15);
    let (learning, mut rls) = match mode {
        Readout::Learn => (true, RlsState::new(n, cfg.rls_init_alpha)?),
        Readout::Fixed(w) => (false, RlsState::with_weights(w, cfg.rls_init_alpha)?),
    };
    let mut enc_exc = RateEncoder::new(fb.fb_pulse_width, fb.f_fb_max)?;
    let mut enc_inh = RateEncoder::new(fb.fb_pulse_width, fb.f_fb_max)?;

    let total_steps = (cfg.total_duration() / dt).round() as u64;
    let train_steps = (cfg.train_duration() / dt).round() as u64;
    let learn_every = ((cfg.learn_interval / dt).round() as u64).max(1);

    let mut r = Vec::with_capacity(n);
    let mut states = Vec::new();
    let mut train_errors = Vec::new();
    let mut z = 0.0;
    let mut auto_z = Vec::new();
    let mut auto_target = Vec::new();

    for step in 0..total_steps {
        let t0 = step as f64 * dt;
        let training = step < train_steps;
        let fed_back = if training && cfg.teacher_forcing && learning {
            cfg.target.value(t0)
        } else {
            z
        };
        let (f_exc, f_inh) = encode_feedback(fed_back, fb);
        // Feedback pulses reach the network one step after emission.
        if let Some(mut p) = enc_exc.advance(f_exc, t0, dt) {
            p.rise += dt;
            sim.push_broadcast(Polarity::Excitatory, p)?;
        }
        if let Some(mut p) = enc_inh.advance(f_inh, t0, dt) {
            p.rise += dt;
            sim.push_broadcast(Polarity::Inhibitory, p)?;
        }

        sim.advance();

        reservoir_state(sim.synapse_states(), &syn, &mut r);
        z = readout(&r, &rls.w)?;
        if (step + 1) % learn_every == 0 {
            let t = (step + 1) as f64 * dt;
            let target = cfg.target.value(t);
            if training && learning {
                train_errors.push((z - target).abs());
                rls_update(&mut rls, &r, z, target)?;
                z = readout(&r, &rls.w)?;
            } else if !training {
                auto_z.push(z);
                auto_target.push(target);
            }
            if !z.is_finite() {
                return Err(Error::Numerical(format!("readout diverged at t = {t}")));
            }
            sim.push_output(OutputSample { time: t, z, target });
            states.push(r.clone());
        }
    }

    let autonomous = if auto_z.is_empty() {
        Metrics {
            nrmse: f64::NAN,
            mean_abs_err: f64::NAN,
        }
    } else {
        evaluate(&auto_z, &auto_target)?
    };
    Ok(ForceRun {
        rls,
        traces: sim.finish(),
        states,
        train_errors,
        autonomous,
    })
}
