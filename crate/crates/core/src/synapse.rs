//! Ring-oscillator synapse.
//!
//! Each presynaptic spike injects charge onto the oscillator supply node
//! (`v_syn`), which leaks exponentially back to rest. Above an onset voltage
//! the ring oscillates with a frequency that grows with `v_syn`; a phase
//! accumulator stands in for the inverter ring and reports its rising edges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the frequency-vs-voltage curve above onset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyMap {
    #[default]
    Linear,
    /// Frequency grows with the square root of the normalized overdrive.
    Sqrt,
}

/// What the oscillator phase does while `v_syn` is below onset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdlePhase {
    #[default]
    Freeze,
    Reset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynapseParams {
    /// Fraction of the remaining headroom `v_max - v_syn` added per input spike.
    pub delta_up: f64,
    /// Leak time constant of `v_syn` toward zero (s).
    pub tau_leak: f64,
    /// Oscillation onset voltage.
    pub v_osc: f64,
    /// Saturation level of `v_syn`.
    pub v_max: f64,
    /// Frequency at onset (Hz).
    pub f_min: f64,
    /// Frequency at saturation (Hz).
    pub f_max: f64,
    pub freq_map: FrequencyMap,
    pub idle_phase: IdlePhase,
}

impl Default for SynapseParams {
    /// Output of `calibrate` against the bench anchors with the default
    /// neuron, rounded to four significant digits.
    fn default() -> Self {
        SynapseParams {
            delta_up: 0.3076,
            tau_leak: 21.80e-3,
            v_osc: 0.3466,
            v_max: 1.0,
            f_min: 15.0,
            f_max: 200.0,
            freq_map: FrequencyMap::Linear,
            idle_phase: IdlePhase::Freeze,
        }
    }
}

impl SynapseParams {
    /// Starting point for calibration.
    pub fn initial_guess() -> Self {
        SynapseParams {
            delta_up: 0.08,
            tau_leak: 50e-3,
            v_osc: 0.2,
            ..SynapseParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.delta_up,
            self.tau_leak,
            self.v_osc,
            self.v_max,
            self.f_min,
            self.f_max,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("synapse", "parameters must be finite"));
        }
        if !(self.delta_up > 0.0 && self.delta_up <= 1.0) {
            return Err(Error::config("synapse.delta_up", "must be in (0, 1]"));
        }
        if !(self.tau_leak > 0.0) {
            return Err(Error::config("synapse.tau_leak", "must be > 0"));
        }
        if !(self.v_max > 0.0) {
            return Err(Error::config("synapse.v_max", "must be > 0"));
        }
        if !(self.v_osc >= 0.0 && self.v_osc < self.v_max) {
            return Err(Error::config("synapse.v_osc", "must be in [0, v_max)"));
        }
        if !(self.f_min > 0.0) {
            return Err(Error::config("synapse.f_min", "must be > 0"));
        }
        if !(self.f_max >= self.f_min) {
            return Err(Error::config("synapse.f_max", "must be >= f_min"));
        }
        Ok(())
    }

    /// Rejects steps too coarse to resolve the fastest oscillation.
    pub fn check_dt(&self, dt: f64) -> Result<()> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("synapse step dt must be > 0, got {dt}")));
        }
        if dt * self.f_max >= 0.5 {
            return Err(Error::config(
                "dt",
                format!("oscillator undersampled: dt*f_max = {} must be < 0.5", dt * self.f_max),
            ));
        }
        Ok(())
    }

    /// Same parameters with the tuning range replaced.
    pub fn with_range(mut self, f_min: f64, f_max: f64) -> Self {
        self.f_min = f_min;
        self.f_max = f_max;
        self
    }

    /// Charge fraction delivered by an input pulse `width` long, relative to
    /// one reference spike of `reference_width` delivering `delta_up`.
    pub fn charge_for_pulse(&self, width: f64, reference_width: f64) -> f64 {
        1.0 - (1.0 - self.delta_up).powf(width / reference_width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SynapseState {
    pub v_syn: f64,
    /// Oscillator phase in [0, 1).
    pub phase: f64,
}

/// Oscillation frequency at supply voltage `v_syn`; zero below onset.
pub fn osc_frequency(v_syn: f64, params: &SynapseParams) -> f64 {
    if v_syn < params.v_osc {
        return 0.0;
    }
    let x = ((v_syn - params.v_osc) / (params.v_max - params.v_osc)).clamp(0.0, 1.0);
    let x = match params.freq_map {
        FrequencyMap::Linear => x,
        FrequencyMap::Sqrt => x.sqrt(),
    };
    (params.f_min + (params.f_max - params.f_min) * x).clamp(params.f_min, params.f_max)
}

/// Advances one synapse by `dt`. `spike_in` injects one spike worth of
/// charge at the start of the step. Returns the new state and the offset
/// within the step of the oscillator's rising edge, if one occurred. The
/// `dt * f_max < 0.5` guard admits at most one edge per step.
pub fn synapse_step(
    state: &SynapseState,
    params: &SynapseParams,
    spike_in: bool,
    dt: f64,
) -> Result<(SynapseState, Option<f64>)> {
    params.check_dt(dt)?;
    let charge = if spike_in { params.delta_up } else { 0.0 };
    Ok(advance(state, params, charge, (-dt / params.tau_leak).exp(), dt))
}

/// Unchecked update with an arbitrary charge fraction. `decay` must be
/// `exp(-dt / tau_leak)`; callers precompute it.
#[inline]
pub(crate) fn advance(
    state: &SynapseState,
    params: &SynapseParams,
    charge: f64,
    decay: f64,
    dt: f64,
) -> (SynapseState, Option<f64>) {
    let charged = state.v_syn + charge * (params.v_max - state.v_syn);
    // Frequency is evaluated at the mid-step voltage.
    let v_mid = charged * decay.sqrt();
    let v_next = charged * decay;
    let f = osc_frequency(v_mid, params);
    let mut phase = state.phase;
    let mut edge = None;
    if f > 0.0 {
        let advanced = phase + f * dt;
        if advanced >= 1.0 {
            edge = Some(((1.0 - phase) / f).min(dt));
            phase = advanced - 1.0;
        } else {
            phase = advanced;
        }
    } else if params.idle_phase == IdlePhase::Reset {
        phase = 0.0;
    }
    (SynapseState { v_syn: v_next, phase }, edge)
}

/// Time integral of the oscillation frequency while `v_syn` decays freely
/// from `v0` for `duration` seconds (i.e. the expected number of edges).
pub fn frequency_integral_over_decay(v0: f64, duration: f64, params: &SynapseParams) -> f64 {
    if v0 < params.v_osc || duration <= 0.0 {
        return 0.0;
    }
    let tau = params.tau_leak;
    // Time at which the decaying voltage drops below onset.
    let t_on = if params.v_osc > 0.0 {
        (tau * (v0 / params.v_osc).ln()).min(duration)
    } else {
        duration
    };
    match params.freq_map {
        FrequencyMap::Linear => {
            let slope = (params.f_max - params.f_min) / (params.v_max - params.v_osc);
            (params.f_min - slope * params.v_osc) * t_on + slope * v0 * tau * (-(-t_on / tau).exp_m1())
        }
        FrequencyMap::Sqrt => {
            // Composite Simpson; the integrand is smooth on (0, t_on).
            let n = 256;
            let h = t_on / n as f64;
            let f = |t: f64| osc_frequency(v0 * (-t / tau).exp(), params);
            let mut acc = f(0.0) + f(t_on);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f(i as f64 * h);
            }
            acc * h / 3.0
        }
    }
}

/// Voltage just before each spike once a periodic input at `spike_rate`
/// has settled.
pub fn steady_state_pre_spike_voltage(spike_rate: f64, params: &SynapseParams) -> f64 {
    if spike_rate <= 0.0 {
        return 0.0;
    }
    let a = (-1.0 / (spike_rate * params.tau_leak)).exp();
    let d = params.delta_up;
    d * params.v_max * a / (1.0 - (1.0 - d) * a)
}

/// Mean oscillation frequency under a periodic spike input at `spike_rate`,
/// averaged over one inter-spike interval at the charge/leak fixed point.
pub fn steady_state_frequency(spike_rate: f64, params: &SynapseParams) -> Result<f64> {
    if !(spike_rate >= 0.0) || !spike_rate.is_finite() {
        return Err(Error::invalid(format!(
            "spike rate must be finite and >= 0, got {spike_rate}"
        )));
    }
    if spike_rate == 0.0 {
        return Ok(0.0);
    }
    let v_pre = steady_state_pre_spike_voltage(spike_rate, params);
    let v_peak = v_pre + params.delta_up * (params.v_max - v_pre);
    let period = 1.0 / spike_rate;
    Ok(frequency_integral_over_decay(v_peak, period, params) / period)
}

/// Mean oscillation frequency over `[start, end)` for an arbitrary input
/// spike train, computed event by event from the closed-form decay. Spikes
/// before `start` only shape the initial voltage.
pub fn mean_frequency_for_spikes(spikes: &[f64], start: f64, end: f64, params: &SynapseParams) -> f64 {
    let mut v = 0.0;
    let mut t = 0.0_f64;
    let mut edges = 0.0;
    let tau = params.tau_leak;
    let accumulate = |v0: f64, from: f64, to: f64, edges: &mut f64| {
        let lo = from.max(start);
        let hi = to.min(end);
        if hi > lo {
            let v_lo = v0 * (-(lo - from) / tau).exp();
            *edges += frequency_integral_over_decay(v_lo, hi - lo, params);
        }
    };
    for &s in spikes {
        if s >= end {
            break;
        }
        accumulate(v, t, s, &mut edges);
        v *= (-(s - t) / tau).exp();
        v += params.delta_up * (params.v_max - v);
        t = s;
    }
    accumulate(v, t, end, &mut edges);
    edges / (end - start)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simulate_periodic(rate: f64, params: &SynapseParams, dt: f64, duration: f64) -> (usize, f64) {
        let mut st = SynapseState::default();
        let steps = (duration / dt).round() as usize;
        let mut next_spike = 0.0;
        let mut edges = 0;
        let mut last_pre = 0.0;
        for k in 0..steps {
            let t = k as f64 * dt;
            let spike = t + 0.5 * dt >= next_spike;
            if spike {
                last_pre = st.v_syn;
                next_spike += 1.0 / rate;
            }
            let (next, edge) = synapse_step(&st, params, spike, dt).unwrap();
            edges += edge.is_some() as usize;
            st = next;
        }
        (edges, last_pre)
    }

    #[test]
    fn rest_is_fixed_point() {
        let p = SynapseParams::default();
        for dt in [1e-6, 1e-5, 1e-3] {
            let mut st = SynapseState::default();
            for _ in 0..1000 {
                let (next, edge) = synapse_step(&st, &p, false, dt).unwrap();
                assert_eq!(next.v_syn, 0.0);
                assert!(edge.is_none());
                st = next;
            }
        }
    }

    #[test]
    fn one_spike_starts_oscillation() {
        let p = SynapseParams {
            delta_up: 0.1,
            tau_leak: 1.0,
            ..SynapseParams::default()
        };
        let mut st = SynapseState {
            v_syn: p.v_osc - 0.01,
            phase: 0.0,
        };
        assert_eq!(osc_frequency(st.v_syn, &p), 0.0);
        let (next, _) = synapse_step(&st, &p, true, 1e-5).unwrap();
        assert!(osc_frequency(next.v_syn, &p) > 0.0);
        st = next;
        let mut edges = 0;
        for _ in 0..10_000 {
            let (n, e) = synapse_step(&st, &p, false, 1e-5).unwrap();
            edges += e.is_some() as usize;
            st = n;
        }
        assert!(edges >= 1);
    }

    #[test]
    fn frequency_map_endpoints() {
        let p = SynapseParams::default();
        assert_eq!(osc_frequency(p.v_osc, &p), 15.0);
        assert_eq!(osc_frequency(p.v_max, &p), 200.0);
        assert_eq!(osc_frequency(0.0, &p), 0.0);
        let mid = 0.5 * (p.v_osc + p.v_max);
        assert!((osc_frequency(mid, &p) - 107.5).abs() < 1e-12);
    }

    #[test]
    fn undersampled_oscillator_rejected() {
        let p = SynapseParams::default().with_range(15.0, 20_000.0);
        let st = SynapseState::default();
        assert!(synapse_step(&st, &p, false, 1e-5).is_ok());
        assert!(matches!(
            synapse_step(&st, &p, false, 2.5e-5),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn steady_state_zero_rate() {
        assert_eq!(steady_state_frequency(0.0, &SynapseParams::default()).unwrap(), 0.0);
        assert!(steady_state_frequency(-1.0, &SynapseParams::default()).is_err());
    }

    #[test]
    fn fixed_point_iteration_matches_long_simulation() {
        let p = SynapseParams::default();
        let dt = 1e-5;
        for rate in [50.0, 100.0, 200.0, 250.0] {
            // Oracle: iterate the spike-then-decay map to convergence.
            let a = (-1.0 / (rate * p.tau_leak)).exp();
            let mut v = 0.0;
            for _ in 0..10_000 {
                v = (v + p.delta_up * (p.v_max - v)) * a;
            }
            let (_, sim_pre) = simulate_periodic(rate, &p, dt, 2.0);
            assert!(
                (sim_pre - v).abs() / v < 0.01,
                "rate {rate}: sim {sim_pre} vs fixed point {v}"
            );
            assert!((steady_state_pre_spike_voltage(rate, &p) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn steady_state_frequency_matches_ten_second_run() {
        let p = SynapseParams::default();
        let dt = 1e-5;
        for rate in [100.0, 200.0, 400.0] {
            let predicted = steady_state_frequency(rate, &p).unwrap();
            let (edges, _) = simulate_periodic(rate, &p, dt, 10.0);
            let measured = edges as f64 / 10.0;
            assert!(
                (measured - predicted).abs() / predicted < 0.02,
                "rate {rate}: {measured} vs {predicted}"
            );
        }
    }

    #[test]
    fn edge_count_at_constant_voltage() {
        // tau_leak huge so v_syn is effectively constant.
        let p = SynapseParams {
            tau_leak: 1e12,
            ..SynapseParams::default()
        };
        for v in [0.25, 0.5, 0.9, 1.0] {
            let mut st = SynapseState { v_syn: v, phase: 0.0 };
            let mut edges = 0i64;
            let window = 1.0;
            for _ in 0..100_000 {
                let (n, e) = synapse_step(&st, &p, false, 1e-5).unwrap();
                edges += e.is_some() as i64;
                st = n;
            }
            let expected = (osc_frequency(v, &p) * window).round() as i64;
            assert!((edges - expected).abs() <= 1, "v={v}: {edges} vs {expected}");
        }
    }

    #[test]
    fn sqrt_map_integral_matches_linear_structure() {
        let p = SynapseParams {
            freq_map: FrequencyMap::Sqrt,
            ..SynapseParams::default()
        };
        // Constant voltage (no decay) reduces the integral to f * duration.
        let q = SynapseParams { tau_leak: 1e12, ..p };
        let got = frequency_integral_over_decay(0.6, 0.1, &q);
        assert!((got - osc_frequency(0.6, &q) * 0.1).abs() < 1e-6);
        assert!(steady_state_frequency(200.0, &p).unwrap() > 0.0);
    }

    #[test]
    fn reset_mode_zeroes_phase() {
        let p = SynapseParams {
            idle_phase: IdlePhase::Reset,
            ..SynapseParams::default()
        };
        let st = SynapseState { v_syn: 0.0, phase: 0.7 };
        let (n, _) = synapse_step(&st, &p, false, 1e-5).unwrap();
        assert_eq!(n.phase, 0.0);
        let frozen = SynapseParams::default();
        let (n, _) = synapse_step(&st, &frozen, false, 1e-5).unwrap();
        assert_eq!(n.phase, 0.7);
    }

    #[test]
    fn event_driven_mean_matches_steady_state() {
        let p = SynapseParams::default();
        let rate = 200.0;
        let spikes: Vec<f64> = (0..2000).map(|i| i as f64 / rate).collect();
        let mean = mean_frequency_for_spikes(&spikes, 1.0, 6.0, &p);
        let ss = steady_state_frequency(rate, &p).unwrap();
        assert!((mean - ss).abs() / ss < 1e-3, "{mean} vs {ss}");
    }
}
