//! Time-domain leaky integrate-and-fire neuron.
//!
//! The membrane node is charged by a net leakage current (lumped into a
//! constant rate `r_base`), pushed up faster while an excitatory pulse is
//! high and pulled down while an inhibitory pulse is high. When the membrane
//! reaches the inverter trip point the neuron fires and the membrane is reset
//! to zero within the same step.
//!
//! Voltages are normalized to a unit supply. Rates are in volts per second.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NeuronParams {
    /// Firing threshold (normalized volts).
    pub v_th: f64,
    /// Net baseline charging rate of the membrane (V/s).
    pub r_base: f64,
    /// Extra charging rate while an excitatory pulse is high (V/s).
    pub r_exc: f64,
    /// Discharging rate while an inhibitory pulse is high (V/s).
    pub r_inh: f64,
    /// Width of the emitted output spike (s).
    pub spike_width: f64,
}

impl Default for NeuronParams {
    fn default() -> Self {
        NeuronParams {
            v_th: 0.5,
            r_base: 100.0,
            r_exc: 200.0,
            r_inh: 1000.0,
            spike_width: 100e-6,
        }
    }
}

impl NeuronParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("v_th", self.v_th > 0.0, "must be > 0"),
            ("r_base", self.r_base > 0.0, "must be > 0"),
            ("r_exc", self.r_exc >= 0.0, "must be >= 0"),
            ("r_inh", self.r_inh >= 0.0, "must be >= 0"),
            ("spike_width", self.spike_width > 0.0, "must be > 0"),
        ];
        for (key, ok, msg) in checks {
            if !ok {
                return Err(Error::config(format!("neuron.{key}"), msg));
            }
        }
        let all = [self.v_th, self.r_base, self.r_exc, self.r_inh, self.spike_width];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("neuron", "parameters must be finite"));
        }
        Ok(())
    }

    /// Returns a copy whose baseline rate makes the free-running neuron fire
    /// at `rate_hz`.
    pub fn with_free_run_rate(mut self, rate_hz: f64) -> Self {
        self.r_base = self.v_th * rate_hz;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NeuronState {
    pub v_mem: f64,
    pub last_spike_time: Option<f64>,
}

/// Input levels applied over one step, as the fraction of the step during
/// which each pulse line was high. A boolean pulse level maps to 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Drive {
    pub exc: f64,
    pub inh: f64,
}

impl Drive {
    pub const NONE: Drive = Drive { exc: 0.0, inh: 0.0 };

    pub fn from_levels(exc_high: bool, inh_high: bool) -> Self {
        Drive {
            exc: if exc_high { 1.0 } else { 0.0 },
            inh: if inh_high { 1.0 } else { 0.0 },
        }
    }
}

fn check_dt(params: &NeuronParams, dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("neuron step dt must be > 0, got {dt}")));
    }
    if dt > params.spike_width {
        return Err(Error::invalid(format!(
            "neuron step dt ({dt}) exceeds spike_width ({})",
            params.spike_width
        )));
    }
    Ok(())
}

/// Advances one neuron by `dt` starting at time `t` with boolean pulse
/// levels. Returns the new state and whether the neuron fired.
pub fn neuron_step(
    state: &NeuronState,
    params: &NeuronParams,
    exc_high: bool,
    inh_high: bool,
    t: f64,
    dt: f64,
) -> Result<(NeuronState, bool)> {
    check_dt(params, dt)?;
    Ok(advance(state, params, Drive::from_levels(exc_high, inh_high), t, dt))
}

/// Same as [`neuron_step`] with fractional pulse coverage. Used by the
/// network kernel, where pulse edges fall between step boundaries.
pub fn neuron_step_driven(
    state: &NeuronState,
    params: &NeuronParams,
    drive: Drive,
    t: f64,
    dt: f64,
) -> Result<(NeuronState, bool)> {
    check_dt(params, dt)?;
    Ok(advance(state, params, drive, t, dt))
}

/// Unchecked update; callers validate `dt` once up front.
#[inline]
pub(crate) fn advance(
    state: &NeuronState,
    params: &NeuronParams,
    drive: Drive,
    t: f64,
    dt: f64,
) -> (NeuronState, bool) {
    let rate = params.r_base + params.r_exc * drive.exc - params.r_inh * drive.inh;
    let v = (state.v_mem + rate * dt).max(0.0);
    if v >= params.v_th {
        (
            NeuronState {
                v_mem: 0.0,
                last_spike_time: Some(t + dt),
            },
            true,
        )
    } else {
        (
            NeuronState {
                v_mem: v,
                last_spike_time: state.last_spike_time,
            },
            false,
        )
    }
}

/// Interspike interval of the neuron with no input. With constant-rate
/// charging this is exact.
pub fn free_run_period(params: &NeuronParams) -> Result<f64> {
    if !(params.r_base > 0.0) {
        return Err(Error::invalid(format!(
            "free-run period needs r_base > 0, got {}",
            params.r_base
        )));
    }
    Ok(params.v_th / params.r_base)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_free(params: &NeuronParams, dt: f64, duration: f64) -> Vec<f64> {
        let mut st = NeuronState::default();
        let mut spikes = Vec::new();
        let steps = (duration / dt).round() as usize;
        for k in 0..steps {
            let (next, fired) = neuron_step(&st, params, false, false, k as f64 * dt, dt).unwrap();
            if fired {
                spikes.push(next.last_spike_time.unwrap());
            }
            st = next;
        }
        spikes
    }

    #[test]
    fn first_fire_at_five_ms() {
        let p = NeuronParams::default();
        let spikes = run_free(&p, 1e-6, 0.012);
        assert!((spikes[0] - 5e-3).abs() <= 2e-6, "{}", spikes[0]);
        assert_eq!(spikes.len(), 2);
    }

    #[test]
    fn zero_rate_inputs_are_noops() {
        let p = NeuronParams {
            r_exc: 0.0,
            r_inh: 0.0,
            ..NeuronParams::default()
        };
        let mut a = NeuronState::default();
        let mut b = NeuronState::default();
        for k in 0..20_000 {
            let t = k as f64 * 1e-5;
            let (na, fa) = neuron_step(&a, &p, false, false, t, 1e-5).unwrap();
            let (nb, fb) = neuron_step(&b, &p, true, true, t, 1e-5).unwrap();
            assert_eq!(na, nb);
            assert_eq!(fa, fb);
            a = na;
            b = nb;
        }
    }

    #[test]
    fn crossing_fires_and_resets() {
        let p = NeuronParams {
            spike_width: 2e-3,
            ..NeuronParams::default()
        };
        let st = NeuronState {
            v_mem: 0.49,
            last_spike_time: None,
        };
        let (next, fired) = neuron_step(&st, &p, false, false, 0.0, 1e-3).unwrap();
        assert!(fired);
        assert_eq!(next.v_mem, 0.0);
        assert_eq!(next.last_spike_time, Some(1e-3));
    }

    #[test]
    fn rejects_bad_dt() {
        let p = NeuronParams::default();
        let st = NeuronState::default();
        assert!(matches!(
            neuron_step(&st, &p, false, false, 0.0, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(neuron_step(&st, &p, false, false, 0.0, -1e-6).is_err());
        assert!(neuron_step(&st, &p, false, false, 0.0, 1e-3).is_err());
    }

    #[test]
    fn inhibition_clamps_at_zero() {
        let p = NeuronParams::default();
        let mut st = NeuronState::default();
        for k in 0..100 {
            let (next, fired) = neuron_step(&st, &p, false, true, k as f64 * 1e-5, 1e-5).unwrap();
            assert!(!fired);
            assert_eq!(next.v_mem, 0.0);
            st = next;
        }
    }

    #[test]
    fn free_run_period_closed_form() {
        let p = NeuronParams::default();
        assert!((free_run_period(&p).unwrap() - 5e-3).abs() < 1e-15);
        let p230 = NeuronParams { r_base: 115.0, ..p };
        let period = free_run_period(&p230).unwrap();
        assert!((period - 4.3478e-3).abs() < 1e-6);
        assert!((1.0 / period - 230.0).abs() < 1e-9);
        let bad = NeuronParams { r_base: 0.0, ..p };
        assert!(free_run_period(&bad).is_err());
    }

    #[test]
    fn simulated_period_matches_closed_form() {
        let dt = 1e-6;
        for (v_th, r_base) in [(0.5, 100.0), (0.5, 115.0), (0.3, 47.0), (0.8, 333.0)] {
            let p = NeuronParams {
                v_th,
                r_base,
                ..NeuronParams::default()
            };
            let spikes = run_free(&p, dt, 0.1);
            let expected = free_run_period(&p).unwrap();
            for pair in spikes.windows(2) {
                let measured = pair[1] - pair[0];
                assert!(
                    (measured - expected).abs() <= 2.0 * dt,
                    "v_th={v_th} r_base={r_base}: {measured} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn validate_names_key() {
        let p = NeuronParams {
            r_base: -1.0,
            ..NeuronParams::default()
        };
        match p.validate() {
            Err(Error::Config { key, .. }) => assert_eq!(key, "neuron.r_base"),
            other => panic!("{other:?}"),
        }
    }
}
