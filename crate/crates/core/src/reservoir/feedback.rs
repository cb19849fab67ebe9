//! Conversion of the scalar output into excitatory/inhibitory pulse rates
//! and of rates into pulse trains.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weight::{Pulse, PulseTrain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeedbackParams {
    /// Pulse rate per unit output amplitude (Hz).
    pub gain: f64,
    /// Rate cap (Hz).
    pub f_fb_max: f64,
    pub fb_pulse_width: f64,
}

impl Default for FeedbackParams {
    fn default() -> Self {
        FeedbackParams {
            gain: 200.0,
            f_fb_max: 200.0,
            fb_pulse_width: 200e-6,
        }
    }
}

impl FeedbackParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain > 0.0) || !self.gain.is_finite() {
            return Err(Error::config("feedback.gain", "must be > 0"));
        }
        if !(self.f_fb_max > 0.0) || !self.f_fb_max.is_finite() {
            return Err(Error::config("feedback.f_fb_max", "must be > 0"));
        }
        if !(self.fb_pulse_width > 0.0) {
            return Err(Error::config("feedback.fb_pulse_width", "must be > 0"));
        }
        if self.fb_pulse_width >= 1.0 / self.f_fb_max {
            return Err(Error::config(
                "feedback.fb_pulse_width",
                "must be shorter than the minimum inter-pulse gap 1/f_fb_max",
            ));
        }
        Ok(())
    }
}

/// Splits `z` by sign into excitatory and inhibitory pulse rates
/// proportional to `|z|`, each capped at `f_fb_max`.
pub fn encode_feedback(z: f64, params: &FeedbackParams) -> (f64, f64) {
    let exc = (params.gain * z.max(0.0)).min(params.f_fb_max);
    let inh = (params.gain * (-z).max(0.0)).min(params.f_fb_max);
    (exc, inh)
}

/// Integrate-and-fire rate encoder: a phase accumulator over the
/// instantaneous rate that emits one pulse per unit of accumulated phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEncoder {
    phase: f64,
    width: f64,
    max_rate: f64,
}

impl RateEncoder {
    pub fn new(width: f64, max_rate: f64) -> Result<Self> {
        if !(width > 0.0) || !(max_rate > 0.0) {
            return Err(Error::invalid("rate encoder needs width > 0 and max_rate > 0"));
        }
        if width >= 1.0 / max_rate {
            return Err(Error::config(
                "feedback.fb_pulse_width",
                format!("pulse width {width} does not fit the gap 1/{max_rate}"),
            ));
        }
        Ok(RateEncoder {
            phase: 0.0,
            width,
            max_rate,
        })
    }

    /// Integrates `rate` over `[t0, t0 + dt)`; returns the pulse emitted at
    /// the unit crossing, if any. Rates are clamped to `[0, max_rate]`.
    pub fn advance(&mut self, rate: f64, t0: f64, dt: f64) -> Option<Pulse> {
        let rate = rate.clamp(0.0, self.max_rate);
        if rate <= 0.0 {
            return None;
        }
        let next = self.phase + rate * dt;
        if next >= 1.0 {
            let offset = ((1.0 - self.phase) / rate).min(dt);
            self.phase = next - 1.0;
            Some(Pulse {
                rise: t0 + offset,
                width: self.width,
            })
        } else {
            self.phase = next;
            None
        }
    }
}

/// Builds the pulse train produced by the rate encoder for a time-varying
/// rate `rate(t)`, sampled every `step` seconds over `[0, duration)`.
pub fn pulse_train_from_rate<F>(rate: F, width: f64, max_rate: f64, duration: f64, step: f64) -> Result<PulseTrain>
where
    F: Fn(f64) -> f64,
{
    if !(step > 0.0) || max_rate * step >= 1.0 {
        return Err(Error::invalid(format!(
            "encoder step {step} must be > 0 and resolve max_rate {max_rate}"
        )));
    }
    let mut enc = RateEncoder::new(width, max_rate)?;
    let steps = (duration / step).round() as u64;
    let mut train = PulseTrain::empty();
    for k in 0..steps {
        let t0 = k as f64 * step;
        if let Some(p) = enc.advance(rate(t0 + 0.5 * step), t0, step) {
            train.push(p)?;
        }
    }
    Ok(train)
}
