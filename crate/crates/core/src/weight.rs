//! Delay-line weight module and pulse-train utilities.
//!
//! The weight module turns each rising edge of a synapse's square wave into
//! a pulse whose width is picked by a 4-bit multiplexer code. Pulse frequency
//! carries activity; pulse width carries coupling strength.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 4-bit multiplexer tap selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct WeightCode(u8);

impl WeightCode {
    pub const MIN: WeightCode = WeightCode(0);
    pub const MAX: WeightCode = WeightCode(15);

    pub fn new(code: u8) -> Result<Self> {
        if code > 15 {
            return Err(Error::invalid(format!("weight code {code} outside [0, 15]")));
        }
        Ok(WeightCode(code))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = WeightCode> {
        (0..=15).map(WeightCode)
    }
}

impl TryFrom<u8> for WeightCode {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        WeightCode::new(v)
    }
}

impl From<WeightCode> for u8 {
    fn from(c: WeightCode) -> u8 {
        c.0
    }
}

impl fmt::Display for WeightCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04b}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightParams {
    /// Delay per inverter-chain tap (s).
    pub tau_unit: f64,
    /// Fixed width added to every pulse (s).
    pub w0: f64,
}

impl Default for WeightParams {
    fn default() -> Self {
        WeightParams {
            tau_unit: 50e-6,
            w0: 0.0,
        }
    }
}

impl WeightParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_unit > 0.0) || !self.tau_unit.is_finite() {
            return Err(Error::config("weight.tau_unit", "must be > 0"));
        }
        if !(self.w0 >= 0.0) || !self.w0.is_finite() {
            return Err(Error::config("weight.w0", "must be >= 0"));
        }
        Ok(())
    }
}

/// Output pulse width for a weight code: `w0 + (code + 1) * tau_unit`.
pub fn pulse_width(code: WeightCode, params: &WeightParams) -> f64 {
    params.w0 + f64::from(code.0 + 1) * params.tau_unit
}

/// Checked variant taking a raw integer code.
pub fn pulse_width_raw(code: i64, params: &WeightParams) -> Result<f64> {
    let code = u8::try_from(code)
        .ok()
        .filter(|c| *c <= 15)
        .ok_or_else(|| Error::invalid(format!("weight code {code} outside [0, 15]")))?;
    Ok(pulse_width(WeightCode(code), params))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub rise: f64,
    pub width: f64,
}

impl Pulse {
    pub fn fall(&self) -> f64 {
        self.rise + self.width
    }
}

/// Ordered, non-overlapping digital pulses.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseTrain {
    pulses: Vec<Pulse>,
}

impl PulseTrain {
    pub fn new(pulses: Vec<Pulse>) -> Result<Self> {
        for (i, p) in pulses.iter().enumerate() {
            if !(p.width > 0.0) || !p.rise.is_finite() || !p.width.is_finite() {
                return Err(Error::invalid(format!("pulse {i} has invalid rise/width {p:?}")));
            }
        }
        for (i, pair) in pulses.windows(2).enumerate() {
            if pair[1].rise <= pair[0].rise {
                return Err(Error::invalid(format!(
                    "pulse rise times not strictly increasing at index {}",
                    i + 1
                )));
            }
            if pair[1].rise < pair[0].fall() {
                return Err(Error::invalid(format!("pulses {i} and {} overlap", i + 1)));
            }
        }
        Ok(PulseTrain { pulses })
    }

    pub fn empty() -> Self {
        PulseTrain::default()
    }

    /// Periodic train of `width`-wide pulses at `freq` starting at `phase`
    /// and ending before `duration`.
    pub fn periodic(freq: f64, width: f64, duration: f64, phase: f64) -> Result<Self> {
        if !(freq > 0.0) {
            return Err(Error::invalid(format!("pulse frequency must be > 0, got {freq}")));
        }
        let period = 1.0 / freq;
        let n = ((duration - phase) / period).ceil().max(0.0) as usize;
        let pulses = (0..n)
            .map(|i| Pulse {
                rise: phase + i as f64 * period,
                width: width.min(period),
            })
            .filter(|p| p.rise < duration)
            .collect();
        PulseTrain::new(pulses)
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn high_time(&self) -> f64 {
        self.pulses.iter().map(|p| p.width).sum()
    }

    pub fn is_high(&self, t: f64) -> bool {
        let idx = self.pulses.partition_point(|p| p.rise <= t);
        idx > 0 && t < self.pulses[idx - 1].fall()
    }

    /// Time the train is high within `[t0, t1)`.
    pub fn high_time_in(&self, t0: f64, t1: f64) -> f64 {
        let start = self.pulses.partition_point(|p| p.fall() <= t0);
        self.pulses[start..]
            .iter()
            .take_while(|p| p.rise < t1)
            .map(|p| (p.fall().min(t1) - p.rise.max(t0)).max(0.0))
            .sum()
    }

    /// Appends a pulse at the end of the train. The new pulse must start at
    /// or after the fall of the current last pulse.
    pub fn push(&mut self, pulse: Pulse) -> Result<()> {
        if !(pulse.width > 0.0) {
            return Err(Error::invalid("pulse width must be > 0"));
        }
        if let Some(last) = self.pulses.last() {
            if pulse.rise <= last.rise || pulse.rise < last.fall() {
                return Err(Error::invalid(format!(
                    "pulse at {} overlaps or precedes last pulse at {}",
                    pulse.rise, last.rise
                )));
            }
        }
        self.pulses.push(pulse);
        Ok(())
    }
}

/// Sequential reader over a pulse train for monotonically advancing windows.
#[derive(Debug, Clone, Copy, Default)]
pub struct PulseCursor {
    next: usize,
}

impl PulseCursor {
    /// Pushes the parts of `train` that lie inside `[t0, t1)` onto `out`.
    /// Successive calls must use non-decreasing `t0`.
    pub fn collect(&mut self, train: &PulseTrain, t0: f64, t1: f64, out: &mut Vec<(f64, f64)>) {
        let pulses = &train.pulses;
        while self.next < pulses.len() && pulses[self.next].fall() <= t0 {
            self.next += 1;
        }
        for p in &pulses[self.next..] {
            if p.rise >= t1 {
                break;
            }
            let lo = p.rise.max(t0);
            let hi = p.fall().min(t1);
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
}

/// Total length of the union of `intervals`. Sorts in place.
pub(crate) fn union_length(intervals: &mut [(f64, f64)]) -> f64 {
    match intervals.len() {
        0 => 0.0,
        1 => intervals[0].1 - intervals[0].0,
        _ => {
            intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut total = 0.0;
            let (mut lo, mut hi) = intervals[0];
            for &(a, b) in &intervals[1..] {
                if a > hi {
                    total += hi - lo;
                    lo = a;
                    hi = b;
                } else if b > hi {
                    hi = b;
                }
            }
            total + (hi - lo)
        }
    }
}

/// Converts rising edges into a pulse train. Each edge starts one pulse of
/// `pulse_width(code)`; a pulse that would run past the next edge is cut at
/// that edge.
pub fn shape_pulses(rising_edges: &[f64], code: WeightCode, params: &WeightParams) -> Result<PulseTrain> {
    if let Some(i) = rising_edges.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(format!(
            "rising edges not strictly increasing at index {}",
            i + 1
        )));
    }
    let width = pulse_width(code, params);
    let pulses = rising_edges
        .iter()
        .enumerate()
        .map(|(i, &rise)| {
            let w = match rising_edges.get(i + 1) {
                Some(&next) => width.min(next - rise),
                None => width,
            };
            Pulse { rise, width: w }
        })
        .collect();
    PulseTrain::new(pulses)
}

/// Logical OR of pulse trains. Overlapping and touching pulses coalesce.
pub fn merge_or(trains: &[PulseTrain]) -> PulseTrain {
    let mut all: Vec<(f64, f64)> = trains
        .iter()
        .flat_map(|t| t.pulses.iter().map(|p| (p.rise, p.fall())))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut pulses: Vec<Pulse> = Vec::with_capacity(all.len());
    let mut current: Option<(f64, f64)> = None;
    for (lo, hi) in all {
        current = match current {
            Some((clo, chi)) if lo <= chi => Some((clo, chi.max(hi))),
            Some((clo, chi)) => {
                pulses.push(Pulse {
                    rise: clo,
                    width: chi - clo,
                });
                Some((lo, hi))
            }
            None => Some((lo, hi)),
        };
    }
    if let Some((lo, hi)) = current {
        pulses.push(Pulse {
            rise: lo,
            width: hi - lo,
        });
    }
    PulseTrain { pulses }
}
