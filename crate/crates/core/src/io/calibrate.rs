//! Fitting behavioral parameters to bench measurements.
//!
//! The free-run anchor fixes the neuron's baseline rate in closed form. The
//! synapse anchors are matched by a simplex search over
//! `(delta_up, tau_leak, v_osc)` with `tau_leak` bounded by [`TAU_MAX`]:
//! each candidate is scored against the neuron spike trains recorded under
//! the three bench drive conditions, using the closed-form decay between
//! spikes to get the exact mean oscillation frequency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Polarity;
use crate::scenarios::{Bench, NeuronDrive};
use crate::synapse::{mean_frequency_for_spikes, SynapseParams};

/// Measured targets to fit. Absent anchors are not fitted, so an anchors
/// file lists exactly the targets it wants.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Anchors {
    pub free_run_hz: Option<f64>,
    /// Synapse frequency driven by the free-running neuron.
    pub synapse_none_hz: Option<f64>,
    /// Synapse frequency driven by the neuron under 100 Hz inhibitory input.
    pub synapse_inhibited_hz: Option<f64>,
    /// Synapse frequency driven by the neuron under 100 Hz excitatory input.
    pub synapse_excited_hz: Option<f64>,
}

impl Anchors {
    /// Bench measurements of the fabricated circuits.
    pub fn paper() -> Self {
        Anchors {
            free_run_hz: Some(200.0),
            synapse_none_hz: Some(90.0),
            synapse_inhibited_hz: Some(41.0),
            synapse_excited_hz: Some(98.0),
        }
    }

    pub fn free_run_only(hz: f64) -> Self {
        Anchors {
            free_run_hz: Some(hz),
            synapse_none_hz: None,
            synapse_inhibited_hz: None,
            synapse_excited_hz: None,
        }
    }

    /// Every anchor multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Anchors {
            free_run_hz: self.free_run_hz.map(|v| v * factor),
            synapse_none_hz: self.synapse_none_hz.map(|v| v * factor),
            synapse_inhibited_hz: self.synapse_inhibited_hz.map(|v| v * factor),
            synapse_excited_hz: self.synapse_excited_hz.map(|v| v * factor),
        }
    }

    fn synapse_targets(&self) -> Vec<SynapseTarget> {
        let mut out = Vec::new();
        let mut add = |name, target: Option<f64>, polarity, tolerance| {
            if let Some(target) = target {
                out.push(SynapseTarget {
                    name,
                    target,
                    drive: NeuronDrive::bench(polarity),
                    tolerance,
                });
            }
        };
        add("synapse_none", self.synapse_none_hz, None, SYNAPSE_NONE_TOL);
        add(
            "synapse_inhibited",
            self.synapse_inhibited_hz,
            Some(Polarity::Inhibitory),
            SYNAPSE_INHIBITED_TOL,
        );
        add(
            "synapse_excited",
            self.synapse_excited_hz,
            Some(Polarity::Excitatory),
            SYNAPSE_EXCITED_TOL,
        );
        out
    }
}

pub const FREE_RUN_TOL: f64 = 0.02;
pub const SYNAPSE_NONE_TOL: f64 = 0.05;
pub const SYNAPSE_INHIBITED_TOL: f64 = 0.15;
pub const SYNAPSE_EXCITED_TOL: f64 = 0.05;

/// Settling time discarded before the synapse measurement window.
pub const SETTLE: f64 = 0.5;
/// Synapse frequency averaging window.
pub const WINDOW: f64 = 5.0;
/// Upper bound on the fitted leak time constant. The anchors are
/// steady-state readings, so the synapse must settle within `SETTLE`.
pub const TAU_MAX: f64 = SETTLE / 5.0;

#[derive(Debug, Clone, Copy)]
struct SynapseTarget {
    name: &'static str,
    target: f64,
    drive: NeuronDrive,
    tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    pub target: f64,
    pub achieved: f64,
    /// Allowed relative deviation.
    pub tolerance: f64,
}

impl Residual {
    pub fn relative(&self) -> f64 {
        (self.achieved - self.target) / self.target
    }

    pub fn within_tolerance(&self) -> bool {
        self.relative().abs() <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub bench: Bench,
    pub residuals: Vec<Residual>,
}

fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct Objective<'a> {
    base: SynapseParams,
    targets: &'a [SynapseTarget],
    spikes: &'a [Vec<f64>],
}

impl Objective<'_> {
    fn params(&self, x: &[f64; 3]) -> SynapseParams {
        SynapseParams {
            delta_up: sigmoid(x[0]),
            tau_leak: TAU_MAX * sigmoid(x[1]),
            v_osc: sigmoid(x[2]) * self.base.v_max,
            ..self.base
        }
    }

    fn achieved(&self, params: &SynapseParams) -> Vec<f64> {
        self.spikes
            .iter()
            .map(|s| mean_frequency_for_spikes(s, SETTLE, SETTLE + WINDOW, params))
            .collect()
    }

    fn cost(&self, x: &[f64; 3]) -> f64 {
        let p = self.params(x);
        self.achieved(&p)
            .iter()
            .zip(self.targets)
            .map(|(a, t)| ((a - t.target) / (t.target * t.tolerance)).powi(2))
            .sum()
    }
}

/// Nelder-Mead simplex minimization in three dimensions.
fn nelder_mead<F: Fn(&[f64; 3]) -> f64>(f: &F, x0: [f64; 3], scale: f64, max_evals: usize) -> ([f64; 3], f64) {
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    simplex.push((x0, f(&x0)));
    for i in 0..3 {
        let mut x = x0;
        x[i] += scale;
        simplex.push((x, f(&x)));
    }
    let mut evals = 4;
    let lerp = |a: &[f64; 3], b: &[f64; 3], t: f64| -> [f64; 3] {
        [
            a[0] + t * (b[0] - a[0]),
            a[1] + t * (b[1] - a[1]),
            a[2] + t * (b[2] - a[2]),
        ]
    };
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[3].1 - simplex[0].1 <= 1e-12 * (1.0 + simplex[0].1.abs()) {
            let spread = (1..4)
                .flat_map(|i| (0..3).map(move |d| (i, d)))
                .map(|(i, d)| (simplex[i].0[d] - simplex[0].0[d]).abs())
                .fold(0.0, f64::max);
            if spread < 1e-9 {
                break;
            }
        }
        let mut centroid = [0.0; 3];
        for (x, _) in &simplex[..3] {
            for d in 0..3 {
                centroid[d] += x[d] / 3.0;
            }
        }
        let worst = simplex[3];
        let reflected = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&reflected);
        evals += 1;
        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&expanded);
            evals += 1;
            simplex[3] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (reflected, fr);
        } else {
            let contracted = if fr < worst.1 {
                lerp(&centroid, &reflected, 0.5)
            } else {
                lerp(&centroid, &worst.0, 0.5)
            };
            let fc = f(&contracted);
            evals += 1;
            if fc < worst.1.min(fr) {
                simplex[3] = (contracted, fc);
            } else {
                let best = simplex[0].0;
                for entry in simplex.iter_mut().skip(1) {
                    let x = lerp(&best, &entry.0, 0.5);
                    *entry = (x, f(&x));
                    evals += 1;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

/// Fits `bench` to `anchors`. Returns the fitted parameters and the
/// residual of every anchor, or a calibration error carrying the best
/// residuals if any anchor misses its tolerance.
pub fn calibrate(anchors: &Anchors, bench: &Bench) -> Result<Calibration> {
    bench.neuron.validate()?;
    bench.synapse.validate()?;
    let mut fitted = *bench;
    let mut residuals = Vec::new();

    if let Some(hz) = anchors.free_run_hz {
        if !(hz > 0.0) || !hz.is_finite() {
            return Err(Error::config("anchors.free_run_hz", "must be > 0"));
        }
        fitted.neuron = fitted.neuron.with_free_run_rate(hz);
        let spikes = fitted.neuron_spikes(&NeuronDrive::none(), 1.0)?;
        residuals.push(Residual {
            name: "free_run".into(),
            target: hz,
            achieved: spikes.len() as f64,
            tolerance: FREE_RUN_TOL,
        });
    }

    let targets = anchors.synapse_targets();
    if let Some(bad) = targets.iter().find(|t| !(t.target > 0.0) || !t.target.is_finite()) {
        return Err(Error::config(format!("anchors.{}_hz", bad.name), "must be > 0"));
    }
    if !targets.is_empty() {
        let spikes = targets
            .iter()
            .map(|t| fitted.neuron_spikes(&t.drive, SETTLE + WINDOW))
            .collect::<Result<Vec<_>>>()?;
        let objective = Objective {
            base: fitted.synapse,
            targets: &targets,
            spikes: &spikes,
        };
        let init = SynapseParams::initial_guess();
        let start = [
            logit(init.delta_up),
            logit(init.tau_leak / TAU_MAX),
            logit(init.v_osc / fitted.synapse.v_max),
        ];
        let cost = |x: &[f64; 3]| objective.cost(x);
        // A few deterministic restarts around the initial guess.
        let mut best = nelder_mead(&cost, start, 0.5, 800);
        for offset in [[1.0, -1.0, 0.5], [-1.0, 1.0, 0.5], [0.0, 0.0, -1.0], [1.5, 0.5, 1.0]] {
            let x0 = [start[0] + offset[0], start[1] + offset[1], start[2] + offset[2]];
            let cand = nelder_mead(&cost, x0, 0.5, 800);
            if cand.1 < best.1 {
                best = cand;
            }
        }
        fitted.synapse = objective.params(&best.0);
        let achieved = objective.achieved(&fitted.synapse);
        for (t, a) in targets.iter().zip(achieved) {
            residuals.push(Residual {
                name: t.name.into(),
                target: t.target,
                achieved: a,
                tolerance: t.tolerance,
            });
        }
    }

    if residuals.iter().all(Residual::within_tolerance) {
        Ok(Calibration {
            bench: fitted,
            residuals,
        })
    } else {
        Err(Error::Calibration {
            message: "anchor outside tolerance".into(),
            residuals: residuals.iter().map(|r| (r.name.clone(), r.relative())).collect(),
        })
    }
}
