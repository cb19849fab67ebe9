//! Behavioral simulator for time-domain CMOS spiking networks: a
//! leakage-driven integrate-and-fire neuron, a ring-oscillator synapse and a
//! delay-line pulse-width weight module, composed into recurrent networks and
//! trained as a reservoir with an online recursive-least-squares readout.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN.

pub mod error;
pub mod io;
pub mod network;
pub mod neuron;
pub mod reservoir;
pub mod scenarios;
pub mod synapse;
pub mod weight;

pub use error::{Error, Result};
