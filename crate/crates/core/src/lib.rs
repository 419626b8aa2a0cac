//! Simulation and analysis core for a direct-injection universal power flow
//! and quality controller.
//!
//! The controller places one floating H-bridge module in series with each
//! phase of a line. Each module is fed through an isolated fixed-ratio dc/dc
//! link from a shared dc bus, and a shunt active front end (AFE) holds that
//! bus. This crate holds everything that is pure computation:
//!
//! - [`phasor`]: complex phasors, Clarke/Park, symmetric components, SOGI.
//! - [`fourier`]: single-frequency correlation, harmonic content and THD.
//! - [`network`]: the two studied topologies, analytic steady-state oracles
//!   and the built-in test cases.
//! - [`control`]: PI, PLL, AFE dual-sequence current control, per-phase
//!   series current control, harmonic blocking and the modulator.
//! - [`converters`]: floating module, LLC link and shared dc link models.
//! - [`sim`]: the fixed-step engine, traces, metrics and analytic comparison.
//! - [`envelope`]: closed-form coverage limits and region sampling.
//! - [`loss`]: magnetic loss, transformer transfer, loss roll-up and fault
//!   ratings.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! charts live in the `difq` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod control;
pub mod converters;
pub mod envelope;
pub mod error;
pub mod fourier;
pub mod loss;
pub mod network;
pub mod phasor;
pub mod sim;

pub use error::{Error, Result};
pub use phasor::{Complex, DqSample, Phasor, SequenceSet, SogiState, ThreePhaseSet};
