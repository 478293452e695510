//! Separate characterization of state-preparation and measurement errors
//! from repeated-measurement experiments, shot-level simulation of the
//! protocols, and SPAM error mitigation for multiqubit observables.
//!
//! The crate is organized bottom-up:
//!
//! - [`qcore`]: 2x2 complex matrices, Bloch vectors, and a dense N-qubit
//!   density matrix with gates and Kraus channels.
//! - [`spam_model`]: the SPAM parameter set, Kraus/POVM construction, and
//!   forward probabilities of every characterization circuit.
//! - [`sim`]: shot sampling of the characterization and GHZ circuits with
//!   counter-based random streams.
//! - [`estimator`]: closed-form and least-squares parameter recovery with
//!   confidence intervals.
//! - [`mitigation`]: confusion-matrix inversion, corrective
//!   state-preparation pulses, and bias bounds for standard-vs-separate
//!   characterization.

pub mod estimator;
pub mod mitigation;
pub mod qcore;
pub mod sim;
pub mod spam_model;
