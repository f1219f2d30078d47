//! Identify which agent produced a web-browsing interaction trace.
//!
//! Traces of timestamped UI events are parsed ([`ingest`]), reduced to 41
//! behavioral features ([`features`]) and attributed by tabular classifiers
//! ([`classifiers`]). [`evaluation`] holds the closed-set, open-set,
//! importance and curve protocols, [`perturbation`] the delay defense, and
//! [`simulator`] synthetic agents to run all of them against.

pub mod classifiers;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod ingest;
pub mod perturbation;
pub mod rng;
pub mod simulator;
pub mod trace;

pub use error::{Error, Result};
