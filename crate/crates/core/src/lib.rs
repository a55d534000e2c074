//! Counterfactual cloaking of sparse behavioral footprints.
//!
//! The crate covers the whole experimental pipeline: ingesting binary
//! user×item footprints, training L2 logistic-regression targeting models,
//! computing minimal counterfactual explanations (best-first search and the
//! linear shortcut), grouping items into metafeatures (NMF or domain
//! categories), turning explanations into cloak directives, and measuring
//! how well those directives keep protecting users as they keep leaving
//! footprints. A synthetic topic-model generator makes every experiment
//! reproducible without external data.

pub mod cloak;
pub mod config;
pub mod data;
pub mod error;
pub mod explain;
pub mod metafeatures;
pub mod models;
pub mod runner;
pub mod simulate;
pub mod spillover;
pub mod synth;

mod rng;

pub use error::{CloakError, Result};

/// Round half away from zero, returned as a count.
pub(crate) fn round_count(x: f64) -> usize {
    if x <= 0.0 {
        0
    } else {
        x.round() as usize
    }
}
