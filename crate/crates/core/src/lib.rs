//! Compact quantum-native routing over entanglement-switching processors.

pub mod addressing;
pub mod clustering;
pub mod harness;
pub mod metrics;
pub mod qsearch;
pub mod rng;
pub mod routing;
pub mod topology;
