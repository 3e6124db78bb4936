//! Experiment harness for `gvop-core`: file formats, a planted-instance
//! generator, greedy baselines, batch runs and the invariant suite.

pub mod baseline;
pub mod experiment;
pub mod generator;
pub mod io;
pub mod verify;

pub use experiment::{run_experiment, ExperimentConfig, Mode, RunReport};
pub use generator::{generate_planted_instance, GeneratorParams, PlantedInstance};
