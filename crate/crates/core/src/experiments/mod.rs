//! Batch harness: configuration, Monte Carlo over seeds and interface
//! indices, convergence statistics, the Stefan oracle and the lemma suite.

pub mod config;
pub mod converge;
pub mod lemma_suite;
pub mod pool;
pub mod simulate;
pub mod stefan;

pub use config::{ExperimentConfig, Mode, SeedRange, Setup};
pub use converge::{converge_report, run_converge, ConvergenceReport};
pub use lemma_suite::{lemma_table, run_lemma_suite, LemmaRow, LemmaTable};
pub use simulate::{run_cell, run_simulate, CellSummary};
pub use stefan::{run_stefan_oracle, stefan_report, Similarity, StefanReport};
