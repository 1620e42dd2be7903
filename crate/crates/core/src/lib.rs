//! Architecture search over a ResNet kernel-choice space, scored by the
//! M-factor: the harmonic mean of accuracy and normalized inverse model
//! size.
//!
//! ```
//! use mfnas_core::{harness, RunConfig, StrategyKind};
//!
//! let cfg = RunConfig { strategy: StrategyKind::Evolution, trials: 50, seed: 7, ..Default::default() };
//! let summary = harness::run_experiment(&cfg).unwrap();
//! assert_eq!(summary.trial_log.len(), 50);
//! assert!(summary.best.m_value <= 1.0);
//! ```

pub mod cost_model;
pub mod error;
pub mod evaluators;
pub mod harness;
pub mod metrics;
pub mod report;
pub mod search_space;
pub mod strategies;

pub use cost_model::{count_macs, count_params, p_min, ModelCost};
pub use error::{Error, Result};
pub use evaluators::{Evaluator, Surrogate, SurrogateSpec};
pub use harness::{run_experiment, EvaluatorConfig, RunConfig, RunSummary, TrialRecord};
pub use metrics::{m_alpha, m_factor, netscore, s_prime, NetScoreParams};
pub use search_space::{Genotype, KernelChoice, SpaceSpec};
pub use strategies::{SearchStrategy, StrategyKind, StrategyParams};
