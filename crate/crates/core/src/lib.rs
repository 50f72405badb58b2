//! Soft-filtering zero-error attack on the coherent one-way (COW) QKD
//! protocol.
//!
//! The crate computes the success probabilities of the SF1/SF2 soft-filtering
//! operations, runs Eve's adaptive tuple-forming attack either as a seeded
//! Monte Carlo process ([`simulator`]) or as an exact renewal-reward model
//! ([`analytic`]), compares it with the beam-splitting and USD-like baselines
//! ([`strategies`]) and searches for the attack parameters and Alice
//! intensities that bound the key rate ([`optimizer`]).
//!
//! ```
//! use cowsf::{expected_statistics, AttackParams, ProtocolParams};
//!
//! let protocol = ProtocolParams::new(0.5, 0.1, 0.1, 0.25, 100.0)?;
//! let attack = AttackParams::from_values(1, 3, 0.2, 0.4, 0.4)?;
//! let point = expected_statistics(&protocol, &attack)?;
//! assert!(point.emit_fraction > 0.0 && point.emit_fraction < 1.0);
//! # Ok::<(), cowsf::Error>(())
//! ```

pub mod analytic;
pub mod attack;
pub mod commands;
pub mod config;
pub mod error;
pub mod optimizer;
pub mod photonics;
pub mod simulator;
pub mod soft_filter;
pub mod strategies;
pub mod validation;

pub use analytic::{enumerate_small, expected_statistics, EnumeratedPoint, StrategyPoint};
pub use attack::{AttackParams, StageModel};
pub use error::{Error, Result};
pub use optimizer::{
    mixture_combine, optimal_alice_intensity, optimize_attack, AttackFamily, MixedStrategy, OptimizationResult,
    SearchSettings, StrategyComponent,
};
pub use photonics::{MeanPhotonNumber, ProtocolParams};
pub use simulator::{generate_sequence, replay_with_outcomes, run_attack, Fate, RunStats, SignalFate, SignalKind};
pub use soft_filter::{sf1_probs, sf2_probs, SFOutcomeProbs, Stage};
pub use strategies::{bs_point, key_rate, StatisticsMode};
