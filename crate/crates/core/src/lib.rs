//! Parisian ruin asymptotics for Gaussian processes with power-asymmetric
//! variance around a unique maximum.
//!
//! The crate provides exact fBm sampling, the discrete Parisian sup-inf
//! functional, the many-inputs risk model geometry, first-order asymptotic
//! formulas, Monte Carlo estimators of Parisian Pickands and Piterbarg
//! constants, and a crude Monte Carlo engine for the ruin probabilities.

pub mod asymptotics;
pub mod constants_lab;
pub mod error;
pub mod gaussian_paths;
pub mod mc_engine;
pub mod parisian;
pub mod risk_model;
pub mod rng;

pub use asymptotics::{
    classify, corollary_value, log_psi, psi, talagrand_constant, theorem1_value, AsymptoticCase, AsymptoticValue,
    CaseLabel, Constants, Formula,
};
pub use constants_lab::{
    estimate_constant, estimate_constant_curve, estimate_constant_with, sample_drifted_field, ConstantEstimate,
    Convention, DriftedFieldSpec, LabParams, Normalization, PowerDrift,
};
pub use error::{Error, Result};
pub use gaussian_paths::{cov_fbm, cov_fgn, sample_fbm, FbmGridSampler, PathGrid};
pub use mc_engine::{
    build_vicinity, compare_table, estimate_ruin, ComparisonRow, MCEstimate, McParams, RuinSimulator, Source,
    SyntheticProcessSpec, Threshold, Vicinity, WindowRule,
};
pub use parisian::{parisian_event, parisian_multi, parisian_sup_inf, sliding_min, WindowSpec};
pub use risk_model::{Line, LocalExpansion, OptimalPoint, OptimumKind, RiskModel};
