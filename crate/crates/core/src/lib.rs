//! Competing-risks credit analysis for auto-loan pools: lifetime models,
//! loan-level ingestion, hazard estimation under truncation and censoring,
//! risk-band convergence, loan returns, recovery curves and a simulation
//! study of the estimator.

// Negated comparisons in this crate are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuarial;
pub mod convergence;
pub mod error;
pub mod estimator;
pub mod ingest;
pub mod montecarlo;
pub mod recovery;
pub mod risk_model;
pub mod scalar;

pub use error::{Error, Result};
pub use estimator::{AgeWindow, HazardCurve, HazardRow, Interval};
pub use ingest::{ObservedLoan, RiskBand};
pub use risk_model::{CauseId, CompetingRisksDistribution, ConditionalEventTable, TruncationLaw};
pub use scalar::Real;

pub type Distribution = CompetingRisksDistribution<f64>;
pub type Curve = HazardCurve<f64>;
pub type Schedule = actuarial::AmortizationSchedule<f64>;
pub type Hazards = actuarial::CauseHazards<f64>;
pub type Savings = actuarial::SavingsEstimate<f64>;
pub type GammaFit = recovery::GammaKernelFit<f64>;
pub type Convergence = convergence::ConvergenceResult<f64>;
pub type SimulationConfig = montecarlo::SimConfig<f64>;
pub type Report = montecarlo::StudyReport<f64>;
