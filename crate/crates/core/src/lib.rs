//! Attribute-augmented SCARDO opinion dynamics.
//!
//! Agents carry a cortege of discrete attributes (opinion first). Pairs meet
//! through a one-to-one protocol, a ranking matrix gates whether they talk,
//! and an augmented transition tensor decides the recipient's new cortege.
//! The crate runs the stochastic protocol, integrates its mean-field ODE
//! limit on the complete graph, and compares the two.
//!
//! Numeric types are generic over [`Scalar`] (`f32`, `f64`); the aliases
//! below fix them to `f64`, which the CLI and config layer use.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod meanfield;
pub mod ranking;
pub mod scalar;
pub mod simulator;
pub mod space;
pub mod transition;

pub use error::{Error, Result};
pub use meanfield::{
    compare_trajectories, integrate, opinion_trajectory, parameter_sensitivity, rhs,
    ComparisonReport, IntegrateOptions, MeanField, MeanFieldTrajectory, SensitivityTarget,
};
pub use ranking::RankingMatrix;
pub use scalar::Scalar;
pub use simulator::{
    one_step_expectation, replica_seed, run, seeded_rng, DonorNormalization, Graph,
    PopulationState, RunSpec, SimTrajectory, StepOutcome,
};
pub use space::{AttributeSpace, Cortege};
pub use transition::{MaskMode, TransitionTensor};

pub type Tensor64 = TransitionTensor<f64>;
pub type Ranking64 = RankingMatrix<f64>;
pub type MeanFieldTrajectory64 = MeanFieldTrajectory<f64>;
pub type SensitivityTarget64 = SensitivityTarget<f64>;
pub type Tensor32 = TransitionTensor<f32>;
pub type Ranking32 = RankingMatrix<f32>;
pub type MeanFieldTrajectory32 = MeanFieldTrajectory<f32>;
