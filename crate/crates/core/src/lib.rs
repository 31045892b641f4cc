//! Failure-probability estimation with Langevin bi-fidelity importance sampling.
//!
//! A cheap differentiable low-fidelity limit state `h_LF` shapes the biasing
//! density `q(z) ∝ exp(-ℓ tanh h_LF(z)) p(z)`. MALA draws from `q`, and a few
//! high-fidelity evaluations on those draws give an unbiased estimate of
//! `P[h_HF < 0]`.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`). The `*F64`
//! aliases below cover the common case.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmarks;
pub mod biasing;
pub mod density;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod heatpde;
pub mod mala;
pub mod problem;
pub mod quadrature;
pub mod real;
pub mod rng;
pub mod samples;
pub mod tuning;

pub use benchmarks::{Benchmark, BenchmarkParams};
pub use biasing::{BiasingModel, LfPool};
pub use error::{Error, Fidelity, Result};
pub use estimators::{EstimateReport, LbfisConfig, Method};
pub use mala::{ChainOutput, InitialState, MalaConfig};
pub use problem::{LimitStates, ProblemSpec};
pub use real::Real;
pub use rng::Stream;
pub use tuning::{Approach, EllSweep};

pub type ReferenceDensityF64 = density::ReferenceDensity<f64>;
pub type ProblemSpecF64 = ProblemSpec<f64>;
pub type BiasingModelF64 = BiasingModel<f64>;
pub type ChainOutputF64 = ChainOutput<f64>;
pub type SampleMatrixF64 = samples::SampleMatrix<f64>;
pub type LfPoolF64 = LfPool<f64>;

pub type ProblemSpecF32 = ProblemSpec<f32>;
pub type BiasingModelF32 = BiasingModel<f32>;
