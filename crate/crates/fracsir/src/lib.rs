//! Implicit solver and verification toolkit for a time-fractional
//! reaction-diffusion SIR model.
//!
//! The time direction is discretized with the L1 approximation of the Caputo
//! derivative, the reaction terms with a nonstandard (positivity-preserving)
//! finite difference rule, and space with second-order central differences
//! under zero-flux Neumann boundaries. Each time step solves three
//! tridiagonal systems (S, then I, then R). On top of the solver,
//! [`analysis`] measures the quantities the scheme is supposed to preserve:
//! positivity, a uniform mass bound, and the decay of memory-weighted
//! Lyapunov functions toward the disease-free or endemic equilibrium.
//!
//! Core numerics are generic over the scalar type through [`Real`];
//! concrete `f64` aliases are exported at the crate root.

// Validation deliberately uses `!(x > 0)` so that NaN fails the check;
// the non-negated form would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod epidemics;
pub mod fracops;
pub mod solver;

use std::fmt;

/// Scalar type the numerics are generic over: `f32` or `f64`.
pub trait Real:
    num_traits::Float + num_traits::FromPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand used throughout the crate for lifting literal constants.
pub(crate) fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal constant representable in scalar type")
}

pub type Order64 = fracops::FractionalOrder<f64>;
pub type Weights64 = fracops::L1Weights<f64>;
pub type Params64 = epidemics::ModelParams<f64>;
pub type Equilibrium64 = epidemics::EquilibriumPoint<f64>;
pub type Grid64 = solver::GridSpec<f64>;
pub type State64 = solver::FieldState<f64>;
pub type History64 = solver::HistoryBuffer<f64>;

pub type Order32 = fracops::FractionalOrder<f32>;
pub type Weights32 = fracops::L1Weights<f32>;
pub type Params32 = epidemics::ModelParams<f32>;
