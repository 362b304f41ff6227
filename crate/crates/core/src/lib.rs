//! Spectral kernels, Lebesgue-constant bounds, kernel ridge regression and a
//! domain-splitting GP-UCB bandit for misspecified kernelized optimization.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod krr;
pub mod offline;
pub mod online;
pub mod quadrature;
pub mod seeds;
pub mod spectral_analysis;
pub mod spectral_kernels;
pub mod trig;

pub use error::{Error, Result};
