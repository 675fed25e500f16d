//! Counting-statistic variances for random normal matrix ensembles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod edge;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod mc;
pub mod orthopoly;
pub mod potential;
pub mod quadrature;
pub mod variance;

pub use error::{Error, Result};
