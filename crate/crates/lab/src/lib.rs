//! Experiments on top of `levelset-core`: instance fixtures, a direct
//! basis pursuit solver, threaded sweeps, output formats and the
//! `levelset-lab` command line.

// `!(x > 0.0)` rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod direct;
pub mod exec;
pub mod fixtures;
pub mod instances;
pub mod output;
pub mod reproduce;
