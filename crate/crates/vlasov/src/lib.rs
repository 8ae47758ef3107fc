//! Configuration, file formats, the verification suite and the command line
//! for the `vlasov-core` numerics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod verify;
