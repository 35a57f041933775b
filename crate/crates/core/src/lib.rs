//! Implicit monotone finite-volume solver for one-dimensional two-phase flow
//! in layered porous media whose capillary-pressure curves jump across layer
//! interfaces.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod diagnostics;
pub mod exec;
pub mod numflux;
pub mod output;
pub mod rockphys;
pub mod scenario;
pub mod scheme;

pub use exec::Exec;
