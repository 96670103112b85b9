#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! First nonzero eigenvalue maximization for graph Laplacians built from
//! edge-length functions, together with eigen-map certificates of
//! extremality.

pub mod certificate;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod optimize;
pub mod perturbation;
pub mod spectral;

pub use error::{Error, GraphDefect, Result};
