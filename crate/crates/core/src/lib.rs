//! Best-of-N hub colony simulation and collective-state graph embedding.
//!
//! The crate is organised bottom-up:
//!
//! * [`abm`] runs the per-agent Markov state machine and whole-colony trials.
//! * [`codec`] turns a colony snapshot into a canonical, anonymised tensor.
//! * [`graph`] collects tensors into a collective-state transition graph.
//! * [`encoder`] is a two-layer mean-aggregation graph convolution encoder with
//!   a hand-written backward pass, trained on edge reconstruction.
//! * [`analysis`] covers success probabilities, node labels, run metrics,
//!   t-SNE and k-means.
//! * [`campaign`] drives parameter sweeps and owns the on-disk formats used by
//!   the `colonygraph` binary.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abm;
pub mod analysis;
pub mod campaign;
pub mod codec;
pub mod encoder;
pub mod error;
pub mod graph;
pub mod rng;

pub use error::{Error, Result};
