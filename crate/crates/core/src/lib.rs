//! Two-stage graph classification: a Graph Isomorphism Network encoder
//! trained with a softmax head, followed by a non-parametric classifier that
//! interpolates labels with non-negative kernel regression over the nearest
//! training embeddings. Every prediction of the second stage names the
//! training graphs that produced it.

pub mod data;
pub mod error;
pub mod gin;
pub mod knn;
pub mod metrics;
pub mod nnk;
pub mod pipeline;

pub use error::{Error, Result};
