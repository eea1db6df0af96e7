//! Perceived-risk pipeline for automated-vehicle highway events: event
//! synthesis, kinematic features, analytic surrogate risk models, curve
//! reconstruction from clip ratings, a feed-forward surrogate network,
//! calibration and Shapley attribution.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod explain;
pub mod features;
pub mod matrix;
pub mod models;
pub mod pipeline;
pub mod reconstruction;
pub mod rehearsal;
pub mod scenario;
pub mod surrogate;
pub mod synthetic;

pub use error::{Error, Result};
