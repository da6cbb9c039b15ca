//! Word-duration corpus analytics.
//!
//! Two tracks share one ingestion and feature pipeline:
//!
//! * an ML track that bins word durations into ranges and classifies them
//!   with random forests and support vector machines ([`ml`]);
//! * a statistics track with correlation matrices, linear mixed models fit by
//!   REML, and penalized additive mixed models ([`stats`]).
//!
//! Inputs are parsed by [`corpus`], features derived by [`features`] and
//! [`semrel`], and the CLI stages live in [`pipeline`].

pub mod config;
pub mod corpus;
pub mod error;
pub mod features;
pub mod seed;
pub mod ml;
pub mod pipeline;
pub mod semrel;
pub mod stats;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
