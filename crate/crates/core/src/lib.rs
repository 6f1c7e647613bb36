//! Unsupervised classification of text chunks as original (O) or translated (T).
//!
//! The pipeline runs feature extraction ([`features`]), standardized PCA
//! ([`reduce`]), KMeans++ with restart selection by total SSE ([`cluster`]),
//! unsupervised cluster labeling against prototype language models
//! ([`label`]) and majority voting across feature sets ([`ensemble`]).
//! [`mixed`] handles multi-domain mixtures with the flat and two-phase
//! strategies, and [`supervised`] holds a linear max-margin baseline used to
//! show how supervised models degrade across domains. [`harness`] ties it all
//! together: run configuration, the synthetic corpus generator, sensitivity
//! sweeps and report emission.

pub mod cluster;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod features;
pub mod harness;
pub mod label;
pub mod mixed;
pub mod reduce;
pub mod seed;
pub mod supervised;

pub use error::{Error, Result};
