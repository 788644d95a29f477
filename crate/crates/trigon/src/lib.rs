//! Metric learning on triplet triangles.
//!
//! The crate trains embeddings by constraining the angle at the negative
//! vertex of anchor/positive/negative triangles instead of (or in addition
//! to) raw distance gaps. It provides:
//!
//! - [`geometry`]: the triplet triangle, its circumcircle and the
//!   reconstructed angle at the negative point, plus the distance- and
//!   angle-based separation constraints.
//! - [`losses`]: triplet, angular, batch angular (log-sum-exp), N-pair and
//!   combined losses with analytic gradients, and a central finite-difference
//!   oracle to verify them.
//! - [`sampling`]: labeled datasets, disjoint-triplet and N-pair mini-batch
//!   samplers (seeded, reproducible).
//! - [`training`]: a small deterministic encoder (identity / linear /
//!   one-hidden-layer) trained by plain gradient descent, and a synthetic
//!   Gaussian-cluster dataset generator.
//! - [`evaluation`]: Recall@R retrieval scoring, seeded k-means, NMI and
//!   pairwise F1 over class-disjoint splits.
//! - [`io`]: line-oriented text formats for feature files, model files and
//!   loss histories, round-tripping `f64` values bit-exactly.
//!
//! All numeric code is generic over the scalar type via [`Scalar`]
//! (`f32` or `f64`); the aliases below fix the double-precision variants
//! used by the file formats and the CLI.

pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod gradcheck;
pub mod io;
pub mod losses;
pub mod sampling;
pub mod scalar;
pub mod training;
pub mod vecmath;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision triplet, as consumed by the CLI and file formats.
pub type Triplet64 = geometry::Triplet<f64>;
/// Double-precision labeled dataset.
pub type Dataset64 = sampling::LabeledDataset<f64>;
/// Double-precision N-pair batch.
pub type NPairBatch64 = sampling::NPairBatch<f64>;
/// Double-precision encoder model.
pub type Encoder64 = training::EncoderModel<f64>;
