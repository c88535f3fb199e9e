//! Quantum unsupervised similarity learning.
//!
//! The pipeline: build (anchor, positive, negative) image triplets by
//! Gaussian perturbation, interleave image pairs into amplitude embeddings,
//! evolve circuit genomes over {RX, RY, RZ, H, CNOT} against a
//! projection-consistency fitness with non-dominated sorting over
//! (loss, depth, CNOT count), then score image pairs by the swap-invariance
//! of their projections and evaluate the score's Spearman correlation with
//! classical Euclidean distance.

pub mod error;
pub mod eval;
pub mod evolution;
pub mod genome;
pub mod image;
pub mod qsim;
pub mod rng;
pub mod triplet;

pub use error::{Error, Result};
