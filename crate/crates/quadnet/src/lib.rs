//! quadnet: a from-scratch neural-network library built around
//! second-order (quadratic) neurons.
//!
//! A quadratic neuron replaces the usual inner product with the product
//! of two affine forms plus a weighted sum of squared inputs:
//!
//! ```text
//! net = (Σ wr·x + br)·(Σ wg·x + bg) + Σ wb·x² + c
//! ```
//!
//! The crate provides the quadratic dense and convolutional layers with
//! their analytic gradients, a conventional first-order baseline,
//! steepest-descent training with an outer-to-inner radial curriculum,
//! deterministic benchmark dataset generators (two spirals, concentric
//! rings, synthetic texture patches), and a central-difference gradient
//! checker that independently validates every derivative in the crate.
//!
//! Everything is seeded and reproducible: equal seeds give bit-identical
//! parameters, losses, and predictions.

pub mod conv;
pub mod datasets;
pub mod error;
pub mod gradcheck;
pub mod layer;
pub mod network;
pub mod numeric;

pub use error::{Error, Result};
pub use network::{
    evaluate, loss, train, train_curriculum, BatchMode, CurriculumSpec, EvalSummary, Layer,
    LossReduction, Network, NetworkGrads, TrainConfig, TrainReport,
};
pub use numeric::RandomSource;
