//! Quantitative evaluation of feature-attribution explanations.
//!
//! The crate bundles everything needed to score explanations of small
//! feed-forward networks end to end:
//!
//! - [`tensor`], [`rng`], [`stats`]: arrays, seeded streams and the rank and
//!   concentration statistics metrics are built on.
//! - [`model`]: dense/conv2d/relu/flatten networks with input gradients,
//!   layer randomisation and the `qnn-v1` file format.
//! - [`explain`]: saliency, gradient x input, integrated gradients,
//!   gradient SHAP and a random control.
//! - [`perturb`]: baseline replacement strategies and perturbation orderings.
//! - [`metrics`]: twenty-two metrics in six categories (faithfulness,
//!   robustness, localisation, complexity, axiomatic, randomisation).
//! - [`harness`]: evaluation plans, category rankings, sensitivity sweeps and
//!   plan warnings.
//! - [`io`]: QTEN tensors, report documents and CSV output.

#![allow(clippy::too_many_arguments)]

pub mod error;
pub mod explain;
pub mod fixture;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod model;
pub mod perturb;
pub mod rng;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
pub use explain::{explain, explain_sample, normalise_attribution, ExplainerConfig, Method, Normalisation};
pub use model::{Classifier, Layer, Model, OutputHead};
pub use perturb::{BaselineSpec, PerturbFn};
pub use rng::Rng;
pub use tensor::Tensor;
