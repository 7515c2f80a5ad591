//! Kernel-alignment transferability estimation.
//!
//! Given the features a pre-trained extractor produces on a small labelled
//! probe set, this crate scores how well the extractor is expected to
//! transfer to the probe's task:
//!
//! * **TA** (target alignment): CKA between the feature kernel and the
//!   ideal same-class kernel built from the labels.
//! * **RA** (random alignment): CKA between the feature kernel and the
//!   kernel of an untrained random network's features on the same inputs.
//! * **KITE**: `TA / RA`, high when features separate the classes and look
//!   unlike random features.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. File
//! formats, reports and the command-line driver live in the `kite` crate.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`kernel`] | kernel functions, centering, alignment, CKA, HSIC |
//! | [`estimators`] | TA, RA, KITE, linear combination, HSIC, heuristic, k-NN CV |
//! | [`random_features`] | seed-averaged random ReLU networks, Gaussian baseline |
//! | [`preprocess`] | PCA and stratified probe sampling |
//! | [`evaluation`] | Pearson, weighted Kendall's tau, per-target aggregation |
//! | [`synth`] | Gaussian mixtures and synthetic model zoos |

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod estimators;
pub mod evaluation;
mod features;
pub mod kernel;
pub mod preprocess;
pub mod random_features;
pub mod seed;
mod stats;
pub mod synth;

pub use error::{Error, Result, Warning};
pub use features::{FeatureMatrix, LabelVector, Provenance};
