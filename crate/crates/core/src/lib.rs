//! Post-training rectification of classifiers against unknown-unknown classes.
//!
//! A trained classifier deployed on data whose label space is wider than its
//! training set will confidently misassign samples of the missing classes.
//! This crate rectifies such a model after training: it draws a random sample
//! from the test (deployment) stream, adjoins it to the training set as a
//! dummy class, re-labels the sample through cross-validation, and refits the
//! model with the rows that kept the dummy label as a new "unknown" class.
//!
//! Alongside the engine itself the crate ships:
//!
//! * from-scratch base classifiers (Gaussian discriminant analysis, linear
//!   SVM, k-NN, decision tree, small MLP) behind one [`classifiers::Classifier`]
//!   trait,
//! * closed-form evaluators and Monte-Carlo oracles for the sufficient
//!   conditions under which the relabeling step is correct in expectation
//!   ([`theory`]),
//! * scatter-matrix separability scores ([`separability`]),
//! * open-set evaluation metrics ([`metrics`]),
//! * a seeded-k-means alternative to the cross-validation step ([`csi`]),
//! * and the experiment harness backing the `openrect` CLI ([`experiment`]).

// `!(x > 0.0)` validation deliberately treats NaN as invalid; the suggested
// `x <= 0.0` would accept it. Indexed loops over parallel numeric arrays
// stay as-is.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod classifiers;
pub mod csi;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod rtscv;
pub mod separability;
pub mod synthetic;
pub mod theory;

pub use error::{Error, Result};

/// Derives an independent stream seed from a base seed and a role tag.
///
/// Every randomized stage (sampling, fold shuffling, per-fold fits, ...)
/// draws from its own stream so that changing one stage's consumption does
/// not shift any other stage.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream tags for [`mix_seed`].
pub mod seed_tags {
    pub const SAMPLE: u64 = 1;
    pub const FOLDS: u64 = 2;
    pub const FOLD_FIT: u64 = 3;
    pub const FINAL_FIT: u64 = 4;
    pub const SPLIT: u64 = 5;
    pub const VALIDATION: u64 = 6;
    pub const REPLICATE: u64 = 7;
}
