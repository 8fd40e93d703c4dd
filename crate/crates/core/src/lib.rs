//! Inertial-sensor human activity recognition.
//!
//! The crate covers the whole pipeline: signal filtering and windowing
//! ([`signal`]), dense tensors and the Gaussian tensor distance ([`tensor`]),
//! a soft-margin SVM dual solver with one-vs-one reduction ([`svm`]), support
//! tensor machines trained by alternating per-mode SVM solves ([`stm`]),
//! baseline classifiers ([`baselines`]), metrics, cross-validation and search
//! ([`eval`]), a FedAvg simulator ([`federated`]) and file formats ([`io`]).
//!
//! Independent fits (one-vs-one pairs, folds, trees, clients) run on rayon
//! when the `parallel` feature is enabled; see [`exec::Exec`].

// `!(x > 0.0)` is used deliberately so NaN fails parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod classifier;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod exec;
pub mod federated;
pub mod io;
pub mod models;
pub mod rng;
pub mod signal;
pub mod stm;
pub mod svm;
pub mod synth;
pub mod tensor;

pub use classifier::{Classifier, Learner};
pub use dataset::{Dataset, LabelMap};
pub use error::{Error, Result};
pub use exec::Exec;
pub use tensor::Tensor;
