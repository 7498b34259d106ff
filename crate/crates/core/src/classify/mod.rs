//! Classifiers over window descriptors: blind k-means clustering, a
//! generative Gaussian similarity model, a one-against-one kernel SVM
//! ensemble with pairwise probability coupling, and the shared
//! memory-smoothed decision rule.

pub mod coupling;
pub mod ggm;
pub mod kmeans;
pub mod memory;
pub mod svm;

pub use coupling::{couple_pairwise, sigmoid_fit, sigmoid_predict};
pub use ggm::GgmModel;
pub use kmeans::{kmeans, KmeansResult};
pub use memory::{classify_with_memory, majority_vote, memory_smooth};
pub use svm::{train_binary, BinarySvm, Kernel, SvmEnsemble, TrainParams};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("feature vectors have inconsistent dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("cluster {0} has fewer than 2 members; covariance undefined")]
    DegenerateCluster(usize),
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("class {0} is absent from a training fold")]
    MissingClass(String),
    #[error("label {got} out of range for {k} classes")]
    LabelOutOfRange { got: usize, k: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
