//! Cross-domain anomaly detection over frame descriptors.
//!
//! Frame-level features from two video domains are projected into a shared
//! space (raw, PCA or TCA), scored by a one-class ν-SVM trained on the source
//! domain's normal frames, and evaluated on both test sets. The per-pair AUC
//! and EER values feed the partial and complete generalization measures used
//! to compare projection methods.

mod container;
pub mod data;
pub mod error;
pub mod generalization;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod ocsvm;
pub mod pca;
pub mod tca;

pub use error::{Error, Result};
