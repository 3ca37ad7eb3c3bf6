//! Scene classification from grid-sequence HMM posteriors.
//!
//! Each image is cut into a `g x g` grid, scanned in zigzag order and
//! described per grid by one of four descriptors. A forward recursion over
//! the grid sequence, with distance-based emission and transition estimates,
//! turns every image into a vector of per-grid class posteriors. One
//! calibrated one-vs-rest RBF SVM is trained per descriptor and their
//! probabilities are fused with simplex-constrained weights.

pub mod classify;
pub mod descriptors;
pub mod ensemble;
pub mod error;
pub mod hmm;
pub mod imaging;
pub mod pipeline;
pub mod reduce;

pub use descriptors::{DescriptorId, GridSequence};
pub use error::{Error, Result};
pub use imaging::{GrayImage, LabeledImageSet, SplitSpec};
