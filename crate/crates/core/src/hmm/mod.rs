//! Grid-sequence HMM: classes are hidden states, zigzag-ordered grid vectors
//! are observations. Emissions come from nearest same-position exemplars,
//! transitions from distances between consecutive-position class centroids,
//! and the scaled forward variables become the image's feature vector.

mod bank;
mod forward;

pub use bank::{build_bank, BankEntry, ReferenceBank};
pub use forward::{
    emission, feature_vector, forward, softmax_neg, transition, AlphaMatrix, ForwardModel, HmmFeatureVector,
    DISTANCE_CAP,
};
