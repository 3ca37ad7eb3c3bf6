//! PCA and k-means.

mod eigen;
mod kmeans;
mod pca;

pub use eigen::{symmetric_eigen, SymmetricEigen};
pub use kmeans::{kmeans_fit, kmeans_fit_traced, mean_point, sq_dist, Centroid, KMeansFit};
pub use pca::{pca_fit, PcaModel};
