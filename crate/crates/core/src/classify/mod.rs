//! One-vs-rest RBF SVMs trained with SMO and calibrated with Platt scaling.

mod kernel;
mod ovr;
mod platt;
mod smo;

pub use kernel::{default_gamma, gram_matrix, rbf, KernelParams};
pub use ovr::{argmax, ovr_train, BinarySvm, OvrClassifier};
pub use platt::{platt_fit, platt_prob};
pub use smo::{dual_objective, kkt_residual, smo_train, SmoSolution};
