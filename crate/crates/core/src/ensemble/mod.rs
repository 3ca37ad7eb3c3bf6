//! Simplex-weighted fusion of per-classifier probabilities.

mod solver;
mod tensor;

pub use solver::{fuse, objective, simplex_project, solve_weights, SolverSettings, WeightFit};
pub use tensor::{EnsembleWeights, LabelIndicator, ScoreTable, ScoreTensor};
