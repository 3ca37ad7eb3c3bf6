use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tensor::{EnsembleWeights, LabelIndicator, ScoreTensor};
use crate::classify::argmax;
use crate::error::{dims_match, Error, Result};

const ZERO_RESIDUAL: f64 = 1e-12;

/// Solver configuration for the weight fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub iters: usize,
    /// Minimize the sum of squared residual norms instead of plain norms.
    pub squared: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            iters: 5000,
            squared: false,
        }
    }
}

/// Objective values of the fitted weights and of the trivial candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFit {
    pub weights: EnsembleWeights,
    pub objective: f64,
    pub uniform_objective: f64,
    /// `J(e_i)` for each classifier alone.
    pub single_objectives: Vec<f64>,
    pub squared: bool,
}

/// Euclidean projection onto the probability simplex.
///
/// Entries must be finite.
pub fn simplex_project(v: &[f64]) -> Vec<f64> {
    debug_assert!(v.iter().all(|x| x.is_finite()));
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// `sum_j || sum_i w_i s_ij - d_j ||`, or the squared norms when `squared`.
pub fn objective(w: &[f64], scores: &ScoreTensor, labels: &LabelIndicator, squared: bool) -> Result<f64> {
    check_dims(w, scores, labels)?;
    let per_image: Vec<f64> = (0..scores.num_images())
        .into_par_iter()
        .map(|j| {
            let n2 = residual(w, scores, labels, j).iter().map(|r| r * r).sum::<f64>();
            if squared {
                n2
            } else {
                n2.sqrt()
            }
        })
        .collect();
    Ok(per_image.iter().sum())
}

/// Projected subgradient descent from uniform weights.
///
/// The step is `0.5 / sqrt(k + 1)` applied to the summed subgradient.
/// The best point seen, also counting every one-hot vertex, is returned.
pub fn solve_weights(scores: &ScoreTensor, labels: &LabelIndicator, settings: &SolverSettings) -> Result<WeightFit> {
    if settings.iters < 1 {
        return Err(Error::Parameter("ensemble solver needs at least one iteration".into()));
    }
    let c = scores.num_classifiers();
    let ids = scores.classifier_ids().to_vec();
    let uniform = vec![1.0 / c as f64; c];
    check_dims(&uniform, scores, labels)?;
    let squared = settings.squared;

    let vertex = |i: usize| {
        let mut e = vec![0.0; c];
        e[i] = 1.0;
        e
    };
    let single_objectives = (0..c)
        .map(|i| objective(&vertex(i), scores, labels, squared))
        .collect::<Result<Vec<_>>>()?;
    let uniform_objective = objective(&uniform, scores, labels, squared)?;
    if c == 1 {
        return Ok(WeightFit {
            weights: EnsembleWeights::new(ids, vec![1.0])?,
            objective: single_objectives[0],
            uniform_objective,
            single_objectives,
            squared,
        });
    }

    let mut w = uniform.clone();
    let mut best = (uniform_objective, uniform.clone());
    for k in 0..settings.iters {
        let (value, grad) = value_and_subgradient(&w, scores, labels, squared);
        if value < best.0 {
            best = (value, w.clone());
        }
        let step = 0.5 / ((k + 1) as f64).sqrt();
        let moved: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| wi - step * gi).collect();
        w = simplex_project(&moved);
    }
    let last = objective(&w, scores, labels, squared)?;
    if last < best.0 {
        best = (last, w);
    }
    for (i, &v) in single_objectives.iter().enumerate() {
        if v < best.0 {
            best = (v, vertex(i));
        }
    }

    Ok(WeightFit {
        weights: EnsembleWeights::new(ids, best.1)?,
        objective: best.0,
        uniform_objective,
        single_objectives,
        squared,
    })
}

/// Weighted sum of per-classifier distributions and its argmax (lowest index on ties).
pub fn fuse(probs: &[Vec<f64>], w: &[f64]) -> Result<(Vec<f64>, usize)> {
    dims_match("classifier count", w.len(), probs.len())?;
    let m = probs.first().map_or(0, Vec::len);
    if m == 0 {
        return Err(Error::Dimension("nothing to fuse".into()));
    }
    let mut fused = vec![0.0; m];
    for (p, &wi) in probs.iter().zip(w) {
        dims_match("probability vector", m, p.len())?;
        for (f, &pk) in fused.iter_mut().zip(p) {
            *f += wi * pk;
        }
    }
    let label = argmax(&fused);
    Ok((fused, label))
}

fn check_dims(w: &[f64], scores: &ScoreTensor, labels: &LabelIndicator) -> Result<()> {
    dims_match("weight vector", scores.num_classifiers(), w.len())?;
    dims_match("label count", scores.num_images(), labels.len())?;
    dims_match("class count", scores.num_classes(), labels.num_classes())
}

fn residual(w: &[f64], scores: &ScoreTensor, labels: &LabelIndicator, j: usize) -> Vec<f64> {
    let mut r = vec![0.0; scores.num_classes()];
    r[labels.class_of(j)] = -1.0;
    for (i, &wi) in w.iter().enumerate() {
        for (rk, &s) in r.iter_mut().zip(scores.row(i, j)) {
            *rk += wi * s;
        }
    }
    r
}

fn value_and_subgradient(w: &[f64], scores: &ScoreTensor, labels: &LabelIndicator, squared: bool) -> (f64, Vec<f64>) {
    let mut value = 0.0;
    let mut grad = vec![0.0; w.len()];
    for j in 0..scores.num_images() {
        let r = residual(w, scores, labels, j);
        let n2: f64 = r.iter().map(|x| x * x).sum();
        let scale = if squared {
            value += n2;
            2.0
        } else {
            let norm = n2.sqrt();
            value += norm;
            if norm <= ZERO_RESIDUAL {
                continue;
            }
            1.0 / norm
        };
        for (i, g) in grad.iter_mut().enumerate() {
            let dot: f64 = scores.row(i, j).iter().zip(&r).map(|(s, r)| s * r).sum();
            *g += scale * dot;
        }
    }
    (value, grad)
}
