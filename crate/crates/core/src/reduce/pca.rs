use serde::{Deserialize, Serialize};

use super::eigen::symmetric_eigen;
use crate::error::{dims_match, Error, Result};

/// Fitted principal components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    dim: usize,
    k: usize,
    mean: Vec<f64>,
    /// `k x dim`, row-major, orthonormal rows.
    components: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// Set when the data spans fewer than `k` directions; trailing components
    /// then complete the basis with zero eigenvalue.
    rank_deficient: bool,
}

/// Relative threshold under which an eigenvalue counts as zero.
const RANK_TOL: f64 = 1e-10;

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i * self.dim..(i + 1) * self.dim]
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn is_rank_deficient(&self) -> bool {
        self.rank_deficient
    }

    /// `components * (x - mean)`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        dims_match("pca input", self.dim, x.len())?;
        Ok((0..self.k)
            .map(|i| {
                self.component(i)
                    .iter()
                    .zip(x.iter().zip(&self.mean))
                    .map(|(c, (xi, mi))| c * (xi - mi))
                    .sum()
            })
            .collect())
    }

    /// `mean + components^T y`.
    pub fn reconstruct(&self, y: &[f64]) -> Result<Vec<f64>> {
        dims_match("pca code", self.k, y.len())?;
        let mut x = self.mean.clone();
        for (i, &yi) in y.iter().enumerate() {
            for (xj, cj) in x.iter_mut().zip(self.component(i)) {
                *xj += yi * cj;
            }
        }
        Ok(x)
    }
}

/// Top-`k` principal components of the sample covariance (divisor `n - 1`).
///
/// Each component's largest-magnitude entry is made non-negative.
pub fn pca_fit(samples: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Parameter(format!("pca needs at least 2 samples, got {n}")));
    }
    let dim = samples[0].len();
    for s in samples {
        dims_match("pca sample", dim, s.len())?;
    }
    if k < 1 || k > dim.min(n - 1) {
        return Err(Error::Parameter(format!(
            "pca target dimension {k} outside 1..={}",
            dim.min(n - 1)
        )));
    }

    let mut mean = vec![0.0; dim];
    for s in samples {
        for (m, x) in mean.iter_mut().zip(s) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut cov = vec![0.0; dim * dim];
    let mut centered = vec![0.0; dim];
    for s in samples {
        for (c, (x, m)) in centered.iter_mut().zip(s.iter().zip(&mean)) {
            *c = x - m;
        }
        for i in 0..dim {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            let row = &mut cov[i * dim..(i + 1) * dim];
            for j in i..dim {
                row[j] += ci * centered[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..dim {
        for j in i..dim {
            let v = cov[i * dim + j] / denom;
            cov[i * dim + j] = v;
            cov[j * dim + i] = v;
        }
    }

    let eig = symmetric_eigen(&cov, dim);
    let top = eig.values[0].max(0.0);
    let eigenvalues: Vec<f64> = eig.values[..k].iter().map(|&v| v.max(0.0)).collect();
    let rank_deficient = top == 0.0 || eigenvalues[k - 1] <= RANK_TOL * top;
    let mut components = Vec::with_capacity(k * dim);
    for vector in &eig.vectors[..k] {
        let pivot = vector
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map_or(1.0, |(_, v)| *v);
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        components.extend(vector.iter().map(|v| sign * v));
    }
    Ok(PcaModel {
        dim,
        k,
        mean,
        components,
        eigenvalues,
        rank_deficient,
    })
}
