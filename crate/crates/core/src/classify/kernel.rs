use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dims_match, Error, Result};

/// SVM hyperparameters. `gamma = None` picks the data-driven default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelParams {
    pub gamma: Option<f64>,
    pub c: f64,
    pub tol: f64,
    pub max_passes: usize,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self {
            gamma: None,
            c: 10.0,
            tol: 1e-3,
            max_passes: 1_000_000,
        }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Parameter(format!("gamma must be positive, got {g}")));
            }
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Parameter(format!("c must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0 && self.tol <= 0.1) {
            return Err(Error::Parameter(format!("tol must lie in (0, 0.1], got {}", self.tol)));
        }
        if self.max_passes == 0 {
            return Err(Error::Parameter("max_passes must be positive".into()));
        }
        Ok(())
    }
}

pub fn rbf(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    dims_match("rbf operand", x.len(), y.len())?;
    Ok(rbf_unchecked(x, y, gamma))
}

#[inline]
pub(crate) fn rbf_unchecked(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

/// Symmetric `n x n` RBF Gram matrix, row-major.
pub fn gram_matrix(samples: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let n = samples.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = rbf_unchecked(&samples[i], &samples[j], gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// `1 / (D * median squared distance)` over up to 100 seeded sample pairs.
pub fn default_gamma(samples: &[Vec<f64>], seed: u64) -> f64 {
    let n = samples.len();
    let dim = samples.first().map_or(1, Vec::len).max(1);
    if n < 2 {
        return 1.0 / dim as f64;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d2: Vec<f64> = (0..100)
        .map(|_| {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            samples[i].iter().zip(&samples[j]).map(|(a, b)| (a - b) * (a - b)).sum()
        })
        .collect();
    d2.sort_by(f64::total_cmp);
    let median = 0.5 * (d2[49] + d2[50]);
    if median > 0.0 {
        1.0 / (dim as f64 * median)
    } else {
        1.0 / dim as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rbf_values() {
        assert_eq!(rbf(&[1.0, 2.0], &[1.0, 2.0], 3.0).unwrap(), 1.0);
        let v = rbf(&[1.0, 0.0], &[0.0, 0.0], 0.5).unwrap();
        assert!((v - 0.60653).abs() < 1e-5);
        assert_eq!(
            rbf(&[0.3, -1.0], &[2.0, 0.1], 0.7).unwrap(),
            rbf(&[2.0, 0.1], &[0.3, -1.0], 0.7).unwrap()
        );
        assert!(matches!(rbf(&[1.0], &[1.0, 2.0], 1.0), Err(Error::Dimension(_))));
    }

    #[test]
    fn params_validation() {
        assert!(KernelParams::default().validate().is_ok());
        let bad = KernelParams {
            c: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = KernelParams {
            tol: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = KernelParams {
            gamma: Some(-1.0),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn default_gamma_is_deterministic_and_scaled() {
        let samples: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, 0.0]).collect();
        let g = default_gamma(&samples, 5);
        assert_eq!(g, default_gamma(&samples, 5));
        assert!(g > 0.0 && g < 1.0);
        let same = vec![vec![1.0; 4]; 5];
        assert_eq!(default_gamma(&same, 0), 0.25);
    }
}
