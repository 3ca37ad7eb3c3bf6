use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{default_gamma, gram_matrix, rbf_unchecked, KernelParams};
use super::platt::{platt_fit, platt_prob};
use super::smo::{kkt_residual, smo_train};
use crate::descriptors::DescriptorId;
use crate::error::{dims_match, Error, Result};

const CALIBRATION_FOLDS: usize = 3;

/// One calibrated class-vs-rest machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    /// Row-major, `dual_coeffs.len()` rows of the classifier's dimension.
    pub support_vectors: Vec<f64>,
    /// `alpha_i * y_i` for each stored vector.
    pub dual_coeffs: Vec<f64>,
    pub bias: f64,
    pub platt_a: f64,
    pub platt_b: f64,
    pub converged: bool,
    /// KKT residual on the training set at the returned solution.
    pub kkt_residual: f64,
    /// `sum alpha_i y_i` over all training points.
    pub equality_residual: f64,
}

impl BinarySvm {
    pub fn decision_value(&self, x: &[f64], gamma: f64) -> f64 {
        let dim = x.len();
        self.dual_coeffs
            .iter()
            .enumerate()
            .map(|(i, coef)| coef * rbf_unchecked(&self.support_vectors[i * dim..(i + 1) * dim], x, gamma))
            .sum::<f64>()
            + self.bias
    }

    pub fn num_support_vectors(&self) -> usize {
        self.dual_coeffs.len()
    }
}

/// `m` binary machines sharing one RBF width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvrClassifier {
    pub descriptor: Option<DescriptorId>,
    pub dim: usize,
    pub gamma: f64,
    pub c: f64,
    pub machines: Vec<BinarySvm>,
}

impl OvrClassifier {
    pub fn num_classes(&self) -> usize {
        self.machines.len()
    }

    pub fn converged(&self) -> bool {
        self.machines.iter().all(|m| m.converged)
    }

    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        dims_match("classifier input", self.dim, x.len())?;
        Ok(self.machines.iter().map(|m| m.decision_value(x, self.gamma)).collect())
    }

    /// Calibrated per-class probabilities normalized to sum to one.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        let raw: Vec<f64> = self
            .decision_values(x)?
            .into_iter()
            .zip(&self.machines)
            .map(|(f, m)| platt_prob(f, m.platt_a, m.platt_b))
            .collect();
        let m = raw.len();
        if raw.iter().all(|&p| p < 1e-12) {
            return Ok(vec![1.0 / m as f64; m]);
        }
        let total: f64 = raw.iter().sum();
        Ok(raw.into_iter().map(|p| p / total).collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Trains class-vs-rest machines; each is calibrated on out-of-fold decision
/// values from a stratified 3-way split.
pub fn ovr_train(
    features: &[Vec<f64>],
    labels: &[usize],
    m: usize,
    params: &KernelParams,
    seed: u64,
) -> Result<OvrClassifier> {
    params.validate()?;
    if features.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} feature vectors for {} labels",
            features.len(),
            labels.len()
        )));
    }
    let dim = features.first().map_or(0, Vec::len);
    for f in features {
        dims_match("feature vector", dim, f.len())?;
    }
    let mut counts = vec![0usize; m];
    for &l in labels {
        if l >= m {
            return Err(Error::Coverage(format!("label {l} outside 0..{m}")));
        }
        counts[l] += 1;
    }
    if let Some(class) = counts.iter().position(|&c| c < 2) {
        return Err(Error::Coverage(format!(
            "class {class} has {} training samples, need at least 2",
            counts[class]
        )));
    }

    let gamma = params.gamma.unwrap_or_else(|| default_gamma(features, seed));
    let gram = gram_matrix(features, gamma);
    let machines = (0..m)
        .into_par_iter()
        .map(|class| {
            let y: Vec<f64> = labels.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
            train_binary(features, &gram, &y, params)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OvrClassifier {
        descriptor: None,
        dim,
        gamma,
        c: params.c,
        machines,
    })
}

fn train_binary(features: &[Vec<f64>], gram: &[f64], y: &[f64], params: &KernelParams) -> Result<BinarySvm> {
    let n = y.len();
    let sol = smo_train(gram, y, params)?;
    if !sol.converged {
        log::warn!("SMO stopped after {} iterations without converging", sol.iterations);
    }

    let folds = stratified_folds(y);
    let mut held_out = vec![0.0; n];
    for fold in 0..CALIBRATION_FOLDS {
        let train: Vec<usize> = (0..n).filter(|&i| folds[i] != fold).collect();
        let test: Vec<usize> = (0..n).filter(|&i| folds[i] == fold).collect();
        if test.is_empty() {
            continue;
        }
        let sub_y: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let k = train.len();
        let mut sub_gram = vec![0.0; k * k];
        for (a, &i) in train.iter().enumerate() {
            for (b, &j) in train.iter().enumerate() {
                sub_gram[a * k + b] = gram[i * n + j];
            }
        }
        let fold_sol = smo_train(&sub_gram, &sub_y, params)?;
        for &t in &test {
            held_out[t] = train
                .iter()
                .enumerate()
                .map(|(a, &i)| fold_sol.alphas[a] * sub_y[a] * gram[t * n + i])
                .sum::<f64>()
                + fold_sol.bias;
        }
    }
    let (platt_a, platt_b) = platt_fit(&held_out, y)?;

    let kkt = kkt_residual(&sol.alphas, sol.bias, y, gram, params.c);
    let equality = sol.alphas.iter().zip(y).map(|(a, y)| a * y).sum();
    let mut support_vectors = Vec::new();
    let mut dual_coeffs = Vec::new();
    for (i, &a) in sol.alphas.iter().enumerate() {
        if a > 0.0 {
            support_vectors.extend_from_slice(&features[i]);
            dual_coeffs.push(a * y[i]);
        }
    }
    Ok(BinarySvm {
        support_vectors,
        dual_coeffs,
        bias: sol.bias,
        platt_a,
        platt_b,
        converged: sol.converged,
        kkt_residual: kkt,
        equality_residual: equality,
    })
}

/// Round-robin fold ids within each label, so every training part keeps
/// both classes whenever each class has at least two members.
fn stratified_folds(y: &[f64]) -> Vec<usize> {
    let (mut pos, mut neg) = (0, 0);
    y.iter()
        .map(|&label| {
            let counter = if label > 0.0 { &mut pos } else { &mut neg };
            let fold = *counter % CALIBRATION_FOLDS;
            *counter += 1;
            fold
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs(centers: &[(f64, f64)], per: usize, spread: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (class, &(cx, cy)) in centers.iter().enumerate() {
            for _ in 0..per {
                x.push(vec![
                    cx + spread * (rng.random::<f64>() - 0.5),
                    cy + spread * (rng.random::<f64>() - 0.5),
                ]);
                y.push(class);
            }
        }
        (x, y)
    }

    #[test]
    fn three_blobs() {
        let (x, y) = blobs(&[(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)], 15, 2.0, 3);
        let clf = ovr_train(&x, &y, 3, &KernelParams::default(), 1).unwrap();
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(xi, &yi)| clf.predict(xi).unwrap() == yi)
            .count();
        assert!(correct as f64 / x.len() as f64 >= 0.95);
        for xi in &x {
            let p = clf.predict_proba(xi).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        for m in &clf.machines {
            assert!(m.kkt_residual <= 1e-3);
            assert!(m.equality_residual.abs() <= 1e-6);
        }
    }

    #[test]
    fn two_classes_mirror() {
        let (x, y) = blobs(&[(0.0, 0.0), (3.0, 3.0)], 12, 1.5, 9);
        let clf = ovr_train(&x, &y, 2, &KernelParams::default(), 0).unwrap();
        for xi in &x {
            let f = clf.decision_values(xi).unwrap();
            let by_sign = if f[0] > 0.0 { 0 } else { 1 };
            assert_eq!(clf.predict(xi).unwrap(), by_sign);
        }
        // p_0 increases with machine 0's decision value
        let m0 = &clf.machines[0];
        assert!(m0.platt_a < 0.0);
        assert!(platt_prob(1.0, m0.platt_a, m0.platt_b) > platt_prob(0.0, m0.platt_a, m0.platt_b));
    }

    #[test]
    fn deterministic_model() {
        let (x, y) = blobs(&[(0.0, 0.0), (2.0, 1.0), (1.0, 3.0)], 8, 2.5, 4);
        let a = serde_json::to_string(&ovr_train(&x, &y, 3, &KernelParams::default(), 7).unwrap()).unwrap();
        let b = serde_json::to_string(&ovr_train(&x, &y, 3, &KernelParams::default(), 7).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coverage_errors() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert!(matches!(
            ovr_train(&x, &[0, 0, 1], 2, &KernelParams::default(), 0),
            Err(Error::Coverage(_))
        ));
        let (x, y) = blobs(&[(0.0, 0.0), (3.0, 3.0)], 4, 1.0, 1);
        let clf = ovr_train(&x, &y, 2, &KernelParams::default(), 0).unwrap();
        assert!(matches!(clf.predict_proba(&[1.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn argmax_ties_take_lowest() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.7]), 1);
    }
}
