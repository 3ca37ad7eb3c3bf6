use serde::{Deserialize, Serialize};

use super::bank::ReferenceBank;
use crate::error::{dims_match, Error, Result};

/// Exponent magnitudes beyond this are clamped, so no class weight underflows to zero.
pub const DISTANCE_CAP: f64 = 700.0;

/// `exp(-d_j) / sum_i exp(-d_i)`, shifted by the smallest distance.
pub fn softmax_neg(distances: &[f64]) -> Vec<f64> {
    let shift = distances.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = distances
        .iter()
        .map(|d| (-(d - shift).min(DISTANCE_CAP)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Emission estimate for observation `x` at position `t`: a softmax over the
/// negated nearest-exemplar distance of each class.
///
/// With `exclude`, exemplars contributed by that image id are skipped.
pub fn emission(x: &[f64], t: usize, bank: &ReferenceBank, exclude: Option<&str>) -> Result<Vec<f64>> {
    let exclude = exclude.and_then(|id| bank.owner_index(id));
    emission_by_owner(x, t, bank, exclude)
}

pub(crate) fn emission_by_owner(x: &[f64], t: usize, bank: &ReferenceBank, exclude: Option<usize>) -> Result<Vec<f64>> {
    dims_match("observation", bank.dim(), x.len())?;
    if t >= bank.len() {
        return Err(Error::Parameter(format!(
            "position {t} outside sequence of length {}",
            bank.len()
        )));
    }
    let distances = (0..bank.num_classes())
        .map(|j| {
            bank.nearest_distance(x, j, t, exclude)
                .ok_or_else(|| Error::Coverage(format!("class {j} has no exemplars at position {t} after exclusion")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(softmax_neg(&distances))
}

/// Row-stochastic `m x m` matrix between positions `t - 1` and `t`: row `k`
/// is a softmax over `j` of `-|centroid(k, t-1) - centroid(j, t)|`.
pub fn transition(t: usize, bank: &ReferenceBank) -> Result<Vec<Vec<f64>>> {
    if t < 1 || t >= bank.len() {
        return Err(Error::Parameter(format!(
            "transition destination {t} outside 1..{}",
            bank.len()
        )));
    }
    let m = bank.num_classes();
    Ok((0..m)
        .map(|k| {
            let from = bank.centroid(k, t - 1);
            let distances: Vec<f64> = (0..m)
                .map(|j| {
                    from.iter()
                        .zip(bank.centroid(j, t))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            softmax_neg(&distances)
        })
        .collect())
}

/// Per-position class posteriors, `n x m` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMatrix {
    n: usize,
    m: usize,
    values: Vec<f64>,
}

impl AlphaMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn num_classes(&self) -> usize {
        self.m
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.m..(t + 1) * self.m]
    }
}

/// Precomputed transitions for a bank; reuse across many sequences.
#[derive(Debug, Clone)]
pub struct ForwardModel<'a> {
    bank: &'a ReferenceBank,
    transitions: Vec<Vec<Vec<f64>>>,
}

impl<'a> ForwardModel<'a> {
    pub fn new(bank: &'a ReferenceBank) -> Result<Self> {
        let transitions = (1..bank.len()).map(|t| transition(t, bank)).collect::<Result<_>>()?;
        Ok(Self { bank, transitions })
    }

    /// Scaled forward recursion with a uniform initial distribution.
    pub fn run(&self, observations: &[Vec<f64>], exclude: Option<&str>) -> Result<AlphaMatrix> {
        let bank = self.bank;
        dims_match("sequence length", bank.len(), observations.len())?;
        let exclude = match exclude {
            Some(id) => Some(
                bank.owner_index(id)
                    .ok_or_else(|| Error::Parameter(format!("excluded id {id} is not in the reference bank")))?,
            ),
            None => None,
        };
        let m = bank.num_classes();
        let n = bank.len();
        let mut values = Vec::with_capacity(n * m);

        let first = emission_by_owner(&observations[0], 0, bank, exclude)?;
        let prior = 1.0 / m as f64;
        values.extend(normalized(first.iter().map(|e| e * prior)));

        for t in 1..n {
            let emit = emission_by_owner(&observations[t], t, bank, exclude)?;
            let trans = &self.transitions[t - 1];
            let prev = &values[(t - 1) * m..t * m];
            let row: Vec<f64> = (0..m)
                .map(|j| {
                    let mix: f64 = (0..m).map(|k| trans[k][j] * prev[k]).sum();
                    emit[j] * mix
                })
                .collect();
            values.extend(normalized(row.into_iter()));
        }
        Ok(AlphaMatrix { n, m, values })
    }
}

fn normalized(row: impl Iterator<Item = f64>) -> Vec<f64> {
    let row: Vec<f64> = row.collect();
    let total: f64 = row.iter().sum();
    if total > 0.0 && total.is_finite() {
        row.into_iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / row.len() as f64; row.len()]
    }
}

/// Forward recursion for one sequence.
pub fn forward(observations: &[Vec<f64>], bank: &ReferenceBank, exclude: Option<&str>) -> Result<AlphaMatrix> {
    ForwardModel::new(bank)?.run(observations, exclude)
}

/// Class-major flattening `v[j * n + t] = alpha[t][j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HmmFeatureVector(Vec<f64>);

impl HmmFeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

pub fn feature_vector(alpha: &AlphaMatrix) -> HmmFeatureVector {
    let (n, m) = (alpha.n, alpha.m);
    let mut v = vec![0.0; m * n];
    for t in 0..n {
        for (j, &a) in alpha.row(t).iter().enumerate() {
            v[j * n + t] = a;
        }
    }
    HmmFeatureVector(v)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::hmm::{build_bank, BankEntry};

    type Seq = (String, usize, Vec<Vec<f64>>);

    fn bank_from(seqs: &[Seq], m: usize) -> ReferenceBank {
        let entries: Vec<BankEntry> = seqs
            .iter()
            .map(|(id, class, obs)| BankEntry {
                id,
                class: *class,
                observations: obs,
            })
            .collect();
        build_bank(&entries, m).unwrap()
    }

    #[test]
    fn softmax_hand_values() {
        let p = softmax_neg(&[3.0, 3.0]);
        assert_eq!(p, vec![0.5, 0.5]);
        let p = softmax_neg(&[1.0, 2.0]);
        assert!((p[0] - 0.73106).abs() < 1e-4 && (p[1] - 0.26894).abs() < 1e-4);
        let p = softmax_neg(&[0.0, 10.0]);
        assert!((p[0] - 0.99995).abs() < 1e-5);
        // large distances keep their order, gaps past the cap stay positive
        let p = softmax_neg(&[1000.0, 1001.0]);
        assert!((p[0] - 0.73106).abs() < 1e-4);
        let p = softmax_neg(&[1e6, 2e6]);
        assert!(p[1] > 0.0 && p[1] < 1e-300);
    }

    #[test]
    fn emission_from_bank_distances() {
        // class 0 exemplar at distance 1, class 1 at distance 2
        let seqs = vec![
            ("a".to_string(), 0, vec![vec![1.0, 0.0]]),
            ("b".to_string(), 1, vec![vec![0.0, 2.0]]),
        ];
        let bank = bank_from(&seqs, 2);
        let e = emission(&[0.0, 0.0], 0, &bank, None).unwrap();
        assert!((e[0] - 0.73106).abs() < 1e-4);

        // exact exemplar hit dominates
        let e = emission(&[1.0, 0.0], 0, &bank, None).unwrap();
        assert!(e[0] > 0.5);
        assert!((e[0] - 1.0 / (1.0 + (-(5f64).sqrt()).exp())).abs() < 1e-12);
    }

    #[test]
    fn exclusion_skips_own_vectors() {
        let seqs = vec![
            ("a0".to_string(), 0, vec![vec![0.0]]),
            ("a1".to_string(), 0, vec![vec![3.0]]),
            ("b0".to_string(), 1, vec![vec![1.0]]),
        ];
        let bank = bank_from(&seqs, 2);
        let with = emission(&[0.0], 0, &bank, None).unwrap();
        let without = emission(&[0.0], 0, &bank, Some("a0")).unwrap();
        assert!(with[0] > without[0]);
        // now class 0's nearest is 3 away, class 1's is 1 away
        assert!((without[0] - softmax_neg(&[3.0, 1.0])[0]).abs() < 1e-15);
        assert!(matches!(
            emission(&[0.0], 0, &bank, Some("b0")),
            Err(Error::Coverage(_))
        ));
    }

    #[test]
    fn identical_centroids_give_uniform_transitions() {
        let seqs: Vec<Seq> = (0..3).map(|j| (format!("s{j}"), j, vec![vec![1.0, 1.0]; 4])).collect();
        let bank = bank_from(&seqs, 3);
        for t in 1..4 {
            for row in transition(t, &bank).unwrap() {
                for p in row {
                    assert!((p - 1.0 / 3.0).abs() < 1e-15);
                }
            }
        }
        assert!(transition(0, &bank).is_err());
        assert!(transition(4, &bank).is_err());
    }

    #[test]
    fn first_row_is_the_emission() {
        let seqs = vec![
            ("a".to_string(), 0, vec![vec![0.0], vec![1.0], vec![5.0]]),
            ("b".to_string(), 1, vec![vec![2.0], vec![4.0], vec![0.5]]),
        ];
        let bank = bank_from(&seqs, 2);
        let obs = vec![vec![0.7], vec![2.2], vec![1.0]];
        let alpha = forward(&obs, &bank, None).unwrap();
        let e0 = emission(&obs[0], 0, &bank, None).unwrap();
        for j in 0..2 {
            assert!((alpha.row(0)[j] - e0[j]).abs() < 1e-15);
        }
        assert!(matches!(forward(&obs[..2], &bank, None), Err(Error::Dimension(_))));
    }

    #[test]
    fn feature_layout_is_class_major() {
        let alpha = AlphaMatrix {
            n: 2,
            m: 2,
            values: vec![0.6, 0.4, 0.3, 0.7],
        };
        assert_eq!(feature_vector(&alpha).values(), &[0.6, 0.3, 0.4, 0.7]);
    }
}
