use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dims_match, Error, Result};

const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Centroid {
    pub point: Vec<f64>,
}

/// Result of a Lloyd run with its inertia after every assignment step.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub centroids: Vec<Centroid>,
    pub assignments: Vec<usize>,
    pub inertia_trace: Vec<f64>,
}

impl KMeansFit {
    pub fn inertia(&self) -> f64 {
        self.inertia_trace.last().copied().unwrap_or(0.0)
    }
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exact mean of the samples.
pub fn mean_point(samples: &[Vec<f64>]) -> Vec<f64> {
    let mut mean = vec![0.0; samples.first().map_or(0, Vec::len)];
    for s in samples {
        for (m, x) in mean.iter_mut().zip(s) {
            *m += x;
        }
    }
    let n = samples.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

pub fn kmeans_fit(samples: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<Centroid>> {
    kmeans_fit_traced(samples, k, seed).map(|fit| fit.centroids)
}

/// Lloyd's algorithm from a k-means++ seeding. `k = 1` short-circuits to
/// the sample mean.
pub fn kmeans_fit_traced(samples: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansFit> {
    if k < 1 || samples.len() < k {
        return Err(Error::Parameter(format!(
            "k-means needs 1 <= k <= samples, got k = {k} with {} samples",
            samples.len()
        )));
    }
    let dim = samples[0].len();
    for s in samples {
        dims_match("k-means sample", dim, s.len())?;
    }

    if k == 1 {
        let point = mean_point(samples);
        let inertia = samples.iter().map(|s| sq_dist(s, &point)).sum();
        return Ok(KMeansFit {
            centroids: vec![Centroid { point }],
            assignments: vec![0; samples.len()],
            inertia_trace: vec![inertia],
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_init(samples, k, &mut rng);
    let mut assignments = vec![usize::MAX; samples.len()];
    let mut trace = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        let mut inertia = 0.0;
        for (i, s) in samples.iter().enumerate() {
            let (best, d) = nearest(s, &centers);
            inertia += d;
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
        }
        trace.push(inertia);
        if !changed {
            break;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (s, &a) in samples.iter().zip(&assignments) {
            counts[a] += 1;
            for (acc, x) in sums[a].iter_mut().zip(s) {
                *acc += x;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // re-seed at the sample farthest from its current center
                let far = (0..samples.len())
                    .max_by(|&a, &b| {
                        sq_dist(&samples[a], &centers[assignments[a]])
                            .total_cmp(&sq_dist(&samples[b], &centers[assignments[b]]))
                            .then(b.cmp(&a))
                    })
                    .unwrap();
                centers[c] = samples[far].clone();
                assignments[far] = c;
            } else {
                centers[c] = sums[c].iter().map(|v| v / counts[c] as f64).collect();
            }
        }
    }
    Ok(KMeansFit {
        centroids: centers.into_iter().map(|point| Centroid { point }).collect(),
        assignments,
        inertia_trace: trace,
    })
}

fn nearest(x: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    centers
        .iter()
        .enumerate()
        .map(|(i, c)| (i, sq_dist(x, c)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

fn plus_plus_init(samples: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![samples[rng.random_range(0..samples.len())].clone()];
    let mut d2: Vec<f64> = samples.iter().map(|s| sq_dist(s, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total <= 0.0 {
            // every sample coincides with a center; take the first unused index
            centers.len().min(samples.len() - 1)
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut idx = samples.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        };
        centers.push(samples[pick].clone());
        for (d, s) in d2.iter_mut().zip(samples) {
            *d = d.min(sq_dist(s, &samples[pick]));
        }
    }
    centers
}
