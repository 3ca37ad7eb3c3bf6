//! Seeded fixtures shared by the benchmarks.

use hmmscene::ensemble::{LabelIndicator, ScoreTensor};
use hmmscene::hmm::{build_bank, BankEntry, ReferenceBank};
use hmmscene::GrayImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn noise_image(side: usize, seed: u64) -> GrayImage {
    let mut r = rng(seed);
    GrayImage::new(side, side, (0..side * side).map(|_| r.random()).collect()).unwrap()
}

pub fn sequences(m: usize, per_class: usize, n: usize, dim: usize, seed: u64) -> Vec<(String, usize, Vec<Vec<f64>>)> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    for class in 0..m {
        for i in 0..per_class {
            let obs = (0..n)
                .map(|_| {
                    (0..dim)
                        .map(|_| r.random_range(-1.0..1.0) + class as f64 * 0.2)
                        .collect()
                })
                .collect();
            out.push((format!("{class}/{i}"), class, obs));
        }
    }
    out
}

pub fn bank(seqs: &[(String, usize, Vec<Vec<f64>>)], m: usize) -> ReferenceBank {
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

/// Two Gaussian-ish blobs in `dim` dimensions with +1/-1 labels.
pub fn blobs(n: usize, dim: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut r = rng(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i % 2 == 0 { 1.0 } else { -1.0 };
        x.push((0..dim).map(|_| label * 0.7 + r.random_range(-1.0..1.0)).collect());
        y.push(label);
    }
    (x, y)
}

pub fn score_tensor(c: usize, n: usize, m: usize, seed: u64) -> (ScoreTensor, LabelIndicator) {
    let mut r = rng(seed);
    let classes: Vec<usize> = (0..n).map(|_| r.random_range(0..m)).collect();
    let scores = (0..c)
        .map(|_| {
            classes
                .iter()
                .map(|&y| {
                    let raw: Vec<f64> = (0..m)
                        .map(|k| r.random_range(0.05..1.0) + if k == y { 0.5 } else { 0.0 })
                        .collect();
                    let z: f64 = raw.iter().sum();
                    raw.iter().map(|v| v / z).collect()
                })
                .collect()
        })
        .collect();
    let tensor = ScoreTensor::new(
        (0..c).map(|i| format!("c{i}")).collect(),
        (0..n).map(|j| format!("i{j}")).collect(),
        scores,
    )
    .unwrap();
    (tensor, LabelIndicator::new(classes, m).unwrap())
}
