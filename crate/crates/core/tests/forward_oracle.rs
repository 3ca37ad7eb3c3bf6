#![allow(clippy::needless_range_loop)]

mod support;

use hmmscene::hmm::{build_bank, feature_vector, forward, BankEntry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::scalar_forward::oracle_forward;

#[test]
fn forward_matches_scalar_recursion_m2_n3() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (m, n, dim, per_class) = (2, 3, 3, 3);
    for _ in 0..20 {
        let mut sequences = Vec::new();
        let mut exemplars = vec![vec![Vec::new(); n]; m];
        for class in 0..m {
            for i in 0..per_class {
                let feats: Vec<Vec<f64>> = (0..n)
                    .map(|_| (0..dim).map(|_| rng.random::<f64>() * 2.0 + class as f64).collect())
                    .collect();
                for t in 0..n {
                    exemplars[class][t].push(feats[t].clone());
                }
                sequences.push((format!("c{class}-{i}"), class, feats));
            }
        }
        let entries: Vec<BankEntry> = sequences
            .iter()
            .map(|(id, class, obs)| BankEntry {
                id,
                class: *class,
                observations: obs,
            })
            .collect();
        let bank = build_bank(&entries, m).unwrap();
        let query: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random::<f64>() * 3.0).collect())
            .collect();

        let alpha = forward(&query, &bank, None).unwrap();
        let expected = oracle_forward(&query, &exemplars);
        for t in 0..n {
            for j in 0..m {
                assert!(
                    (alpha.row(t)[j] - expected[t][j]).abs() < 1e-9,
                    "t={t} j={j}: {} vs {}",
                    alpha.row(t)[j],
                    expected[t][j]
                );
            }
        }
        assert_eq!(feature_vector(&alpha).values().len(), m * n);
    }
}
