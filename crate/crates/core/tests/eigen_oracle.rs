use hmmscene::reduce::symmetric_eigen;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn jacobi_agrees_with_dense_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in [1, 2, 5, 10, 24] {
        let b = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = &b + b.transpose();
        let flat: Vec<f64> = (0..n * n).map(|k| a[(k / n, k % n)]).collect();
        let ours = symmetric_eigen(&flat, n);

        let mut expected: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().cloned().collect();
        expected.sort_by(|x, y| y.total_cmp(x));
        for (x, y) in ours.values.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-9, "n={n}: {x} vs {y}");
        }
        for (lambda, v) in ours.values.iter().zip(&ours.vectors) {
            let v = nalgebra::DVector::from_column_slice(v);
            assert!((v.norm() - 1.0).abs() < 1e-9);
            assert!((&a * &v - &v * *lambda).norm() < 1e-8, "n={n}: residual");
        }
    }
}
