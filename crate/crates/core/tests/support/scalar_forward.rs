//! Forward recursion re-derived with plain loops; shares no code with the
//! library's HMM module.

#![allow(clippy::needless_range_loop)]

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

/// Scalar forward pass: exemplars[j][t] lists class-j vectors at position t.
pub fn oracle_forward(query: &[Vec<f64>], exemplars: &[Vec<Vec<Vec<f64>>>]) -> Vec<Vec<f64>> {
    let m = exemplars.len();
    let n = query.len();
    // centroids as plain means
    let centroid = |j: usize, t: usize| -> Vec<f64> {
        let list = &exemplars[j][t];
        let mut c = vec![0.0; list[0].len()];
        for v in list {
            for k in 0..c.len() {
                c[k] += v[k];
            }
        }
        for k in 0..c.len() {
            c[k] /= list.len() as f64;
        }
        c
    };
    let emit = |t: usize| -> Vec<f64> {
        let mut e = vec![0.0; m];
        for j in 0..m {
            let mut best = f64::INFINITY;
            for v in &exemplars[j][t] {
                best = best.min(euclid(&query[t], v));
            }
            e[j] = (-best).exp();
        }
        let z: f64 = e.iter().sum();
        e.iter().map(|x| x / z).collect()
    };
    let trans = |k: usize, j: usize, t: usize| -> f64 {
        let from = centroid(k, t - 1);
        let mut z = 0.0;
        for i in 0..m {
            z += (-euclid(&from, &centroid(i, t))).exp();
        }
        (-euclid(&from, &centroid(j, t))).exp() / z
    };

    let mut alpha = vec![vec![0.0; m]; n];
    let e0 = emit(0);
    for j in 0..m {
        alpha[0][j] = e0[j] / m as f64;
    }
    let z: f64 = alpha[0].iter().sum();
    for j in 0..m {
        alpha[0][j] /= z;
    }
    for t in 1..n {
        let e = emit(t);
        for j in 0..m {
            let mut acc = 0.0;
            for k in 0..m {
                acc += trans(k, j, t) * alpha[t - 1][k];
            }
            alpha[t][j] = e[j] * acc;
        }
        let z: f64 = alpha[t].iter().sum();
        for j in 0..m {
            alpha[t][j] /= z;
        }
    }
    alpha
}
