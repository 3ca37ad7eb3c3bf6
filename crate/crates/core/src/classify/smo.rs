//! SMO for the C-SVC dual with maximal-violating-pair working set selection.

use super::kernel::KernelParams;
use crate::error::{Error, Result};

/// Dual solution of one binary machine.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SmoSolution {
    /// `sum_j alpha_j y_j K_ij + b` for every training point.
    pub fn decision_values(&self, gram: &[f64], labels: &[f64]) -> Vec<f64> {
        let n = labels.len();
        (0..n)
            .map(|i| {
                let row = &gram[i * n..(i + 1) * n];
                row.iter()
                    .zip(self.alphas.iter().zip(labels))
                    .map(|(k, (a, y))| k * a * y)
                    .sum::<f64>()
                    + self.bias
            })
            .collect()
    }
}

/// Dual objective `sum(alpha) - 1/2 alpha^T Q alpha` (to be maximized).
pub fn dual_objective(alphas: &[f64], labels: &[f64], gram: &[f64]) -> f64 {
    let n = labels.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alphas[i] * alphas[j] * labels[i] * labels[j] * gram[i * n + j];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Largest KKT residual of a stored solution.
pub fn kkt_residual(alphas: &[f64], bias: f64, labels: &[f64], gram: &[f64], c: f64) -> f64 {
    let sol = SmoSolution {
        alphas: alphas.to_vec(),
        bias,
        iterations: 0,
        converged: true,
    };
    let bound = 1e-12 * c.max(1.0);
    sol.decision_values(gram, labels)
        .iter()
        .zip(alphas.iter().zip(labels))
        .map(|(f, (&a, y))| {
            let margin = y * f - 1.0;
            if a <= bound {
                (-margin).max(0.0)
            } else if a >= c - bound {
                margin.max(0.0)
            } else {
                margin.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Solves the dual on a precomputed Gram matrix. Labels must be +1/-1.
pub fn smo_train(gram: &[f64], labels: &[f64], params: &KernelParams) -> Result<SmoSolution> {
    let n = labels.len();
    if gram.len() != n * n {
        return Err(Error::Dimension(format!(
            "gram matrix has {} entries for {n} labels",
            gram.len()
        )));
    }
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::Parameter("labels must be +1 or -1".into()));
    }
    if !labels.contains(&1.0) || !labels.contains(&-1.0) {
        return Err(Error::Parameter("both classes must be present".into()));
    }
    let c = params.c;
    let tau = 1e-12;
    let q = |i: usize, j: usize| labels[i] * labels[j] * gram[i * n + j];

    let mut alpha = vec![0.0; n];
    // gradient of 1/2 a^T Q a - e^T a
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_passes {
        let (i, j, gap) = select_pair(&alpha, &grad, labels, c);
        if gap < params.tol {
            converged = true;
            break;
        }
        let (i, j) = (i.unwrap(), j.unwrap());
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (yi, yj) = (labels[i], labels[j]);
        if yi != yj {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(tau);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(tau);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (k, g) in grad.iter_mut().enumerate() {
            *g += q(k, i) * di + q(k, j) * dj;
        }
    }

    let bias = compute_bias(&alpha, &grad, labels, c);
    Ok(SmoSolution {
        alphas: alpha,
        bias,
        iterations,
        converged,
    })
}

/// Returns `(i, j, m - M)` for the maximal violating pair; lowest index wins ties.
fn select_pair(alpha: &[f64], grad: &[f64], labels: &[f64], c: f64) -> (Option<usize>, Option<usize>, f64) {
    let mut up = (None, f64::NEG_INFINITY);
    let mut low = (None, f64::INFINITY);
    for t in 0..labels.len() {
        let score = -labels[t] * grad[t];
        let in_up = (labels[t] > 0.0 && alpha[t] < c) || (labels[t] < 0.0 && alpha[t] > 0.0);
        let in_low = (labels[t] < 0.0 && alpha[t] < c) || (labels[t] > 0.0 && alpha[t] > 0.0);
        if in_up && score > up.1 {
            up = (Some(t), score);
        }
        if in_low && score < low.1 {
            low = (Some(t), score);
        }
    }
    (up.0, low.0, up.1 - low.1)
}

/// Bias averaged over free vectors, else the middle of the feasible interval.
fn compute_bias(alpha: &[f64], grad: &[f64], labels: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..labels.len() {
        let yg = labels[t] * grad[t];
        if alpha[t] >= c {
            if labels[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if labels[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    -rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::kernel::gram_matrix;

    fn params(c: f64) -> KernelParams {
        KernelParams {
            c,
            ..Default::default()
        }
    }

    #[test]
    fn two_point_analytic_dual() {
        // equal norms, K12 = exp(-gamma * 4)
        let x = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let gram = gram_matrix(&x, 0.1);
        let y = [1.0, -1.0];
        let sol = smo_train(
            &gram,
            &y,
            &KernelParams {
                tol: 1e-8,
                ..params(1e6)
            },
        )
        .unwrap();
        let expect = 1.0 / (1.0 - gram[1]);
        assert!((sol.alphas[0] - expect).abs() < 1e-4, "{:?} vs {expect}", sol.alphas);
        assert!((sol.alphas[1] - expect).abs() < 1e-4);
        let f = sol.decision_values(&gram, &y);
        assert!((f[0] - 1.0).abs() < 1e-4 && (f[1] + 1.0).abs() < 1e-4);
    }

    /// Grid search over the feasible dual for three points with labels (+,+,-).
    #[test]
    fn three_point_dual_matches_grid_search() {
        let x = vec![vec![0.0, 0.0], vec![0.5, 0.8], vec![1.0, 0.2]];
        let gram = gram_matrix(&x, 1.3);
        let y = [1.0, 1.0, -1.0];
        let c = 1.0;
        let sol = smo_train(&gram, &y, &KernelParams { tol: 1e-9, ..params(c) }).unwrap();
        let step = 1e-3;
        let steps = (c / step).round() as usize;
        let mut best = f64::NEG_INFINITY;
        for a in 0..=steps {
            for b in 0..=steps {
                let (a1, a2) = (a as f64 * step, b as f64 * step);
                let a3 = a1 + a2;
                if a3 > c + 1e-12 {
                    continue;
                }
                best = best.max(dual_objective(&[a1, a2, a3], &y, &gram));
            }
        }
        let got = dual_objective(&sol.alphas, &y, &gram);
        assert!((got - best).abs() < 1e-4, "{got} vs {best}");
        assert!(got >= best - 1e-12);
    }

    #[test]
    fn separable_blobs_train_perfectly() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..10 {
            let t = i as f64;
            x.push(vec![2.0 + (t * 0.7).sin(), 2.0 + (t * 1.3).cos()]);
            y.push(1.0);
            x.push(vec![-2.0 + (t * 0.9).cos(), -2.0 + (t * 0.4).sin()]);
            y.push(-1.0);
        }
        let gram = gram_matrix(&x, 0.5);
        let p = params(1e3);
        let sol = smo_train(&gram, &y, &p).unwrap();
        assert!(sol.converged);
        let f = sol.decision_values(&gram, &y);
        assert!(f.iter().zip(&y).all(|(f, y)| f * y > 0.0));
        assert!(kkt_residual(&sol.alphas, sol.bias, &y, &gram, p.c) <= p.tol);
        let eq: f64 = sol.alphas.iter().zip(&y).map(|(a, y)| a * y).sum();
        assert!(eq.abs() < 1e-6);
        assert!(sol.alphas.iter().all(|&a| (0.0..=p.c).contains(&a)));
    }

    #[test]
    fn iteration_guard_reports_non_convergence() {
        let x: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i as f64 * 0.77).sin(), (i as f64).cos()])
            .collect();
        let y: Vec<f64> = (0..12).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let gram = gram_matrix(&x, 2.0);
        let sol = smo_train(
            &gram,
            &y,
            &KernelParams {
                max_passes: 1,
                ..params(10.0)
            },
        )
        .unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 1);
    }

    #[test]
    fn single_class_rejected() {
        let gram = vec![1.0, 0.5, 0.5, 1.0];
        assert!(smo_train(&gram, &[1.0, 1.0], &params(1.0)).is_err());
        assert!(smo_train(&gram, &[1.0, 0.0], &params(1.0)).is_err());
    }
}
