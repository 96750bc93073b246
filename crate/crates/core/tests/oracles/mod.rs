//! Reference implementations the library is checked against. They are slow
//! and obvious on purpose and share no code with the crate.

#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// AUC by counting every (positive, negative) pair; ties score one half.
pub fn pair_count_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut won = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                won += 1.0;
            } else if si == sj {
                won += 0.5;
            }
        }
    }
    won / pairs
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        assert!(a[col][col].abs() > 1e-14, "singular system");
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Ordinary least squares with an intercept through the normal equations
/// of the design `[1, X]`. Returns `(intercept, coefficients)`.
pub fn least_squares(x: &Array2<f64>, y: &[f64]) -> (f64, Vec<f64>) {
    let (n, p) = x.dim();
    let design = |i: usize, j: usize| if j == 0 { 1.0 } else { x[[i, j - 1]] };
    let a: Vec<Vec<f64>> = (0..=p)
        .map(|r| {
            (0..=p)
                .map(|c| (0..n).map(|i| design(i, r) * design(i, c)).sum())
                .collect()
        })
        .collect();
    let b: Vec<f64> = (0..=p)
        .map(|r| (0..n).map(|i| design(i, r) * y[i]).sum())
        .collect();
    let sol = solve_dense(a, b);
    (sol[0], sol[1..].to_vec())
}

/// Columns orthogonal to each other and to the constant vector, with
/// `X^T X / n = I`, by Gram-Schmidt on Gaussian draws.
pub fn orthonormal_design(n: usize, p: usize, seed: u64) -> Array2<f64> {
    assert!(p < n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<f64>> = vec![vec![1.0 / (n as f64).sqrt(); n]];
    while basis.len() < p + 1 {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        for _ in 0..2 {
            for b in &basis {
                let d: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                v.iter_mut().zip(b).for_each(|(a, c)| *a -= d * c);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        basis.push(v);
    }
    let scale = (n as f64).sqrt();
    Array2::from_shape_fn((n, p), |(i, j)| basis[j + 1][i] * scale)
}

/// Largest violation of the elastic net optimality conditions.
pub fn kkt_violation(
    x: &Array2<f64>,
    y: &[f64],
    intercept: f64,
    beta: &[f64],
    lambda: f64,
    alpha: f64,
) -> f64 {
    let (n, p) = x.dim();
    let r: Vec<f64> = (0..n)
        .map(|i| y[i] - intercept - (0..p).map(|j| x[[i, j]] * beta[j]).sum::<f64>())
        .collect();
    let mut worst = (r.iter().sum::<f64>() / n as f64).abs();
    for j in 0..p {
        let g: f64 = (0..n).map(|i| x[[i, j]] * r[i]).sum::<f64>() / n as f64;
        let v = if beta[j] == 0.0 {
            (g.abs() - lambda * alpha).max(0.0)
        } else {
            (g - lambda * alpha * beta[j].signum() - lambda * (1.0 - alpha) * beta[j]).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Lasso by plain cyclic coordinate descent that recomputes every partial
/// residual from scratch. Returns `(intercept, coefficients)`.
pub fn lasso_reference(x: &Array2<f64>, y: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let (n, p) = x.dim();
    let nf = n as f64;
    let xm: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| x[[i, j]]).sum::<f64>() / nf)
        .collect();
    let ym = y.iter().sum::<f64>() / nf;
    let xc = Array2::from_shape_fn((n, p), |(i, j)| x[[i, j]] - xm[j]);
    let yc: Vec<f64> = y.iter().map(|v| v - ym).collect();
    let mut beta = vec![0.0; p];
    for _ in 0..1_000_000 {
        let mut change = 0.0f64;
        for j in 0..p {
            let partial: f64 = (0..n)
                .map(|i| {
                    let others: f64 = (0..p)
                        .filter(|&k| k != j)
                        .map(|k| xc[[i, k]] * beta[k])
                        .sum();
                    xc[[i, j]] * (yc[i] - others)
                })
                .sum::<f64>()
                / nf;
            let sq = (0..n).map(|i| xc[[i, j]] * xc[[i, j]]).sum::<f64>() / nf;
            let new = if partial > lambda {
                (partial - lambda) / sq
            } else if partial < -lambda {
                (partial + lambda) / sq
            } else {
                0.0
            };
            change = change.max((new - beta[j]).abs());
            beta[j] = new;
        }
        if change < 1e-15 {
            break;
        }
    }
    let intercept = ym - xm.iter().zip(&beta).map(|(m, b)| m * b).sum::<f64>();
    (intercept, beta)
}

/// `0.5 (|w|^2 + b^2) + C sum hinge` for 2-D inputs.
pub fn svm_primal_2d(x: &[[f64; 2]], y: &[i8], w: [f64; 2], b: f64, c: f64) -> f64 {
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, &yi)| (1.0 - f64::from(yi) * (w[0] * xi[0] + w[1] * xi[1] + b)).max(0.0))
        .sum();
    0.5 * (w[0] * w[0] + w[1] * w[1] + b * b) + c * hinge
}

/// Minimizes a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden_section(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    iters: usize,
) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..iters {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        }
    }
    if fa <= fb {
        (a, fa)
    } else {
        (b, fb)
    }
}

/// Brute-force SVM optimum over `(w1, w2, b)` in `[-10, 10]^3` by nested
/// golden-section search. Partial minimization keeps each level convex.
pub fn svm_brute_force(x: &[[f64; 2]], y: &[i8], c: f64) -> f64 {
    let iters = 70;
    let over_b = |w1: f64, w2: f64| {
        golden_section(|b| svm_primal_2d(x, y, [w1, w2], b, c), -10.0, 10.0, iters).1
    };
    let over_w2 = |w1: f64| golden_section(|w2| over_b(w1, w2), -10.0, 10.0, iters).1;
    golden_section(over_w2, -10.0, 10.0, iters).1
}

/// Linearly separable 2-D points with margin at least `gap` around a random
/// line through the box `[-3, 3]^2`.
pub fn separable_2d(n: usize, gap: f64, seed: u64) -> (Vec<[f64; 2]>, Vec<i8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let (u0, u1) = (angle.cos(), angle.sin());
    let offset: f64 = rng.random_range(-1.0..1.0);
    loop {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        while xs.len() < n {
            let p = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let d: f64 = u0 * p[0] + u1 * p[1] - offset;
            if d.abs() >= gap {
                xs.push(p);
                ys.push(if d > 0.0 { 1 } else { -1 });
            }
        }
        if ys.contains(&1) && ys.contains(&-1) {
            return (xs, ys);
        }
    }
}
