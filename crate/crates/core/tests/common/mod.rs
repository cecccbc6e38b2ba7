#![allow(dead_code)]

use parisian_core::{Line, RiskModel};
use rand::Rng;

/// O(n*w) reference for the discrete sup-inf functional.
pub fn brute_sup_inf(values: &[f64], a: usize, b: usize, w: usize) -> f64 {
    (a..=b)
        .map(|j| values[j..=j + w].iter().copied().fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Sliding minimum by the van Herk / Gil-Werman block method.
pub fn block_sliding_min(g: &[f64], w: usize) -> Vec<f64> {
    let k = w + 1;
    let n = g.len();
    let mut prefix = vec![0.0; n];
    let mut suffix = vec![0.0; n];
    for i in 0..n {
        prefix[i] = if i % k == 0 { g[i] } else { prefix[i - 1].min(g[i]) };
    }
    for i in (0..n).rev() {
        suffix[i] = if i % k == k - 1 || i == n - 1 { g[i] } else { suffix[i + 1].min(g[i]) };
    }
    (0..=n - k).map(|j| suffix[j].min(prefix[j + w])).collect()
}

/// Grid value of `sup_{t in [-lambda, lambda]} inf_{s in [0,T]} -h(t, s)` for the
/// separable drift of the asymmetric Talagrand branch: the exponent equal to
/// `nu` moves with `t + s`, the other stays at `t`.
pub fn talagrand_variational(a_minus: f64, g_minus: f64, a_plus: f64, g_plus: f64, nu: f64, t: f64) -> f64 {
    let lambda = 5.0 * t;
    let w = 10_000usize;
    let step = t / w as f64;
    let half = (lambda / step).round() as usize;
    let n_out = 2 * half;
    let left = |x: f64| if x <= 0.0 { -a_minus * (-x).powf(g_minus) } else { 0.0 };
    let right = |x: f64| if x >= 0.0 { -a_plus * x.powf(g_plus) } else { 0.0 };
    let moving_minus = g_minus == nu;
    let moving_plus = g_plus == nu;
    // Index arithmetic keeps x = 0 exactly on the grid; tiny exponents amplify any offset.
    let xs: Vec<f64> = (0..=n_out + w).map(|j| (j as f64 - half as f64) * step).collect();
    let g: Vec<f64> = xs
        .iter()
        .map(|&x| {
            (if moving_minus { left(x) } else { 0.0 }) + (if moving_plus { right(x) } else { 0.0 })
        })
        .collect();
    let m = block_sliding_min(&g, w);
    (0..=n_out)
        .map(|j| {
            let x = xs[j];
            let fixed = (if moving_minus { 0.0 } else { left(x) }) + (if moving_plus { 0.0 } else { right(x) });
            fixed + m[j]
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn random_model<R: Rng>(rng: &mut R, max_lines: usize) -> RiskModel {
    let d = rng.random_range(1..=max_lines);
    let lines = (0..d)
        .map(|_| {
            Line::new(
                rng.random_range(0.2..3.0),
                rng.random_range(0.2..3.0),
                rng.random_range(0.5..2.0),
            )
        })
        .collect();
    let hurst = rng.random_range(0.1..0.9);
    RiskModel::new(lines, hurst, None).unwrap()
}

/// Empirical covariance of rows of `paths` (each row one path).
pub fn empirical_cov(paths: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = paths[0].len();
    let m = paths.len() as f64;
    let mut c = vec![vec![0.0; n]; n];
    for p in paths {
        for i in 0..n {
            let pi = p[i];
            for j in 0..=i {
                c[i][j] += pi * p[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            c[i][j] /= m;
            c[j][i] = c[i][j];
        }
    }
    c
}
