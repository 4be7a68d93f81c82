//! Gauss-Legendre rules, composite Simpson weights and deterministic summation.

use rayon::prelude::*;
use std::sync::OnceLock;

/// Nodes and weights of the n-point Gauss-Legendre rule on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = 0.5 * (1.0 - x);
        ws[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

pub fn gauss64() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(64))
}

/// Composite Simpson weights for `m` (even) uniform intervals of width `h`.
pub fn simpson_weights(m: usize, h: f64) -> Vec<f64> {
    assert!(m % 2 == 0 && m >= 2, "Simpson needs an even number of intervals");
    (0..=m)
        .map(|j| {
            let c = if j == 0 || j == m {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

/// Weights for `int_0^{mh} r^beta g(r) dr` with `g` interpolated quadratically on pairs of intervals.
/// The first pair uses exact moments, the others a 12-point Gauss rule.
pub fn power_weights(m: usize, h: f64, beta: f64) -> Vec<f64> {
    assert!(m % 2 == 0 && m >= 2, "needs an even number of intervals");
    assert!(beta > -1.0, "weight r^beta must be integrable");
    let lag = |x: f64| [0.5 * (x - 1.0) * (x - 2.0), x * (2.0 - x), 0.5 * x * (x - 1.0)];
    let mut w = vec![0.0; m + 1];
    let mu = |k: f64| h.powf(beta + 1.0) * 2f64.powf(beta + k + 1.0) / (beta + k + 1.0);
    let (m0, m1, m2) = (mu(0.0), mu(1.0), mu(2.0));
    w[0] += 0.5 * (m2 - 3.0 * m1 + 2.0 * m0);
    w[1] += 2.0 * m1 - m2;
    w[2] += 0.5 * (m2 - m1);
    let (gx, gw) = gauss_legendre(12);
    for p in (2..m).step_by(2) {
        let x0 = p as f64 * h;
        for (x, wt) in gx.iter().zip(&gw) {
            let xi = 2.0 * x;
            let f = 2.0 * wt * h * (x0 + h * xi).powf(beta);
            let l = lag(xi);
            for k in 0..3 {
                w[p + k] += f * l[k];
            }
        }
    }
    w
}

const LEAF: usize = 256;

/// Pairwise sum with a fixed split structure, so the result does not depend on the thread count.
pub fn tree_sum(v: &[f64]) -> f64 {
    if v.len() <= LEAF {
        let mut acc = 0.0;
        for x in v {
            acc += x;
        }
        return acc;
    }
    let mid = split_point(v.len());
    let (a, b) = v.split_at(mid);
    let (x, y) = rayon::join(|| tree_sum(a), || tree_sum(b));
    x + y
}

fn split_point(n: usize) -> usize {
    let blocks = n.div_ceil(LEAF);
    (blocks / 2) * LEAF
}

/// Evaluates `f` at every index in parallel and tree-sums the results.
pub fn par_tree_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let vals: Vec<f64> = (0..n).into_par_iter().map(&f).collect();
    tree_sum(&vals)
}

/// Vector-valued version of [`par_tree_sum`]: `f(i, acc)` adds node `i` into `acc`.
/// Nodes are grouped in fixed leaves whose partial sums are combined pairwise.
pub fn par_tree_sum_vec<F>(n: usize, dim: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let leaves: Vec<Vec<f64>> = (0..n.div_ceil(LEAF))
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![0.0; dim];
            for i in b * LEAF..((b + 1) * LEAF).min(n) {
                f(i, &mut acc);
            }
            acc
        })
        .collect();
    combine(&leaves, dim)
}

fn combine(v: &[Vec<f64>], dim: usize) -> Vec<f64> {
    match v.len() {
        0 => vec![0.0; dim],
        1 => v[0].clone(),
        n => {
            let (a, b) = v.split_at(n / 2);
            let (x, y) = rayon::join(|| combine(a, dim), || combine(b, dim));
            x.iter().zip(&y).map(|(p, q)| p + q).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_weights_integrate_weighted_polynomials() {
        for beta in [-0.5, 0.0, 0.5, 1.5] {
            let w = power_weights(40, 0.05, beta);
            for k in 0..3 {
                let got: f64 = w.iter().enumerate().map(|(j, wj)| wj * (j as f64 * 0.05).powi(k)).sum();
                let want = 2f64.powf(beta + k as f64 + 1.0) / (beta + k as f64 + 1.0);
                assert!((got - want).abs() < 1e-13 * want.max(1.0), "{beta} {k}: {got} {want}");
            }
        }
        let s = simpson_weights(10, 0.1);
        let z = power_weights(10, 0.1, 0.0);
        assert!(s.iter().zip(&z).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn gauss_integrates_polynomials_and_exponentials() {
        let (x, w) = gauss64();
        let s: f64 = w.iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
        let p: f64 = x.iter().zip(w).map(|(x, w)| w * x.powi(9)).sum();
        assert!((p - 0.1).abs() < 1e-15);
        let e: f64 = x.iter().zip(w).map(|(x, w)| w * (14.0 * x).exp()).sum();
        let want = (14f64.exp() - 1.0) / 14.0;
        assert!(((e - want) / want).abs() < 1e-14);
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let h = 0.25;
        let w = simpson_weights(8, h);
        let s: f64 = w.iter().enumerate().map(|(j, w)| w * (j as f64 * h).powi(3)).sum();
        assert!((s - 4.0).abs() < 1e-14);
    }

    #[test]
    fn tree_sum_is_thread_count_invariant() {
        let v: Vec<f64> = (0..10_000).map(|i| ((i * 7919) % 1000) as f64 * 1e-3 + 1e-9 * i as f64).collect();
        let mut results = vec![];
        for threads in [1, 3, 8] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            results.push(pool.install(|| tree_sum(&v)).to_bits());
        }
        assert!(results.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn vector_tree_sum_is_thread_count_invariant() {
        let f = |i: usize, acc: &mut [f64]| {
            acc[0] += (i as f64 * 0.37).sin();
            acc[1] += 1.0 / (1.0 + i as f64);
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| par_tree_sum_vec(10_007, 2, f));
        let b = four.install(|| par_tree_sum_vec(10_007, 2, f));
        assert_eq!(a[0].to_bits(), b[0].to_bits());
        assert_eq!(a[1].to_bits(), b[1].to_bits());
    }
}
