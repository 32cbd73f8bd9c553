//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use statbench::em::{CountVector, SystemMatrix};
use statbench::renewal::GridCdf;

/// Poisson log-likelihood without the factorial constant, straight from the
/// dense matrix.
pub fn dense_log_likelihood(rows: &[Vec<f64>], counts: &[f64], lambda: &[f64]) -> f64 {
    rows.iter()
        .zip(counts)
        .map(|(row, &n)| {
            let mean: f64 = row.iter().zip(lambda).map(|(a, l)| a * l).sum();
            if n > 0.0 {
                n * mean.ln() - mean
            } else {
                -mean
            }
        })
        .sum()
}

/// Maximizer over `[0, hi]²` by repeated grid search: a 201×201 grid, then
/// zoom to ±3 cells around the best point until cells are below `1e-7`.
pub fn grid_search_mle_2d(rows: &[Vec<f64>], counts: &[f64], hi: f64) -> [f64; 2] {
    let (mut lo0, mut hi0, mut lo1, mut hi1) = (0.0, hi, 0.0, hi);
    loop {
        let steps = 200;
        let (h0, h1) = ((hi0 - lo0) / steps as f64, (hi1 - lo1) / steps as f64);
        let mut best = (f64::NEG_INFINITY, [0.0, 0.0]);
        for i in 0..=steps {
            for j in 0..=steps {
                let l = [lo0 + i as f64 * h0, lo1 + j as f64 * h1];
                let v = dense_log_likelihood(rows, counts, &l);
                if v > best.0 {
                    best = (v, l);
                }
            }
        }
        let [b0, b1] = best.1;
        if h0.max(h1) < 1e-7 {
            return best.1;
        }
        lo0 = (b0 - 3.0 * h0).max(0.0);
        hi0 = b0 + 3.0 * h0;
        lo1 = (b1 - 3.0 * h1).max(0.0);
        hi1 = b1 + 3.0 * h1;
    }
}

pub fn dense_rows(a: &SystemMatrix) -> Vec<Vec<f64>> {
    a.to_dense_rows()
}

pub fn counts(values: &[u64]) -> CountVector {
    CountVector::from_counts(values)
}

/// `min_c ‖(x − o) − D c‖₂` by SVD least squares on the raw directions.
pub fn dense_lstsq_residual(x: &[f64], origin: &[f64], dirs: &[Vec<f64>]) -> f64 {
    let m = x.len();
    let r = DVector::from_iterator(m, x.iter().zip(origin).map(|(a, b)| a - b));
    if dirs.is_empty() {
        return r.norm();
    }
    let d = DMatrix::from_fn(m, dirs.len(), |i, j| dirs[j][i]);
    let svd = d.clone().svd(true, true);
    let coeffs = svd.solve(&r, 1e-12).expect("svd solve");
    (r - d * coeffs).norm()
}

/// Numerical rank by singular values above `tol · σ_max`.
pub fn rank(rows: &[Vec<f64>], tol: f64) -> usize {
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let sv = m.singular_values();
    let max = sv.max();
    sv.iter().filter(|s| **s > tol * max).count()
}

/// Length of the line `p + t·u` inside the box `[x0, x1] × [y0, y1]`.
pub fn clip_length(p: (f64, f64), u: (f64, f64), x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (pc, uc, a, b) in [(p.0, u.0, x0, x1), (p.1, u.1, y0, y1)] {
        if uc.abs() < 1e-15 {
            if pc < a || pc > b {
                return 0.0;
            }
        } else {
            let (ta, tb) = ((a - pc) / uc, (b - pc) / uc);
            lo = lo.max(ta.min(tb));
            hi = hi.min(ta.max(tb));
        }
    }
    (hi - lo).max(0.0)
}

/// All simple paths from `from` to `to` in an undirected graph, as node
/// sequences with their total weight.
pub fn all_paths(
    n: usize,
    edges: &[(usize, usize, f64)],
    from: usize,
    to: usize,
) -> Vec<(f64, Vec<usize>)> {
    fn walk(
        n: usize,
        edges: &[(usize, usize, f64)],
        to: usize,
        path: &mut Vec<usize>,
        len: f64,
        out: &mut Vec<(f64, Vec<usize>)>,
    ) {
        let at = *path.last().unwrap();
        if at == to {
            out.push((len, path.clone()));
            return;
        }
        for &(u, v, w) in edges {
            let next = if u == at {
                v
            } else if v == at {
                u
            } else {
                continue;
            };
            if next < n && !path.contains(&next) {
                path.push(next);
                walk(n, edges, to, path, len + w, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(n, edges, to, &mut vec![from], 0.0, &mut out);
    out
}

/// Member of the scaling class for `0 < q < 1` with mean `m`: a scale
/// mixture of exponentials whose log-rate is normal with variance
/// `a = −ln q` and mean `a/2 − ln m`.
pub fn canonical_member_cdf(q: f64, m: f64, x: f64) -> f64 {
    let a = -q.ln();
    let c = a / 2.0 - m.ln();
    let sd = a.sqrt();
    let k = 4000;
    let half = 12.0 * sd;
    let h = 2.0 * half / k as f64;
    let mut acc = 0.0;
    for i in 0..=k {
        let u = c - half + i as f64 * h;
        let z = (u - c) / sd;
        let w = if i == 0 || i == k { 0.5 } else { 1.0 };
        let density = (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
        acc += w * density * (-(-(u.exp() * x)).exp_m1());
    }
    acc * h
}

pub fn canonical_member(q: f64, m: f64, x_max: f64, n: usize) -> GridCdf {
    GridCdf::from_fn(x_max, n, |x| canonical_member_cdf(q, m, x)).unwrap()
}
