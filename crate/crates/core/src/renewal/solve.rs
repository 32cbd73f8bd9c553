use std::collections::VecDeque;

use super::grid::{running_max, GridCdf};
use super::{check_q, defect_against, residual_cdf, RenewalError};

/// Sweep change below which the iteration stops.
pub const CONVERGED_CHANGE: f64 = 1e-8;
/// Largest defect accepted as membership of `C_q`.
pub const CONVERGED_DEFECT: f64 = 1e-3;
/// Past sweeps combined by each Anderson step.
const DEPTH: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub damping: f64,
    pub max_iters: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            damping: 0.5,
            max_iters: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingReport {
    pub q: f64,
    pub defect: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Mean at which [`solve_cq`] builds members: 1 at `q = 1`, else
/// `min(1, 0.2/ln(1/q))`. Members of `C_q` spread over about `ln(1/q)` in
/// log-rate, so smaller `q` needs a smaller scale to keep the slow rates
/// inside the grid.
pub fn working_mean(q: f64) -> f64 {
    let a = -q.ln();
    if a <= 0.0 {
        1.0
    } else {
        (0.2 / a).min(1.0)
    }
}

/// Builds a member of `C_q` from `init`.
///
/// `init` is first rescaled to [`working_mean`]. With the mean pinned at
/// `m`, `T(F)(y) = (1/m)∫₀^{y/q}(1 − F)` is affine in `F`, and the damped
/// sweep `F ← (1 − d)·F + d·T(F)` is applied at every grid point with
/// `y/q ≤ x_max`. The points above `q·x_max` keep the init's values: they
/// hold one log-period of free data, which is what makes `C_q` large for
/// `q < 1`, and is empty at `q = 1`.
///
/// The plain sweep drifts along a family of self-similar waves instead of
/// settling, so successive sweeps are combined by Anderson mixing over the
/// last [`DEPTH`] sweeps. Every iterate is clipped to [0, 1] and made
/// monotone.
///
/// Converged means the sup change of a damped sweep fell below
/// [`CONVERGED_CHANGE`] and the defect is at most [`CONVERGED_DEFECT`].
/// Otherwise `NotConverged` carries the iterate with the smallest change.
pub fn solve_cq(
    q: f64,
    init: &GridCdf,
    cfg: &SolveConfig,
) -> Result<(GridCdf, ScalingReport), RenewalError> {
    check_q(q)?;
    if q > 1.0 {
        return Err(RenewalError::QOutOfRange(q));
    }
    let d = cfg.damping;
    if !(d > 0.0 && d <= 1.0) {
        return Err(RenewalError::InvalidDamping(d));
    }
    let m = working_mean(q);
    let start = rescale_to(init, m)?;
    let sweep = Sweep::new(q, d, m, &start);

    let mut x = start.values().to_vec();
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut iterations = 0;
    let mut settled = false;
    while iterations < cfg.max_iters {
        let g = sweep.apply(&x);
        iterations += 1;
        let change = g
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if !change.is_finite() {
            // start over from the best iterate with an empty history
            hist.clear();
            x = best
                .as_ref()
                .map_or_else(|| start.values().to_vec(), |b| b.0.clone());
            continue;
        }
        if best.as_ref().is_none_or(|b| change < b.1) {
            best = Some((x.clone(), change));
        }
        if change < CONVERGED_CHANGE {
            settled = true;
            break;
        }
        hist.push_back((x, g));
        if hist.len() > DEPTH + 1 {
            hist.pop_front();
        }
        x = anderson_step(&hist);
        make_valid(&mut x);
    }

    let values = if settled {
        x
    } else {
        best.map_or_else(|| start.values().to_vec(), |b| b.0)
    };
    let f = finish(values, &start)?;
    let defect = defect_against(&f, &residual_cdf(&f)?, q);
    let report = ScalingReport {
        q,
        defect,
        iterations,
        converged: settled && defect <= CONVERGED_DEFECT,
    };
    if report.converged {
        Ok((f, report))
    } else {
        Err(RenewalError::NotConverged {
            best: Box::new((f, report)),
        })
    }
}

fn rescale_to(f: &GridCdf, m: f64) -> Result<GridCdf, RenewalError> {
    let mu = f.mean()?;
    if mu == m {
        return Ok(f.clone());
    }
    f.rescaled(mu / m)
}

/// The damped sweep on value vectors.
struct Sweep {
    q: f64,
    d: f64,
    m: f64,
    dx: f64,
    /// Last index with `x_i/q ≤ x_max`.
    solved: usize,
}

impl Sweep {
    fn new(q: f64, d: f64, m: f64, f: &GridCdf) -> Self {
        let n = f.n();
        let solved = ((q * n as f64 + 1e-9).floor() as usize).min(n);
        Self {
            q,
            d,
            m,
            dx: f.dx(),
            solved,
        }
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len() - 1;
        let dx = self.dx;
        let mut s = vec![0.0; n + 1];
        for i in 0..n {
            s[i + 1] = s[i] + dx * (1.0 - 0.5 * (v[i] + v[i + 1]));
        }
        let mut out = v.to_vec();
        for (i, o) in out.iter_mut().enumerate().take(self.solved + 1) {
            // ∫₀^z (1 − F), exact for piecewise linear F
            let z = i as f64 * dx / self.q;
            let k = ((z / dx) as usize).min(n - 1);
            let t = z - k as f64 * dx;
            let sz = s[k] + t * (1.0 - v[k]) - t * t * (v[k + 1] - v[k]) / (2.0 * dx);
            *o = (1.0 - self.d) * v[i] + self.d * sz / self.m;
        }
        out
    }
}

/// Type-II Anderson step over `(x_j, g_j)` pairs, newest last.
fn anderson_step(hist: &VecDeque<(Vec<f64>, Vec<f64>)>) -> Vec<f64> {
    let k = hist.len() - 1;
    let (xk, gk) = &hist[k];
    let fk: Vec<f64> = gk.iter().zip(xk).map(|(g, x)| g - x).collect();
    if k == 0 {
        return gk.clone();
    }
    let cols: Vec<Vec<f64>> = hist
        .iter()
        .take(k)
        .map(|(xj, gj)| {
            fk.iter()
                .zip(gj.iter().zip(xj))
                .map(|(f, (g, x))| f - (g - x))
                .collect()
        })
        .collect();
    let gamma = least_squares(&cols, &fk);
    let mut next = gk.clone();
    for ((_, gj), c) in hist.iter().zip(&gamma) {
        if *c != 0.0 {
            for ((n, a), b) in next.iter_mut().zip(gk).zip(gj) {
                *n -= c * (a - b);
            }
        }
    }
    next
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `argmin ‖Σ γ_j c_j − rhs‖` by modified Gram-Schmidt; columns that are
/// numerically dependent on earlier ones get `γ_j = 0`.
fn least_squares(cols: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let k = cols.len();
    let mut q: Vec<Option<Vec<f64>>> = Vec::with_capacity(k);
    let mut r = vec![vec![0.0; k]; k];
    let scale = cols.iter().map(|c| dot(c, c).sqrt()).fold(0.0, f64::max);
    for j in 0..k {
        let mut v = cols[j].clone();
        for (i, qi) in q.iter().enumerate() {
            if let Some(qi) = qi {
                let c = dot(qi, &v);
                r[i][j] = c;
                for (a, b) in v.iter_mut().zip(qi) {
                    *a -= c * b;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-12 * scale {
            r[j][j] = norm;
            v.iter_mut().for_each(|a| *a /= norm);
            q.push(Some(v));
        } else {
            q.push(None);
        }
    }
    let mut gamma = vec![0.0; k];
    for j in (0..k).rev() {
        let Some(qj) = &q[j] else { continue };
        let mut s = dot(qj, rhs);
        for l in j + 1..k {
            s -= r[j][l] * gamma[l];
        }
        gamma[j] = s / r[j][j];
    }
    gamma
}

fn make_valid(v: &mut [f64]) {
    for x in v.iter_mut() {
        *x = if x.is_finite() {
            x.clamp(0.0, 1.0)
        } else {
            0.0
        };
    }
    v[0] = 0.0;
    running_max(v);
}

/// The solved values with the init's tail beyond `x_max`. A tail-free init
/// means no mass past the grid.
fn finish(mut values: Vec<f64>, start: &GridCdf) -> Result<GridCdf, RenewalError> {
    make_valid(&mut values);
    let rate = start.tail_rate();
    if rate == 0.0 {
        *values.last_mut().expect("grid has values") = 1.0;
    }
    GridCdf::new(start.x_max(), values, rate)
}

/// Largest pairwise sup distance among `cdfs`.
pub fn spread(cdfs: &[GridCdf]) -> f64 {
    let mut s = 0.0f64;
    for (i, a) in cdfs.iter().enumerate() {
        for b in &cdfs[i + 1..] {
            s = s.max(a.sup_distance(b));
        }
    }
    s
}
