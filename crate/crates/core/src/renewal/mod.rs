//! Residual-lifetime and length-biased sampling on grid cdfs.
//!
//! The residual lifetime of a renewal process observed at a random time has
//! the equilibrium cdf `G(x) = (1/μ)∫₀ˣ (1 − F(t)) dt`. The scaling class
//! `C_q` holds the lifetime cdfs with `G(x) = F(qx)`; it contains only the
//! exponentials when `q = 1`. [`solve_cq`] builds members numerically.

mod grid;
mod sim;
mod solve;

use thiserror::Error;

pub use grid::{Family, GridCdf, DEFAULT_N, DEFAULT_X_MAX};
pub use sim::{bias_sim, BiasStats, SampleMode};
pub use solve::{
    solve_cq, spread, working_mean, ScalingReport, SolveConfig, CONVERGED_CHANGE, CONVERGED_DEFECT,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenewalError {
    #[error("InfiniteMean: cdf has mass beyond the grid and no decaying tail")]
    InfiniteMean,
    #[error("QOutOfRange: q = {0} > 1, where the scaling class is empty")]
    QOutOfRange(f64),
    #[error("q must be positive and finite, got {0}")]
    InvalidQ(f64),
    #[error("damping must lie in (0, 1], got {0}")]
    InvalidDamping(f64),
    #[error("NotConverged after {} iterations (defect {:e})", .best.1.iterations, .best.1.defect)]
    NotConverged { best: Box<(GridCdf, ScalingReport)> },
    #[error("invalid cdf at grid index {index}: {reason}")]
    InvalidCdf { index: usize, reason: &'static str },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("UnknownFamily: {0:?}")]
    UnknownFamily(String),
    #[error("sample size must be at least 1")]
    EmptySample,
}

/// Equilibrium (stationary residual-life) cdf `G(x) = (1/μ)∫₀ˣ (1 − F)`.
/// Shares `F`'s tail rate, which is exact for an exponential tail.
pub fn residual_cdf(f: &GridCdf) -> Result<GridCdf, RenewalError> {
    let mu = f.mean()?;
    let values: Vec<f64> = f
        .survival_integrals()
        .into_iter()
        .map(|v| (v / mu).min(1.0))
        .collect();
    GridCdf::new(f.x_max(), values, f.tail_rate())
}

/// Length-biased cdf `G(x) = (1/μ)∫₀ˣ t dF(t)`. Exact for the piecewise
/// linear `F`; the tail keeps `F`'s rate.
pub fn length_biased_cdf(f: &GridCdf) -> Result<GridCdf, RenewalError> {
    let mu = f.mean()?;
    let v = f.values();
    let dx = f.dx();
    let mut acc = 0.0;
    let mut values = Vec::with_capacity(v.len());
    values.push(0.0);
    for (i, w) in v.windows(2).enumerate() {
        acc += (w[1] - w[0]) * (i as f64 + 0.5) * dx;
        values.push((acc / mu).min(1.0));
    }
    if f.tail_mass() == 0.0 {
        // all mass is on the grid; the quotient above only misses 1 by rounding
        *values.last_mut().expect("grid has values") = 1.0;
    }
    GridCdf::new(f.x_max(), values, f.tail_rate())
}

/// `sup_i |G_F(x_i) − F(q·x_i)|` over the grid.
pub fn scaling_defect(f: &GridCdf, q: f64) -> Result<f64, RenewalError> {
    check_q(q)?;
    let g = residual_cdf(f)?;
    Ok(defect_against(f, &g, q))
}

fn defect_against(f: &GridCdf, g: &GridCdf, q: f64) -> f64 {
    g.values()
        .iter()
        .enumerate()
        .map(|(i, gi)| (gi - f.eval(q * f.x(i))).abs())
        .fold(0.0, f64::max)
}

fn check_q(q: f64) -> Result<(), RenewalError> {
    if q.is_finite() && q > 0.0 {
        Ok(())
    } else {
        Err(RenewalError::InvalidQ(q))
    }
}
