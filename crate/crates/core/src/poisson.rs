//! Poisson variates.
//!
//! Small means use inversion by sequential search. Means of 30 and above use
//! Hörmann's transformed rejection with squeeze (PTRS), whose hat is a
//! normal-like envelope corrected by an exact acceptance test.

use statrs::function::gamma::ln_gamma;

use crate::rng::Stream;

const INVERSION_LIMIT: f64 = 30.0;

/// Draws one Poisson(`mean`) variate. `mean` must be finite and ≥ 0.
pub fn sample(mean: f64, rng: &mut Stream) -> u64 {
    debug_assert!(mean.is_finite() && mean >= 0.0);
    if mean == 0.0 {
        0
    } else if mean < INVERSION_LIMIT {
        inversion(mean, rng)
    } else {
        ptrs(mean, rng)
    }
}

fn inversion(mean: f64, rng: &mut Stream) -> u64 {
    let u = rng.uniform();
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
        // Rounding can leave cdf a hair below 1.
        if p < f64::MIN_POSITIVE && k as f64 > mean {
            break;
        }
    }
    k
}

fn ptrs(mean: f64, rng: &mut Stream) -> u64 {
    let smu = mean.sqrt();
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.024_83 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    let log_mean = mean.ln();
    loop {
        let u = rng.uniform() - 0.5;
        let v = rng.uniform();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mean + k * log_mean - ln_gamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}
