use super::{length_biased_cdf, GridCdf, RenewalError};
use crate::rng::Stream;

/// Histogram bins covering `[0, x_max]`; larger draws land in `overflow`.
const HIST_BINS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    /// Lifetimes drawn from `F` itself.
    Plain,
    /// Lifetimes seen by an inspector arriving at a random time: density
    /// proportional to `t·dF(t)`.
    LengthBiased,
}

impl SampleMode {
    pub fn name(self) -> &'static str {
        match self {
            SampleMode::Plain => "plain",
            SampleMode::LengthBiased => "length_biased",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasStats {
    pub mode: SampleMode,
    pub count: usize,
    pub mean: f64,
    pub bin_width: f64,
    pub histogram: Vec<u64>,
    pub overflow: u64,
}

/// Inverse-cdf sampling of `n` lifetimes from one seeded stream.
pub fn bias_sim(
    f: &GridCdf,
    n: usize,
    mode: SampleMode,
    seed: u64,
) -> Result<BiasStats, RenewalError> {
    if n == 0 {
        return Err(RenewalError::EmptySample);
    }
    let biased;
    let source = match mode {
        SampleMode::Plain => f,
        SampleMode::LengthBiased => {
            biased = length_biased_cdf(f)?;
            &biased
        }
    };
    let bin_width = f.x_max() / HIST_BINS as f64;
    let mut histogram = vec![0u64; HIST_BINS];
    let mut overflow = 0;
    let mut sum = 0.0;
    let mut rng = Stream::new(seed);
    for _ in 0..n {
        let x = source.quantile(rng.uniform());
        sum += x;
        let bin = (x / bin_width) as usize;
        match histogram.get_mut(bin) {
            Some(c) => *c += 1,
            None => overflow += 1,
        }
    }
    Ok(BiasStats {
        mode,
        count: n,
        mean: sum / n as f64,
        bin_width,
        histogram,
        overflow,
    })
}
