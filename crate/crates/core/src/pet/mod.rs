//! Emission tomography front-end: phantoms, a parallel-beam system matrix,
//! Poisson sinograms and EM reconstruction.

mod geometry;
mod phantom;

pub use geometry::{
    bin_center, build_system_matrix, ray_weights, DetectorGeometry, GridSpec, Weighting,
};
pub use phantom::{make_phantom, pixel_center, shepp_logan, Ellipse, Phantom};

use thiserror::Error;

use crate::em::{run_em, CountVector, EmConfig, EmError, EmOutcome, SystemMatrix};
use crate::poisson;
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PetError {
    #[error("EmptyGrid: phantom grid needs at least one pixel in each direction")]
    EmptyGrid,
    #[error("grid has {got} values, expected {expected}")]
    GridSize { expected: usize, got: usize },
    #[error("phantom intensities must be finite and nonnegative")]
    NegativeIntensity,
    #[error("invalid detector geometry: {0}")]
    InvalidGeometry(String),
    #[error("PixelOutsideFOV: pixel (col {col}, row {row}) is missed by every tube")]
    PixelOutsideFov { col: usize, row: usize },
    #[error("NegativeMean: expected count {value} at detector {index}")]
    NegativeMean { index: usize, value: f64 },
    #[error("sinogram is {angles}x{bins} but the matrix has {detectors} detectors")]
    SinogramShape {
        angles: usize,
        bins: usize,
        detectors: usize,
    },
    #[error(transparent)]
    Em(#[from] EmError),
}

/// Counts indexed by `(angle, bin)`, stored angle-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub n_angles: usize,
    pub n_bins: usize,
    pub counts: Vec<u64>,
    pub expected: Option<Vec<f64>>,
}

impl Sinogram {
    pub fn new(n_angles: usize, n_bins: usize, counts: Vec<u64>) -> Result<Self, PetError> {
        if counts.len() != n_angles * n_bins {
            return Err(PetError::GridSize {
                expected: n_angles * n_bins,
                got: counts.len(),
            });
        }
        Ok(Self {
            n_angles,
            n_bins,
            counts,
            expected: None,
        })
    }

    pub fn count(&self, angle: usize, bin: usize) -> u64 {
        self.counts[angle * self.n_bins + bin]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Expected detector counts `Aλ` for the phantom's grid.
pub fn forward_project(phantom: &Phantom, a: &SystemMatrix) -> Result<Vec<f64>, PetError> {
    Ok(a.forward(&phantom.grid)?)
}

/// Independent Poisson draws, one per detector. Detector `d` uses substream
/// `(seed, d)`, so the result does not depend on evaluation order.
pub fn sample_counts(expected: &[f64], seed: u64) -> Result<Vec<u64>, PetError> {
    if let Some((index, &value)) = expected
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < 0.0)
    {
        return Err(PetError::NegativeMean { index, value });
    }
    Ok(expected
        .iter()
        .enumerate()
        .map(|(d, &mean)| poisson::sample(mean, &mut Stream::substream(seed, d as u64)))
        .collect())
}

/// Forward-projects the phantom and samples a noisy sinogram, keeping the
/// expected values.
pub fn simulate_sinogram(
    phantom: &Phantom,
    geom: &DetectorGeometry,
    a: &SystemMatrix,
    seed: u64,
) -> Result<Sinogram, PetError> {
    let expected = forward_project(phantom, a)?;
    if expected.len() != geom.n_detectors() {
        return Err(PetError::SinogramShape {
            angles: geom.n_angles,
            bins: geom.n_bins,
            detectors: expected.len(),
        });
    }
    let counts = sample_counts(&expected, seed)?;
    Ok(Sinogram {
        n_angles: geom.n_angles,
        n_bins: geom.n_bins,
        counts,
        expected: Some(expected),
    })
}

/// Maximum-likelihood reconstruction of the sinogram's counts. The returned
/// trace lets callers inspect late iterations for over-fitting.
pub fn reconstruct_pet(
    sino: &Sinogram,
    a: &SystemMatrix,
    cfg: &EmConfig,
) -> Result<EmOutcome, PetError> {
    if sino.counts.len() != a.n_detectors() {
        return Err(PetError::SinogramShape {
            angles: sino.n_angles,
            bins: sino.n_bins,
            detectors: a.n_detectors(),
        });
    }
    Ok(run_em(a, &CountVector::from_counts(&sino.counts), cfg)?)
}

/// `‖x − truth‖₂ / ‖truth‖₂`.
pub fn normalized_rmse(estimate: &[f64], truth: &[f64]) -> f64 {
    let num: f64 = estimate
        .iter()
        .zip(truth)
        .map(|(e, t)| (e - t).powi(2))
        .sum();
    let den: f64 = truth.iter().map(|t| t * t).sum();
    (num / den).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_mean_rejected() {
        assert_eq!(
            sample_counts(&[1.0, -0.5], 1).unwrap_err(),
            PetError::NegativeMean {
                index: 1,
                value: -0.5
            }
        );
    }

    #[test]
    fn zero_mean_zero_counts() {
        assert_eq!(sample_counts(&[0.0; 5], 99).unwrap(), vec![0; 5]);
    }

    #[test]
    fn sampling_is_seeded() {
        let means = [3.0, 50.0, 0.2, 1000.0];
        assert_eq!(
            sample_counts(&means, 4).unwrap(),
            sample_counts(&means, 4).unwrap()
        );
        assert_ne!(
            sample_counts(&means, 4).unwrap(),
            sample_counts(&means, 5).unwrap()
        );
    }

    #[test]
    fn sinogram_shape_checked() {
        assert!(Sinogram::new(2, 3, vec![0; 5]).is_err());
        let s = Sinogram::new(2, 3, (0..6).collect()).unwrap();
        assert_eq!(s.count(1, 0), 3);
        assert_eq!(s.total(), 15);
    }

    #[test]
    fn zero_sinogram_reconstructs_to_zero() {
        let geom = DetectorGeometry::new(4, 6);
        let a = build_system_matrix(&geom, 3, 3, 1.0).unwrap();
        let sino = Sinogram::new(4, 6, vec![0; 24]).unwrap();
        let out = reconstruct_pet(&sino, &a, &EmConfig::default()).unwrap();
        assert!(out.estimate.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_pixel_closed_form() {
        let a = build_system_matrix(&DetectorGeometry::new(1, 1), 1, 1, 2.0).unwrap();
        let sino = Sinogram::new(1, 1, vec![7]).unwrap();
        let out = reconstruct_pet(&sino, &a, &EmConfig::default()).unwrap();
        assert_eq!(out.estimate.as_slice(), &[3.5]);
    }
}
