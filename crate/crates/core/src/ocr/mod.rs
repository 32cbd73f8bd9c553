//! Handwritten-digit classification by tangent distance, with a plain L2
//! nearest-neighbour baseline and a synthetic digit corpus.
//!
//! The seven deformations are thickening, rotation, translation in x and y,
//! isotropic scaling and the two shears. Only the test glyph carries a
//! tangent set; training glyphs stay points.

mod glyphs;
mod image;
mod tangent;

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

pub use glyphs::{gen_synthetic_glyphs, jittered_glyph, template_image, Jitter};
pub use image::{apply_transform, GlyphImage, TransformId, PIXELS, SIDE};
pub use tangent::{
    build_tangent_subspace, classify_l2_baseline, classify_tangent, classify_tangent_naive,
    classify_with_query, distance_to_subspace, naive_distance, ProjectionQuery, TangentBasis,
    TangentConfig, DROP_TOLERANCE,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OcrError {
    #[error("UnknownTransform: {0:?}")]
    UnknownTransform(String),
    #[error("epsilon {0} outside the allowed range")]
    InvalidEpsilon(f64),
    #[error("image has {0} pixels, expected 256")]
    ImageSize(usize),
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("label {label} at item {index} is not a digit")]
    BadLabel { index: usize, label: u8 },
    #[error("invalid jitter {0}")]
    InvalidJitter(String),
}

/// Result of a nearest-neighbour search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub label: u8,
    pub distance: f64,
    /// Corpus index of the winning training glyph.
    pub index: usize,
}

/// Labelled glyphs with cached squared norms.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCorpus {
    images: Vec<GlyphImage>,
    labels: Vec<u8>,
    norms_sq: Vec<f64>,
}

impl LabeledCorpus {
    pub fn new(items: Vec<(GlyphImage, u8)>) -> Result<Self, OcrError> {
        if items.is_empty() {
            return Err(OcrError::EmptyCorpus);
        }
        if let Some((index, &(_, label))) = items.iter().enumerate().find(|(_, (_, l))| *l > 9) {
            return Err(OcrError::BadLabel { index, label });
        }
        let (images, labels): (Vec<_>, Vec<_>) = items.into_iter().unzip();
        let norms_sq = images
            .iter()
            .map(|img: &GlyphImage| img.pixels().iter().map(|v| v * v).sum())
            .collect();
        Ok(Self {
            images,
            labels,
            norms_sq,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image(&self, i: usize) -> &GlyphImage {
        &self.images[i]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn norm_sq(&self, i: usize) -> f64 {
        self.norms_sq[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GlyphImage, u8)> {
        self.images.iter().zip(self.labels.iter().copied())
    }

    /// First `n` items and the rest.
    pub fn split_at(&self, n: usize) -> Result<(Self, Self), OcrError> {
        let items: Vec<(GlyphImage, u8)> = self.iter().map(|(i, l)| (i.clone(), l)).collect();
        let (head, tail) = items.split_at(n.min(items.len()));
        Ok((Self::new(head.to_vec())?, Self::new(tail.to_vec())?))
    }

    /// Mean image of every label that occurs.
    pub fn class_means(&self) -> Vec<(u8, Vec<f64>)> {
        (0..10u8)
            .filter_map(|label| {
                let members: Vec<&GlyphImage> = self
                    .iter()
                    .filter(|(_, l)| *l == label)
                    .map(|(img, _)| img)
                    .collect();
                if members.is_empty() {
                    return None;
                }
                let mut mean = vec![0.0; PIXELS];
                for img in &members {
                    for (m, v) in mean.iter_mut().zip(img.pixels()) {
                        *m += v;
                    }
                }
                for m in &mut mean {
                    *m /= members.len() as f64;
                }
                Some((label, mean))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Tangent,
    L2,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Tangent => "tangent",
            Method::L2 => "l2",
        }
    }
}

/// One row of the benchmark report.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub n_train: usize,
    pub n_test: usize,
    pub errors: usize,
    pub error_rate: f64,
    pub wall_ms: u128,
}

/// Classifies every test glyph with both methods and counts mistakes.
pub fn run_benchmark(
    train: &LabeledCorpus,
    test: &LabeledCorpus,
    cfg: &TangentConfig,
) -> Result<Vec<BenchRow>, OcrError> {
    let mut rows = Vec::new();
    for method in [Method::Tangent, Method::L2] {
        let start = Instant::now();
        let predictions = (0..test.len())
            .into_par_iter()
            .map(|i| match method {
                Method::Tangent => classify_tangent(test.image(i), train, cfg),
                Method::L2 => Ok(classify_l2_baseline(test.image(i), train)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let wall_ms = start.elapsed().as_millis();
        let errors = predictions
            .iter()
            .enumerate()
            .filter(|(i, p)| p.label != test.label(*i))
            .count();
        rows.push(BenchRow {
            method,
            n_train: train.len(),
            n_test: test.len(),
            errors,
            error_rate: errors as f64 / test.len() as f64,
            wall_ms,
        });
    }
    Ok(rows)
}

/// Train/test split drawn from one synthetic corpus: the first `n_train`
/// interleaved items train, the next `n_test` test.
pub fn synthetic_split(
    n_train: usize,
    n_test: usize,
    jitter: &Jitter,
    seed: u64,
) -> Result<(LabeledCorpus, LabeledCorpus), OcrError> {
    if n_train == 0 || n_test == 0 {
        return Err(OcrError::EmptyCorpus);
    }
    let per_class = (n_train + n_test).div_ceil(10);
    let all = gen_synthetic_glyphs(per_class, jitter, seed)?;
    let items: Vec<(GlyphImage, u8)> = all.iter().map(|(i, l)| (i.clone(), l)).collect();
    let test = items[n_train..n_train + n_test].to_vec();
    let mut train = items;
    train.truncate(n_train);
    Ok((LabeledCorpus::new(train)?, LabeledCorpus::new(test)?))
}
