//! One-sided tangent distance.
//!
//! A test glyph `o` and its seven deformed copies `t_i(o)` span the affine
//! set `o + span{t_i(o) − o}`. A training glyph `x` is scored by the length
//! of the perpendicular from `x` to that set. The set is built once per test
//! glyph; scoring a training glyph then needs `k + 1` inner products with
//! cached quantities instead of a fresh least-squares solve.

use rayon::prelude::*;

use super::image::{apply_transform, GlyphImage, TransformId};
use super::{Classification, LabeledCorpus, OcrError};

/// Relative norm below which a direction is treated as dependent.
pub const DROP_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TangentConfig {
    /// Strength for thicken, rotate (radians), scale and shears.
    pub epsilon: f64,
    /// Translation step in pixels.
    pub translate_px: f64,
    /// Order in which directions enter Gram–Schmidt.
    pub order: Vec<TransformId>,
}

impl Default for TangentConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            translate_px: 1.0,
            order: TransformId::ALL.to_vec(),
        }
    }
}

impl TangentConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }
}

/// Orthonormal basis of the affine tangent set.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentBasis {
    origin: Vec<f64>,
    directions: Vec<Vec<f64>>,
    // un-orthogonalised vectors that survived the drop rule, for the naive solver
    raw: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl TangentBasis {
    /// Orthonormalises `raw` by modified Gram–Schmidt with one
    /// re-orthogonalisation pass. Vectors whose residual norm falls below
    /// `DROP_TOLERANCE` times the largest input norm are dropped.
    pub fn from_directions(origin: Vec<f64>, raw: Vec<Vec<f64>>) -> Result<Self, OcrError> {
        let dim = origin.len();
        for v in &raw {
            if v.len() != dim {
                return Err(OcrError::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
        }
        if let Some(index) = origin
            .iter()
            .chain(raw.iter().flatten())
            .position(|v| !v.is_finite())
        {
            return Err(OcrError::NonFinite { index });
        }
        let max_norm = raw.iter().map(|v| dot(v, v).sqrt()).fold(0.0, f64::max);
        let mut directions: Vec<Vec<f64>> = Vec::new();
        let mut kept = Vec::new();
        if max_norm > 0.0 {
            for v in raw {
                let mut w = v.clone();
                for _ in 0..2 {
                    for q in &directions {
                        let c = dot(q, &w);
                        for (wi, qi) in w.iter_mut().zip(q) {
                            *wi -= c * qi;
                        }
                    }
                }
                let norm = dot(&w, &w).sqrt();
                if norm >= DROP_TOLERANCE * max_norm {
                    for wi in &mut w {
                        *wi /= norm;
                    }
                    directions.push(w);
                    kept.push(v);
                }
            }
        }
        Ok(Self {
            origin,
            directions,
            raw: kept,
        })
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    /// Number of retained directions.
    pub fn k(&self) -> usize {
        self.directions.len()
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    /// Basis restricted to its first `j` directions.
    pub fn truncated(&self, j: usize) -> Self {
        let j = j.min(self.k());
        Self {
            origin: self.origin.clone(),
            directions: self.directions[..j].to_vec(),
            raw: self.raw[..j].to_vec(),
        }
    }
}

/// Tangent set of `img`: directions `t_i(img) − img` in `cfg.order`.
pub fn build_tangent_subspace(
    img: &GlyphImage,
    cfg: &TangentConfig,
) -> Result<TangentBasis, OcrError> {
    if !(cfg.epsilon > 0.0 && cfg.epsilon <= 0.5) {
        return Err(OcrError::InvalidEpsilon(cfg.epsilon));
    }
    if !(cfg.translate_px > 0.0 && cfg.translate_px <= 1.0) {
        return Err(OcrError::InvalidEpsilon(cfg.translate_px));
    }
    let mut raw = Vec::with_capacity(cfg.order.len());
    for &t in &cfg.order {
        let eps = if t.is_translation() {
            cfg.translate_px
        } else {
            cfg.epsilon
        };
        let moved = apply_transform(img, t, eps)?;
        raw.push(
            moved
                .pixels()
                .iter()
                .zip(img.pixels())
                .map(|(a, b)| a - b)
                .collect(),
        );
    }
    TangentBasis::from_directions(img.pixels().to_vec(), raw)
}

/// `‖(x − o) − QQᵀ(x − o)‖₂`, the perpendicular from `x` to the affine set.
pub fn distance_to_subspace(x: &[f64], basis: &TangentBasis) -> Result<f64, OcrError> {
    if x.len() != basis.dim() {
        return Err(OcrError::DimensionMismatch {
            expected: basis.dim(),
            got: x.len(),
        });
    }
    if let Some(index) = x.iter().position(|v| !v.is_finite()) {
        return Err(OcrError::NonFinite { index });
    }
    Ok(explicit_residual(x, basis))
}

fn explicit_residual(x: &[f64], basis: &TangentBasis) -> f64 {
    let mut r: Vec<f64> = x.iter().zip(&basis.origin).map(|(a, b)| a - b).collect();
    let coeffs: Vec<f64> = basis.directions.iter().map(|q| dot(q, &r)).collect();
    for (q, c) in basis.directions.iter().zip(coeffs) {
        for (ri, qi) in r.iter_mut().zip(q) {
            *ri -= c * qi;
        }
    }
    dot(&r, &r).sqrt()
}

/// Basis plus the inner products that do not depend on the training glyph.
#[derive(Debug, Clone)]
pub struct ProjectionQuery {
    basis: TangentBasis,
    origin_sq: f64,
    q_dot_origin: Vec<f64>,
}

impl ProjectionQuery {
    pub fn new(basis: TangentBasis) -> Self {
        let origin_sq = dot(&basis.origin, &basis.origin);
        let q_dot_origin = basis
            .directions
            .iter()
            .map(|q| dot(q, &basis.origin))
            .collect();
        Self {
            basis,
            origin_sq,
            q_dot_origin,
        }
    }

    pub fn basis(&self) -> &TangentBasis {
        &self.basis
    }

    /// Perpendicular length using `‖x‖²` supplied by the caller.
    ///
    /// Expands `‖x − o‖² − Σ (qᵢ·(x − o))²`; when that is tiny relative to
    /// `‖x‖² + ‖o‖²` the cancellation is too lossy and the residual is formed
    /// explicitly instead.
    pub fn distance(&self, x: &[f64], x_norm_sq: f64) -> f64 {
        let cross = dot(x, &self.basis.origin);
        let mut d2 = x_norm_sq - 2.0 * cross + self.origin_sq;
        for (q, qo) in self.basis.directions.iter().zip(&self.q_dot_origin) {
            let c = dot(q, x) - qo;
            d2 -= c * c;
        }
        if d2 < 1e-6 * (x_norm_sq + self.origin_sq) {
            explicit_residual(x, &self.basis)
        } else {
            d2.sqrt()
        }
    }
}

/// Perpendicular length by a fresh Householder least-squares solve on the
/// raw (non-orthogonalised) directions. This is the slow path the cached
/// query replaces; kept for comparison.
pub fn naive_distance(x: &[f64], basis: &TangentBasis) -> f64 {
    let m = basis.dim();
    let k = basis.raw.len();
    let mut cols: Vec<Vec<f64>> = basis.raw.clone();
    let mut rhs: Vec<f64> = x.iter().zip(&basis.origin).map(|(a, b)| a - b).collect();
    for j in 0..k {
        let norm = cols[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if cols[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = cols[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|a| a * a).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        let reflect = |target: &mut [f64]| {
            let s = 2.0 * dot(&v, &target[j..]) / vnorm_sq;
            for (t, vi) in target[j..].iter_mut().zip(&v) {
                *t -= s * vi;
            }
        };
        for col in cols.iter_mut().skip(j) {
            reflect(col);
        }
        reflect(&mut rhs);
    }
    rhs[k.min(m)..].iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn argmin(distances: impl IntoIterator<Item = f64>) -> Option<(usize, f64)> {
    distances
        .into_iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
}

fn finish(corpus: &LabeledCorpus, distances: Vec<f64>) -> Classification {
    let (index, distance) = argmin(distances).expect("corpus is non-empty");
    Classification {
        label: corpus.label(index),
        distance,
        index,
    }
}

/// Labels `test` by the training glyph closest to its tangent set. Ties go to
/// the lowest corpus index.
pub fn classify_tangent(
    test: &GlyphImage,
    corpus: &LabeledCorpus,
    cfg: &TangentConfig,
) -> Result<Classification, OcrError> {
    let query = ProjectionQuery::new(build_tangent_subspace(test, cfg)?);
    Ok(classify_with_query(&query, corpus))
}

pub fn classify_with_query(query: &ProjectionQuery, corpus: &LabeledCorpus) -> Classification {
    let distances = (0..corpus.len())
        .into_par_iter()
        .map(|i| query.distance(corpus.image(i).pixels(), corpus.norm_sq(i)))
        .collect();
    finish(corpus, distances)
}

/// Same decision rule as [`classify_tangent`], solving a least-squares
/// problem from scratch for every training glyph.
pub fn classify_tangent_naive(
    test: &GlyphImage,
    corpus: &LabeledCorpus,
    cfg: &TangentConfig,
) -> Result<Classification, OcrError> {
    let basis = build_tangent_subspace(test, cfg)?;
    let distances = (0..corpus.len())
        .into_par_iter()
        .map(|i| naive_distance(corpus.image(i).pixels(), &basis))
        .collect();
    Ok(finish(corpus, distances))
}

/// Plain Euclidean nearest neighbour.
pub fn classify_l2_baseline(test: &GlyphImage, corpus: &LabeledCorpus) -> Classification {
    let t = test.pixels();
    let t_sq = dot(t, t);
    let distances = (0..corpus.len())
        .into_par_iter()
        .map(|i| {
            let x = corpus.image(i).pixels();
            let d2 = corpus.norm_sq(i) - 2.0 * dot(x, t) + t_sq;
            if d2 < 1e-6 * (corpus.norm_sq(i) + t_sq) {
                x.iter()
                    .zip(t)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            } else {
                d2.sqrt()
            }
        })
        .collect();
    finish(corpus, distances)
}
