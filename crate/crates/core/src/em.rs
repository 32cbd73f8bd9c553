//! Multiplicative EM for Poisson linear inverse problems.
//!
//! Detector counts `n_d` are modelled as independent Poisson variables with
//! means `(Aλ)_d = Σ_b a_bd λ_b`. The update
//!
//! ```text
//! λ'_b = (λ_b / A_b) · Σ_d a_bd · n_d / (Aλ)_d,      A_b = Σ_d a_bd
//! ```
//!
//! never decreases the log-likelihood, keeps intensities nonnegative and
//! reproduces the total count after every step. Detectors with `n_d = 0`
//! contribute nothing to the back-projection, even when `(Aλ)_d = 0`.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmError {
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error(
        "ZeroForwardProjection: detector {detector} has {count} counts but zero forward projection"
    )]
    ZeroForwardProjection { detector: usize, count: f64 },
    #[error("source {0} is not seen by any detector")]
    InvisibleSource(usize),
    #[error("invalid weight {weight} at source {source_index}, detector {detector}")]
    InvalidWeight {
        source_index: usize,
        detector: usize,
        weight: f64,
    },
    #[error("entry (source {source_index}, detector {detector}) outside a {n_sources}x{n_detectors} matrix")]
    IndexOutOfRange {
        source_index: usize,
        detector: usize,
        n_sources: usize,
        n_detectors: usize,
    },
    #[error("intensity {value} at index {index} is negative or non-finite")]
    InvalidIntensity { index: usize, value: f64 },
    #[error("count {value} at index {index} is not a nonnegative integer")]
    InvalidCount { index: usize, value: f64 },
    #[error("invalid EM configuration: {0}")]
    InvalidConfig(String),
}

/// Sparse nonnegative coupling between sources and detectors.
///
/// Stored twice, grouped by detector for forward projection and by source for
/// back-projection, so each pass is a single sweep in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrix {
    n_sources: usize,
    n_detectors: usize,
    det_ptr: Vec<usize>,
    det_src: Vec<u32>,
    det_w: Vec<f64>,
    src_ptr: Vec<usize>,
    src_det: Vec<u32>,
    src_w: Vec<f64>,
    col_sums: Vec<f64>,
}

impl SystemMatrix {
    /// Builds the matrix from `(source, detector, weight)` triplets.
    ///
    /// Zero weights are dropped and repeated coordinates are summed. Every
    /// source must end up with a positive total weight.
    pub fn from_triplets(
        n_sources: usize,
        n_detectors: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, EmError> {
        let mut entries = Vec::new();
        for (source, detector, weight) in triplets {
            if source >= n_sources || detector >= n_detectors {
                return Err(EmError::IndexOutOfRange {
                    source_index: source,
                    detector,
                    n_sources,
                    n_detectors,
                });
            }
            if !weight.is_finite() || weight < 0.0 {
                return Err(EmError::InvalidWeight {
                    source_index: source,
                    detector,
                    weight,
                });
            }
            if weight > 0.0 {
                entries.push((source as u32, detector as u32, weight));
            }
        }
        entries.sort_by_key(|&(b, d, _)| (b, d));
        entries.dedup_by(|next, kept| {
            if next.0 == kept.0 && next.1 == kept.1 {
                kept.2 += next.2;
                true
            } else {
                false
            }
        });

        let mut src_ptr = vec![0usize; n_sources + 1];
        let mut det_ptr = vec![0usize; n_detectors + 1];
        for &(b, d, _) in &entries {
            src_ptr[b as usize + 1] += 1;
            det_ptr[d as usize + 1] += 1;
        }
        for i in 0..n_sources {
            src_ptr[i + 1] += src_ptr[i];
        }
        for i in 0..n_detectors {
            det_ptr[i + 1] += det_ptr[i];
        }
        let src_det = entries.iter().map(|e| e.1).collect();
        let src_w: Vec<f64> = entries.iter().map(|e| e.2).collect();

        let mut det_src = vec![0u32; entries.len()];
        let mut det_w = vec![0.0; entries.len()];
        let mut fill = det_ptr.clone();
        // entries are source-major, so each detector row ends up sorted by source
        for &(b, d, w) in &entries {
            let slot = &mut fill[d as usize];
            det_src[*slot] = b;
            det_w[*slot] = w;
            *slot += 1;
        }

        let col_sums: Vec<f64> = (0..n_sources)
            .map(|b| src_w[src_ptr[b]..src_ptr[b + 1]].iter().sum())
            .collect();
        if let Some(b) = col_sums.iter().position(|&s| s <= 0.0) {
            return Err(EmError::InvisibleSource(b));
        }

        Ok(Self {
            n_sources,
            n_detectors,
            det_ptr,
            det_src,
            det_w,
            src_ptr,
            src_det,
            src_w,
            col_sums,
        })
    }

    /// Dense row-major `detectors × sources` input, mainly for small fixtures.
    pub fn from_dense_rows(rows: &[Vec<f64>]) -> Result<Self, EmError> {
        let n_detectors = rows.len();
        let n_sources = rows.first().map_or(0, Vec::len);
        let mut triplets = Vec::new();
        for (d, row) in rows.iter().enumerate() {
            if row.len() != n_sources {
                return Err(EmError::DimensionMismatch {
                    what: "dense row",
                    expected: n_sources,
                    got: row.len(),
                });
            }
            triplets.extend(row.iter().enumerate().map(|(b, &w)| (b, d, w)));
        }
        Self::from_triplets(n_sources, n_detectors, triplets)
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    pub fn n_detectors(&self) -> usize {
        self.n_detectors
    }

    pub fn nnz(&self) -> usize {
        self.src_w.len()
    }

    /// Per-source totals `A_b`.
    pub fn col_sums(&self) -> &[f64] {
        &self.col_sums
    }

    /// Triplets in source-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_sources).flat_map(move |b| {
            let range = self.src_ptr[b]..self.src_ptr[b + 1];
            self.src_det[range.clone()]
                .iter()
                .zip(&self.src_w[range])
                .map(move |(&d, &w)| (b, d as usize, w))
        })
    }

    /// Nonzeros of one detector row as `(source, weight)`.
    pub fn detector_row(&self, detector: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.det_ptr[detector]..self.det_ptr[detector + 1];
        self.det_src[range.clone()]
            .iter()
            .zip(&self.det_w[range])
            .map(|(&b, &w)| (b as usize, w))
    }

    /// Per-detector row sums.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_detectors)
            .map(|d| {
                self.det_w[self.det_ptr[d]..self.det_ptr[d + 1]]
                    .iter()
                    .sum()
            })
            .collect()
    }

    /// Dense `detectors × sources` copy.
    pub fn to_dense_rows(&self) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; self.n_sources]; self.n_detectors];
        for (b, d, w) in self.entries() {
            rows[d][b] = w;
        }
        rows
    }

    /// `Ax`: one value per detector.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, EmError> {
        check_len("source vector", self.n_sources, x.len())?;
        Ok((0..self.n_detectors)
            .map(|d| {
                let range = self.det_ptr[d]..self.det_ptr[d + 1];
                self.det_src[range.clone()]
                    .iter()
                    .zip(&self.det_w[range])
                    .map(|(&b, &w)| w * x[b as usize])
                    .sum()
            })
            .collect())
    }

    /// `Aᵀy`: one value per source.
    pub fn back(&self, y: &[f64]) -> Result<Vec<f64>, EmError> {
        check_len("detector vector", self.n_detectors, y.len())?;
        Ok((0..self.n_sources)
            .map(|b| {
                let range = self.src_ptr[b]..self.src_ptr[b + 1];
                self.src_det[range.clone()]
                    .iter()
                    .zip(&self.src_w[range])
                    .map(|(&d, &w)| w * y[d as usize])
                    .sum()
            })
            .collect())
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), EmError> {
    if expected == got {
        Ok(())
    } else {
        Err(EmError::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}

/// Nonnegative per-source rates.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityVector(Vec<f64>);

impl IntensityVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EmError> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(EmError::InvalidIntensity { index, value });
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Observed data per detector.
///
/// Normally nonnegative integers. [`CountVector::relaxed`] admits arbitrary
/// nonnegative reals so noiseless (expected-value) data can be fed to the
/// same solver; the update and likelihood are well defined for both.
#[derive(Debug, Clone, PartialEq)]
pub struct CountVector(Vec<f64>);

impl CountVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EmError> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0 || v.fract() != 0.0)
        {
            return Err(EmError::InvalidCount { index, value });
        }
        Ok(Self(values))
    }

    pub fn from_counts(counts: &[u64]) -> Self {
        Self(counts.iter().map(|&c| c as f64).collect())
    }

    pub fn relaxed(values: Vec<f64>) -> Result<Self, EmError> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(EmError::InvalidCount { index, value });
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmInit {
    /// `λ⁰_b = Σ_d n_d / Σ_b A_b` for every source.
    Uniform,
    Supplied(IntensityVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub max_iters: usize,
    /// Stop once `(ℓ_new − ℓ_old) ≤ rel_ll_tol · |ℓ_old|`.
    pub rel_ll_tol: f64,
    pub init: EmInit,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            rel_ll_tol: 1e-8,
            init: EmInit::Uniform,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<(), EmError> {
        if self.max_iters < 1 {
            return Err(EmError::InvalidConfig(
                "max_iters must be at least 1".into(),
            ));
        }
        if self.rel_ll_tol.is_nan() || self.rel_ll_tol < 0.0 {
            return Err(EmError::InvalidConfig(format!(
                "rel_ll_tol must be nonnegative, got {}",
                self.rel_ll_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmOutcome {
    /// Last iterate.
    pub estimate: IntensityVector,
    /// Log-likelihood of the initial point followed by one value per step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// True when the relative-improvement rule stopped the run.
    pub converged: bool,
}

fn check_problem(a: &SystemMatrix, n: &CountVector) -> Result<(), EmError> {
    check_len("count vector", a.n_detectors(), n.len())
}

/// One multiplicative EM update.
pub fn em_step(
    lambda: &IntensityVector,
    a: &SystemMatrix,
    n: &CountVector,
) -> Result<IntensityVector, EmError> {
    check_problem(a, n)?;
    check_len("intensity vector", a.n_sources(), lambda.len())?;
    let expected = a.forward(lambda.as_slice())?;
    let mut ratio = vec![0.0; expected.len()];
    for (d, (&count, &mean)) in n.as_slice().iter().zip(&expected).enumerate() {
        if count > 0.0 {
            if mean <= 0.0 {
                return Err(EmError::ZeroForwardProjection { detector: d, count });
            }
            ratio[d] = count / mean;
        }
    }
    let back = a.back(&ratio)?;
    let next = lambda
        .as_slice()
        .iter()
        .zip(&back)
        .zip(a.col_sums())
        .map(|((&l, &g), &s)| l * g / s)
        .collect();
    Ok(IntensityVector(next))
}

/// Poisson log-likelihood without the `−log n_d!` constant.
///
/// Returns `−∞` when a detector with counts has zero expected value.
pub fn log_likelihood(
    lambda: &IntensityVector,
    a: &SystemMatrix,
    n: &CountVector,
) -> Result<f64, EmError> {
    check_problem(a, n)?;
    let expected = a.forward(lambda.as_slice())?;
    Ok(poisson_log_likelihood(n.as_slice(), &expected))
}

pub(crate) fn poisson_log_likelihood(counts: &[f64], expected: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&count, &mean) in counts.iter().zip(expected) {
        if count > 0.0 {
            if mean <= 0.0 {
                return f64::NEG_INFINITY;
            }
            total += count * mean.ln();
        }
        total -= mean;
    }
    total
}

/// `KL(n‖m) = Σ_d [n_d log(n_d/m_d) − n_d + m_d]`; `+∞` if some `n_d > 0`
/// meets `m_d = 0`.
pub fn kl_divergence(n: &CountVector, m: &[f64]) -> Result<f64, EmError> {
    check_len("expected-count vector", n.len(), m.len())?;
    let mut total = 0.0;
    for (&count, &mean) in n.as_slice().iter().zip(m) {
        if count > 0.0 {
            if mean <= 0.0 {
                return Ok(f64::INFINITY);
            }
            total += count * (count / mean).ln() - count;
        }
        total += mean;
    }
    Ok(total)
}

/// Iterates [`em_step`] until the relative log-likelihood gain falls below
/// `cfg.rel_ll_tol` or `cfg.max_iters` steps have run.
pub fn run_em(a: &SystemMatrix, n: &CountVector, cfg: &EmConfig) -> Result<EmOutcome, EmError> {
    cfg.validate()?;
    check_problem(a, n)?;
    let mut lambda = match &cfg.init {
        EmInit::Uniform => {
            let total_weight: f64 = a.col_sums().iter().sum();
            IntensityVector(vec![n.total() / total_weight; a.n_sources()])
        }
        EmInit::Supplied(v) => {
            check_len("initial intensity", a.n_sources(), v.len())?;
            v.clone()
        }
    };
    let mut trace = vec![log_likelihood(&lambda, a, n)?];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        lambda = em_step(&lambda, a, n)?;
        iterations += 1;
        let ll = log_likelihood(&lambda, a, n)?;
        let prev = *trace.last().expect("trace starts non-empty");
        trace.push(ll);
        if prev.is_finite() && ll - prev <= cfg.rel_ll_tol * prev.abs() {
            converged = true;
            break;
        }
    }
    Ok(EmOutcome {
        estimate: lambda,
        trace,
        iterations,
        converged,
    })
}
