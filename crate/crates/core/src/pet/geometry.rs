//! Parallel-beam system matrix.
//!
//! The grid is centred on the origin with physical pixel centres at
//! `x = (col + ½ − W/2)·s`, `y = (row + ½ − H/2)·s`. Angle `k` of `n_angles`
//! is `θ = kπ/n_angles`; its rays run along `(cos θ, sin θ)` and are offset by
//! `t` along the normal `(−sin θ, cos θ)`. Bins tile `[−R, R]` where `R` is the
//! radius of the grid's circumscribed circle. Detector `d = k·n_bins + m`.

use rayon::prelude::*;

use super::PetError;
use crate::em::SystemMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Exact chord length of the bin's central ray through each pixel.
    #[default]
    LineLength,
    /// Pixel area inside the strip, estimated from a 4×4 point lattice and
    /// divided by the bin width so weights stay in length units.
    StripArea,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorGeometry {
    pub n_angles: usize,
    pub n_bins: usize,
    pub weighting: Weighting,
}

impl DetectorGeometry {
    pub fn new(n_angles: usize, n_bins: usize) -> Self {
        Self {
            n_angles,
            n_bins,
            weighting: Weighting::LineLength,
        }
    }

    pub fn with_weighting(mut self, weighting: Weighting) -> Self {
        self.weighting = weighting;
        self
    }

    pub fn n_detectors(&self) -> usize {
        self.n_angles * self.n_bins
    }

    pub fn angle(&self, k: usize) -> f64 {
        k as f64 * std::f64::consts::PI / self.n_angles as f64
    }

    fn validate(&self) -> Result<(), PetError> {
        if self.n_angles == 0 || self.n_bins == 0 {
            return Err(PetError::InvalidGeometry(format!(
                "need at least one angle and one bin, got {}x{}",
                self.n_angles, self.n_bins
            )));
        }
        Ok(())
    }
}

/// Grid extent in physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub pixel_size: f64,
}

impl GridSpec {
    pub fn fov_radius(&self) -> f64 {
        let w = self.width as f64 * self.pixel_size;
        let h = self.height as f64 * self.pixel_size;
        0.5 * (w * w + h * h).sqrt()
    }

    fn x_min(&self) -> f64 {
        -(self.width as f64) * self.pixel_size / 2.0
    }

    fn y_min(&self) -> f64 {
        -(self.height as f64) * self.pixel_size / 2.0
    }
}

/// `(sin θ, cos θ)` with values below 1e-15 snapped to zero, so axis-aligned
/// angles trace exactly axis-aligned rays.
fn direction(theta: f64) -> (f64, f64) {
    let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
    let (s, c) = theta.sin_cos();
    (snap(s), snap(c))
}

/// Pixels crossed by the line at angle `theta` and normal offset `offset`,
/// with intersection lengths. Pixels are listed in traversal order.
pub fn ray_weights(theta: f64, offset: f64, grid: &GridSpec) -> Vec<(usize, f64)> {
    let (s, c) = direction(theta);
    let (ux, uy) = (c, s);
    let (px, py) = (-s * offset, c * offset);
    let size = grid.pixel_size;
    let (x0, y0) = (grid.x_min(), grid.y_min());
    let (x1, y1) = (-x0, -y0);

    // slab clipping against the grid box
    let mut t_lo = f64::NEG_INFINITY;
    let mut t_hi = f64::INFINITY;
    for (p, u, lo, hi) in [(px, ux, x0, x1), (py, uy, y0, y1)] {
        if u == 0.0 {
            if p < lo || p > hi {
                return Vec::new();
            }
        } else {
            let (a, b) = ((lo - p) / u, (hi - p) / u);
            t_lo = t_lo.max(a.min(b));
            t_hi = t_hi.min(a.max(b));
        }
    }
    if t_hi <= t_lo {
        return Vec::new();
    }

    let mut cuts = vec![t_lo, t_hi];
    for (p, u, lo, n) in [(px, ux, x0, grid.width), (py, uy, y0, grid.height)] {
        if u != 0.0 {
            for i in 1..n {
                let t = (lo + i as f64 * size - p) / u;
                if t > t_lo && t < t_hi {
                    cuts.push(t);
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);

    let min_len = 1e-12 * size;
    let mut out: Vec<(usize, f64)> = Vec::new();
    for pair in cuts.windows(2) {
        let len = pair[1] - pair[0];
        if len <= min_len {
            continue;
        }
        let mid = 0.5 * (pair[0] + pair[1]);
        let col = (((px + mid * ux) - x0) / size).floor();
        let row = (((py + mid * uy) - y0) / size).floor();
        let col = (col.max(0.0) as usize).min(grid.width - 1);
        let row = (row.max(0.0) as usize).min(grid.height - 1);
        let pixel = row * grid.width + col;
        match out.last_mut() {
            Some(last) if last.0 == pixel => last.1 += len,
            _ => out.push((pixel, len)),
        }
    }
    out
}

fn bin_layout(geom: &DetectorGeometry, grid: &GridSpec) -> (f64, f64) {
    let radius = grid.fov_radius();
    (radius, 2.0 * radius / geom.n_bins as f64)
}

/// Centre offset of bin `m`.
pub fn bin_center(geom: &DetectorGeometry, grid: &GridSpec, m: usize) -> f64 {
    let (radius, width) = bin_layout(geom, grid);
    -radius + (m as f64 + 0.5) * width
}

fn line_length_rows(
    geom: &DetectorGeometry,
    grid: &GridSpec,
    k: usize,
) -> Vec<(usize, usize, f64)> {
    let theta = geom.angle(k);
    let mut out = Vec::new();
    for m in 0..geom.n_bins {
        let d = k * geom.n_bins + m;
        let offset = bin_center(geom, grid, m);
        out.extend(
            ray_weights(theta, offset, grid)
                .into_iter()
                .map(|(b, w)| (b, d, w)),
        );
    }
    out
}

fn strip_area_rows(geom: &DetectorGeometry, grid: &GridSpec, k: usize) -> Vec<(usize, usize, f64)> {
    const SUB: usize = 4;
    let (radius, bin_width) = bin_layout(geom, grid);
    let (s, c) = direction(geom.angle(k));
    let size = grid.pixel_size;
    let weight = size * size / (SUB * SUB) as f64 / bin_width;
    let mut out = Vec::new();
    for row in 0..grid.height {
        for col in 0..grid.width {
            let b = row * grid.width + col;
            let x_left = grid.x_min() + col as f64 * size;
            let y_low = grid.y_min() + row as f64 * size;
            for sy in 0..SUB {
                for sx in 0..SUB {
                    let x = x_left + (sx as f64 + 0.5) / SUB as f64 * size;
                    let y = y_low + (sy as f64 + 0.5) / SUB as f64 * size;
                    let t = -s * x + c * y;
                    let m = ((t + radius) / bin_width).floor();
                    if m >= 0.0 && (m as usize) < geom.n_bins {
                        out.push((b, k * geom.n_bins + m as usize, weight));
                    }
                }
            }
        }
    }
    out
}

/// Builds the `W·H`-source, `n_angles·n_bins`-detector matrix.
pub fn build_system_matrix(
    geom: &DetectorGeometry,
    width: usize,
    height: usize,
    pixel_size: f64,
) -> Result<SystemMatrix, PetError> {
    geom.validate()?;
    if width == 0 || height == 0 {
        return Err(PetError::EmptyGrid);
    }
    if !(pixel_size > 0.0 && pixel_size.is_finite()) {
        return Err(PetError::InvalidGeometry(format!(
            "pixel size must be positive, got {pixel_size}"
        )));
    }
    let grid = GridSpec {
        width,
        height,
        pixel_size,
    };
    let per_angle: Vec<Vec<(usize, usize, f64)>> = (0..geom.n_angles)
        .into_par_iter()
        .map(|k| match geom.weighting {
            Weighting::LineLength => line_length_rows(geom, &grid, k),
            Weighting::StripArea => strip_area_rows(geom, &grid, k),
        })
        .collect();

    let mut seen = vec![false; width * height];
    for &(b, _, w) in per_angle.iter().flatten() {
        if w > 0.0 {
            seen[b] = true;
        }
    }
    if let Some(b) = seen.iter().position(|&s| !s) {
        return Err(PetError::PixelOutsideFov {
            col: b % width,
            row: b / width,
        });
    }
    Ok(SystemMatrix::from_triplets(
        width * height,
        geom.n_detectors(),
        per_angle.into_iter().flatten(),
    )?)
}
