use std::fmt;
use std::str::FromStr;

use super::OcrError;

pub const SIDE: usize = 16;
pub const PIXELS: usize = SIDE * SIDE;
const CENTER: f64 = (SIDE as f64 - 1.0) / 2.0;

/// 16×16 grayscale glyph, row-major, values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GlyphImage {
    pixels: Vec<f64>,
}

impl GlyphImage {
    /// Clips to [0, 1]; rejects wrong sizes and non-finite values.
    pub fn new(pixels: Vec<f64>) -> Result<Self, OcrError> {
        if pixels.len() != PIXELS {
            return Err(OcrError::ImageSize(pixels.len()));
        }
        if let Some(index) = pixels.iter().position(|v| !v.is_finite()) {
            return Err(OcrError::NonFinite { index });
        }
        Ok(Self::clipped(pixels))
    }

    pub(crate) fn clipped(mut pixels: Vec<f64>) -> Self {
        for v in &mut pixels {
            *v = v.clamp(0.0, 1.0);
        }
        Self { pixels }
    }

    pub fn blank() -> Self {
        Self {
            pixels: vec![0.0; PIXELS],
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::clipped(vec![value; PIXELS])
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * SIDE + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.pixels[row * SIDE + col] = value.clamp(0.0, 1.0);
    }

    /// Bilinear sample at fractional (x = column, y = row). Coordinates
    /// outside the grid are clamped to the nearest edge pixel.
    fn sample(&self, x: f64, y: f64) -> f64 {
        let max = (SIDE - 1) as f64;
        let x = x.clamp(0.0, max);
        let y = y.clamp(0.0, max);
        let x0 = x.floor().min(max - 1.0);
        let y0 = y.floor().min(max - 1.0);
        let fx = x - x0;
        let fy = y - y0;
        let (c0, r0) = (x0 as usize, y0 as usize);
        let p = |r: usize, c: usize| self.pixels[r * SIDE + c];
        (1.0 - fy) * ((1.0 - fx) * p(r0, c0) + fx * p(r0, c0 + 1))
            + fy * ((1.0 - fx) * p(r0 + 1, c0) + fx * p(r0 + 1, c0 + 1))
    }

    /// Warp by the affine map `q = M(p − c) + c + shift` about the image
    /// centre, evaluated by inverse mapping.
    fn warp(&self, inverse: [[f64; 2]; 2], shift: (f64, f64)) -> Self {
        let mut out = vec![0.0; PIXELS];
        for row in 0..SIDE {
            for col in 0..SIDE {
                let qx = col as f64 - CENTER - shift.0;
                let qy = row as f64 - CENTER - shift.1;
                let px = inverse[0][0] * qx + inverse[0][1] * qy + CENTER;
                let py = inverse[1][0] * qx + inverse[1][1] * qy + CENTER;
                out[row * SIDE + col] = self.sample(px, py);
            }
        }
        Self::clipped(out)
    }

    /// Grayscale dilation with a 3×3 structuring element.
    pub fn dilate(&self) -> Self {
        let mut out = vec![0.0; PIXELS];
        for row in 0..SIDE {
            for col in 0..SIDE {
                let mut m = 0.0f64;
                for r in row.saturating_sub(1)..=(row + 1).min(SIDE - 1) {
                    for c in col.saturating_sub(1)..=(col + 1).min(SIDE - 1) {
                        m = m.max(self.get(r, c));
                    }
                }
                out[row * SIDE + col] = m;
            }
        }
        Self { pixels: out }
    }

    pub fn l2_distance(&self, other: &Self) -> f64 {
        self.pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// The seven small deformations that span a glyph's tangent subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransformId {
    Thicken,
    Rotate,
    TranslateX,
    TranslateY,
    Scale,
    ShearX,
    ShearY,
}

impl TransformId {
    pub const ALL: [TransformId; 7] = [
        TransformId::Thicken,
        TransformId::Rotate,
        TransformId::TranslateX,
        TransformId::TranslateY,
        TransformId::Scale,
        TransformId::ShearX,
        TransformId::ShearY,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransformId::Thicken => "thicken",
            TransformId::Rotate => "rotate",
            TransformId::TranslateX => "translate_x",
            TransformId::TranslateY => "translate_y",
            TransformId::Scale => "scale",
            TransformId::ShearX => "shear_x",
            TransformId::ShearY => "shear_y",
        }
    }

    pub fn is_translation(self) -> bool {
        matches!(self, TransformId::TranslateX | TransformId::TranslateY)
    }
}

impl fmt::Display for TransformId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransformId {
    type Err = OcrError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TransformId::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| OcrError::UnknownTransform(s.to_string()))
    }
}

/// Applies one deformation of strength `eps`.
///
/// * thicken: `img + eps·(dilate(img) − img)`
/// * rotate: `eps` radians about the centre
/// * translate_x / translate_y: `eps` pixels
/// * scale: factor `1 + eps`
/// * shear_x: `x' = x + eps·y`; shear_y: `y' = y + eps·x`
///
/// Geometric warps use bilinear interpolation; the result is clipped to
/// [0, 1]. `eps = 0` returns the input unchanged.
pub fn apply_transform(
    img: &GlyphImage,
    which: TransformId,
    eps: f64,
) -> Result<GlyphImage, OcrError> {
    if !eps.is_finite() || eps.abs() > 1.0 || (which == TransformId::Scale && eps <= -1.0) {
        return Err(OcrError::InvalidEpsilon(eps));
    }
    if eps == 0.0 {
        return Ok(img.clone());
    }
    Ok(match which {
        TransformId::Thicken => {
            let dilated = img.dilate();
            GlyphImage::clipped(
                img.pixels
                    .iter()
                    .zip(&dilated.pixels)
                    .map(|(&v, &d)| v + eps * (d - v))
                    .collect(),
            )
        }
        TransformId::Rotate => {
            let (s, c) = eps.sin_cos();
            img.warp([[c, s], [-s, c]], (0.0, 0.0))
        }
        TransformId::TranslateX => img.warp([[1.0, 0.0], [0.0, 1.0]], (eps, 0.0)),
        TransformId::TranslateY => img.warp([[1.0, 0.0], [0.0, 1.0]], (0.0, eps)),
        TransformId::Scale => {
            let inv = 1.0 / (1.0 + eps);
            img.warp([[inv, 0.0], [0.0, inv]], (0.0, 0.0))
        }
        TransformId::ShearX => img.warp([[1.0, -eps], [0.0, 1.0]], (0.0, 0.0)),
        TransformId::ShearY => img.warp([[1.0, 0.0], [-eps, 1.0]], (0.0, 0.0)),
    })
}
