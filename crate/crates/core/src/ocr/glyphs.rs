//! Synthetic digit corpus: stroke templates rendered with soft edges and
//! randomly rotated, shifted and thickened.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::image::{apply_transform, GlyphImage, TransformId, PIXELS, SIDE};
use super::{LabeledCorpus, OcrError};
use crate::rng::Stream;

const CENTER: f64 = (SIDE as f64 - 1.0) / 2.0;

/// Full ink within this distance of a stroke centreline, in pixels.
const CORE: f64 = 0.35;
/// Ink fades linearly to zero over this much further distance.
const FADE: f64 = 0.8;

/// Maximum random deformation applied per item.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jitter {
    /// Rotation drawn uniformly from ±`rotation_deg` degrees.
    pub rotation_deg: f64,
    /// Shift drawn uniformly from ±`shift_px` in each axis.
    pub shift_px: f64,
    /// Thickening strength drawn uniformly from [0, `thicken`].
    pub thicken: f64,
    /// Writer-style variation: multiplies the slant, size and stroke-wobble
    /// ranges below. 0 turns them off.
    pub style: f64,
}

/// Slant (horizontal shear) range at `style = 1`.
const SLANT: f64 = 0.35;
/// Relative size range at `style = 1`.
const SIZE: f64 = 0.15;
/// Amplitude range, in pixels at `style = 1`, of the smooth sinusoidal
/// displacement field that bends strokes.
const WOBBLE: f64 = 0.8;
/// Angular frequency of that field, radians per pixel.
const WOBBLE_FREQ: f64 = PI / 7.0;

impl Default for Jitter {
    fn default() -> Self {
        Self {
            rotation_deg: 10.0,
            shift_px: 2.0,
            thicken: 0.2,
            style: 1.0,
        }
    }
}

impl Jitter {
    pub fn none() -> Self {
        Self {
            rotation_deg: 0.0,
            shift_px: 0.0,
            thicken: 0.0,
            style: 0.0,
        }
    }
}

type Stroke = Vec<(f64, f64)>;

fn arc(cx: f64, cy: f64, rx: f64, ry: f64, from_deg: f64, to_deg: f64) -> Stroke {
    let steps = (((to_deg - from_deg).abs() / 12.0).ceil() as usize).max(2);
    (0..=steps)
        .map(|i| {
            let a = (from_deg + (to_deg - from_deg) * i as f64 / steps as f64) * PI / 180.0;
            (cx + rx * a.cos(), cy + ry * a.sin())
        })
        .collect()
}

fn join(mut a: Stroke, b: Stroke) -> Stroke {
    a.extend(b);
    a
}

/// Centrelines for digit `d` in pixel coordinates (x = column, y = row,
/// y growing downwards).
fn template(d: u8) -> Vec<Stroke> {
    match d {
        0 => vec![arc(7.5, 7.5, 3.5, 5.0, 0.0, 360.0)],
        1 => vec![vec![(5.5, 4.5), (8.0, 2.5), (8.0, 12.5)]],
        2 => vec![join(
            arc(7.5, 5.5, 3.2, 3.0, 190.0, 380.0),
            vec![(4.5, 12.5), (11.0, 12.5)],
        )],
        3 => vec![
            arc(7.5, 5.0, 3.0, 2.5, 200.0, 450.0),
            arc(7.5, 10.0, 3.2, 2.6, 270.0, 520.0),
        ],
        4 => vec![vec![(9.5, 12.5), (9.5, 2.5), (4.0, 9.5), (11.5, 9.5)]],
        5 => vec![join(
            vec![(11.0, 2.5), (5.0, 2.5), (4.7, 7.2)],
            arc(7.5, 9.3, 3.3, 3.2, 225.0, 510.0),
        )],
        6 => vec![
            vec![(10.5, 2.8), (7.5, 3.2), (5.0, 5.5), (4.3, 9.8)],
            arc(7.5, 9.8, 3.2, 2.8, 0.0, 360.0),
        ],
        7 => vec![vec![(4.0, 2.5), (11.5, 2.5), (6.5, 12.5)]],
        8 => vec![
            arc(7.5, 4.8, 2.8, 2.3, 0.0, 360.0),
            arc(7.5, 10.2, 3.3, 2.6, 0.0, 360.0),
        ],
        9 => vec![
            arc(7.5, 5.2, 3.2, 2.8, 0.0, 360.0),
            vec![(10.7, 5.2), (10.2, 9.0), (8.0, 12.8)],
        ],
        _ => unreachable!("digits are 0..=9"),
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len_sq = dx * dx + dy * dy;
    let t = if len_sq == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len_sq).clamp(0.0, 1.0)
    };
    let (ex, ey) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    (ex * ex + ey * ey).sqrt()
}

fn render(strokes: &[Stroke]) -> GlyphImage {
    let mut px = vec![0.0; PIXELS];
    for row in 0..SIDE {
        for col in 0..SIDE {
            let p = (col as f64, row as f64);
            let d = strokes
                .iter()
                .flat_map(|s| s.windows(2))
                .map(|w| segment_distance(p, w[0], w[1]))
                .fold(f64::INFINITY, f64::min);
            px[row * SIDE + col] = ((CORE + FADE - d) / FADE).clamp(0.0, 1.0);
        }
    }
    GlyphImage::clipped(px)
}

/// Undistorted rendering of digit `d`.
pub fn template_image(d: u8) -> GlyphImage {
    render(&template(d))
}

/// Renders one jittered instance of `digit`.
pub fn jittered_glyph(
    digit: u8,
    jitter: &Jitter,
    rng: &mut Stream,
) -> Result<GlyphImage, OcrError> {
    let angle = rng.uniform_in(-jitter.rotation_deg, jitter.rotation_deg) * PI / 180.0;
    let dx = rng.uniform_in(-jitter.shift_px, jitter.shift_px);
    let dy = rng.uniform_in(-jitter.shift_px, jitter.shift_px);
    let thicken = rng.uniform_in(0.0, jitter.thicken);
    let slant = rng.uniform_in(-SLANT, SLANT) * jitter.style;
    let size = 1.0 + rng.uniform_in(-SIZE, SIZE) * jitter.style;
    let (ax, ay) = (
        rng.uniform_in(-WOBBLE, WOBBLE) * jitter.style,
        rng.uniform_in(-WOBBLE, WOBBLE) * jitter.style,
    );
    let (px, py) = (rng.uniform_in(0.0, 2.0 * PI), rng.uniform_in(0.0, 2.0 * PI));
    if angle == 0.0 && dx == 0.0 && dy == 0.0 && jitter.style == 0.0 {
        return apply_transform(&template_image(digit), TransformId::Thicken, thicken);
    }
    let (s, c) = angle.sin_cos();
    let strokes: Vec<Stroke> = template(digit)
        .into_iter()
        .map(|stroke| {
            stroke
                .into_iter()
                .map(|(x, y)| {
                    let (u, v) = (x - CENTER, y - CENTER);
                    let u = u + ax * (WOBBLE_FREQ * v + px).sin();
                    let v = v + ay * (WOBBLE_FREQ * u + py).sin();
                    let (u, v) = (size * (u + slant * v), size * v);
                    (c * u - s * v + CENTER + dx, s * u + c * v + CENTER + dy)
                })
                .collect()
        })
        .collect();
    apply_transform(&render(&strokes), TransformId::Thicken, thicken)
}

/// `n_per_class` items of every digit, interleaved so item `i` has label
/// `i % 10`. Item `i` draws its jitter from substream `(seed, i)`.
pub fn gen_synthetic_glyphs(
    n_per_class: usize,
    jitter: &Jitter,
    seed: u64,
) -> Result<LabeledCorpus, OcrError> {
    if n_per_class == 0 {
        return Err(OcrError::EmptyCorpus);
    }
    let nonneg = |v: f64| v >= 0.0 && v.is_finite();
    if !(nonneg(jitter.thicken) && jitter.thicken <= 1.0)
        || !nonneg(jitter.rotation_deg)
        || !nonneg(jitter.shift_px)
        || !(nonneg(jitter.style) && jitter.style <= 4.0)
    {
        return Err(OcrError::InvalidJitter(format!("{jitter:?}")));
    }
    let items = (0..n_per_class * 10)
        .into_par_iter()
        .map(|i| {
            let label = (i % 10) as u8;
            let mut rng = Stream::substream(seed, i as u64);
            jittered_glyph(label, jitter, &mut rng).map(|img| (img, label))
        })
        .collect::<Result<Vec<_>, _>>()?;
    LabeledCorpus::new(items)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_have_ink_inside_the_frame() {
        for d in 0..10 {
            let img = template_image(d);
            let ink: f64 = img.pixels().iter().sum();
            assert!(ink > 10.0, "digit {d} ink {ink}");
            // margins stay mostly blank
            let border: f64 = (0..SIDE)
                .map(|i| img.get(0, i) + img.get(SIDE - 1, i))
                .sum();
            assert!(border < 1.0, "digit {d} border {border}");
        }
    }

    #[test]
    fn templates_are_distinct() {
        for a in 0..10 {
            for b in (a + 1)..10 {
                let d = template_image(a).l2_distance(&template_image(b));
                assert!(d > 2.0, "{a} vs {b}: {d}");
            }
        }
    }

    #[test]
    fn zero_jitter_reproduces_templates() {
        let corpus = gen_synthetic_glyphs(3, &Jitter::none(), 5).unwrap();
        assert_eq!(corpus.len(), 30);
        for i in 0..corpus.len() {
            let label = corpus.label(i);
            assert_eq!(label as usize, i % 10);
            assert_eq!(corpus.image(i), &template_image(label));
        }
    }

    #[test]
    fn seeded_generation() {
        let a = gen_synthetic_glyphs(4, &Jitter::default(), 17).unwrap();
        let b = gen_synthetic_glyphs(4, &Jitter::default(), 17).unwrap();
        let c = gen_synthetic_glyphs(4, &Jitter::default(), 18).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_empty_and_bad_jitter() {
        assert_eq!(
            gen_synthetic_glyphs(0, &Jitter::default(), 1).unwrap_err(),
            OcrError::EmptyCorpus
        );
        let bad = Jitter {
            thicken: 2.0,
            ..Jitter::default()
        };
        assert!(gen_synthetic_glyphs(1, &bad, 1).is_err());
    }
}
