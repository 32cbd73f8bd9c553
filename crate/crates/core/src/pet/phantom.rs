use super::PetError;

/// One additive ellipse in normalized coordinates: the longer grid side spans
/// [-1, 1]. `theta` is in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub a: f64,
    pub b: f64,
    pub theta: f64,
    pub intensity: f64,
}

impl Ellipse {
    pub fn new(cx: f64, cy: f64, a: f64, b: f64, theta: f64, intensity: f64) -> Self {
        Self {
            cx,
            cy,
            a,
            b,
            theta,
            intensity,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.theta.sin_cos();
        let dx = x - self.cx;
        let dy = y - self.cy;
        let u = (dx * c + dy * s) / self.a;
        let v = (-dx * s + dy * c) / self.b;
        u * u + v * v <= 1.0
    }
}

/// Modified Shepp–Logan head: the customary tomography test object.
pub fn shepp_logan() -> Vec<Ellipse> {
    let deg = std::f64::consts::PI / 180.0;
    vec![
        Ellipse::new(0.0, 0.0, 0.69, 0.92, 0.0, 1.0),
        Ellipse::new(0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8),
        Ellipse::new(0.22, 0.0, 0.11, 0.31, -18.0 * deg, -0.2),
        Ellipse::new(-0.22, 0.0, 0.16, 0.41, 18.0 * deg, -0.2),
        Ellipse::new(0.0, 0.35, 0.21, 0.25, 0.0, 0.1),
        Ellipse::new(0.0, 0.1, 0.046, 0.046, 0.0, 0.1),
        Ellipse::new(0.0, -0.1, 0.046, 0.046, 0.0, 0.1),
        Ellipse::new(-0.08, -0.605, 0.046, 0.023, 0.0, 0.1),
        Ellipse::new(0.0, -0.605, 0.023, 0.023, 0.0, 0.1),
        Ellipse::new(0.06, -0.605, 0.023, 0.046, 0.0, 0.1),
    ]
}

/// Gridded emission density. Pixel `(col, row)` is stored at `row * width + col`.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub width: usize,
    pub height: usize,
    pub pixel_size: f64,
    pub grid: Vec<f64>,
    pub ellipses: Vec<Ellipse>,
}

impl Phantom {
    /// Wraps an existing grid, e.g. a reconstruction. No ellipse list.
    pub fn from_grid(
        width: usize,
        height: usize,
        pixel_size: f64,
        grid: Vec<f64>,
    ) -> Result<Self, PetError> {
        if width == 0 || height == 0 {
            return Err(PetError::EmptyGrid);
        }
        if grid.len() != width * height {
            return Err(PetError::GridSize {
                expected: width * height,
                got: grid.len(),
            });
        }
        if grid.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(PetError::NegativeIntensity);
        }
        Ok(Self {
            width,
            height,
            pixel_size,
            grid,
            ellipses: Vec::new(),
        })
    }

    pub fn with_pixel_size(mut self, pixel_size: f64) -> Self {
        self.pixel_size = pixel_size;
        self
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for v in &mut self.grid {
            *v *= factor;
        }
        for e in &mut self.ellipses {
            e.intensity *= factor;
        }
        self
    }

    pub fn total(&self) -> f64 {
        self.grid.iter().sum()
    }
}

/// Normalized center of pixel `(col, row)`.
pub fn pixel_center(width: usize, height: usize, col: usize, row: usize) -> (f64, f64) {
    let half = width.max(height) as f64 / 2.0;
    (
        (col as f64 + 0.5 - width as f64 / 2.0) / half,
        (row as f64 + 0.5 - height as f64 / 2.0) / half,
    )
}

/// Rasterizes `ellipses` by pixel-center inclusion, summing intensities and
/// clipping the total at zero. Pixel size defaults to 1.
pub fn make_phantom(
    ellipses: &[Ellipse],
    width: usize,
    height: usize,
) -> Result<Phantom, PetError> {
    if width == 0 || height == 0 {
        return Err(PetError::EmptyGrid);
    }
    let mut grid = vec![0.0; width * height];
    for row in 0..height {
        for col in 0..width {
            let (x, y) = pixel_center(width, height, col, row);
            let sum: f64 = ellipses
                .iter()
                .filter(|e| e.contains(x, y))
                .map(|e| e.intensity)
                .sum();
            grid[row * width + col] = sum.max(0.0);
        }
    }
    Ok(Phantom {
        width,
        height,
        pixel_size: 1.0,
        grid,
        ellipses: ellipses.to_vec(),
    })
}
