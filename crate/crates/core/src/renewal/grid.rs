use std::fmt;
use std::str::FromStr;

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma;

use super::RenewalError;

/// Default grid: 30,000 cells on [0, 30].
pub const DEFAULT_X_MAX: f64 = 30.0;
pub const DEFAULT_N: usize = 30_000;

/// Fraction of the grid, counted from the right end, used to fit the tail.
const TAIL_FIT_FRACTION: f64 = 0.1;

/// A lifetime cdf sampled on the uniform grid `x_i = i·x_max/n`, linear
/// between grid points and exponential beyond `x_max`:
/// `1 − F(x) = (1 − F(x_max))·exp(−tail_rate·(x − x_max))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCdf {
    x_max: f64,
    values: Vec<f64>,
    tail_rate: f64,
}

impl GridCdf {
    /// Checks `F_0 = 0`, monotonicity, `F_n ≤ 1` and a finite positive mean.
    pub fn new(x_max: f64, values: Vec<f64>, tail_rate: f64) -> Result<Self, RenewalError> {
        if !(x_max.is_finite() && x_max > 0.0) || values.len() < 2 {
            return Err(RenewalError::InvalidGrid(format!(
                "x_max={x_max}, {} values",
                values.len()
            )));
        }
        if !(tail_rate.is_finite() && tail_rate >= 0.0) {
            return Err(RenewalError::InvalidGrid(format!("tail_rate={tail_rate}")));
        }
        if values[0] != 0.0 {
            return Err(RenewalError::InvalidCdf {
                index: 0,
                reason: "F(0) must be 0",
            });
        }
        for (i, w) in values.windows(2).enumerate() {
            if !w[1].is_finite() || w[1] > 1.0 {
                return Err(RenewalError::InvalidCdf {
                    index: i + 1,
                    reason: "value outside [0, 1]",
                });
            }
            if w[1] < w[0] {
                return Err(RenewalError::InvalidCdf {
                    index: i + 1,
                    reason: "decreasing",
                });
            }
        }
        let cdf = Self {
            x_max,
            values,
            tail_rate,
        };
        cdf.mean()?;
        Ok(cdf)
    }

    /// Samples `f` on an `n`-cell grid and fits the tail rate.
    pub fn from_fn(x_max: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self, RenewalError> {
        if n < 10 {
            return Err(RenewalError::InvalidGrid(format!("n={n}")));
        }
        let dx = x_max / n as f64;
        let mut values: Vec<f64> = (0..=n).map(|i| f(i as f64 * dx).clamp(0.0, 1.0)).collect();
        values[0] = 0.0;
        let rate = fit_tail_rate(x_max, &values);
        Self::new(x_max, values, rate)
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// Number of grid cells; there are `n + 1` values.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dx(&self) -> f64 {
        self.x_max / self.n() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_rate(&self) -> f64 {
        self.tail_rate
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    /// `1 − F(x_max)`.
    pub fn tail_mass(&self) -> f64 {
        1.0 - self.values[self.n()]
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let n = self.n();
        if x >= self.x_max {
            let mass = self.tail_mass();
            if mass == 0.0 {
                return 1.0;
            }
            return 1.0 - mass * (-self.tail_rate * (x - self.x_max)).exp();
        }
        let t = x / self.dx();
        let i = (t.floor() as usize).min(n - 1);
        let f = t - i as f64;
        self.values[i] + f * (self.values[i + 1] - self.values[i])
    }

    /// Trapezoid integral of `1 − F` over the grid plus the closed-form tail.
    pub fn mean(&self) -> Result<f64, RenewalError> {
        let body = self.survival_integrals().last().copied().unwrap_or(0.0);
        let mu = body + self.tail_integral()?;
        if !(mu.is_finite() && mu > 0.0) {
            return Err(RenewalError::InfiniteMean);
        }
        Ok(mu)
    }

    /// `∫_{x_max}^∞ (1 − F)`.
    pub(crate) fn tail_integral(&self) -> Result<f64, RenewalError> {
        let mass = self.tail_mass();
        if mass == 0.0 {
            Ok(0.0)
        } else if self.tail_rate > 0.0 {
            Ok(mass / self.tail_rate)
        } else {
            Err(RenewalError::InfiniteMean)
        }
    }

    /// Running trapezoid integrals `∫_0^{x_i} (1 − F)`, serial so results are
    /// bitwise reproducible.
    pub(crate) fn survival_integrals(&self) -> Vec<f64> {
        let half_dx = 0.5 * self.dx();
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.values.len());
        out.push(0.0);
        for w in self.values.windows(2) {
            acc += half_dx * ((1.0 - w[0]) + (1.0 - w[1]));
            out.push(acc);
        }
        out
    }

    /// `sup_i |F(x_i) − H(x_i)|` over this grid.
    pub fn sup_distance(&self, other: &GridCdf) -> f64 {
        (0..=self.n())
            .map(|i| (self.values[i] - other.eval(self.x(i))).abs())
            .fold(0.0, f64::max)
    }

    /// Pointwise mixture `w·self + (1 − w)·other` on this grid.
    pub fn mix(&self, other: &GridCdf, w: f64) -> Result<GridCdf, RenewalError> {
        let values: Vec<f64> = (0..=self.n())
            .map(|i| (w * self.values[i] + (1.0 - w) * other.eval(self.x(i))).clamp(0.0, 1.0))
            .collect();
        let rate = fit_tail_rate(self.x_max, &values);
        GridCdf::new(self.x_max, values, rate)
    }

    /// The cdf of `X / c`, i.e. `x ↦ F(c·x)`, resampled on the same grid.
    pub fn rescaled(&self, c: f64) -> Result<GridCdf, RenewalError> {
        let mut values: Vec<f64> = (0..=self.n()).map(|i| self.eval(c * self.x(i))).collect();
        values[0] = 0.0;
        running_max(&mut values);
        let rate = fit_tail_rate(self.x_max, &values);
        GridCdf::new(self.x_max, values, rate)
    }

    /// Inverse cdf; exponential tail beyond `x_max`.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.n();
        if u <= 0.0 {
            return 0.0;
        }
        if u > self.values[n] {
            let mass = self.tail_mass();
            if self.tail_rate == 0.0 {
                return self.x_max;
            }
            return self.x_max + (mass / (1.0 - u)).ln() / self.tail_rate;
        }
        // first index with F_i >= u
        let i = self.values.partition_point(|&v| v < u).max(1);
        let (lo, hi) = (self.values[i - 1], self.values[i]);
        let f = if hi > lo { (u - lo) / (hi - lo) } else { 0.0 };
        (i as f64 - 1.0 + f) * self.dx()
    }
}

pub(crate) fn running_max(values: &mut [f64]) {
    let mut m = 0.0f64;
    for v in values {
        m = m.max(*v);
        *v = m;
    }
}

/// Least-squares slope of `−ln(1 − F)` over the last tenth of the grid.
/// Returns 0 when the cdf has reached 1 there (no tail) or too few points
/// carry mass.
pub(crate) fn fit_tail_rate(x_max: f64, values: &[f64]) -> f64 {
    let n = values.len() - 1;
    let dx = x_max / n as f64;
    let start = n - ((n as f64 * TAIL_FIT_FRACTION).ceil() as usize).clamp(1, n);
    let pts: Vec<(f64, f64)> = (start..=n)
        .filter_map(|i| {
            let s = 1.0 - values[i];
            (s > 0.0).then(|| (i as f64 * dx, s.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    (-sxy / sxx).max(0.0)
}

/// Documented distribution families, each with unit scale unless stated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// Rate θ.
    Exponential(f64),
    /// Uniform on [0, b].
    Uniform(f64),
    /// Shape k, scale 1.
    Weibull(f64),
    /// Log-normal with log-mean 0 and log-sd σ.
    LogNormal(f64),
    /// Linear ramp of the given width centred at `a`: a smoothed point mass.
    PointRamp { a: f64, width: f64 },
}

impl Family {
    /// Families used for the q > 1 emptiness evidence and as solver inits.
    pub const CATALOG: [Family; 6] = [
        Family::Exponential(1.0),
        Family::Uniform(1.0),
        Family::Weibull(0.5),
        Family::Weibull(2.0),
        Family::LogNormal(0.5),
        Family::PointRamp {
            a: 1.0,
            width: 0.05,
        },
    ];

    pub fn cdf(self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            Family::Exponential(theta) => -(-theta * x).exp_m1(),
            Family::Uniform(b) => (x / b).min(1.0),
            Family::Weibull(k) => -(-x.powf(k)).exp_m1(),
            Family::LogNormal(sigma) => 0.5 * erfc(-x.ln() / (sigma * std::f64::consts::SQRT_2)),
            Family::PointRamp { a, width } => ((x - a) / width + 0.5).clamp(0.0, 1.0),
        }
    }

    pub fn mean(self) -> f64 {
        match self {
            Family::Exponential(theta) => 1.0 / theta,
            Family::Uniform(b) => b / 2.0,
            Family::Weibull(k) => gamma(1.0 + 1.0 / k),
            Family::LogNormal(sigma) => (sigma * sigma / 2.0).exp(),
            Family::PointRamp { a, .. } => a,
        }
    }

    /// Samples the family on a grid. Exponentials get their exact tail rate;
    /// other families get a fitted one.
    pub fn grid(self, x_max: f64, n: usize) -> Result<GridCdf, RenewalError> {
        let cdf = GridCdf::from_fn(x_max, n, |x| self.cdf(x))?;
        match self {
            Family::Exponential(theta) => GridCdf::new(x_max, cdf.values, theta),
            _ => Ok(cdf),
        }
    }

    pub fn default_grid(self) -> Result<GridCdf, RenewalError> {
        self.grid(DEFAULT_X_MAX, DEFAULT_N)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Exponential(t) => write!(f, "exp:{t}"),
            Family::Uniform(b) => write!(f, "uniform:{b}"),
            Family::Weibull(k) => write!(f, "weibull:{k}"),
            Family::LogNormal(s) => write!(f, "lognormal:{s}"),
            Family::PointRamp { a, width } => write!(f, "point:{a}:{width}"),
        }
    }
}

/// Parses `name[:param[:param]]`, e.g. `exp`, `exp:2`, `weibull:0.5`,
/// `point:1:0.05`. Missing parameters take the catalog defaults.
impl FromStr for Family {
    type Err = RenewalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || RenewalError::UnknownFamily(s.to_string());
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default();
        let params: Vec<f64> = parts
            .map(|p| p.parse::<f64>().map_err(|_| unknown()))
            .collect::<Result<_, _>>()?;
        let p = |i: usize, default: f64| params.get(i).copied().unwrap_or(default);
        let family = match (name, params.len()) {
            ("exp", 0..=1) => Family::Exponential(p(0, 1.0)),
            ("uniform", 0..=1) => Family::Uniform(p(0, 1.0)),
            ("weibull", 0..=1) => Family::Weibull(p(0, 2.0)),
            ("lognormal", 0..=1) => Family::LogNormal(p(0, 0.5)),
            ("point", 0..=2) => Family::PointRamp {
                a: p(0, 1.0),
                width: p(1, 0.05),
            },
            _ => return Err(unknown()),
        };
        let ok = match family {
            Family::Exponential(v)
            | Family::Uniform(v)
            | Family::Weibull(v)
            | Family::LogNormal(v) => v.is_finite() && v > 0.0,
            Family::PointRamp { a, width } => {
                width > 0.0 && a - width / 2.0 >= 0.0 && a.is_finite()
            }
        };
        if ok {
            Ok(family)
        } else {
            Err(unknown())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(GridCdf::new(1.0, vec![0.0, 0.5, 1.0], 0.0).is_ok());
        assert!(matches!(
            GridCdf::new(1.0, vec![0.1, 0.5, 1.0], 0.0),
            Err(RenewalError::InvalidCdf { index: 0, .. })
        ));
        assert!(matches!(
            GridCdf::new(1.0, vec![0.0, 0.6, 0.5], 1.0),
            Err(RenewalError::InvalidCdf { index: 2, .. })
        ));
        assert!(matches!(
            GridCdf::new(1.0, vec![0.0, 0.6, 1.2], 1.0),
            Err(RenewalError::InvalidCdf { index: 2, .. })
        ));
        assert_eq!(
            GridCdf::new(1.0, vec![0.0, 0.2, 0.5], 0.0).unwrap_err(),
            RenewalError::InfiniteMean
        );
    }

    #[test]
    fn exponential_mean_and_tail() {
        for theta in [0.5, 1.0, 2.0] {
            let f = Family::Exponential(theta).default_grid().unwrap();
            assert!(
                (f.mean().unwrap() - 1.0 / theta).abs() < 1e-6,
                "theta={theta}"
            );
            let x = 35.0;
            assert!((f.eval(x) - Family::Exponential(theta).cdf(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn fitted_tail_recovers_exponential_rate() {
        let f = GridCdf::from_fn(10.0, 10_000, |x| Family::Exponential(0.7).cdf(x)).unwrap();
        assert!((f.tail_rate() - 0.7).abs() < 1e-6, "{}", f.tail_rate());
    }

    #[test]
    fn family_means() {
        for fam in Family::CATALOG {
            let f = fam.default_grid().unwrap();
            let m = f.mean().unwrap();
            assert!(
                (m - fam.mean()).abs() < 0.02 * fam.mean(),
                "{fam}: {m} vs {}",
                fam.mean()
            );
        }
    }

    #[test]
    fn quantile_inverts_eval() {
        let f = Family::Weibull(2.0).grid(5.0, 5000).unwrap();
        for u in [0.01, 0.3, 0.5, 0.99] {
            assert!((f.eval(f.quantile(u)) - u).abs() < 1e-12);
        }
        let e = Family::Exponential(1.0).grid(5.0, 5000).unwrap();
        let x = e.quantile(0.9999);
        assert!(x > 5.0 && (x - (1e4f64).ln()).abs() < 1e-6, "{x}");
    }

    #[test]
    fn parse_families() {
        assert_eq!("exp".parse::<Family>().unwrap(), Family::Exponential(1.0));
        assert_eq!(
            "weibull:0.5".parse::<Family>().unwrap(),
            Family::Weibull(0.5)
        );
        assert_eq!(
            "point:2:0.1".parse::<Family>().unwrap(),
            Family::PointRamp { a: 2.0, width: 0.1 }
        );
        assert!("gamma".parse::<Family>().is_err());
        assert!("exp:-1".parse::<Family>().is_err());
        for fam in Family::CATALOG {
            assert_eq!(fam.to_string().parse::<Family>().unwrap(), fam);
        }
    }
}
