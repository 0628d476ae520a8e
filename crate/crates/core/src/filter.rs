//! Filter functions `psi` convolved against the stable random measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;

/// Level below which a filter value counts as zero.
pub const NEGLIGIBLE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Zero,
    /// `amplitude * exp(-|x|^2 / (2 bandwidth^2))`.
    Gaussian {
        amplitude: f64,
        bandwidth: f64,
    },
    /// One on the half-open box `[lo, hi)`, zero elsewhere.
    Indicator {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Radial profile `f(|x|)` interpolated linearly between grid nodes and
    /// zero beyond the last radius.
    Radial {
        radii: Vec<f64>,
        values: Vec<f64>,
    },
    Scaled {
        factor: f64,
        inner: Box<Profile>,
    },
    Sum {
        left: Box<Profile>,
        right: Box<Profile>,
    },
}

impl Profile {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Gaussian {
                amplitude,
                bandwidth,
            } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                amplitude * (-r2 / (2.0 * bandwidth * bandwidth)).exp()
            }
            Profile::Indicator { lo, hi } => {
                let inside = x
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(v, (a, b))| *v >= *a && *v < *b);
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::Radial { radii, values } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                interpolate(radii, values, r)
            }
            Profile::Scaled { factor, inner } => factor * inner.eval(x),
            Profile::Sum { left, right } => left.eval(x) + right.eval(x),
        }
    }

    /// Half-width of a centered box outside which `|psi|^power < threshold`.
    fn radius(&self, power: f64, threshold: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Gaussian {
                amplitude,
                bandwidth,
            } => {
                let a = amplitude.abs();
                if a == 0.0 {
                    return 0.0;
                }
                let excess = power * a.ln() - threshold.ln();
                if excess <= 0.0 {
                    0.0
                } else {
                    bandwidth * (2.0 * excess / power).sqrt()
                }
            }
            Profile::Indicator { lo, hi } => {
                lo.iter().chain(hi).fold(0.0f64, |m, v| m.max(v.abs()))
            }
            Profile::Radial { radii, .. } => radii.last().copied().unwrap_or(0.0),
            Profile::Scaled { factor, inner } => {
                if *factor == 0.0 {
                    0.0
                } else {
                    inner.radius(power, threshold / factor.abs().powf(power))
                }
            }
            Profile::Sum { left, right } => {
                // |a + b|^p < t whenever |a|^p, |b|^p < t / 2^p
                let t = threshold / 2f64.powf(power);
                left.radius(power, t).max(right.radius(power, t))
            }
        }
    }

    fn support(&self, power: f64, dim: usize) -> Vec<(f64, f64)> {
        match self {
            Profile::Indicator { lo, hi } => lo.iter().zip(hi).map(|(a, b)| (*a, *b)).collect(),
            Profile::Scaled { inner, .. } if matches!(**inner, Profile::Indicator { .. }) => {
                inner.support(power, dim)
            }
            Profile::Sum { left, right } => {
                let (l, r) = (left.support(power, dim), right.support(power, dim));
                l.iter()
                    .zip(&r)
                    .map(|(a, b)| (a.0.min(b.0), a.1.max(b.1)))
                    .collect()
            }
            _ => {
                let r = self.radius(power, NEGLIGIBLE);
                vec![(-r, r); dim]
            }
        }
    }

    fn breakpoints(&self, dim: usize) -> Vec<Vec<f64>> {
        match self {
            Profile::Indicator { lo, hi } => lo.iter().zip(hi).map(|(a, b)| vec![*a, *b]).collect(),
            Profile::Scaled { inner, .. } => inner.breakpoints(dim),
            Profile::Sum { left, right } => {
                let mut l = left.breakpoints(dim);
                for (axis, extra) in l.iter_mut().zip(right.breakpoints(dim)) {
                    axis.extend(extra);
                }
                l
            }
            _ => vec![Vec::new(); dim],
        }
    }
}

fn interpolate(radii: &[f64], values: &[f64], r: f64) -> f64 {
    let last = radii.len() - 1;
    if r > radii[last] {
        return 0.0;
    }
    if r <= radii[0] {
        return values[0];
    }
    let k = radii.partition_point(|&x| x <= r).min(last);
    let (r0, r1) = (radii[k - 1], radii[k]);
    let t = (r - r0) / (r1 - r0);
    values[k - 1] + t * (values[k] - values[k - 1])
}

/// A filter `psi` on `R^d` with its integrability exponent `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    profile: Profile,
    dim: usize,
    delta: f64,
}

impl FilterSpec {
    /// Builds a filter and checks `int |psi|^delta` numerically over its support box.
    pub fn new(profile: Profile, dim: usize, delta: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("filter dimension must be positive"));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::domain(format!(
                "integrability exponent {delta} not in (0, 1]"
            )));
        }
        validate_profile(&profile, dim)?;
        let filter = Self {
            profile,
            dim,
            delta,
        };
        let integral = filter.abs_power_integral_with(delta, &Quadrature::new(1e-6));
        match integral {
            Ok(v) if v.is_finite() => Ok(filter),
            Err(Error::Quadrature { estimate, .. }) if estimate.is_finite() => Ok(filter),
            _ => Err(Error::domain("filter is not integrable to the power delta")),
        }
    }

    /// `exp(-|x|^2 / 2)` on `R^d`.
    pub fn gaussian(dim: usize) -> Self {
        Self {
            profile: Profile::Gaussian {
                amplitude: 1.0,
                bandwidth: 1.0,
            },
            dim,
            delta: 1.0,
        }
    }

    /// The planar Gaussian filter `exp{-(x1^2 + x2^2)/2}`.
    pub fn gauss2d() -> Self {
        Self::gaussian(2)
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            profile: Profile::Zero,
            dim,
            delta: 1.0,
        }
    }

    pub fn indicator(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let dim = lo.len();
        Self::new(Profile::Indicator { lo, hi }, dim, 1.0)
    }

    pub fn radial(dim: usize, radii: Vec<f64>, values: Vec<f64>, delta: f64) -> Result<Self> {
        Self::new(Profile::Radial { radii, values }, dim, delta)
    }

    /// Looks up a built-in filter by registry name.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "gauss2d" => Ok(Self::gauss2d()),
            "gauss1d" => Ok(Self::gaussian(1)),
            "indicator1d" => Self::indicator(vec![0.0], vec![1.0]),
            _ => Err(Error::Config(format!("unknown filter {name:?}"))),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            profile: Profile::Scaled {
                factor,
                inner: Box::new(self.profile.clone()),
            },
            dim: self.dim,
            delta: self.delta,
        }
    }

    pub fn sum(&self, other: &FilterSpec) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::domain("cannot add filters of different dimension"));
        }
        Ok(Self {
            profile: Profile::Sum {
                left: Box::new(self.profile.clone()),
                right: Box::new(other.profile.clone()),
            },
            dim: self.dim,
            delta: self.delta.min(other.delta),
        })
    }

    #[inline]
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.profile.eval(x)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// Radius beyond which `|psi| < 1e-12`.
    pub fn effective_radius(&self) -> f64 {
        self.profile.radius(1.0, NEGLIGIBLE)
    }

    /// Box outside which `|psi|^power` is negligible.
    pub fn support_box(&self, power: f64) -> Vec<(f64, f64)> {
        self.profile.support(power, self.dim)
    }

    /// Coordinates where `psi` jumps or kinks along each axis.
    pub fn breakpoints(&self) -> Vec<Vec<f64>> {
        self.profile.breakpoints(self.dim)
    }

    pub fn abs_power_integral(&self, power: f64) -> Result<f64> {
        self.abs_power_integral_with(power, &Quadrature::default())
    }

    pub fn abs_power_integral_with(&self, power: f64, quad: &Quadrature) -> Result<f64> {
        if matches!(self.profile, Profile::Zero) {
            return Ok(0.0);
        }
        quad.integrate(
            |x| self.evaluate(x).abs().powf(power),
            &self.support_box(power),
            &self.breakpoints(),
        )
    }

    /// `int psi` over `R^d`.
    pub fn integral(&self) -> Result<f64> {
        if matches!(self.profile, Profile::Zero) {
            return Ok(0.0);
        }
        Quadrature::default().integrate(
            |x| self.evaluate(x),
            &self.support_box(1.0),
            &self.breakpoints(),
        )
    }
}

fn validate_profile(profile: &Profile, dim: usize) -> Result<()> {
    match profile {
        Profile::Zero => Ok(()),
        Profile::Gaussian {
            amplitude,
            bandwidth,
        } => {
            if !amplitude.is_finite() || !(*bandwidth > 0.0 && bandwidth.is_finite()) {
                return Err(Error::domain(
                    "gaussian filter needs finite amplitude and positive bandwidth",
                ));
            }
            Ok(())
        }
        Profile::Indicator { lo, hi } => {
            if lo.len() != dim || hi.len() != dim {
                return Err(Error::domain("indicator box dimension mismatch"));
            }
            if lo
                .iter()
                .zip(hi)
                .any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b))
            {
                return Err(Error::domain("indicator box needs finite lo < hi"));
            }
            Ok(())
        }
        Profile::Radial { radii, values } => {
            if radii.len() < 2 || radii.len() != values.len() {
                return Err(Error::domain(
                    "radial profile needs >= 2 matching radii and values",
                ));
            }
            if radii[0] < 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::domain(
                    "radial grid must be nonnegative and strictly increasing",
                ));
            }
            if radii.iter().chain(values).any(|v| !v.is_finite()) {
                return Err(Error::domain("radial profile must be finite"));
            }
            Ok(())
        }
        Profile::Scaled { factor, inner } => {
            if !factor.is_finite() {
                return Err(Error::domain("filter scale factor must be finite"));
            }
            validate_profile(inner, dim)
        }
        Profile::Sum { left, right } => {
            validate_profile(left, dim)?;
            validate_profile(right, dim)
        }
    }
}
