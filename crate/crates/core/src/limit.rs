//! Limit-law constants for normalized sums over Poisson-sampled stable fields,
//! evaluated by Monte Carlo over the Poisson random measure and by quadrature.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::FilterSpec;
use crate::quadrature::{pairwise_sum, Quadrature};
use crate::stable::abs_moment_gaussian;
use crate::stats::{codifference_with, shifted_cover};

/// Draws per independently seeded chunk.
const CHUNK: usize = 1024;
/// Refuse PRM simulation when a single draw would hold more points than this on average.
const MAX_MEAN_POINTS: f64 = 1e6;

/// Functional of `N` integrated against the filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerMode {
    /// `|sum psi(s_i)|^alpha`
    MeanAbsAlpha,
    /// `(sum psi(s_i))^2`
    Square,
    /// `(sum psi(s_i)^2)^{alpha/2}`
    SqSumAlphaHalf,
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
    pub draws: usize,
}

impl Estimate {
    fn exact(value: f64, draws: usize) -> Self {
        Self {
            estimate: value,
            std_error: 0.0,
            draws,
        }
    }

    /// Delta-method image under a differentiable map.
    fn map(self, f: impl Fn(f64) -> f64, derivative: f64) -> Self {
        Self {
            estimate: f(self.estimate),
            std_error: derivative.abs() * self.std_error,
            draws: self.draws,
        }
    }
}

/// `E` of the chosen functional of the PRM with mean measure `r * Lebesgue`.
///
/// The PRM is simulated on the filter's effective-support box only. Draws are
/// split into fixed-size chunks with their own counter-based streams keyed by
/// one seed taken from `rng`, so the result does not depend on thread count.
pub fn poisson_functional_moment<R: Rng + ?Sized>(
    filter: &FilterSpec,
    r: f64,
    alpha: f64,
    mode: PowerMode,
    draws: usize,
    rng: &mut R,
) -> Result<Estimate> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("intensity {r} must be positive")));
    }
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::domain(format!("alpha {alpha} not in (0, 2]")));
    }
    if draws < 100 {
        return Err(Error::domain("need at least 100 Monte Carlo draws"));
    }
    let seed: u64 = rng.random();
    let support = filter.support_box(1.0);
    let volume: f64 = support.iter().map(|(a, b)| b - a).product();
    if !volume.is_finite() || r * volume > MAX_MEAN_POINTS {
        return Err(Error::domain(
            "filter support is too large to simulate the point process",
        ));
    }
    if volume == 0.0 {
        return Ok(Estimate::exact(0.0, draws));
    }
    let poisson = Poisson::new(r * volume).map_err(|e| Error::domain(e.to_string()))?;

    let chunks = draws.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let n = CHUNK.min(draws - chunk * CHUNK);
            let mut point = vec![0.0; support.len()];
            let mut values = Vec::with_capacity(n);
            for _ in 0..n {
                let count = poisson.sample(&mut rng) as usize;
                let (mut linear, mut square) = (0.0, 0.0);
                for _ in 0..count {
                    for (x, (a, b)) in point.iter_mut().zip(&support) {
                        *x = a + (b - a) * rng.random::<f64>();
                    }
                    let v = filter.evaluate(&point);
                    linear += v;
                    square += v * v;
                }
                values.push(match mode {
                    PowerMode::MeanAbsAlpha => linear.abs().powf(alpha),
                    PowerMode::Square => linear * linear,
                    PowerMode::SqSumAlphaHalf => square.powf(alpha / 2.0),
                });
            }
            let sum = pairwise_sum(&values);
            let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
            (sum, pairwise_sum(&sq))
        })
        .collect();

    let sums: Vec<f64> = partial.iter().map(|p| p.0).collect();
    let squares: Vec<f64> = partial.iter().map(|p| p.1).collect();
    let n = draws as f64;
    let mean = pairwise_sum(&sums) / n;
    let var = ((pairwise_sum(&squares) / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok(Estimate {
        estimate: mean,
        std_error: (var / n).sqrt(),
        draws,
    })
}

/// Scale of the limit `r^{-1/alpha} S_inf` of `N(K_n)^{-1/alpha} sum X(t_i)`:
/// `(E|int psi dN|^alpha / r)^{1/alpha}`.
pub fn limit_scale_mean<R: Rng + ?Sized>(
    filter: &FilterSpec,
    r: f64,
    alpha: f64,
    draws: usize,
    rng: &mut R,
) -> Result<Estimate> {
    let moment = poisson_functional_moment(filter, r, alpha, PowerMode::MeanAbsAlpha, draws, rng)?;
    let m = moment.estimate / r;
    if m == 0.0 {
        return Ok(Estimate::exact(0.0, draws));
    }
    let derivative = m.powf(1.0 / alpha - 1.0) / (alpha * r);
    Ok(moment.map(|v| (v / r).powf(1.0 / alpha), derivative))
}

/// Scale of the totally skewed `alpha/2`-stable limit of the normalized sum of
/// squares: `2 (cos(pi alpha / 4) E[(int psi^2 dN)^{alpha/2}] E|G|^alpha)^{2/alpha}`.
///
/// At `alpha = 2` the limit is the point mass `2 r int psi^2`, reported as
/// [`Error::DegenerateLimit`].
pub fn limit_scale_variance<R: Rng + ?Sized>(
    filter: &FilterSpec,
    r: f64,
    alpha: f64,
    draws: usize,
    rng: &mut R,
) -> Result<Estimate> {
    if alpha == 2.0 {
        let point_mass = 2.0 * r * filter.abs_power_integral(2.0)?;
        return Err(Error::DegenerateLimit { point_mass });
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::domain(format!("alpha {alpha} not in (0, 2]")));
    }
    let moment =
        poisson_functional_moment(filter, r, alpha, PowerMode::SqSumAlphaHalf, draws, rng)?;
    let factor = (PI * alpha / 4.0).cos() * abs_moment_gaussian(alpha)?;
    let m = moment.estimate;
    if m == 0.0 {
        return Ok(Estimate::exact(0.0, draws));
    }
    let value = |v: f64| 2.0 * (factor * v).powf(2.0 / alpha);
    let derivative = 2.0 * (2.0 / alpha) * factor.powf(2.0 / alpha) * m.powf(2.0 / alpha - 1.0);
    Ok(moment.map(value, derivative))
}

/// Covariance function of the Gaussian field at unit intensity:
/// `2 int psi(x) psi(x + h) dx`.
pub fn covariance(filter: &FilterSpec, lag: &[f64], quad: &Quadrature) -> Result<f64> {
    if lag.len() != filter.dim() {
        return Err(Error::domain("lag dimension does not match filter"));
    }
    let (bounds, breaks) = intersection_cover(filter, lag);
    if bounds.iter().any(|(a, b)| b <= a) {
        return Ok(0.0);
    }
    let v = quad.integrate(
        |x| {
            let shifted: Vec<f64> = x.iter().zip(lag).map(|(a, h)| a + h).collect();
            filter.evaluate(x) * filter.evaluate(&shifted)
        },
        &bounds,
        &breaks,
    )?;
    Ok(2.0 * v)
}

/// Box where both `psi` and `psi(. + h)` can be non-negligible.
fn intersection_cover(filter: &FilterSpec, lag: &[f64]) -> (Vec<(f64, f64)>, Vec<Vec<f64>>) {
    let (_, breaks) = shifted_cover(filter, 1.0, lag);
    let bounds = filter
        .support_box(1.0)
        .iter()
        .zip(lag)
        .map(|(&(lo, hi), h)| (lo.max(lo - h), hi.min(hi - h)))
        .collect();
    (bounds, breaks)
}

/// Box of lags where a lagged product of the filter can be non-negligible.
fn lag_box(filter: &FilterSpec, power: f64) -> (Vec<(f64, f64)>, Vec<Vec<f64>>) {
    let support = filter.support_box(power);
    let base = filter.breakpoints();
    let bounds = support.iter().map(|&(lo, hi)| (lo - hi, hi - lo)).collect();
    let breaks = support
        .iter()
        .zip(&base)
        .map(|(&(lo, hi), cuts)| {
            let mut edges = cuts.clone();
            edges.extend([lo, hi]);
            let mut lags = Vec::with_capacity(edges.len() * edges.len());
            for a in &edges {
                for b in &edges {
                    lags.push(a - b);
                }
            }
            lags
        })
        .collect();
    (bounds, breaks)
}

/// Variance of the Gaussian limit `r^{-1/2} S_inf(2)`: `r int tau + tau(0)`
/// with `tau` the unit-intensity covariance, by nested quadrature. At `r = 1`
/// this is the integrated covariance plus its value at the origin.
pub fn gaussian_limit_variance(filter: &FilterSpec, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("intensity {r} must be positive")));
    }
    let inner = Quadrature::new(1e-11).with_abs_tol(1e-15);
    let outer = Quadrature::new(1e-9);
    let at_zero = covariance(filter, &vec![0.0; filter.dim()], &inner)?;
    if at_zero == 0.0 {
        return Ok(0.0);
    }
    let (bounds, breaks) = lag_box(filter, 1.0);
    let integrated = outer.integrate(
        |lag| covariance(filter, lag, &inner).unwrap_or(f64::NAN),
        &bounds,
        &breaks,
    )?;
    Ok(r * integrated + at_zero)
}

/// Both sides of the tempting identity `E|int psi dN|^alpha = (int tau + tau(0)) / 2`
/// with `tau` the codifference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodifferenceGap {
    pub gap: f64,
    pub moment: Estimate,
    pub codifference_side: f64,
}

impl CodifferenceGap {
    /// Gap measured in Monte Carlo standard errors.
    pub fn z_score(&self) -> f64 {
        if self.moment.std_error == 0.0 {
            if self.gap == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.gap / self.moment.std_error
        }
    }
}

pub fn remark3_gap<R: Rng + ?Sized>(
    filter: &FilterSpec,
    alpha: f64,
    r: f64,
    draws: usize,
    rng: &mut R,
) -> Result<CodifferenceGap> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::domain(format!("alpha {alpha} not in (0, 2]")));
    }
    let moment = poisson_functional_moment(filter, r, alpha, PowerMode::MeanAbsAlpha, draws, rng)?;
    let inner = Quadrature::new(1e-10).with_abs_tol(1e-14);
    let at_zero = codifference_with(filter, alpha, &vec![0.0; filter.dim()], &inner)?;
    let codifference_side = if at_zero == 0.0 {
        0.0
    } else {
        let (bounds, breaks) = lag_box(filter, alpha);
        let integrated = Quadrature::new(1e-8).integrate(
            |lag| codifference_with(filter, alpha, lag, &inner).unwrap_or(f64::NAN),
            &bounds,
            &breaks,
        )?;
        0.5 * (integrated + at_zero)
    };
    Ok(CodifferenceGap {
        gap: (moment.estimate - codifference_side).abs(),
        moment,
        codifference_side,
    })
}

/// Checks `||a|^alpha - |b|^alpha| <= |a - b|^alpha` for `alpha <= 1`, and for
/// `1 < alpha <= 2` the bound
/// `|a - b|^alpha + 2 max(|a|, |b|)^{alpha/2} |a - b|^{alpha/2}`.
pub fn lemma1_holds(a: f64, b: f64, alpha: f64) -> bool {
    power_difference_check(a, b, alpha, |m| m.powf(alpha / 2.0))
}

/// Same check with the unexponentiated factor `2 max(|a|, |b|)`.
pub fn lemma1_holds_unexponentiated(a: f64, b: f64, alpha: f64) -> bool {
    power_difference_check(a, b, alpha, |m| m)
}

fn power_difference_check(a: f64, b: f64, alpha: f64, factor: impl Fn(f64) -> f64) -> bool {
    const SLACK: f64 = 1e-12;
    let lhs = (a.abs().powf(alpha) - b.abs().powf(alpha)).abs();
    let diff = (a - b).abs();
    let rhs = if alpha <= 1.0 {
        diff.powf(alpha)
    } else {
        diff.powf(alpha) + 2.0 * factor(a.abs().max(b.abs())) * diff.powf(alpha / 2.0)
    };
    lhs <= rhs + SLACK
}

/// Limiting parameters of the normalized mean and sum of squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitParams {
    pub scale_mean: f64,
    /// Absent at `alpha = 2`, where the limit is a point mass.
    pub scale_variance: Option<f64>,
    pub phi: f64,
    pub phi2: f64,
    pub mc_draws: usize,
    pub mc_standard_error: f64,
}

impl LimitParams {
    pub fn compute<R: Rng + ?Sized>(
        filter: &FilterSpec,
        r: f64,
        alpha: f64,
        draws: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mean = limit_scale_mean(filter, r, alpha, draws, rng)?;
        let (scale_variance, variance_se) = match limit_scale_variance(filter, r, alpha, draws, rng)
        {
            Ok(e) => (Some(e.estimate), e.std_error),
            Err(Error::DegenerateLimit { .. }) => (None, 0.0),
            Err(e) => return Err(e),
        };
        Ok(Self {
            scale_mean: mean.estimate,
            scale_variance,
            phi: filter.integral()?,
            phi2: filter.abs_power_integral(2.0)?.sqrt(),
            mc_draws: draws,
            mc_standard_error: mean.std_error.max(variance_se),
        })
    }
}
