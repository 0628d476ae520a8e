//! Subsampling distribution estimators over translated blocks `B + y` and the
//! confidence intervals for the mean built from their quantiles.
//!
//! Method 1 assumes a known `alpha > 1` and normalizes the block mean by the
//! rate `N^{1 - 1/alpha}`. Method 2 self-normalizes by the block standard
//! deviation with rate `sqrt(N)` and needs no knowledge of `alpha`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::region::{in_half_open, Region};
use crate::stats::{EmpiricalDistribution, MarkedSample};

pub const DEFAULT_TINY_SIGMA: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Rate-normalized mean with known `alpha`.
    Method1,
    /// Self-normalized mean.
    Method2,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Method1 => f.write_str("method1"),
            Method::Method2 => f.write_str("method2"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "method1" | "1" | "m1" => Ok(Method::Method1),
            "method2" | "2" | "m2" => Ok(Method::Method2),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

/// How block translations are chosen inside the anchor set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorScheme {
    /// Independent uniform draws on the anchor set.
    MonteCarlo { draws: usize },
    /// Regular grid with `per_axis` nodes per axis, corners included.
    Grid { per_axis: usize },
}

impl AnchorScheme {
    pub fn len(&self, dim: usize) -> usize {
        match *self {
            AnchorScheme::MonteCarlo { draws } => draws,
            AnchorScheme::Grid { per_axis } => per_axis.pow(dim as u32),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsampleConfig {
    pub c: f64,
    pub anchors: AnchorScheme,
    pub method: Method,
    /// Known stability index; required by Method 1.
    pub alpha: Option<f64>,
    /// Stand-in for a zero block standard deviation under Method 2.
    pub tiny_sigma: f64,
}

impl SubsampleConfig {
    pub fn method1(c: f64, draws: usize, alpha: f64) -> Result<Self> {
        let config = Self {
            c,
            anchors: AnchorScheme::MonteCarlo { draws },
            method: Method::Method1,
            alpha: Some(alpha),
            tiny_sigma: DEFAULT_TINY_SIGMA,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn method2(c: f64, draws: usize) -> Result<Self> {
        let config = Self {
            c,
            anchors: AnchorScheme::MonteCarlo { draws },
            method: Method::Method2,
            alpha: None,
            tiny_sigma: DEFAULT_TINY_SIGMA,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn for_method(method: Method, c: f64, draws: usize, alpha: f64) -> Result<Self> {
        match method {
            Method::Method1 => Self::method1(c, draws, alpha),
            Method::Method2 => Self::method2(c, draws),
        }
    }

    pub fn with_anchors(mut self, anchors: AnchorScheme) -> Result<Self> {
        self.anchors = anchors;
        self.validate()?;
        Ok(self)
    }

    pub fn with_tiny_sigma(mut self, tiny_sigma: f64) -> Result<Self> {
        self.tiny_sigma = tiny_sigma;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::domain(format!(
                "block ratio {} not in (0, 1)",
                self.c
            )));
        }
        match self.anchors {
            AnchorScheme::MonteCarlo { draws: 0 } | AnchorScheme::Grid { per_axis: 0 } => {
                return Err(Error::domain("need at least one anchor"));
            }
            _ => {}
        }
        if !(self.tiny_sigma > 0.0 && self.tiny_sigma.is_finite()) {
            return Err(Error::domain("tiny_sigma must be positive"));
        }
        if self.method == Method::Method1 {
            match self.alpha {
                Some(a) if a > 1.0 && a <= 2.0 => {}
                Some(a) => {
                    return Err(Error::domain(format!(
                        "method 1 needs alpha in (1, 2], got {a}"
                    )))
                }
                None => return Err(Error::domain("method 1 needs a known alpha")),
            }
        }
        Ok(())
    }
}

/// Count, mean and standard deviation (divisor `N`) of the marks in one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSummary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

impl BlockSummary {
    pub fn of(marks: &[f64]) -> Self {
        if marks.is_empty() {
            return Self {
                count: 0,
                mean: 0.0,
                std: 0.0,
            };
        }
        let n = marks.len() as f64;
        let mean = marks.iter().sum::<f64>() / n;
        let ss: f64 = marks.iter().map(|m| (m - mean) * (m - mean)).sum();
        Self {
            count: marks.len(),
            mean,
            std: (ss / n).sqrt(),
        }
    }

    /// Normalized, recentered block statistic. Empty blocks give 0; a zero
    /// block deviation under Method 2 is replaced by `tiny_sigma`, keeping the
    /// sign of the numerator.
    pub fn statistic(&self, full_mean: f64, config: &SubsampleConfig) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        let n = self.count as f64;
        let centered = self.mean - full_mean;
        match config.method {
            Method::Method1 => {
                let alpha = config
                    .alpha
                    .expect("validated method 1 config carries alpha");
                n.powf(1.0 - 1.0 / alpha) * centered
            }
            Method::Method2 => {
                let sigma = if self.std > 0.0 {
                    self.std
                } else {
                    config.tiny_sigma
                };
                n.sqrt() * centered / sigma
            }
        }
    }
}

/// Statistic of one subsample (the full sample restricted to `B + y`).
pub fn subsample_stat(sub: &MarkedSample, full_mean: f64, config: &SubsampleConfig) -> f64 {
    BlockSummary::of(sub.marks()).statistic(full_mean, config)
}

/// Anchor points in `K_n(1 - c)`, in draw order.
pub fn draw_anchors<R: Rng + ?Sized>(
    region: &Region,
    c: f64,
    scheme: AnchorScheme,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let erosion = region.erode(c)?;
    let anchors = &erosion.anchors;
    if !(anchors.area() > 0.0) {
        return Err(Error::domain("anchor set has zero volume"));
    }
    let lo = anchors.origin().to_vec();
    let extent = anchors.extent();
    let d = region.dim();
    match scheme {
        AnchorScheme::MonteCarlo { draws } => Ok((0..draws)
            .map(|_| {
                (0..d)
                    .map(|k| lo[k] + extent[k] * rng.random::<f64>())
                    .collect()
            })
            .collect()),
        AnchorScheme::Grid { per_axis } => {
            let total = per_axis.pow(d as u32);
            let step = |i: usize| {
                if per_axis == 1 {
                    0.0
                } else {
                    i as f64 / (per_axis - 1) as f64
                }
            };
            Ok((0..total)
                .map(|mut flat| {
                    let mut y = vec![0.0; d];
                    for k in (0..d).rev() {
                        y[k] = lo[k] + extent[k] * step(flat % per_axis);
                        flat /= per_axis;
                    }
                    y
                })
                .collect())
        }
    }
}

/// Block summaries for each anchor, evaluated in parallel, returned in anchor order.
pub fn block_summaries(
    full: &MarkedSample,
    c: f64,
    anchors: &[Vec<f64>],
) -> Result<Vec<BlockSummary>> {
    let region = full.pattern().region();
    let block = region.erode(c)?.block;
    let extent = block.extent();
    let summaries = anchors
        .par_iter()
        .map_init(Vec::new, |buf, y| {
            buf.clear();
            for (p, &m) in full.pattern().points().zip(full.marks()) {
                if in_half_open(p, y, &extent) {
                    buf.push(m);
                }
            }
            BlockSummary::of(buf)
        })
        .collect();
    Ok(summaries)
}

/// Empirical law `L_{K_n,B}` of the block statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsamplingDistribution {
    stats: EmpiricalDistribution,
    config: SubsampleConfig,
    zero_count_fraction: f64,
}

impl SubsamplingDistribution {
    pub fn from_summaries(
        summaries: &[BlockSummary],
        full_mean: f64,
        config: &SubsampleConfig,
    ) -> Result<Self> {
        config.validate()?;
        if summaries.is_empty() {
            return Err(Error::EmptySample);
        }
        let stats: Vec<f64> = summaries
            .iter()
            .map(|s| s.statistic(full_mean, config))
            .collect();
        let empty = summaries.iter().filter(|s| s.count == 0).count();
        Ok(Self {
            stats: EmpiricalDistribution::new(stats)?,
            config: *config,
            zero_count_fraction: empty as f64 / summaries.len() as f64,
        })
    }

    pub fn stats(&self) -> &EmpiricalDistribution {
        &self.stats
    }

    pub fn config(&self) -> &SubsampleConfig {
        &self.config
    }

    pub fn zero_count_fraction(&self) -> f64 {
        self.zero_count_fraction
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        self.stats.quantile(p)
    }
}

pub fn build_distribution<R: Rng + ?Sized>(
    full: &MarkedSample,
    config: &SubsampleConfig,
    rng: &mut R,
) -> Result<SubsamplingDistribution> {
    config.validate()?;
    let full_mean = full.mean()?;
    let anchors = draw_anchors(full.pattern().region(), config.c, config.anchors, rng)?;
    let summaries = block_summaries(full, config.c, &anchors)?;
    SubsamplingDistribution::from_summaries(&summaries, full_mean, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

fn check_level(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("error rate {p} not in (0, 1)")));
    }
    Ok(())
}

/// `(1 - p)` interval `[mu - L_{1-p/2} N^{1/alpha - 1}, mu - L_{p/2} N^{1/alpha - 1}]`.
pub fn ci_method1(
    full: &MarkedSample,
    dist: &SubsamplingDistribution,
    p: f64,
    alpha: f64,
) -> Result<Interval> {
    check_level(p)?;
    if dist.config.method != Method::Method1 || dist.config.alpha != Some(alpha) {
        return Err(Error::domain(
            "distribution was not built with method 1 at this alpha",
        ));
    }
    let mu = full.mean()?;
    let rate = (full.len() as f64).powf(1.0 / alpha - 1.0);
    Ok(Interval {
        lower: mu - dist.quantile(1.0 - p / 2.0)? * rate,
        upper: mu - dist.quantile(p / 2.0)? * rate,
    })
}

/// `(1 - p)` interval `[mu - L_{1-p/2} sigma / sqrt(N), mu - L_{p/2} sigma / sqrt(N)]`.
pub fn ci_method2(full: &MarkedSample, dist: &SubsamplingDistribution, p: f64) -> Result<Interval> {
    check_level(p)?;
    if dist.config.method != Method::Method2 {
        return Err(Error::domain("distribution was not built with method 2"));
    }
    let mu = full.mean()?;
    let width = full.std()? / (full.len() as f64).sqrt();
    Ok(Interval {
        lower: mu - dist.quantile(1.0 - p / 2.0)? * width,
        upper: mu - dist.quantile(p / 2.0)? * width,
    })
}

/// Dispatches on the method the distribution was built with.
pub fn confidence_interval(
    full: &MarkedSample,
    dist: &SubsamplingDistribution,
    p: f64,
) -> Result<Interval> {
    match dist.config.method {
        Method::Method1 => ci_method1(full, dist, p, dist.config.alpha.unwrap_or(f64::NAN)),
        Method::Method2 => ci_method2(full, dist, p),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantilePoint {
    pub p: f64,
    pub value: f64,
}

/// Exported summary of one distribution and interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiRecord {
    pub method: Method,
    pub c: f64,
    #[serde(rename = "M")]
    pub draws: usize,
    pub level: f64,
    pub quantiles: Vec<QuantilePoint>,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub zero_count_fraction: f64,
}

impl CiRecord {
    /// Interval at nominal coverage `level` together with the quantiles it used.
    pub fn new(full: &MarkedSample, dist: &SubsamplingDistribution, level: f64) -> Result<Self> {
        let p = 1.0 - level;
        let interval = confidence_interval(full, dist, p)?;
        let quantiles = [p / 2.0, 1.0 - p / 2.0]
            .iter()
            .map(|&q| {
                Ok(QuantilePoint {
                    p: q,
                    value: dist.quantile(q)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            method: dist.config.method,
            c: dist.config.c,
            draws: dist.stats.count(),
            level,
            quantiles,
            ci_lower: interval.lower,
            ci_upper: interval.upper,
            zero_count_fraction: dist.zero_count_fraction,
        })
    }
}
