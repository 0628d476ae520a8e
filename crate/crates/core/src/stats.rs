//! Point estimators on marked samples and empirical distribution utilities.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::FilterSpec;
use crate::quadrature::Quadrature;
use crate::region::{coordinate_header, PointPattern, Region};

/// Observation points paired with their marks `Z(t_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedSample {
    pattern: PointPattern,
    marks: Vec<f64>,
}

impl MarkedSample {
    pub fn new(pattern: PointPattern, marks: Vec<f64>) -> Result<Self> {
        if marks.len() != pattern.len() {
            return Err(Error::domain(format!(
                "{} marks for {} points",
                marks.len(),
                pattern.len()
            )));
        }
        Ok(Self { pattern, marks })
    }

    pub fn pattern(&self) -> &PointPattern {
        &self.pattern
    }

    pub fn marks(&self) -> &[f64] {
        &self.marks
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    /// Same points, marks replaced by `f(mark)`.
    pub fn map_marks(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            pattern: self.pattern.clone(),
            marks: self.marks.iter().map(|&m| f(m)).collect(),
        }
    }

    pub fn restrict(&self, anchor: &[f64], block: &Region) -> Result<MarkedSample> {
        let idx = self.pattern.block_indices(anchor, block)?;
        let sub = self.pattern.restrict(anchor, block)?;
        let marks = idx.iter().map(|&i| self.marks[i]).collect();
        MarkedSample::new(sub, marks)
    }

    pub fn mean(&self) -> Result<f64> {
        mean(&self.marks)
    }

    pub fn std(&self) -> Result<f64> {
        std_dev(&self.marks)
    }

    /// Writes `x, y, mark` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = coordinate_header(self.pattern.dim());
        header.push("mark".into());
        w.write_record(&header)?;
        for (p, m) in self.pattern.points().zip(&self.marks) {
            let mut row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            row.push(m.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads rows written by [`MarkedSample::write_csv`]; points must fall in `region`.
    pub fn read_csv<R: std::io::Read>(input: R, region: Region, intensity: f64) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let d = region.dim();
        let mut points = Vec::new();
        let mut marks = Vec::new();
        for row in reader.records() {
            let row = row?;
            if row.len() != d + 1 {
                return Err(Error::Config(format!(
                    "expected {} columns, found {}",
                    d + 1,
                    row.len()
                )));
            }
            let values = row
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Config(format!("bad number in data file: {e}")))?;
            points.push(values[..d].to_vec());
            marks.push(values[d]);
        }
        let pattern = PointPattern::new(&points, region, intensity)?;
        MarkedSample::new(pattern, marks)
    }
}

pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Standard deviation with divisor `N`.
pub fn std_dev(values: &[f64]) -> Result<f64> {
    let m = mean(values)?;
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Ok((ss / values.len() as f64).sqrt())
}

pub fn sample_mean(sample: &MarkedSample) -> Result<f64> {
    sample.mean()
}

pub fn sample_std(sample: &MarkedSample) -> Result<f64> {
    sample.std()
}

/// `sqrt(N) (mean - mu0) / std`.
pub fn self_normalized(sample: &MarkedSample, mu0: f64) -> Result<f64> {
    let m = sample.mean()?;
    let s = sample.std()?;
    if s == 0.0 {
        return Err(Error::DegenerateSample);
    }
    Ok((sample.len() as f64).sqrt() * (m - mu0) / s)
}

/// Codifference `2 ||psi||_alpha^alpha - ||psi(. + h) - psi||_alpha^alpha`.
pub fn codifference(filter: &FilterSpec, alpha: f64, lag: &[f64]) -> Result<f64> {
    codifference_with(filter, alpha, lag, &Quadrature::default())
}

pub fn codifference_with(
    filter: &FilterSpec,
    alpha: f64,
    lag: &[f64],
    quad: &Quadrature,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::domain(format!("alpha {alpha} not in (0, 2]")));
    }
    if lag.len() != filter.dim() {
        return Err(Error::domain("lag dimension does not match filter"));
    }
    let norm = filter.abs_power_integral_with(alpha, quad)?;
    if lag.iter().all(|h| *h == 0.0) {
        return Ok(2.0 * norm);
    }
    let (bounds, breaks) = shifted_cover(filter, alpha, lag);
    let diff = quad.integrate(
        |x| {
            let shifted: Vec<f64> = x.iter().zip(lag).map(|(a, h)| a + h).collect();
            (filter.evaluate(&shifted) - filter.evaluate(x))
                .abs()
                .powf(alpha)
        },
        &bounds,
        &breaks,
    )?;
    Ok(2.0 * norm - diff)
}

/// Bounding box and axis cut points covering the supports of `psi` and `psi(. + h)`.
pub(crate) fn shifted_cover(
    filter: &FilterSpec,
    power: f64,
    lag: &[f64],
) -> (Vec<(f64, f64)>, Vec<Vec<f64>>) {
    let support = filter.support_box(power);
    let base = filter.breakpoints();
    let mut bounds = Vec::with_capacity(support.len());
    let mut breaks = Vec::with_capacity(support.len());
    for (k, &(lo, hi)) in support.iter().enumerate() {
        let h = lag[k];
        bounds.push((lo.min(lo - h), hi.max(hi - h)));
        let mut cuts = vec![lo, hi, lo - h, hi - h];
        for &b in &base[k] {
            cuts.push(b);
            cuts.push(b - h);
        }
        breaks.push(cuts);
    }
    (bounds, breaks)
}

/// Empirical distribution of a finite sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    values: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::domain("empirical distribution cannot hold NaN"));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    /// `#{values <= x} / count`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.count() as f64
    }

    /// `inf {x : F(x) >= p}`, i.e. the `ceil(p n)`-th order statistic.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("quantile level {p} not in (0, 1)")));
        }
        let n = self.count() as f64;
        // absorb rounding in p * n so exact multiples select the right rank
        let rank = (p * n - 1e-9).ceil().max(1.0) as usize;
        Ok(self.values[rank.min(self.count()) - 1])
    }

    /// Sorted values, one per line, under a `value` header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["value"])?;
        for v in &self.values {
            w.write_record([v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn quantile(dist: &EmpiricalDistribution, p: f64) -> Result<f64> {
    dist.quantile(p)
}

/// `sup_x |F_a(x) - F_b(x)|`, evaluated at every jump point.
pub fn ks_distance(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let (xs, ys) = (a.values(), b.values());
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Two-sample Kolmogorov–Smirnov statistic with its asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

impl KsTest {
    pub fn rejects_at(&self, level: f64) -> bool {
        self.p_value < level
    }
}

pub fn ks_two_sample(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> KsTest {
    let statistic = ks_distance(a, b);
    let (n, m) = (a.count() as f64, b.count() as f64);
    let en = (n * m / (n + m)).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * statistic;
    KsTest {
        statistic,
        p_value: kolmogorov_survival(lambda),
    }
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut total = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let j = j as f64;
        let term = sign * (-2.0 * j * j * lambda * lambda).exp();
        total += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * total).clamp(0.0, 1.0)
}
