//! Symmetric stable random fields `X(t) = int psi(x + t) M(dx)` simulated by
//! the truncated LePage series
//!
//! `X(t) = mu + C_alpha^{1/alpha} sum_i eps_i Gamma_i^{-1/alpha} psi(U_i + t - v) q(U_i)^{-1/alpha}`
//!
//! with Rademacher signs `eps_i`, unit Poisson arrival times `Gamma_i` and
//! locations `U_i` drawn from the product Cauchy density `q`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Cauchy, Distribution, Exp1};

use crate::error::{Error, Result};
use crate::filter::FilterSpec;
use crate::region::PointPattern;
use crate::stable::c_alpha;
use crate::stats::MarkedSample;

/// Location-shifted symmetric stable field `Z(t) = X(t) + mu`.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    filter: FilterSpec,
    alpha: f64,
    mu: f64,
    center: Vec<f64>,
}

impl ModelSpec {
    pub fn new(filter: FilterSpec, alpha: f64, mu: f64, center: Vec<f64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::domain(format!(
                "series simulation needs alpha in (0, 2), got {alpha}"
            )));
        }
        if center.len() != filter.dim() {
            return Err(Error::domain("center dimension does not match filter"));
        }
        if !mu.is_finite() || center.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("location and center must be finite"));
        }
        Ok(Self {
            filter,
            alpha,
            mu,
            center,
        })
    }

    pub fn filter(&self) -> &FilterSpec {
        &self.filter
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn dim(&self) -> usize {
        self.filter.dim()
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..self.clone() }
    }

    pub fn with_filter(&self, filter: FilterSpec) -> Result<Self> {
        Self::new(filter, self.alpha, self.mu, self.center.clone())
    }
}

/// Product of independent standard Cauchy densities.
pub fn cauchy_density(u: &[f64]) -> f64 {
    u.iter().map(|x| 1.0 / (PI * (1.0 + x * x))).product()
}

/// One draw of the series ingredients, truncated at `terms` summands.
#[derive(Debug, Clone)]
pub struct SeriesRealization {
    signs: Vec<f64>,
    arrivals: Vec<f64>,
    locations: Vec<f64>,
    /// `C^{1/alpha} eps_i Gamma_i^{-1/alpha} q(U_i)^{-1/alpha}`
    weights: Vec<f64>,
    dim: usize,
    alpha: f64,
    c_alpha_root: f64,
}

impl SeriesRealization {
    pub fn terms(&self) -> usize {
        self.arrivals.len()
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn arrivals(&self) -> &[f64] {
        &self.arrivals
    }

    pub fn location(&self, i: usize) -> &[f64] {
        &self.locations[i * self.dim..(i + 1) * self.dim]
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c_alpha_root(&self) -> f64 {
        self.c_alpha_root
    }

    /// The first `terms` summands; identical to a fresh draw of that length
    /// from the same stream.
    pub fn truncated(&self, terms: usize) -> Self {
        let k = terms.min(self.terms());
        Self {
            signs: self.signs[..k].to_vec(),
            arrivals: self.arrivals[..k].to_vec(),
            locations: self.locations[..k * self.dim].to_vec(),
            weights: self.weights[..k].to_vec(),
            dim: self.dim,
            alpha: self.alpha,
            c_alpha_root: self.c_alpha_root,
        }
    }

    /// Field value at `t`.
    pub fn eval_mark(&self, model: &ModelSpec, t: &[f64]) -> Result<f64> {
        if t.len() != model.dim() || self.dim != model.dim() {
            return Err(Error::domain("point dimension does not match the filter"));
        }
        if self.alpha != model.alpha() {
            return Err(Error::domain("realization was drawn for a different alpha"));
        }
        Ok(self.eval_unchecked(model, t))
    }

    fn eval_unchecked(&self, model: &ModelSpec, t: &[f64]) -> f64 {
        let shift: Vec<f64> = t.iter().zip(model.center()).map(|(x, v)| x - v).collect();
        let mut arg = vec![0.0; self.dim];
        let mut total = 0.0;
        for (u, w) in self.locations.chunks_exact(self.dim).zip(&self.weights) {
            for (a, (ui, si)) in arg.iter_mut().zip(u.iter().zip(&shift)) {
                *a = ui + si;
            }
            total += w * model.filter().evaluate(&arg);
        }
        model.mu() + total
    }

    /// Marks for every point of a pattern.
    pub fn marks(&self, model: &ModelSpec, pattern: &PointPattern) -> Result<Vec<f64>> {
        if pattern.dim() != model.dim() {
            return Err(Error::domain("pattern dimension does not match the filter"));
        }
        if self.alpha != model.alpha() {
            return Err(Error::domain("realization was drawn for a different alpha"));
        }
        Ok(pattern
            .points()
            .map(|t| self.eval_unchecked(model, t))
            .collect())
    }
}

/// Draws `terms` series summands. Terms are generated one at a time, so a
/// shorter draw is a prefix of a longer one on the same stream.
pub fn draw_realization<R: Rng + ?Sized>(
    model: &ModelSpec,
    terms: usize,
    rng: &mut R,
) -> Result<SeriesRealization> {
    if terms == 0 {
        return Err(Error::domain("series needs at least one term"));
    }
    let alpha = model.alpha();
    let d = model.dim();
    let c_alpha_root = c_alpha(alpha)?.powf(1.0 / alpha);
    let cauchy = Cauchy::new(0.0, 1.0).expect("standard cauchy");

    let mut signs = Vec::with_capacity(terms);
    let mut arrivals = Vec::with_capacity(terms);
    let mut locations = Vec::with_capacity(terms * d);
    let mut weights = Vec::with_capacity(terms);
    let mut gamma = 0.0;
    for _ in 0..terms {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let step: f64 = Exp1.sample(rng);
        gamma += step;
        let start = locations.len();
        for _ in 0..d {
            locations.push(cauchy.sample(rng));
        }
        let q = cauchy_density(&locations[start..]);
        weights.push(c_alpha_root * sign * gamma.powf(-1.0 / alpha) * q.powf(-1.0 / alpha));
        signs.push(sign);
        arrivals.push(gamma);
    }
    Ok(SeriesRealization {
        signs,
        arrivals,
        locations,
        weights,
        dim: d,
        alpha,
        c_alpha_root,
    })
}

/// Draws a fresh realization and marks every point of `pattern` with it.
pub fn simulate_marks<R: Rng + ?Sized>(
    model: &ModelSpec,
    pattern: &PointPattern,
    terms: usize,
    rng: &mut R,
) -> Result<MarkedSample> {
    let realization = draw_realization(model, terms, rng)?;
    let marks = realization.marks(model, pattern)?;
    MarkedSample::new(pattern.clone(), marks)
}

/// Scale of the marginal law of `X(t)`: `(int |psi|^alpha)^{1/alpha}`.
pub fn sigma_psi(filter: &FilterSpec, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::domain(format!("alpha {alpha} not in (0, 2]")));
    }
    Ok(filter.abs_power_integral(alpha)?.powf(1.0 / alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::Profile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(alpha: f64) -> ModelSpec {
        ModelSpec::new(FilterSpec::gauss2d(), alpha, 0.0, vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn first_arrival_is_unit_exponential() {
        let m = model(1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mean = (0..100_000)
            .map(|_| draw_realization(&m, 1, &mut rng).unwrap().arrivals()[0])
            .sum::<f64>()
            / 1e5;
        assert!((0.99..=1.01).contains(&mean), "{mean}");
    }

    #[test]
    fn hundredth_arrival_mean() {
        let m = model(1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 10_000;
        let mean = (0..draws)
            .map(|_| draw_realization(&m, 100, &mut rng).unwrap().arrivals()[99])
            .sum::<f64>()
            / draws as f64;
        // sd of Gamma_100 is 10; window of three standard errors
        assert!(
            (mean - 100.0).abs() <= 3.0 * 10.0 / (draws as f64).sqrt(),
            "{mean}"
        );
    }

    #[test]
    fn arrivals_strictly_increase_and_lengths_match() {
        let m = model(1.2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for terms in [1, 2, 50, 500] {
            let r = draw_realization(&m, terms, &mut rng).unwrap();
            assert!(r.arrivals().windows(2).all(|w| w[1] > w[0]));
            assert_eq!(r.signs().len(), terms);
            assert_eq!(r.locations.len(), terms * 2);
            assert!(r.signs().iter().all(|s| s.abs() == 1.0));
        }
        assert!(draw_realization(&m, 0, &mut rng).is_err());
    }

    #[test]
    fn shorter_draw_is_prefix() {
        let m = model(1.5);
        let long = draw_realization(&m, 400, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let short = draw_realization(&m, 200, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let t = [0.3, -0.2];
        assert_eq!(
            long.truncated(200).eval_mark(&m, &t).unwrap(),
            short.eval_mark(&m, &t).unwrap()
        );
    }

    #[test]
    fn zero_filter_gives_location() {
        let m = ModelSpec::new(FilterSpec::zero(2), 1.5, 3.25, vec![0.0, 0.0]).unwrap();
        let r = draw_realization(&m, 100, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        for t in [[0.0, 0.0], [5.0, -2.0]] {
            assert_eq!(r.eval_mark(&m, &t).unwrap(), 3.25);
        }
    }

    #[test]
    fn evaluation_is_deterministic() {
        let m = model(1.5);
        let r = draw_realization(&m, 100, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let t = [1.0, 2.0];
        assert_eq!(r.eval_mark(&m, &t).unwrap(), r.eval_mark(&m, &t).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_domain_error() {
        let m = model(1.5);
        let r = draw_realization(&m, 10, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        assert!(matches!(r.eval_mark(&m, &[0.0]), Err(Error::Domain(_))));
        let other = model(1.4);
        assert!(r.eval_mark(&other, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn marks_are_linear_in_the_filter() {
        let f1 = FilterSpec::gauss2d();
        let f2 = FilterSpec::new(
            Profile::Gaussian {
                amplitude: -0.7,
                bandwidth: 2.0,
            },
            2,
            1.0,
        )
        .unwrap();
        let m1 = ModelSpec::new(f1.clone(), 1.5, 0.0, vec![0.0, 0.0]).unwrap();
        let m2 = m1.with_filter(f2.clone()).unwrap();
        let m12 = m1.with_filter(f1.sum(&f2).unwrap()).unwrap();
        let r = draw_realization(&m1, 300, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        for t in [[0.0, 0.0], [1.5, -0.5], [-3.0, 2.0]] {
            let a = r.eval_mark(&m1, &t).unwrap();
            let b = r.eval_mark(&m2, &t).unwrap();
            let ab = r.eval_mark(&m12, &t).unwrap();
            assert!((ab - (a + b)).abs() <= 1e-12 * (a.abs() + b.abs()).max(1.0));
        }
    }

    #[test]
    fn sigma_psi_closed_forms() {
        let f = FilterSpec::gauss2d();
        assert!((sigma_psi(&f, 2.0).unwrap() - std::f64::consts::PI.sqrt()).abs() < 1e-9);
        assert!((sigma_psi(&f, 1.0).unwrap() - 2.0 * PI).abs() < 1e-8);
        let expected = (2.0 * PI / 1.5).powf(1.0 / 1.5);
        assert!((sigma_psi(&f, 1.5).unwrap() - expected).abs() < 1e-8);
    }

    #[test]
    fn sigma_psi_is_homogeneous() {
        let f = FilterSpec::gauss2d();
        for k in [0.5, 3.0] {
            let scaled = sigma_psi(&f.scaled(k), 1.5).unwrap();
            assert!((scaled - k * sigma_psi(&f, 1.5).unwrap()).abs() < 1e-8);
        }
    }
}
