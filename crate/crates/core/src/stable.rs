//! Univariate stable laws in the Samorodnitsky–Taqqu parameterization.
//!
//! `S_alpha(scale, beta, location)`; at `alpha = 2` the law is normal with
//! variance `2 * scale^2`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1, Uniform};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    alpha: f64,
    beta: f64,
    scale: f64,
    location: f64,
}

impl StableParams {
    pub fn new(alpha: f64, beta: f64, scale: f64, location: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::domain(format!(
                "stability index {alpha} not in (0, 2]"
            )));
        }
        if !(-1.0..=1.0).contains(&beta) {
            return Err(Error::domain(format!("skewness {beta} not in [-1, 1]")));
        }
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::domain(format!(
                "scale {scale} must be finite and >= 0"
            )));
        }
        if !location.is_finite() {
            return Err(Error::domain("location must be finite"));
        }
        // beta has no meaning for the Gaussian case
        let beta = if alpha == 2.0 { 0.0 } else { beta };
        Ok(Self {
            alpha,
            beta,
            scale,
            location,
        })
    }

    /// Symmetric law with zero location.
    pub fn symmetric(alpha: f64, scale: f64) -> Result<Self> {
        Self::new(alpha, 0.0, scale, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn location(&self) -> f64 {
        self.location
    }

    /// Draws one variate with the Chambers–Mallows–Stuck transform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v = rng.sample(Uniform::new(-FRAC_PI_2, FRAC_PI_2).unwrap());
        let w: f64 = Exp1.sample(rng);
        let (alpha, beta) = (self.alpha, self.beta);

        if alpha == 1.0 {
            let shifted = FRAC_PI_2 + beta * v;
            let z =
                (shifted * v.tan() - beta * (FRAC_PI_2 * w * v.cos() / shifted).ln()) / FRAC_PI_2;
            let drift = if beta != 0.0 && self.scale > 0.0 {
                beta * self.scale * self.scale.ln() / FRAC_PI_2
            } else {
                0.0
            };
            return self.scale * z + drift + self.location;
        }

        let z = if beta == 0.0 {
            (alpha * v).sin() / v.cos().powf(1.0 / alpha)
                * ((v - alpha * v).cos() / w).powf((1.0 - alpha) / alpha)
        } else {
            let t = beta * (FRAC_PI_2 * alpha).tan();
            let shift = t.atan() / alpha;
            let stretch = (1.0 + t * t).powf(1.0 / (2.0 * alpha));
            stretch * (alpha * (v + shift)).sin() / v.cos().powf(1.0 / alpha)
                * ((v - alpha * (v + shift)).cos() / w).powf((1.0 - alpha) / alpha)
        };
        self.scale * z + self.location
    }
}

impl Distribution<f64> for StableParams {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        StableParams::sample(self, rng)
    }
}

pub fn sample_stable<R: Rng + ?Sized>(params: &StableParams, rng: &mut R) -> f64 {
    params.sample(rng)
}

/// The series-representation constant `C_alpha = (int_0^inf x^-alpha sin x dx)^-1`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::domain(format!(
            "C_alpha needs alpha in (0, 2), got {alpha}"
        )));
    }
    if alpha == 1.0 {
        return Ok(2.0 / PI);
    }
    Ok((1.0 - alpha) / (gamma(2.0 - alpha) * (PI * alpha / 2.0).cos()))
}

/// `E|G|^alpha` for a standard normal `G`.
pub fn abs_moment_gaussian(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::domain(format!("alpha {alpha} not in (0, 2]")));
    }
    Ok(2f64.powf(alpha / 2.0) * gamma((alpha + 1.0) / 2.0) / PI.sqrt())
}
