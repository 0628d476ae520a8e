//! Composite Gauss–Legendre rules on boxes, refined by panel doubling.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Composite rule with `panels` equal panels on `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let mid = a + (k as f64 + 0.5) * h;
            let panel: f64 = self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| w * f(mid + 0.5 * h * x))
                .sum();
            total += 0.5 * h * panel;
        }
        total
    }

    /// Nodes and weights of the composite rule over `segments`, each cut into `panels`.
    fn composite(&self, segments: &[(f64, f64)], panels: usize) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::with_capacity(segments.len() * panels * self.order());
        let mut ws = Vec::with_capacity(xs.capacity());
        for &(a, b) in segments {
            let h = (b - a) / panels as f64;
            for k in 0..panels {
                let mid = a + (k as f64 + 0.5) * h;
                for (x, w) in self.nodes.iter().zip(&self.weights) {
                    xs.push(mid + 0.5 * h * x);
                    ws.push(0.5 * h * w);
                }
            }
        }
        (xs, ws)
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive tensor-product integration over an axis-aligned box.
///
/// Each axis is cut at the supplied breakpoints, then every segment is split
/// into `2^level` panels. The level is raised until two successive estimates
/// agree to `rel_tol` (or `abs_tol` near zero).
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evaluations: usize,
    rule: GaussLegendre,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::new(1e-9)
    }
}

impl Quadrature {
    pub fn new(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol: 1e-13,
            max_evaluations: 20_000_000,
            rule: GaussLegendre::new(8),
        }
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_max_evaluations(mut self, max_evaluations: usize) -> Self {
        self.max_evaluations = max_evaluations;
        self
    }

    /// Integrates `f` over `bounds`. `breaks[k]` lists cut points for axis `k`;
    /// points outside the axis range are ignored. `breaks` may be shorter than
    /// `bounds`.
    pub fn integrate<F>(&self, f: F, bounds: &[(f64, f64)], breaks: &[Vec<f64>]) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let dim = bounds.len();
        if dim == 0 {
            return Err(Error::domain(
                "cannot integrate over a zero-dimensional box",
            ));
        }
        if bounds
            .iter()
            .any(|&(a, b)| !(a.is_finite() && b.is_finite()) || b < a)
        {
            return Err(Error::domain(
                "integration box must be finite with lo <= hi",
            ));
        }
        if bounds.iter().any(|&(a, b)| a == b) {
            return Ok(0.0);
        }
        let segments: Vec<Vec<(f64, f64)>> = bounds
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| split_axis(a, b, breaks.get(k).map(Vec::as_slice).unwrap_or(&[])))
            .collect();

        let mut evaluations = 0usize;
        let mut previous: Option<f64> = None;
        let mut level = 0u32;
        loop {
            let panels = 1usize << level;
            let axes: Vec<(Vec<f64>, Vec<f64>)> = segments
                .iter()
                .map(|s| self.rule.composite(s, panels))
                .collect();
            let cost: usize = axes.iter().map(|(x, _)| x.len()).product();
            if evaluations + cost > self.max_evaluations {
                let estimate = previous.unwrap_or(f64::NAN);
                return Err(Error::Quadrature {
                    estimate,
                    change: f64::INFINITY,
                    evaluations,
                });
            }
            let estimate = tensor_sum(&f, &axes);
            evaluations += cost;
            if !estimate.is_finite() {
                return Err(Error::Quadrature {
                    estimate,
                    change: f64::NAN,
                    evaluations,
                });
            }
            if let Some(prev) = previous {
                let change = (estimate - prev).abs();
                if change <= self.rel_tol * estimate.abs() || change <= self.abs_tol {
                    return Ok(estimate);
                }
                let next_cost = cost.saturating_mul(1 << dim);
                if evaluations.saturating_add(next_cost) > self.max_evaluations {
                    return Err(Error::Quadrature {
                        estimate,
                        change: change / estimate.abs().max(f64::MIN_POSITIVE),
                        evaluations,
                    });
                }
            }
            previous = Some(estimate);
            level += 1;
        }
    }
}

fn split_axis(a: f64, b: f64, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut segments = Vec::with_capacity(cuts.len() + 1);
    let mut lo = a;
    for c in cuts {
        segments.push((lo, c));
        lo = c;
    }
    segments.push((lo, b));
    segments
}

fn tensor_sum<F>(f: &F, axes: &[(Vec<f64>, Vec<f64>)]) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let (first_x, first_w) = &axes[0];
    let rest = &axes[1..];
    let slices: Vec<f64> = first_x
        .par_iter()
        .zip(first_w.par_iter())
        .map(|(&x0, &w0)| {
            let mut point = vec![0.0; axes.len()];
            point[0] = x0;
            w0 * inner_sum(f, rest, &mut point, 1)
        })
        .collect();
    pairwise_sum(&slices)
}

fn inner_sum<F>(f: &F, rest: &[(Vec<f64>, Vec<f64>)], point: &mut [f64], axis: usize) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    match rest.split_first() {
        None => f(point),
        Some(((xs, ws), tail)) => {
            let mut total = 0.0;
            for (&x, &w) in xs.iter().zip(ws) {
                point[axis] = x;
                total += w * inner_sum(f, tail, point, axis + 1);
            }
            total
        }
    }
}

/// Pairwise (cascade) summation; the result depends only on the input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1..=16 => values.iter().sum(),
        n => {
            let (left, right) = values.split_at(n / 2);
            pairwise_sum(left) + pairwise_sum(right)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(8);
        let weight_sum: f64 = rule.weights().iter().sum();
        assert!((weight_sum - 2.0).abs() < 1e-14);
        // degree 15 is the highest exact degree for 8 nodes
        let v = rule.integrate(|x| x.powi(14) + x.powi(15), -1.0, 1.0, 1);
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_over_plane() {
        let q = Quadrature::default();
        let r = 8.0;
        let v = q
            .integrate(
                |x| (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp(),
                &[(-r, r), (-r, r)],
                &[],
            )
            .unwrap();
        assert!((v - 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn breakpoints_make_step_functions_exact() {
        let q = Quadrature::default();
        let step = |x: &[f64]| if x[0] >= 0.3 && x[0] < 0.7 { 1.0 } else { 0.0 };
        let v = q
            .integrate(step, &[(-1.0, 1.0)], &[vec![0.3, 0.7]])
            .unwrap();
        assert!((v - 0.4).abs() < 1e-14);
    }

    #[test]
    fn zero_width_box_is_zero() {
        let q = Quadrature::default();
        assert_eq!(q.integrate(|_| 1.0, &[(1.0, 1.0)], &[]).unwrap(), 0.0);
    }

    #[test]
    fn budget_exhaustion_reports_diagnostics() {
        let q = Quadrature::new(1e-15).with_max_evaluations(2_000);
        let err = q
            .integrate(|x| (x[0] - 0.123).abs().sqrt(), &[(-1.0, 1.0)], &[])
            .unwrap_err();
        match err {
            Error::Quadrature {
                estimate,
                evaluations,
                ..
            } => {
                assert!(estimate.is_finite());
                assert!(evaluations > 0 && evaluations <= 2_000);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
    }
}
