use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stablemark::stats::{ks_two_sample, EmpiricalDistribution};
use stablemark::{draw_realization, FilterSpec, ModelSpec};

fn model(alpha: f64) -> ModelSpec {
    ModelSpec::new(FilterSpec::gauss2d(), alpha, 0.0, vec![5.0, 5.0]).unwrap()
}

fn marginal(model: &ModelSpec, t: &[f64], n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            draw_realization(model, 5000, &mut rng)
                .unwrap()
                .eval_mark(model, t)
                .unwrap()
        })
        .collect()
}

fn ks_passes(a: Vec<f64>, b: Vec<f64>) -> bool {
    let ks = ks_two_sample(
        &EmpiricalDistribution::new(a).unwrap(),
        &EmpiricalDistribution::new(b).unwrap(),
    );
    !ks.rejects_at(0.01)
}

#[test]
fn marginals_are_stationary() {
    let m = model(1.5);
    let a = marginal(&m, &[5.0, 5.0], 2000, 21);
    let b = marginal(&m, &[1.0, 8.5], 2000, 22);
    assert!(ks_passes(a, b));
}

#[test]
fn marginals_are_symmetric() {
    let m = model(1.2);
    let a = marginal(&m, &[2.0, 3.0], 2000, 23);
    let b = a.iter().map(|x| -x).collect();
    assert!(ks_passes(a, b));
}

#[test]
fn truncation_error_shrinks_with_terms() {
    let m = model(1.5);
    let t = [4.0, 6.0];
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
    };
    let mut coarse = Vec::with_capacity(500);
    let mut fine = Vec::with_capacity(500);
    for seed in 0..500 {
        let full = draw_realization(&m, 8000, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let at = |k: usize| full.truncated(k).eval_mark(&m, &t).unwrap();
        let (x2, x4, x8) = (at(2000), at(4000), at(8000));
        coarse.push((x2 - x4).abs());
        fine.push((x4 - x8).abs());
    }
    let (c, f) = (median(coarse), median(fine));
    assert!(
        f < c,
        "median |X(4000) - X(8000)| = {f} vs |X(2000) - X(4000)| = {c}"
    );
}
