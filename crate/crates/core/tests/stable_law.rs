use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use stablemark::stats::{ks_two_sample, EmpiricalDistribution};
use stablemark::StableParams;

#[test]
fn gaussian_case_matches_normal_sampler() {
    let scale = 1.7;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let stable = StableParams::symmetric(2.0, scale).unwrap();
    let normal = Normal::new(0.0, 2f64.sqrt() * scale).unwrap();
    let a: Vec<f64> = (0..100_000).map(|_| stable.sample(&mut rng)).collect();
    let b: Vec<f64> = (0..100_000).map(|_| normal.sample(&mut rng)).collect();
    let ks = ks_two_sample(
        &EmpiricalDistribution::new(a).unwrap(),
        &EmpiricalDistribution::new(b).unwrap(),
    );
    assert!(!ks.rejects_at(0.01), "{ks:?}");
}

#[test]
fn stable_is_symmetric_about_location() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let law = StableParams::new(1.3, 0.0, 2.0, 4.0).unwrap();
    let a: Vec<f64> = (0..20_000).map(|_| law.sample(&mut rng) - 4.0).collect();
    let b: Vec<f64> = a.iter().map(|x| -x).collect();
    let ks = ks_two_sample(
        &EmpiricalDistribution::new(a).unwrap(),
        &EmpiricalDistribution::new(b).unwrap(),
    );
    assert!(!ks.rejects_at(0.01), "{ks:?}");
}
