use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stablemark::region::sample_prm;
use stablemark::stats::kolmogorov_survival;
use stablemark::Region;
use statrs::distribution::{DiscreteCDF, Poisson};

#[test]
fn block_counts_add_up_over_a_partition() {
    let region = Region::new(vec![1.0, 1.0], 10.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    // a partition into 5 x 5 half-open blocks misses only the closed upper faces
    let block = region.erode(0.2).unwrap().block;
    for _ in 0..20 {
        let pattern = sample_prm(&region, 1.3, &mut rng).unwrap();
        let mut total = 0;
        for i in 0..5 {
            for j in 0..5 {
                let anchor = [2.0 * i as f64, 2.0 * j as f64];
                total += pattern.block_indices(&anchor, &block).unwrap().len();
            }
        }
        let on_upper_face = pattern.points().filter(|p| p.contains(&10.0)).count();
        assert_eq!(total + on_upper_face, pattern.len());
    }
}

#[test]
fn sub_box_counts_are_poisson() {
    let region = Region::new(vec![1.0, 2.0], 5.0).unwrap();
    let sub = Region::new(vec![0.3, 0.5], 5.0).unwrap();
    let r = 0.8;
    let anchor = [1.0, 3.0];
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let n = 10_000;
    let mut counts: Vec<u64> = (0..n)
        .map(|_| {
            let pattern = sample_prm(&region, r, &mut rng).unwrap();
            pattern.block_indices(&anchor, &sub).unwrap().len() as u64
        })
        .collect();
    counts.sort_unstable();
    let law = Poisson::new(r * sub.area()).unwrap();
    let max = *counts.last().unwrap();
    let mut d: f64 = 0.0;
    let mut idx = 0;
    for k in 0..=max + 5 {
        while idx < counts.len() && counts[idx] <= k {
            idx += 1;
        }
        d = d.max((idx as f64 / n as f64 - law.cdf(k)).abs());
    }
    let p = kolmogorov_survival((n as f64).sqrt() * d);
    assert!(p > 0.01, "D = {d}, p = {p}");
}

#[test]
fn counts_have_poisson_mean_and_variance() {
    let region = Region::new(vec![1.0, 1.0], 10.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let xs: Vec<f64> = (0..4000)
        .map(|_| sample_prm(&region, 1.0, &mut rng).unwrap().len() as f64)
        .collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((mean - 100.0).abs() < 3.0 * (100.0 / n).sqrt(), "{mean}");
    assert!((var / 100.0 - 1.0).abs() < 0.1, "{var}");
}
