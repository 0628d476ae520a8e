use stablemark::subsampling::Method;
use stablemark::{run_study, ExperimentConfig};

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[test]
fn method2_coverage_falls_with_c_and_rises_with_alpha() {
    let cfg = ExperimentConfig {
        alphas: vec![1.2, 1.4, 1.6, 1.8],
        c_values: vec![0.2, 0.3, 0.4],
        methods: vec![Method::Method2],
        nominal_levels: vec![0.90],
        replications: 500,
        mc_draws: 2000,
        master_seed: 7,
        ..ExperimentConfig::default()
    };
    let table = run_study(&cfg).unwrap();
    let alpha: Vec<f64> = table.rows.iter().map(|r| r.alpha).collect();
    let c: Vec<f64> = table.rows.iter().map(|r| r.c).collect();
    let cov: Vec<f64> = table.rows.iter().map(|r| r.empirical_coverage).collect();
    let (in_c, in_alpha) = (spearman(&c, &cov), spearman(&alpha, &cov));
    assert!(in_c < 0.0, "Spearman(c, coverage) = {in_c}");
    assert!(in_alpha > 0.0, "Spearman(alpha, coverage) = {in_alpha}");
}

#[test]
fn spearman_reference_values() {
    assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 5.0, 9.0]), 1.0);
    assert_eq!(spearman(&[1.0, 2.0, 3.0], &[9.0, 5.0, 3.0]), -1.0);
    assert_eq!(ranks(&[2.0, 1.0, 2.0]), vec![2.5, 1.0, 2.5]);
}
