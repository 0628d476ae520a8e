use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stablemark::limit::{limit_scale_mean, poisson_functional_moment, PowerMode};
use stablemark::{sigma_psi, FilterSpec};

#[test]
fn second_moment_closed_form_for_three_filters() {
    let cases = [
        (FilterSpec::gauss2d(), 2.0 * PI, PI),
        (
            FilterSpec::builtin("gauss1d").unwrap(),
            (2.0 * PI).sqrt(),
            PI.sqrt(),
        ),
        (FilterSpec::builtin("indicator1d").unwrap(), 1.0, 1.0),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for (filter, phi, phi2) in &cases {
        for r in [0.5, 1.0, 2.0] {
            let e = poisson_functional_moment(filter, r, 2.0, PowerMode::Square, 100_000, &mut rng)
                .unwrap();
            let exact = (r * phi).powi(2) + r * phi2;
            assert!(
                (e.estimate - exact).abs() < 3.0 * e.std_error,
                "{:?} r={r}: {e:?} vs {exact}",
                filter.profile()
            );
        }
    }
}

#[test]
fn sparse_limit_scale_approaches_marginal_scale() {
    // E|int psi dN|^alpha = r int |psi|^alpha + O(r^2) as r -> 0
    let filter = FilterSpec::gauss2d();
    let alpha = 1.5;
    let e = limit_scale_mean(
        &filter,
        0.01,
        alpha,
        400_000,
        &mut ChaCha8Rng::seed_from_u64(52),
    )
    .unwrap();
    let target = sigma_psi(&filter, alpha).unwrap();
    assert!(
        (e.estimate / target - 1.0).abs() < 0.05,
        "{e:?} vs {target}"
    );
}

#[test]
fn unnormalized_scale_grows_with_intensity() {
    // for a nonnegative filter the Poisson integral is stochastically increasing in r
    let filter = FilterSpec::gauss2d();
    let alpha = 1.5;
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let scaled: Vec<f64> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&r| {
            let e = limit_scale_mean(&filter, r, alpha, 20_000, &mut rng).unwrap();
            r.powf(1.0 / alpha) * e.estimate
        })
        .collect();
    assert!(scaled.windows(2).all(|w| w[0] < w[1]), "{scaled:?}");
}
