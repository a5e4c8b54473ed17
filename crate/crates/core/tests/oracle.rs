//! The dynamic program against exhaustive enumeration and between kernels.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dfpp::env::{deterministic_environment, SpacePoint};
use dfpp::geodesic::{
    brute_force_geodesic, brute_force_point_to_point, geodesic_point_to_point, geodesic_to_hyperplane,
    geodesic_to_hyperplane_with, hyperplane_dp_table, passage_time, JumpConstraint, JumpCost, Kernel, Outcome, Terminal,
    TimeSpacePoint,
};

use common::{env_1d, random_continuous_layers, random_layers};

const ALPHAS: [f64; 5] = [0.5, 0.9, 1.0, 1.1, 2.0];

fn alpha_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![prop::sample::select(ALPHAS.to_vec()), 0.3f64..2.5]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dp_matches_enumeration_on_grid_instances(
        seed in any::<u64>(),
        n in 1usize..=5,
        alpha in alpha_strategy(),
        cap in prop::option::of(0.5f64..4.0),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = env_1d(random_layers(&mut rng, n, 5, 4, 0.5));
        let constraint = JumpConstraint::from_option(cap).unwrap();
        let dp = geodesic_to_hyperplane(&env, alpha, constraint).unwrap();
        let bf = brute_force_geodesic(&env, alpha, constraint).unwrap();
        prop_assert_eq!(dp, bf);
    }

    #[test]
    fn dp_matches_enumeration_in_two_dimensions(
        seed in any::<u64>(),
        n in 1usize..=4,
        alpha in alpha_strategy(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers: Vec<Vec<Vec<f64>>> = random_layers(&mut rng, n, 4, 3, 1.0)
            .into_iter()
            .zip(random_layers(&mut rng, n, 4, 3, 1.0))
            .map(|(xs, ys)| xs.iter().zip(ys.iter()).map(|(x, y)| vec![x[0], y[0]]).collect())
            .collect();
        let env = deterministic_environment(2, layers).unwrap();
        let dp = geodesic_to_hyperplane(&env, alpha, JumpConstraint::Unbounded).unwrap();
        let bf = brute_force_geodesic(&env, alpha, JumpConstraint::Unbounded).unwrap();
        prop_assert_eq!(dp, bf);
    }

    #[test]
    fn point_to_point_matches_enumeration(
        seed in any::<u64>(),
        n in 2usize..=5,
        alpha in alpha_strategy(),
        free in any::<bool>(),
        cap in prop::option::of(1.0f64..4.0),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = env_1d(random_layers(&mut rng, n, 4, 4, 0.5));
        let v = TimeSpacePoint::new(0, SpacePoint::from(0.25));
        let w = if free {
            TimeSpacePoint::new(n, SpacePoint::from(-0.75))
        } else {
            TimeSpacePoint::new(n, SpacePoint::new(env.layer(n).point(0).to_vec()).unwrap())
        };
        let terminal = if free { Terminal::Free } else { Terminal::EnvPoint };
        let constraint = JumpConstraint::from_option(cap).unwrap();
        let dp = geodesic_point_to_point(&env, &v, &w, alpha, terminal, constraint).unwrap();
        let bf = brute_force_point_to_point(&env, &v, &w, alpha, terminal, constraint).unwrap();
        prop_assert_eq!(dp, bf);
    }

    #[test]
    fn kernels_agree(
        seed in any::<u64>(),
        n in 1usize..=12,
        alpha in prop::sample::select(vec![0.5, 0.75, 1.0, 1.5, 2.0]),
        coarse in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = if coarse {
            random_layers(&mut rng, n, 40, 30, 0.5)
        } else {
            random_continuous_layers(&mut rng, n, 60, 20.0)
        };
        let env = env_1d(layers);
        let naive = geodesic_to_hyperplane_with(&env, alpha, JumpConstraint::Unbounded, Kernel::Naive).unwrap();
        for kernel in [Kernel::Pruned, Kernel::Monotone, Kernel::Auto] {
            let other = geodesic_to_hyperplane_with(&env, alpha, JumpConstraint::Unbounded, kernel).unwrap();
            prop_assert_eq!(&other, &naive, "kernel {:?}", kernel);
        }
    }

    #[test]
    fn reported_time_is_the_sum_of_jump_costs(
        seed in any::<u64>(),
        n in 1usize..=10,
        alpha in 0.3f64..2.5,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = env_1d(random_continuous_layers(&mut rng, n, 20, 10.0));
        let r = geodesic_to_hyperplane(&env, alpha, JumpConstraint::Unbounded).unwrap().reached().unwrap();
        prop_assert_eq!(r.passage_time(), passage_time(r.path()).unwrap());
        let resum: f64 = r.jumps().iter().map(|j| j.powf(alpha)).sum();
        prop_assert!((r.passage_time() - resum).abs() <= 1e-12 * resum.max(1.0));
        prop_assert_eq!(r.path().len(), n);
    }

    #[test]
    fn larger_caps_never_cost_more(
        seed in any::<u64>(),
        n in 1usize..=8,
        alpha in alpha_strategy(),
        caps in prop::collection::vec(0.2f64..6.0, 2..6),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = env_1d(random_continuous_layers(&mut rng, n, 12, 6.0));
        let mut caps = caps;
        caps.sort_by(f64::total_cmp);
        let times: Vec<f64> = caps
            .iter()
            .map(|&c| geodesic_to_hyperplane(&env, alpha, JumpConstraint::cap(c).unwrap()).unwrap().passage_time())
            .collect();
        for w in times.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        let free = geodesic_to_hyperplane(&env, alpha, JumpConstraint::Unbounded).unwrap().reached().unwrap();
        let capped = geodesic_to_hyperplane(&env, alpha, JumpConstraint::cap(free.max_jump()).unwrap()).unwrap();
        prop_assert_eq!(capped.passage_time(), free.passage_time());
        if let Some(c) = capped.as_reached() {
            prop_assert!(c.jumps().iter().all(|&j| j <= free.max_jump()));
        }
    }

    #[test]
    fn prefixes_of_geodesics_are_optimal(
        seed in any::<u64>(),
        n in 2usize..=8,
        alpha in alpha_strategy(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = env_1d(random_continuous_layers(&mut rng, n, 10, 6.0));
        let r = geodesic_to_hyperplane(&env, alpha, JumpConstraint::Unbounded).unwrap().reached().unwrap();
        let table = hyperplane_dp_table(&env, alpha, JumpConstraint::Unbounded, Kernel::Naive).unwrap();
        let cost = JumpCost::new(alpha).unwrap();
        let mut acc = 0.0;
        let mut prev = vec![0.0];
        for (k, step) in r.path().steps.iter().enumerate() {
            acc += cost.of((step.coords()[0] - prev[0]).abs());
            let i = env.layer(k + 1).find(step.coords()).unwrap();
            prop_assert_eq!(table.value(k + 1, i), acc);
            let v = TimeSpacePoint::new(0, SpacePoint::origin(1));
            let w = TimeSpacePoint::new(k + 1, step.clone());
            let p2p = geodesic_point_to_point(&env, &v, &w, alpha, Terminal::EnvPoint, JumpConstraint::Unbounded)
                .unwrap();
            prop_assert_eq!(p2p.passage_time(), acc);
            prev = step.coords().to_vec();
        }
    }

    #[test]
    fn scaling_space_scales_time(
        seed in any::<u64>(),
        n in 1usize..=6,
        alpha in prop::sample::select(vec![0.5, 1.5, 2.0]),
        scale in prop::sample::select(vec![0.5, 2.0, 4.0]),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = random_continuous_layers(&mut rng, n, 8, 5.0);
        let scaled: Vec<Vec<Vec<f64>>> = layers
            .iter()
            .map(|l| l.iter().map(|p| vec![p[0] * scale]).collect())
            .collect();
        let a = geodesic_to_hyperplane(&env_1d(layers), alpha, JumpConstraint::Unbounded).unwrap().reached().unwrap();
        let b = geodesic_to_hyperplane(&env_1d(scaled), alpha, JumpConstraint::Unbounded).unwrap().reached().unwrap();
        let expect = a.passage_time() * scale.powf(alpha);
        prop_assert!((b.passage_time() - expect).abs() <= 1e-9 * expect.max(1.0));
        for (p, q) in a.path().steps.iter().zip(&b.path().steps) {
            prop_assert_eq!(p.coords()[0] * scale, q.coords()[0]);
        }
    }

    #[test]
    fn mirrored_instance_has_mirrored_cost(
        seed in any::<u64>(),
        n in 1usize..=6,
        alpha in alpha_strategy(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = random_continuous_layers(&mut rng, n, 8, 5.0);
        let mirrored: Vec<Vec<Vec<f64>>> = layers
            .iter()
            .map(|l| l.iter().map(|p| vec![-p[0]]).collect())
            .collect();
        let a = geodesic_to_hyperplane(&env_1d(layers), alpha, JumpConstraint::Unbounded).unwrap();
        let b = geodesic_to_hyperplane(&env_1d(mirrored), alpha, JumpConstraint::Unbounded).unwrap();
        prop_assert_eq!(a.passage_time(), b.passage_time());
    }
}

#[test]
fn enumeration_refuses_large_instances() {
    let layers: Vec<Vec<Vec<f64>>> = (0..8).map(|_| (0..10).map(|i| vec![i as f64]).collect()).collect();
    let env = env_1d(layers);
    assert!(matches!(
        brute_force_geodesic(&env, 1.0, JumpConstraint::Unbounded),
        Err(dfpp::Error::InstanceTooLarge { .. })
    ));
}

#[test]
fn small_instances_with_empty_layers_are_unreachable_in_both() {
    let env = env_1d(vec![vec![vec![0.0]], vec![], vec![vec![1.0]]]);
    let dp = geodesic_to_hyperplane(&env, 0.5, JumpConstraint::Unbounded).unwrap();
    let bf = brute_force_geodesic(&env, 0.5, JumpConstraint::Unbounded).unwrap();
    assert_eq!(dp, Outcome::Unreachable);
    assert_eq!(bf, Outcome::Unreachable);
}
