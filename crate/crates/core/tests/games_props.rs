mod common;

use infoseq_core::blackwell::DeadlineDistribution;
use infoseq_core::games::{
    equilibrium_price, variance_trajectory, BeautyContest, BeautyContestConfig, CapacityDistribution,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trajectories_decrease_in_time_and_capacity(seed in any::<u64>(), k in 1usize..=3) {
        let env = common::random_environment(&mut common::rng(seed), k);
        let cfg = BeautyContestConfig::new(0.3, DeadlineDistribution::degenerate(5).unwrap(), env, vec![1, 2, 3]).unwrap();
        let trajs: Vec<Vec<f64>> = (1..=3).map(|b| variance_trajectory(&cfg, b).unwrap()).collect();
        for traj in &trajs {
            prop_assert!(traj.iter().all(|s| *s > 0.0));
            prop_assert!(traj.windows(2).all(|w| w[1] <= w[0] + 1e-13));
        }
        for pair in trajs.windows(2) {
            for t in 0..pair[0].len() {
                prop_assert!(pair[1][t] <= pair[0][t] + 1e-13, "t={t}: {:?}", trajs);
            }
        }
    }

    #[test]
    fn no_interaction_without_strategic_term(seed in any::<u64>(), k in 1usize..=3, w in 0.05f64..0.95) {
        let env = common::random_environment(&mut common::rng(seed), k);
        let cfg = BeautyContestConfig::new(0.0, DeadlineDistribution::uniform(&[1, 3]).unwrap(), env, vec![1, 2, 3]).unwrap();
        let mu = CapacityDistribution::new(&[(1, w), (2, 1.0 - w)]).unwrap();
        let mu_hat = CapacityDistribution::new(&[(2, w), (3, 1.0 - w)]).unwrap();
        let it = BeautyContest::new(cfg).unwrap().interaction(1, 3, &mu, &mu_hat).unwrap();
        prop_assert_eq!(it.value, 0.0);
        prop_assert_eq!(it.sign, 0);
    }

    #[test]
    fn price_is_linear_with_bounded_slope(seed in any::<u64>(), r in -0.95f64..0.95, m in -5.0f64..5.0) {
        let env = common::random_environment(&mut common::rng(seed), 2);
        let cfg = BeautyContestConfig::new(r, DeadlineDistribution::degenerate(3).unwrap(), env, vec![1]).unwrap();
        let slope = equilibrium_price(&cfg, 1, 1.0, 2).unwrap();
        let p = equilibrium_price(&cfg, 1, m, 2).unwrap();
        prop_assert!((p - slope * m).abs() <= 1e-12 * m.abs().max(1.0));
        if r > 0.0 {
            prop_assert!(slope > 0.0 && slope <= 1.0);
        } else {
            prop_assert!(slope >= 1.0);
        }
    }

    #[test]
    fn expected_utility_nonpositive_and_increasing_in_capacity(seed in any::<u64>(), r in -0.9f64..0.9) {
        let env = common::random_environment(&mut common::rng(seed), 2);
        let cfg = BeautyContestConfig::new(r, DeadlineDistribution::uniform(&[1, 2, 4]).unwrap(), env, vec![1, 2, 3]).unwrap();
        let mut game = BeautyContest::new(cfg).unwrap();
        let mu = CapacityDistribution::new(&[(1, 0.5), (3, 0.5)]).unwrap();
        let eus: Vec<f64> = (1..=3).map(|b| game.expected_utility(b, &mu).unwrap()).collect();
        prop_assert!(eus.iter().all(|e| *e <= 0.0));
        prop_assert!(eus.windows(2).all(|w| w[1] >= w[0] - 1e-13));
    }
}
