mod common;

use infoseq_core::allocation::{myopic_path, t_optimal, MyopicMode, SearchBudget};
use infoseq_core::blackwell::{
    expected_deadline_risk, optimal_deadline_path, t_optimal_block_path, DeadlineDistribution,
};
use infoseq_core::gaussian::PosteriorModel;
use infoseq_core::special_cases::{chain_environment, MultipleBiasesEnvironment};
use proptest::prelude::*;

fn budget() -> SearchBudget {
    SearchBudget::default()
}

fn deadline(weights: &[f64]) -> DeadlineDistribution {
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let n = probs.len();
    let head: f64 = probs[..n - 1].iter().sum();
    probs[n - 1] = 1.0 - head;
    DeadlineDistribution::new(probs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn optimal_risk_never_exceeds_myopic(
        seed in any::<u64>(),
        k in 2usize..=3,
        weights in prop::collection::vec(0.01f64..1.0, 1..=5),
    ) {
        let env = common::random_environment(&mut common::rng(seed), k);
        let model = PosteriorModel::new(&env).unwrap();
        let pi = deadline(&weights);
        let opt = optimal_deadline_path(&model, &pi, 1, &budget()).unwrap();
        let greedy = myopic_path(&model, 1, pi.horizon(), MyopicMode::JointBlock, &budget()).unwrap();
        let greedy_risk = expected_deadline_risk(&model, &greedy, &pi).unwrap();
        prop_assert!(opt.risk <= greedy_risk + 1e-12);
        let hits_all = (1..=pi.horizon()).filter(|&t| pi.prob(t) > 0.0).all(|t| {
            t_optimal(&model, t as u32, &budget()).unwrap().contains(greedy.division(t))
        });
        if hits_all {
            prop_assert!((opt.risk - greedy_risk).abs() <= 1e-12);
        }
    }
}

#[test]
fn chain_optimal_risk_matches_myopic_before_the_gap() {
    let model = PosteriorModel::new(&chain_environment()).unwrap();
    for t in 1..=4 {
        let pi = DeadlineDistribution::degenerate(t).unwrap();
        let opt = optimal_deadline_path(&model, &pi, 1, &budget()).unwrap();
        let greedy = myopic_path(&model, 1, t, MyopicMode::JointBlock, &budget()).unwrap();
        assert!((opt.risk - expected_deadline_risk(&model, &greedy, &pi).unwrap()).abs() <= 1e-12);
    }
}

#[test]
fn monotone_canonical_divisions_are_achieved() {
    let mb = MultipleBiasesEnvironment::new(vec![1.0, 0.6, 1.8], vec![1.0, 0.7, 1.4]).unwrap();
    let model = PosteriorModel::new(&mb.to_environment()).unwrap();
    let canon: Vec<_> =
        (0..=12).map(|t| t_optimal(&model, t, &budget()).unwrap().canonical().clone()).collect();
    assert!(canon.windows(2).all(|w| w[1].dominates(&w[0])));
    let path = t_optimal_block_path(&model, 1, 12, &budget()).unwrap().expect("monotone chain exists");
    for t in 0..=12 {
        assert!(t_optimal(&model, t as u32, &budget()).unwrap().contains(path.division(t)));
    }
}
