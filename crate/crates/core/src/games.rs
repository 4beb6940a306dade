//! Beauty-contest pricing game where every player observes `B` signals per
//! period along the myopic path and the common state is `ω = θ₁`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::allocation::{myopic_path, MyopicMode, SearchBudget};
use crate::blackwell::{DeadlineDistribution, PROB_SUM_TOL};
use crate::error::{Error, Result};
use crate::gaussian::{check_non_redundancy, Environment, PosteriorModel};

/// Signs smaller than this in magnitude are reported as zero.
pub const SIGN_DEAD_ZONE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct BeautyContestConfig {
    r: f64,
    deadline: DeadlineDistribution,
    env: Environment,
    capacity_grid: Vec<u32>,
}

impl BeautyContestConfig {
    pub fn new(
        r: f64,
        deadline: DeadlineDistribution,
        env: Environment,
        capacity_grid: Vec<u32>,
    ) -> Result<Self> {
        if !(r.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!("r = {r} must lie in (-1, 1)")));
        }
        env.ensure_valid()?;
        let nr = check_non_redundancy(&env);
        if !nr.holds {
            return Err(Error::NonRedundancyViolated(nr.reason.unwrap_or("redundant signals")));
        }
        if capacity_grid.iter().any(|&b| b == 0) {
            return Err(Error::InvalidParameter("capacities must be positive".into()));
        }
        let mut capacity_grid = capacity_grid;
        capacity_grid.sort_unstable();
        capacity_grid.dedup();
        Ok(BeautyContestConfig { r, deadline, env, capacity_grid })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn deadline(&self) -> &DeadlineDistribution {
        &self.deadline
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn capacity_grid(&self) -> &[u32] {
        &self.capacity_grid
    }
}

/// Finite-support distribution over capacities.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityDistribution {
    // Sorted by capacity, no duplicates, zero weights dropped.
    support: Vec<(u32, f64)>,
}

impl CapacityDistribution {
    pub fn new(weights: &[(u32, f64)]) -> Result<Self> {
        let mut merged: BTreeMap<u32, f64> = BTreeMap::new();
        for &(b, w) in weights {
            if b == 0 {
                return Err(Error::InvalidDistribution("capacities must be positive".into()));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidDistribution(format!("negative or non-finite weight {w}")));
            }
            *merged.entry(b).or_insert(0.0) += w;
        }
        let total: f64 = merged.values().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}, not 1")));
        }
        Ok(CapacityDistribution { support: merged.into_iter().filter(|&(_, w)| w > 0.0).collect() })
    }

    pub fn degenerate(b: u32) -> Result<Self> {
        CapacityDistribution::new(&[(b, 1.0)])
    }

    pub fn support(&self) -> &[(u32, f64)] {
        &self.support
    }

    fn cdf(&self, x: u32) -> f64 {
        self.support.iter().filter(|&&(b, _)| b <= x).map(|&(_, w)| w).sum()
    }

    /// `self` first-order stochastically dominates `other`.
    pub fn fosd(&self, other: &CapacityDistribution) -> bool {
        self.support
            .iter()
            .chain(&other.support)
            .all(|&(x, _)| self.cdf(x) <= other.cdf(x) + PROB_SUM_TOL)
    }
}

/// `Σ(B·t)` for `t = 0..=T`, `T` the last period of the deadline support,
/// along the joint-block myopic path.
pub fn variance_trajectory(cfg: &BeautyContestConfig, block_size: u32) -> Result<Vec<f64>> {
    let model = PosteriorModel::new(&cfg.env)?;
    let horizon = cfg.deadline.horizon();
    let path = myopic_path(&model, block_size, horizon, MyopicMode::JointBlock, &SearchBudget::default())?;
    Ok(path.divisions().iter().map(|d| crate::objective::ObjectiveOracle::value(&model, d)).collect())
}

/// `(1 − r) / (1 − r + r·Σ)`.
pub fn price_coefficient(r: f64, sigma: f64) -> Result<f64> {
    let denom = 1.0 - r + r * sigma;
    if !(denom > 0.0) {
        return Err(Error::InadmissiblePrice(denom));
    }
    Ok((1.0 - r) / denom)
}

/// Linear-equilibrium price at period `t` given the posterior mean of ω.
pub fn equilibrium_price(
    cfg: &BeautyContestConfig,
    block_size: u32,
    posterior_mean: f64,
    t: usize,
) -> Result<f64> {
    let traj = variance_trajectory(cfg, block_size)?;
    let sigma = *traj.get(t).ok_or(Error::HorizonTooShort { available: traj.len() - 1, required: t })?;
    Ok(price_coefficient(cfg.r, sigma)? * posterior_mean)
}

/// Trajectories for every capacity on the grid, plus any requested later.
#[derive(Debug, Clone)]
pub struct BeautyContest {
    cfg: BeautyContestConfig,
    trajectories: BTreeMap<u32, Vec<f64>>,
}

impl BeautyContest {
    pub fn new(cfg: BeautyContestConfig) -> Result<Self> {
        let mut trajectories = BTreeMap::new();
        for &b in &cfg.capacity_grid {
            trajectories.insert(b, variance_trajectory(&cfg, b)?);
        }
        Ok(BeautyContest { cfg, trajectories })
    }

    pub fn config(&self) -> &BeautyContestConfig {
        &self.cfg
    }

    pub fn trajectory(&mut self, b: u32) -> Result<&[f64]> {
        if !self.trajectories.contains_key(&b) {
            let traj = variance_trajectory(&self.cfg, b)?;
            self.trajectories.insert(b, traj);
        }
        Ok(&self.trajectories[&b])
    }

    /// `−Σ_t π_t Σ(B_i t) / (1 − r + r·Σ_B μ(B)Σ(Bt))²`.
    pub fn expected_utility(&mut self, b_i: u32, mu: &CapacityDistribution) -> Result<f64> {
        if b_i == 0 {
            return Err(Error::InvalidParameter("capacity must be positive".into()));
        }
        let r = self.cfg.r;
        let probs: Vec<f64> = self.cfg.deadline.probs().to_vec();
        let own = self.trajectory(b_i)?.to_vec();
        let mut avg = alloc::vec![0.0; own.len()];
        for &(b, w) in mu.support() {
            for (a, s) in avg.iter_mut().zip(self.trajectory(b)?) {
                *a += w * s;
            }
        }
        let mut eu = 0.0;
        for (idx, &p) in probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let t = idx + 1;
            let denom = 1.0 - r + r * avg[t];
            if !(denom > 0.0) {
                return Err(Error::InadmissiblePrice(denom));
            }
            eu -= p * own[t] / (denom * denom);
        }
        Ok(eu)
    }

    /// `EU(B, μ) + EU(B̂, μ̂) − EU(B, μ̂) − EU(B̂, μ)` and its sign.
    pub fn interaction(
        &mut self,
        b: u32,
        b_hat: u32,
        mu: &CapacityDistribution,
        mu_hat: &CapacityDistribution,
    ) -> Result<Interaction> {
        if b_hat <= b {
            return Err(Error::InvalidParameter(format!("need B_hat > B, got {b_hat} <= {b}")));
        }
        if !mu_hat.fosd(mu) {
            return Err(Error::NotStochasticallyDominant);
        }
        // Grouped by own capacity so that r = 0 cancels bit for bit.
        let low = self.expected_utility(b, mu)? - self.expected_utility(b, mu_hat)?;
        let high = self.expected_utility(b_hat, mu_hat)? - self.expected_utility(b_hat, mu)?;
        let value = low + high;
        let sign = if value.abs() < SIGN_DEAD_ZONE {
            0
        } else if value > 0.0 {
            1
        } else {
            -1
        };
        Ok(Interaction { value, sign })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interaction {
    pub value: f64,
    pub sign: i8,
}

pub fn expected_utility(cfg: &BeautyContestConfig, b_i: u32, mu: &CapacityDistribution) -> Result<f64> {
    BeautyContest::new(cfg.clone())?.expected_utility(b_i, mu)
}

pub fn interaction_sign(
    cfg: &BeautyContestConfig,
    b: u32,
    b_hat: u32,
    mu: &CapacityDistribution,
    mu_hat: &CapacityDistribution,
) -> Result<Interaction> {
    BeautyContest::new(cfg.clone())?.interaction(b, b_hat, mu, mu_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_cases::chain_environment;

    fn chain_cfg(r: f64, deadline: DeadlineDistribution) -> BeautyContestConfig {
        BeautyContestConfig::new(r, deadline, chain_environment(), alloc::vec![1, 2, 3]).unwrap()
    }

    fn scalar_env(v: f64) -> Environment {
        Environment::from_rows(&[&[v]], &[&[1.0]], &[1.0]).unwrap()
    }

    #[test]
    fn chain_block_three_hits_five_elevenths() {
        let cfg = chain_cfg(0.5, DeadlineDistribution::degenerate(2).unwrap());
        let traj = variance_trajectory(&cfg, 3).unwrap();
        assert!((traj[2] - 5.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_trajectory_closed_form() {
        let v = 1.7;
        let cfg = BeautyContestConfig::new(0.3, DeadlineDistribution::degenerate(5).unwrap(), scalar_env(v), alloc::vec![2])
            .unwrap();
        let traj = variance_trajectory(&cfg, 2).unwrap();
        for (t, s) in traj.iter().enumerate() {
            let expected = v / (1.0 + v * 2.0 * t as f64);
            assert!((s - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn price_examples() {
        assert_eq!(price_coefficient(0.0, 0.7).unwrap(), 1.0);
        assert_eq!(price_coefficient(0.5, 0.0).unwrap(), 1.0);
        assert_eq!(price_coefficient(0.5, 1.0).unwrap() * 2.0, 1.0);
        assert!(matches!(price_coefficient(0.5, -2.0), Err(Error::InadmissiblePrice(_))));
    }

    #[test]
    fn eu_collapses_without_interaction() {
        let cfg = chain_cfg(0.0, DeadlineDistribution::degenerate(2).unwrap());
        let eu = expected_utility(&cfg, 3, &CapacityDistribution::degenerate(3).unwrap()).unwrap();
        assert!((eu + 5.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn chain_interaction_signs() {
        let mu = CapacityDistribution::degenerate(1).unwrap();
        let mu_hat = CapacityDistribution::degenerate(2).unwrap();
        for (r, sign) in [(0.5, 1), (-0.5, -1), (0.0, 0)] {
            let cfg = chain_cfg(r, DeadlineDistribution::degenerate(1).unwrap());
            let it = interaction_sign(&cfg, 1, 2, &mu, &mu_hat).unwrap();
            assert_eq!(it.sign, sign, "r = {r}: {}", it.value);
        }
    }

    #[test]
    fn hand_computed_interaction() {
        // Σ₁(1) = 2/3, Σ₂(1) = 3/5 on the chain.
        let (s1, s2, r) = (2.0 / 3.0, 0.6, 0.5);
        let d = |s: f64| 1.0 - r + r * s;
        let expected = -s1 / (d(s1) * d(s1)) - s2 / (d(s2) * d(s2)) + s1 / (d(s2) * d(s2)) + s2 / (d(s1) * d(s1));
        let cfg = chain_cfg(r, DeadlineDistribution::degenerate(1).unwrap());
        let it = interaction_sign(
            &cfg,
            1,
            2,
            &CapacityDistribution::degenerate(1).unwrap(),
            &CapacityDistribution::degenerate(2).unwrap(),
        )
        .unwrap();
        assert!((it.value - expected).abs() < 1e-14);
    }

    #[test]
    fn preconditions() {
        let cfg = chain_cfg(0.5, DeadlineDistribution::degenerate(1).unwrap());
        let one = CapacityDistribution::degenerate(1).unwrap();
        let two = CapacityDistribution::degenerate(2).unwrap();
        assert_eq!(interaction_sign(&cfg, 1, 2, &two, &one), Err(Error::NotStochasticallyDominant));
        assert!(interaction_sign(&cfg, 2, 2, &one, &two).is_err());
        assert!(BeautyContestConfig::new(1.0, DeadlineDistribution::degenerate(1).unwrap(), chain_environment(), alloc::vec![1])
            .is_err());
        assert!(CapacityDistribution::new(&[(1, 0.5), (2, 0.4)]).is_err());
    }

    #[test]
    fn fosd_on_mixtures() {
        let lo = CapacityDistribution::new(&[(1, 0.5), (3, 0.5)]).unwrap();
        let hi = CapacityDistribution::new(&[(2, 0.5), (3, 0.5)]).unwrap();
        assert!(hi.fosd(&lo));
        assert!(!lo.fosd(&hi));
        assert!(lo.fosd(&lo));
    }
}
