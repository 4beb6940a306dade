//! Comparison of deterministic signal sequences and a brute-force optimal
//! path oracle for deadline objectives.
//!
//! Under normality the posterior variance of θ₁ is realization independent,
//! so deterministic paths are enough; one path dominates another in every
//! decision problem iff its variance is weakly lower at every period.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::allocation::{
    block_increments, t_optimal, AllocationPath, SearchBudget, TOptimalResult, TIE_TOL,
};
use crate::error::{Error, Result};
use crate::objective::{Division, ObjectiveOracle};

/// Allowed deviation of probability weights from summing to one.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Probabilities `π_t` of the deadline falling at periods `1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeadlineDistribution {
    probs: Vec<f64>,
}

impl DeadlineDistribution {
    /// `probs[t-1]` is the probability of period `t`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty deadline distribution".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidDistribution(format!("negative or non-finite weight {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}, not 1")));
        }
        Ok(DeadlineDistribution { probs })
    }

    /// Deadline fixed at `period` (1-based).
    pub fn degenerate(period: usize) -> Result<Self> {
        if period == 0 {
            return Err(Error::InvalidDistribution("periods start at 1".into()));
        }
        let mut probs = vec![0.0; period];
        probs[period - 1] = 1.0;
        Ok(DeadlineDistribution { probs })
    }

    /// Uniform over the listed periods.
    pub fn uniform(periods: &[usize]) -> Result<Self> {
        let max = periods.iter().copied().max().unwrap_or(0);
        if max == 0 || periods.contains(&0) {
            return Err(Error::InvalidDistribution("periods start at 1".into()));
        }
        let mut probs = vec![0.0; max];
        for &p in periods {
            probs[p - 1] += 1.0 / periods.len() as f64;
        }
        DeadlineDistribution::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of period `t` (1-based); zero beyond the support.
    pub fn prob(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.probs.get(t - 1).copied().unwrap_or(0.0)
        }
    }

    /// Last period with positive probability.
    pub fn horizon(&self) -> usize {
        self.probs.iter().rposition(|&p| p > 0.0).map_or(0, |i| i + 1)
    }
}

/// Period-by-period comparison of two paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PathComparison {
    pub variances_a: Vec<f64>,
    pub variances_b: Vec<f64>,
    /// `A` has weakly lower variance than `B` at every period.
    pub dominates: bool,
    /// First period (1-based) where `A` is worse.
    pub first_violation: Option<usize>,
}

/// Dynamic Blackwell comparison: does path A dominate path B?
pub fn dominates<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    a: &AllocationPath,
    b: &AllocationPath,
) -> Result<PathComparison> {
    if a.periods() != b.periods() {
        return Err(Error::InvalidPath(format!(
            "horizons differ: {} vs {}",
            a.periods(),
            b.periods()
        )));
    }
    if a.block_size() != b.block_size() {
        return Err(Error::InvalidPath(format!(
            "block sizes differ: {} vs {}",
            a.block_size(),
            b.block_size()
        )));
    }
    let variances_a = a.values(oracle);
    let variances_b = b.values(oracle);
    let first_violation =
        variances_a.iter().zip(&variances_b).position(|(x, y)| *x > *y + TIE_TOL).map(|i| i + 1);
    Ok(PathComparison {
        dominates: first_violation.is_none(),
        first_violation,
        variances_a,
        variances_b,
    })
}

/// `Σ_t π_t f(d(t))`: expected squared prediction error at the deadline.
pub fn expected_deadline_risk<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    path: &AllocationPath,
    deadline: &DeadlineDistribution,
) -> Result<f64> {
    let horizon = deadline.horizon();
    if path.periods() < horizon {
        return Err(Error::HorizonTooShort { available: path.periods(), required: horizon });
    }
    Ok((1..=horizon)
        .filter(|&t| deadline.prob(t) > 0.0)
        .map(|t| deadline.prob(t) * oracle.value(path.division(t)))
        .sum())
}

/// Exhaustive minimization of the deadline risk over all block paths.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalPath {
    pub path: AllocationPath,
    pub risk: f64,
}

struct PathSearch<'a, O: ?Sized> {
    oracle: &'a O,
    probs: &'a [f64],
    increments: &'a [Vec<u32>],
    horizon: usize,
    stack: Vec<usize>,
    best_risk: f64,
    target: Option<f64>,
    found: Option<Vec<usize>>,
}

impl<O: ObjectiveOracle + ?Sized> PathSearch<'_, O> {
    // Depth-first over increment sequences in lexicographic order. The first
    // pass records the minimum; the second stops at the first path within
    // tolerance of it.
    fn visit(&mut self, current: &mut Vec<u32>, partial: f64) {
        if self.found.is_some() {
            return;
        }
        let depth = self.stack.len();
        if depth == self.horizon {
            match self.target {
                None => self.best_risk = self.best_risk.min(partial),
                Some(target) => {
                    if partial <= target + TIE_TOL {
                        self.found = Some(self.stack.clone());
                    }
                }
            }
            return;
        }
        let p = self.probs.get(depth).copied().unwrap_or(0.0);
        for (idx, inc) in self.increments.iter().enumerate() {
            for (c, a) in current.iter_mut().zip(inc) {
                *c += a;
            }
            let add = if p > 0.0 { p * self.oracle.evaluate(current) } else { 0.0 };
            self.stack.push(idx);
            self.visit(current, partial + add);
            self.stack.pop();
            for (c, a) in current.iter_mut().zip(inc) {
                *c -= a;
            }
            if self.found.is_some() {
                return;
            }
        }
    }
}

pub fn optimal_deadline_path<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    deadline: &DeadlineDistribution,
    block_size: u32,
    budget: &SearchBudget,
) -> Result<OptimalPath> {
    let k = oracle.num_signals();
    if block_size == 0 {
        return Err(Error::InvalidParameter("block size must be positive".into()));
    }
    let increments = block_increments(k, block_size, budget)?;
    let horizon = deadline.horizon();
    let needed = (increments.len() as u128).checked_pow(horizon as u32).unwrap_or(u128::MAX);
    if needed > budget.paths {
        return Err(Error::BudgetExceeded { needed, budget: budget.paths });
    }
    let mut search = PathSearch {
        oracle,
        probs: deadline.probs(),
        increments: &increments,
        horizon,
        stack: Vec::with_capacity(horizon),
        best_risk: f64::INFINITY,
        target: None,
        found: None,
    };
    let mut current = vec![0u32; k];
    search.visit(&mut current, 0.0);
    search.target = Some(search.best_risk);
    search.visit(&mut current, 0.0);
    let best = search.best_risk;
    let chosen = search.found.expect("minimum path is revisited");
    let incs: Vec<Vec<u32>> = chosen.iter().map(|&i| increments[i].clone()).collect();
    let path = AllocationPath::from_increments(block_size, k, &incs)?;
    Ok(OptimalPath { risk: expected_deadline_risk(oracle, &path, deadline).unwrap_or(best), path })
}

/// Builds a path through one t-optimal division at every block boundary
/// `B, 2B, …, TB`, if such a coordinate-wise monotone chain exists.
pub fn t_optimal_block_path<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    block_size: u32,
    horizon_blocks: usize,
    budget: &SearchBudget,
) -> Result<Option<AllocationPath>> {
    let k = oracle.num_signals();
    let levels: Vec<TOptimalResult> = (1..=horizon_blocks)
        .map(|t| t_optimal(oracle, block_size * t as u32, budget))
        .collect::<Result<_>>()?;
    fn extend(levels: &[TOptimalResult], depth: usize, chain: &mut Vec<Division>) -> bool {
        if depth == levels.len() {
            return true;
        }
        for d in &levels[depth].minimizers {
            if d.dominates(chain.last().expect("chain starts at zero")) {
                chain.push(d.clone());
                if extend(levels, depth + 1, chain) {
                    return true;
                }
                chain.pop();
            }
        }
        false
    }
    let mut chain = vec![Division::zeros(k)];
    if extend(&levels, 0, &mut chain) {
        Ok(Some(AllocationPath::new(block_size, chain)?))
    } else {
        Ok(None)
    }
}

/// Every block path of the given horizon, in lexicographic increment order.
pub fn all_block_paths(
    k: usize,
    block_size: u32,
    horizon: usize,
    budget: &SearchBudget,
) -> Result<Vec<AllocationPath>> {
    let increments = block_increments(k, block_size, budget)?;
    let needed = (increments.len() as u128).checked_pow(horizon as u32).unwrap_or(u128::MAX);
    if needed > budget.paths {
        return Err(Error::BudgetExceeded { needed, budget: budget.paths });
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; horizon];
    loop {
        let incs: Vec<Vec<u32>> = idx.iter().map(|&i| increments[i].clone()).collect();
        out.push(AllocationPath::from_increments(block_size, k, &incs)?);
        // Odometer increment, last period fastest.
        let mut pos = horizon;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < increments.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}
