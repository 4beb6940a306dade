//! Integer allocation: exact t-optimal divisions, myopic block paths,
//! asymptotic frequencies, block-size bounds and monotonicity scans.
//!
//! All exact searches enumerate weak compositions in lexicographic order and
//! are capped by a [`SearchBudget`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gaussian::{self, Environment, TransformedEnvironment};
use crate::linalg;
use crate::objective::{Division, ObjectiveOracle};

/// Objective values within this absolute distance are treated as equal.
pub const TIE_TOL: f64 = 1e-12;

pub const DEFAULT_COMPOSITION_BUDGET: u128 = 100_000_000;
pub const DEFAULT_PATH_BUDGET: u128 = 10_000_000;

/// Caps on exhaustive enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    /// Maximum number of divisions examined by one t-optimal or block search.
    pub compositions: u128,
    /// Maximum number of block paths examined by the deadline-path oracle.
    pub paths: u128,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { compositions: DEFAULT_COMPOSITION_BUDGET, paths: DEFAULT_PATH_BUDGET }
    }
}

impl SearchBudget {
    pub fn check_compositions(&self, needed: u128) -> Result<()> {
        if needed > self.compositions {
            Err(Error::BudgetExceeded { needed, budget: self.compositions })
        } else {
            Ok(())
        }
    }
}

/// `n choose r`, saturating at `u128::MAX`.
pub fn binomial(n: u64, r: u64) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul(u128::from(n - i)) {
            Some(v) => v / u128::from(i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of weak compositions of `t` into `k` parts.
pub fn composition_count(k: usize, t: u32) -> u128 {
    if k == 0 {
        return u128::from(t == 0);
    }
    binomial(u64::from(t) + k as u64 - 1, k as u64 - 1)
}

/// Visits all weak compositions of `t` into `k` parts in increasing
/// lexicographic order, from `(0,…,0,t)` to `(t,0,…,0)`.
pub fn for_each_composition(k: usize, t: u32, mut visit: impl FnMut(&[u32])) {
    if k == 0 {
        if t == 0 {
            visit(&[]);
        }
        return;
    }
    let mut a = vec![0u32; k];
    a[k - 1] = t;
    loop {
        visit(&a);
        // Rightmost position (before the last) that can take one more unit
        // from the tail.
        let mut tail = a[k - 1];
        let mut pos = None;
        for i in (0..k - 1).rev() {
            if tail > 0 {
                pos = Some(i);
                break;
            }
            tail += a[i];
        }
        let Some(i) = pos else { break };
        a[i] += 1;
        for x in &mut a[i + 1..k] {
            *x = 0;
        }
        a[k - 1] = tail - 1;
    }
}

/// All minimizers of the objective over divisions of `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TOptimalResult {
    pub t: u32,
    /// Sorted lexicographically; never empty.
    pub minimizers: Vec<Division>,
    pub min_value: f64,
}

impl TOptimalResult {
    /// Lexicographically smallest minimizer.
    pub fn canonical(&self) -> &Division {
        &self.minimizers[0]
    }

    pub fn is_unique(&self) -> bool {
        self.minimizers.len() == 1
    }

    pub fn contains(&self, d: &Division) -> bool {
        self.minimizers.binary_search(d).is_ok()
    }
}

/// Exhaustive t-optimal search.
pub fn t_optimal<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    t: u32,
    budget: &SearchBudget,
) -> Result<TOptimalResult> {
    let k = oracle.num_signals();
    if k == 0 {
        return Err(Error::EmptyEnvironment);
    }
    budget.check_compositions(composition_count(k, t))?;
    let mut best = f64::INFINITY;
    let mut candidates: Vec<(f64, Vec<u32>)> = Vec::new();
    for_each_composition(k, t, |c| {
        let v = oracle.evaluate(c);
        if v < best {
            best = v;
            candidates.retain(|(cv, _)| *cv <= best + TIE_TOL);
        }
        if v <= best + TIE_TOL {
            candidates.push((v, c.to_vec()));
        }
    });
    let mut minimizers: Vec<Division> = candidates
        .into_iter()
        .filter(|(v, _)| *v <= best + TIE_TOL)
        .map(|(_, c)| Division::new(c))
        .collect();
    minimizers.sort();
    Ok(TOptimalResult { t, minimizers, min_value: best })
}

/// How a myopic block is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MyopicMode {
    /// Exact minimization over all size-B multisets of signals.
    JointBlock,
    /// B successive single-signal greedy steps.
    OneAtATime,
}

/// Cumulative divisions `d(0) = 0, d(1), …, d(T)` with block increments of
/// size `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationPath {
    block_size: u32,
    divisions: Vec<Division>,
}

impl AllocationPath {
    /// Checks that `divisions` start at zero, are non-decreasing and grow by
    /// exactly `block_size` per period.
    pub fn new(block_size: u32, divisions: Vec<Division>) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::InvalidPath("block size must be positive".into()));
        }
        let Some(first) = divisions.first() else {
            return Err(Error::InvalidPath("path needs d(0)".into()));
        };
        if first.total() != 0 {
            return Err(Error::InvalidPath("d(0) must be zero".into()));
        }
        for (t, w) in divisions.windows(2).enumerate() {
            if w[1].len() != w[0].len() || !w[1].dominates(&w[0]) {
                return Err(Error::InvalidPath(alloc::format!("period {} is not monotone", t + 1)));
            }
            if w[1].total() - w[0].total() != u64::from(block_size) {
                return Err(Error::InvalidPath(alloc::format!(
                    "period {} does not add exactly {} observations",
                    t + 1,
                    block_size
                )));
            }
        }
        Ok(AllocationPath { block_size, divisions })
    }

    /// Path from per-period increments.
    pub fn from_increments(block_size: u32, k: usize, increments: &[Vec<u32>]) -> Result<Self> {
        let mut divisions = vec![Division::zeros(k)];
        for inc in increments {
            if inc.len() != k {
                return Err(Error::InvalidPath("increment length differs from K".into()));
            }
            let next = divisions.last().expect("non-empty").plus(inc);
            divisions.push(next);
        }
        AllocationPath::new(block_size, divisions)
    }

    pub fn block_size(&self) -> u32 {
        self.block_size
    }

    /// Number of periods `T`.
    pub fn periods(&self) -> usize {
        self.divisions.len() - 1
    }

    pub fn num_signals(&self) -> usize {
        self.divisions[0].len()
    }

    /// `d(t)` for `t = 0..=T`.
    pub fn division(&self, t: usize) -> &Division {
        &self.divisions[t]
    }

    pub fn divisions(&self) -> &[Division] {
        &self.divisions
    }

    pub fn last(&self) -> &Division {
        self.divisions.last().expect("non-empty")
    }

    /// Objective at periods `1..=T`.
    pub fn values<O: ObjectiveOracle + ?Sized>(&self, oracle: &O) -> Vec<f64> {
        self.divisions[1..].iter().map(|d| oracle.value(d)).collect()
    }
}

/// Block increments in tie-break order: lexicographically smallest
/// increment vector first, so `(0,…,0,B)` precedes `(B,0,…,0)`.
pub(crate) fn block_increments(k: usize, b: u32, budget: &SearchBudget) -> Result<Vec<Vec<u32>>> {
    budget.check_compositions(composition_count(k, b))?;
    let mut all = Vec::new();
    for_each_composition(k, b, |c| all.push(c.to_vec()));
    Ok(all)
}

/// Index of the first candidate whose value is within [`TIE_TOL`] of the
/// minimum.
pub(crate) fn first_within_tol(values: &[f64]) -> usize {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values.iter().position(|&v| v <= min + TIE_TOL).expect("non-empty candidate set")
}

fn choose_block<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    current: &Division,
    increments: &[Vec<u32>],
) -> Division {
    let mut buf = current.counts().to_vec();
    let values: Vec<f64> = increments
        .iter()
        .map(|inc| {
            for ((slot, base), add) in buf.iter_mut().zip(current.counts()).zip(inc) {
                *slot = base + add;
            }
            oracle.evaluate(&buf)
        })
        .collect();
    current.plus(&increments[first_within_tol(&values)])
}

// Unit increments in the same order as `block_increments`: e_K first.
fn greedy_step<O: ObjectiveOracle + ?Sized>(oracle: &O, current: &Division) -> Division {
    let k = current.len();
    let values: Vec<f64> =
        (0..k).rev().map(|i| oracle.value(&current.incremented(i))).collect();
    current.incremented(k - 1 - first_within_tol(&values))
}

/// Myopic path over `horizon_blocks` periods of `block_size` observations.
pub fn myopic_path<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    block_size: u32,
    horizon_blocks: usize,
    mode: MyopicMode,
    budget: &SearchBudget,
) -> Result<AllocationPath> {
    let k = oracle.num_signals();
    if block_size == 0 || horizon_blocks == 0 {
        return Err(Error::InvalidParameter("block size and horizon must be positive".into()));
    }
    let mut divisions = vec![Division::zeros(k)];
    match mode {
        MyopicMode::JointBlock => {
            let increments = block_increments(k, block_size, budget)?;
            for _ in 0..horizon_blocks {
                let next = choose_block(oracle, divisions.last().expect("non-empty"), &increments);
                divisions.push(next);
            }
        }
        MyopicMode::OneAtATime => {
            for _ in 0..horizon_blocks {
                let mut d = divisions.last().expect("non-empty").clone();
                for _ in 0..block_size {
                    d = greedy_step(oracle, &d);
                }
                divisions.push(d);
            }
        }
    }
    AllocationPath::new(block_size, divisions)
}

/// First block at which the joint-block and one-at-a-time myopic paths
/// differ, if any.
pub fn myopic_modes_diverge<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    block_size: u32,
    horizon_blocks: usize,
    budget: &SearchBudget,
) -> Result<Option<usize>> {
    let joint = myopic_path(oracle, block_size, horizon_blocks, MyopicMode::JointBlock, budget)?;
    let unit = myopic_path(oracle, block_size, horizon_blocks, MyopicMode::OneAtATime, budget)?;
    Ok((1..=horizon_blocks).find(|&t| joint.division(t) != unit.division(t)))
}

/// Whether the joint-block myopic path is t-optimal at every block boundary.
/// Returns the first failing block, or `None` when it never fails.
pub fn myopic_first_suboptimal_block<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    block_size: u32,
    horizon_blocks: usize,
    budget: &SearchBudget,
) -> Result<Option<usize>> {
    let path = myopic_path(oracle, block_size, horizon_blocks, MyopicMode::JointBlock, budget)?;
    for t in 1..=horizon_blocks {
        let total = block_size * t as u32;
        let opt = t_optimal(oracle, total, budget)?;
        if oracle.value(path.division(t)) > opt.min_value + TIE_TOL {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Smallest `B ≤ max_block` whose joint-block myopic path is t-optimal at
/// every block boundary up to `horizon_blocks`. This is an empirical value
/// over a finite horizon, not a proven threshold.
pub fn smallest_myopic_optimal_block<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    max_block: u32,
    horizon_blocks: usize,
    budget: &SearchBudget,
) -> Result<Option<u32>> {
    for b in 1..=max_block {
        if myopic_first_suboptimal_block(oracle, b, horizon_blocks, budget)?.is_none() {
            return Ok(Some(b));
        }
    }
    Ok(None)
}

/// Earliest block `T0` such that the joint-block myopic path is t-optimal at
/// every block `T0..=horizon_blocks`.
pub fn myopic_optimal_onset<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    block_size: u32,
    horizon_blocks: usize,
    budget: &SearchBudget,
) -> Result<usize> {
    let path = myopic_path(oracle, block_size, horizon_blocks, MyopicMode::JointBlock, budget)?;
    let mut onset = 1;
    for t in 1..=horizon_blocks {
        let opt = t_optimal(oracle, block_size * t as u32, budget)?;
        if oracle.value(path.division(t)) > opt.min_value + TIE_TOL {
            onset = t + 1;
        }
    }
    Ok(onset)
}

/// `λ_i = |[C⁻¹]₁ᵢ|σ_i / Σ_j |[C⁻¹]₁ⱼ|σ_j`.
pub fn asymptotic_weights(env: &Environment) -> Result<Vec<f64>> {
    env.ensure_valid()?;
    let row = gaussian::first_row_of_inverse(env)?;
    let raw: Vec<f64> = row
        .iter()
        .zip(env.noise_vars().iter())
        .map(|(r, &v)| r.abs() * libm::sqrt(v))
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|x| x / total).collect())
}

/// Sufficient block size `8(R+1)K^{1.5}` with `R = ‖Ṽ⁻¹‖_op`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockBound {
    pub operator_norm: f64,
    pub bound: f64,
}

fn unit_weight_check(tenv: &TransformedEnvironment) -> Result<()> {
    let dev = tenv.weights().iter().map(|w| (w - 1.0).abs()).fold(0.0, f64::max);
    if dev > 1e-9 {
        Err(Error::WeightsNotUnit { max_deviation: dev })
    } else {
        Ok(())
    }
}

/// Operator norm of `Ṽ⁻¹`: its largest eigenvalue.
pub fn inverse_operator_norm(tenv: &TransformedEnvironment) -> Result<f64> {
    let inv = linalg::spd_inverse(tenv.til_cov()).ok_or(Error::NotPositiveDefinite("tilCov"))?;
    Ok(linalg::eigen_range(&inv).1)
}

pub fn block_bound(tenv: &TransformedEnvironment) -> Result<BlockBound> {
    unit_weight_check(tenv)?;
    let r = inverse_operator_norm(tenv)?;
    let k = tenv.num_signals() as f64;
    Ok(BlockBound { operator_norm: r, bound: 8.0 * (r + 1.0) * libm::pow(k, 1.5) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreqViolation {
    pub t: u32,
    pub division: Division,
    pub signal: usize,
    pub deviation: f64,
}

/// Sweep of `|n_i(t) − t/K| ≤ 4(R+1)√K` for `t ≥ 8(R+1)K√K`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqBoundReport {
    pub operator_norm: f64,
    /// First `t` covered by the bound.
    pub t_min: u32,
    pub t_max: u32,
    pub allowed_deviation: f64,
    /// Values of `t` actually checked.
    pub checked: Vec<u32>,
    pub max_deviation: f64,
    pub violations: Vec<FreqViolation>,
    /// Set when the exact search budget stopped the sweep early.
    pub truncated: bool,
}

pub fn freq_bound_check<O: ObjectiveOracle + ?Sized>(
    tenv: &TransformedEnvironment,
    oracle: &O,
    t_max: u32,
    budget: &SearchBudget,
) -> Result<FreqBoundReport> {
    unit_weight_check(tenv)?;
    if oracle.num_signals() != tenv.num_signals() {
        return Err(Error::DimensionMismatch {
            what: "oracle signals",
            expected: tenv.num_signals(),
            found: oracle.num_signals(),
        });
    }
    let r = inverse_operator_norm(tenv)?;
    let k = tenv.num_signals() as f64;
    let sqrt_k = libm::sqrt(k);
    let start = libm::ceil(8.0 * (r + 1.0) * k * sqrt_k);
    let t_min = if start > f64::from(u32::MAX) { u32::MAX } else { start as u32 };
    let allowed = 4.0 * (r + 1.0) * sqrt_k;
    let mut report = FreqBoundReport {
        operator_norm: r,
        t_min,
        t_max,
        allowed_deviation: allowed,
        checked: Vec::new(),
        max_deviation: 0.0,
        violations: Vec::new(),
        truncated: false,
    };
    if t_min > t_max {
        return Ok(report);
    }
    for t in t_min..=t_max {
        let opt = match t_optimal(oracle, t, budget) {
            Ok(opt) => opt,
            Err(Error::BudgetExceeded { .. }) => {
                report.truncated = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let target = f64::from(t) / k;
        for d in &opt.minimizers {
            for (signal, &n) in d.counts().iter().enumerate() {
                let deviation = (f64::from(n) - target).abs();
                report.max_deviation = report.max_deviation.max(deviation);
                if deviation > allowed {
                    report.violations.push(FreqViolation { t, division: d.clone(), signal, deviation });
                }
            }
        }
        report.checked.push(t);
    }
    Ok(report)
}

/// One row of a monotonicity scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub t: u32,
    pub canonical: Division,
    pub min_value: f64,
    pub minimizer_count: usize,
    /// Whether some minimizer at `t+1` dominates some minimizer at `t`;
    /// `None` on the last row.
    pub monotone_to_next: Option<bool>,
}

/// A transition `t → t+1` with no dominating pair of minimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityFailure {
    pub t: u32,
    pub from: Vec<Division>,
    pub to: Vec<Division>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub rows: Vec<ScanRow>,
    pub failures: Vec<MonotonicityFailure>,
}

impl MonotonicityReport {
    /// The `t` of every failing transition `t → t+1`.
    pub fn failing_times(&self) -> Vec<u32> {
        self.failures.iter().map(|f| f.t).collect()
    }
}

/// Scans `t = 0..t_max` for transitions where the t-optimal divisions cannot
/// be followed sequentially.
pub fn monotonicity_scan<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    t_max: u32,
    budget: &SearchBudget,
) -> Result<MonotonicityReport> {
    let results: Vec<TOptimalResult> =
        (0..=t_max).map(|t| t_optimal(oracle, t, budget)).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (idx, res) in results.iter().enumerate() {
        let monotone = results.get(idx + 1).map(|next| {
            res.minimizers.iter().any(|a| next.minimizers.iter().any(|b| b.dominates(a)))
        });
        if monotone == Some(false) {
            failures.push(MonotonicityFailure {
                t: res.t,
                from: res.minimizers.clone(),
                to: results[idx + 1].minimizers.clone(),
            });
        }
        rows.push(ScanRow {
            t: res.t,
            canonical: res.canonical().clone(),
            min_value: res.min_value,
            minimizer_count: res.minimizers.len(),
            monotone_to_next: monotone,
        });
    }
    Ok(MonotonicityReport { rows, failures })
}

/// Switch condition `|∂_i f(q − e_i)| < |∂_j f(q − e_i)|` with discrete
/// partials: replacing one observation of `i` by one of `j` strictly lowers
/// the objective.
pub fn switch_improves<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    q: &Division,
    i: usize,
    j: usize,
) -> Result<bool> {
    let k = oracle.num_signals();
    for index in [i, j] {
        if index >= k {
            return Err(Error::SignalIndexOutOfRange { index, k });
        }
    }
    if q.len() != k {
        return Err(Error::DimensionMismatch { what: "division length", expected: k, found: q.len() });
    }
    if q.counts()[i] == 0 {
        return Err(Error::NonPositiveCount { index: i, value: 0.0 });
    }
    let mut base = q.counts().to_vec();
    base[i] -= 1;
    let base = Division::new(base);
    let partial_i = gaussian::discrete_partial(oracle, &base, i);
    let partial_j = gaussian::discrete_partial(oracle, &base, j);
    Ok(partial_i.abs() < partial_j.abs())
}
