//! Linear-Gaussian belief arithmetic.
//!
//! The state `θ ~ N(μ⁰, V⁰)` is observed through signals
//! `X_k = <c_k, θ> + ε_k`, `ε_k ~ N(0, σ_k²)`. After `q_k` observations of
//! each signal the posterior covariance does not depend on the realized
//! values, so everything here is a function of the counts.
//!
//! Posteriors are computed in precision form,
//! `(V⁰)⁻¹ + C' diag(q/σ²) C`, which stays finite when some `q_k = 0`.
//! Signal indices are zero-based: index 0 is the payoff-relevant state θ₁.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::objective::{Division, ObjectiveOracle};

/// Relative threshold for the non-redundancy test.
pub const NON_REDUNDANCY_TOL: f64 = 1e-10;

/// Prior, signal coefficients and noise variances.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    prior_mean: DVector<f64>,
    prior_cov: DMatrix<f64>,
    coeffs: DMatrix<f64>,
    noise_vars: DVector<f64>,
}

impl Environment {
    /// Builds an environment, checking only that the shapes agree.
    /// Numeric invariants are checked by [`Environment::validate`].
    pub fn new(
        prior_mean: Vec<f64>,
        prior_cov: DMatrix<f64>,
        coeffs: DMatrix<f64>,
        noise_vars: Vec<f64>,
    ) -> Result<Self> {
        let k = prior_cov.nrows();
        if k == 0 {
            return Err(Error::EmptyEnvironment);
        }
        let shape = |what, found| {
            if found == k {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { what, expected: k, found })
            }
        };
        shape("priorCov columns", prior_cov.ncols())?;
        shape("priorMean length", prior_mean.len())?;
        shape("coeffs rows", coeffs.nrows())?;
        shape("coeffs columns", coeffs.ncols())?;
        shape("noiseVars length", noise_vars.len())?;
        Ok(Environment {
            prior_mean: DVector::from_vec(prior_mean),
            prior_cov,
            coeffs,
            noise_vars: DVector::from_vec(noise_vars),
        })
    }

    /// Row-major constructor with zero prior mean.
    pub fn from_rows(prior_cov: &[&[f64]], coeffs: &[&[f64]], noise_vars: &[f64]) -> Result<Self> {
        let k = prior_cov.len();
        let to_matrix = |rows: &[&[f64]], what| -> Result<DMatrix<f64>> {
            if let Some(bad) = rows.iter().find(|r| r.len() != k) {
                return Err(Error::DimensionMismatch { what, expected: k, found: bad.len() });
            }
            Ok(DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]))
        };
        let cov = to_matrix(prior_cov, "priorCov row")?;
        let c = to_matrix(coeffs, "coeffs row")?;
        Environment::new(alloc::vec![0.0; k], cov, c, noise_vars.to_vec())
    }

    pub fn num_signals(&self) -> usize {
        self.prior_cov.nrows()
    }

    pub fn prior_mean(&self) -> &DVector<f64> {
        &self.prior_mean
    }

    pub fn prior_cov(&self) -> &DMatrix<f64> {
        &self.prior_cov
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn noise_vars(&self) -> &DVector<f64> {
        &self.noise_vars
    }

    /// Lists every violated numeric invariant; empty when the environment is usable.
    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();
        let finite = |m: &DMatrix<f64>| m.iter().all(|x| x.is_finite());
        if !finite(&self.prior_cov)
            || !finite(&self.coeffs)
            || !self.noise_vars.iter().chain(self.prior_mean.iter()).all(|x| x.is_finite())
        {
            issues.push(Issue::NonFinite);
        }
        if let Some((row, col)) = linalg::asymmetry(&self.prior_cov) {
            issues.push(Issue::PriorCovNotSymmetric { row, col });
        }
        if issues.is_empty() && !linalg::is_positive_definite(&self.prior_cov) {
            let (min, _) = linalg::eigen_range(&self.prior_cov);
            issues.push(Issue::PriorCovNotPositiveDefinite { min_eigenvalue: min });
        }
        for (index, &value) in self.noise_vars.iter().enumerate() {
            if !(value > 0.0) {
                issues.push(Issue::NoiseVarNotPositive { index, value });
            }
        }
        ValidationReport { issues }
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidEnvironment(report))
        }
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        let k = self.num_signals();
        if index < k {
            Ok(())
        } else {
            Err(Error::SignalIndexOutOfRange { index, k })
        }
    }
}

/// One violated environment invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Issue {
    NonFinite,
    PriorCovNotSymmetric { row: usize, col: usize },
    PriorCovNotPositiveDefinite { min_eigenvalue: f64 },
    NoiseVarNotPositive { index: usize, value: f64 },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::NonFinite => f.write_str("entries must be finite"),
            Issue::PriorCovNotSymmetric { row, col } => {
                write!(f, "priorCov not symmetric at ({row},{col})")
            }
            Issue::PriorCovNotPositiveDefinite { min_eigenvalue } => {
                write!(f, "priorCov not PD (min eigenvalue {min_eigenvalue})")
            }
            Issue::NoiseVarNotPositive { index, value } => {
                write!(f, "noiseVars must be strictly positive (index {index} is {value})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

pub fn validate_environment(env: &Environment) -> ValidationReport {
    env.validate()
}

/// Outcome of the non-redundancy test.
#[derive(Debug, Clone, PartialEq)]
pub struct NonRedundancy {
    pub holds: bool,
    /// First row of `C⁻¹`, when `C` is invertible.
    pub first_row: Option<Vec<f64>>,
    pub reason: Option<&'static str>,
}

/// `C` invertible and every entry of the first row of `C⁻¹` non-zero.
///
/// Both thresholds are scale-free: `|det C| / Π‖c_k‖` and `|[C⁻¹]₁ᵢ|` must
/// exceed [`NON_REDUNDANCY_TOL`].
pub fn check_non_redundancy(env: &Environment) -> NonRedundancy {
    let c = env.coeffs();
    let row_norms: f64 = c.row_iter().map(|r| r.norm()).product();
    let singular = NonRedundancy {
        holds: false,
        first_row: None,
        reason: Some("coefficient matrix is singular"),
    };
    if !(row_norms > 0.0) || !(c.determinant().abs() / row_norms > NON_REDUNDANCY_TOL) {
        return singular;
    }
    let Some(inv) = c.clone().try_inverse() else {
        return singular;
    };
    let row: Vec<f64> = inv.row(0).iter().copied().collect();
    let holds = row.iter().all(|x| x.abs() > NON_REDUNDANCY_TOL);
    NonRedundancy {
        holds,
        reason: (!holds).then_some("first row of C^-1 has a zero entry"),
        first_row: Some(row),
    }
}

pub(crate) fn first_row_of_inverse(env: &Environment) -> Result<Vec<f64>> {
    let nr = check_non_redundancy(env);
    match (nr.holds, nr.first_row) {
        (true, Some(row)) => Ok(row),
        _ => Err(Error::NonRedundancyViolated(nr.reason.unwrap_or("unknown"))),
    }
}

/// Posterior covariance and the variance of θ₁.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub post_cov: DMatrix<f64>,
    pub target_variance: f64,
}

/// Precomputed posterior-variance evaluator for a validated environment.
///
/// Accepts real-valued counts so that continuous derivatives can be probed.
#[derive(Debug, Clone)]
pub struct PosteriorModel {
    env: Environment,
    prior_precision: DMatrix<f64>,
}

impl PosteriorModel {
    pub fn new(env: &Environment) -> Result<Self> {
        env.ensure_valid()?;
        let prior_precision = linalg::spd_inverse(env.prior_cov())
            .ok_or(Error::NotPositiveDefinite("priorCov"))?;
        Ok(PosteriorModel { env: env.clone(), prior_precision })
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    fn check_len(&self, n: usize) -> Result<()> {
        let k = self.env.num_signals();
        if n == k {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { what: "division length", expected: k, found: n })
        }
    }

    /// `(V⁰)⁻¹ + C' diag(q/σ²) C`.
    pub fn precision_at(&self, q: &[f64]) -> DMatrix<f64> {
        let c = self.env.coeffs();
        let mut p = self.prior_precision.clone();
        for (k, &qk) in q.iter().enumerate() {
            if qk == 0.0 {
                continue;
            }
            let scale = qk / self.env.noise_vars()[k];
            let row = c.row(k);
            p += (row.transpose() * row) * scale;
        }
        p
    }

    pub fn posterior_cov_at(&self, q: &[f64]) -> DMatrix<f64> {
        linalg::spd_inverse(&self.precision_at(q)).expect("posterior precision is positive definite")
    }

    /// `f(q) = [posterior covariance]₁₁` for non-negative real counts.
    pub fn target_variance_at(&self, q: &[f64]) -> f64 {
        let p = self.precision_at(q);
        let mut e1 = DVector::zeros(p.nrows());
        e1[0] = 1.0;
        linalg::spd_solve(&p, &e1).expect("posterior precision is positive definite")[0]
    }

    pub fn posterior(&self, q: &Division) -> Result<PosteriorSummary> {
        self.check_len(q.len())?;
        let post_cov = self.posterior_cov_at(&q.to_f64());
        let target_variance = post_cov[(0, 0)];
        Ok(PosteriorSummary { post_cov, target_variance })
    }
}

impl ObjectiveOracle for PosteriorModel {
    fn num_signals(&self) -> usize {
        self.env.num_signals()
    }

    fn evaluate(&self, counts: &[u32]) -> f64 {
        let q: Vec<f64> = counts.iter().map(|&c| f64::from(c)).collect();
        self.target_variance_at(&q)
    }
}

pub fn posterior(env: &Environment, q: &Division) -> Result<PosteriorSummary> {
    PosteriorModel::new(env)?.posterior(q)
}

/// Conditional mean and covariance given realized observations
/// `(signal index, value)`.
pub fn posterior_mean(
    env: &Environment,
    observations: &[(usize, f64)],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let model = PosteriorModel::new(env)?;
    let k = env.num_signals();
    let mut counts = alloc::vec![0u32; k];
    let mut info = &model.prior_precision * env.prior_mean();
    for &(index, x) in observations {
        env.check_index(index)?;
        counts[index] += 1;
        let row = env.coeffs().row(index);
        info += row.transpose() * (x / env.noise_vars()[index]);
    }
    let cov = model.posterior(&Division::new(counts))?.post_cov;
    let mean = &cov * info;
    Ok((mean, cov))
}

/// `Σ(q) = C V⁰ C' + diag(σ²/q)` for strictly positive real counts.
fn signal_covariance(env: &Environment, q: &[f64]) -> Result<DMatrix<f64>> {
    if let Some((index, &value)) = q.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositiveCount { index, value });
    }
    let c = env.coeffs();
    let mut sigma = c * env.prior_cov() * c.transpose();
    for (k, &qk) in q.iter().enumerate() {
        sigma[(k, k)] += env.noise_vars()[k] / qk;
    }
    Ok(sigma)
}

/// Continuous partial derivative `∂f/∂q_i = −(σ_i²/q_i²)·[V⁰C'Σ⁻¹Δ_iiΣ⁻¹CV⁰]₁₁`.
///
/// Uses the covariance form of the posterior, so it is independent of the
/// precision route used by [`PosteriorModel`].
pub fn continuous_partial(env: &Environment, q: &[f64], i: usize) -> Result<f64> {
    env.ensure_valid()?;
    env.check_index(i)?;
    if q.len() != env.num_signals() {
        return Err(Error::DimensionMismatch {
            what: "division length",
            expected: env.num_signals(),
            found: q.len(),
        });
    }
    let sigma = signal_covariance(env, q)?;
    // The bracket is (u_i)² with u = Σ⁻¹ C V⁰ e₁.
    let cv_e1 = env.coeffs() * env.prior_cov().column(0);
    let u = linalg::spd_solve(&sigma, &cv_e1).ok_or(Error::NotPositiveDefinite("signal covariance"))?;
    Ok(-(env.noise_vars()[i] / (q[i] * q[i])) * u[i] * u[i])
}

/// `f(q + e_i) − f(q)`.
pub fn discrete_partial<O: ObjectiveOracle + ?Sized>(oracle: &O, q: &Division, i: usize) -> f64 {
    oracle.value(&q.incremented(i)) - oracle.value(q)
}

/// Prior over the normalized transformed states `θ̃_k = <c_k, θ>/σ_k` and
/// the payoff weights `w` with `θ₁ = <w, θ̃>`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedEnvironment {
    til_cov: DMatrix<f64>,
    til_precision: DMatrix<f64>,
    weights: DVector<f64>,
}

impl TransformedEnvironment {
    pub fn new(til_cov: DMatrix<f64>, weights: Vec<f64>) -> Result<Self> {
        let k = til_cov.nrows();
        if k == 0 {
            return Err(Error::EmptyEnvironment);
        }
        if til_cov.ncols() != k || weights.len() != k {
            return Err(Error::DimensionMismatch {
                what: "transformed environment",
                expected: k,
                found: if til_cov.ncols() != k { til_cov.ncols() } else { weights.len() },
            });
        }
        if linalg::asymmetry(&til_cov).is_some() || !linalg::is_positive_definite(&til_cov) {
            return Err(Error::NotPositiveDefinite("tilCov"));
        }
        let til_precision =
            linalg::spd_inverse(&til_cov).ok_or(Error::NotPositiveDefinite("tilCov"))?;
        Ok(TransformedEnvironment { til_cov, til_precision, weights: DVector::from_vec(weights) })
    }

    pub fn num_signals(&self) -> usize {
        self.til_cov.nrows()
    }

    pub fn til_cov(&self) -> &DMatrix<f64> {
        &self.til_cov
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// Posterior covariance of `θ̃` (identity coefficients, unit noise).
    pub fn posterior_cov_at(&self, q: &[f64]) -> DMatrix<f64> {
        let mut p = self.til_precision.clone();
        for (k, &qk) in q.iter().enumerate() {
            p[(k, k)] += qk;
        }
        linalg::spd_inverse(&p).expect("transformed posterior precision is positive definite")
    }

    /// `w' Σ̃(q) w`.
    pub fn target_variance_at(&self, q: &[f64]) -> f64 {
        let cov = self.posterior_cov_at(q);
        (self.weights.transpose() * cov * &self.weights)[(0, 0)]
    }

    /// `(Ṽ + E)⁻¹` with `E = diag(1/q)`.
    fn shifted_inverse(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        if let Some((index, &value)) = q.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            return Err(Error::NonPositiveCount { index, value });
        }
        let mut m = self.til_cov.clone();
        for (k, &qk) in q.iter().enumerate() {
            m[(k, k)] += 1.0 / qk;
        }
        linalg::spd_inverse(&m).ok_or(Error::NotPositiveDefinite("tilCov + E"))
    }

    /// `γ = (Ṽ + E)⁻¹ Ṽ w` at strictly positive real counts.
    pub fn gamma_at(&self, q: &[f64]) -> Result<Vec<f64>> {
        let inv = self.shifted_inverse(q)?;
        Ok((inv * &self.til_cov * &self.weights).iter().copied().collect())
    }

    /// `∂_i f = −γ_i²/q_i²`.
    pub fn partial_at(&self, q: &[f64], i: usize) -> Result<f64> {
        let g = self.gamma_at(q)?;
        Ok(-(g[i] * g[i]) / (q[i] * q[i]))
    }

    /// Full Hessian of `f` from the γ representation:
    /// `∂_ii f = 2γ_i²/q_i³·(1 − [(Ṽ+E)⁻¹]_ii/q_i)`,
    /// `∂_ij f = −2γ_iγ_j/(q_i²q_j²)·[(Ṽ+E)⁻¹]_ij`.
    pub fn hessian_at(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        let inv = self.shifted_inverse(q)?;
        let g: Vec<f64> = (&inv * &self.til_cov * &self.weights).iter().copied().collect();
        let k = q.len();
        Ok(DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                2.0 * g[i] * g[i] / (q[i] * q[i] * q[i]) * (1.0 - inv[(i, i)] / q[i])
            } else {
                -2.0 * g[i] * g[j] / (q[i] * q[i] * q[j] * q[j]) * inv[(i, j)]
            }
        }))
    }
}

impl ObjectiveOracle for TransformedEnvironment {
    fn num_signals(&self) -> usize {
        self.til_cov.nrows()
    }

    fn evaluate(&self, counts: &[u32]) -> f64 {
        let q: Vec<f64> = counts.iter().map(|&c| f64::from(c)).collect();
        self.target_variance_at(&q)
    }
}

/// `Ṽ = diag(1/σ) C V⁰ C' diag(1/σ)`, `w_i = σ_i [C⁻¹]₁ᵢ`.
///
/// Only invertibility of `C` is required; under non-redundancy every `w_i`
/// is non-zero.
pub fn transform(env: &Environment) -> Result<TransformedEnvironment> {
    env.ensure_valid()?;
    let row = match check_non_redundancy(env).first_row {
        Some(row) => row,
        None => return Err(Error::NonRedundancyViolated("coefficient matrix is singular")),
    };
    let k = env.num_signals();
    let sd: Vec<f64> = env.noise_vars().iter().map(|&v| libm::sqrt(v)).collect();
    let c = env.coeffs();
    let cvc = c * env.prior_cov() * c.transpose();
    let til = DMatrix::from_fn(k, k, |i, j| cvc[(i, j)] / (sd[i] * sd[j]));
    let weights = (0..k).map(|i| sd[i] * row[i]).collect();
    TransformedEnvironment::new(linalg::symmetrize(&til), weights)
}

pub fn gamma_vector(tenv: &TransformedEnvironment, q: &Division) -> Result<Vec<f64>> {
    if q.len() != tenv.num_signals() {
        return Err(Error::DimensionMismatch {
            what: "division length",
            expected: tenv.num_signals(),
            found: q.len(),
        });
    }
    tenv.gamma_at(&q.to_f64())
}

/// `Q_i = C⁻¹ Δ_ii C'⁻¹`, the outer product of column `i` of `C⁻¹`.
pub fn q_matrix(env: &Environment, i: usize) -> Result<DMatrix<f64>> {
    env.check_index(i)?;
    let inv = env
        .coeffs()
        .clone()
        .try_inverse()
        .ok_or(Error::NonRedundancyViolated("coefficient matrix is singular"))?;
    let col = inv.column(i);
    Ok(&col * col.transpose())
}

/// Symmetric positive semi-definite loss weights for `−(a−θ)'W(a−θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(DMatrix<f64>);

impl WeightMatrix {
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        if w.nrows() != w.ncols() {
            return Err(Error::InvalidWeightMatrix("not square"));
        }
        if linalg::asymmetry(&w).is_some() {
            return Err(Error::InvalidWeightMatrix("not symmetric"));
        }
        let (min, _) = linalg::eigen_range(&w);
        if min < -linalg::symmetric_tolerance(&w) {
            return Err(Error::InvalidWeightMatrix("not positive semi-definite"));
        }
        Ok(WeightMatrix(w))
    }

    /// `Δ₁₁`: the single-state objective.
    pub fn first_state(k: usize) -> Self {
        let mut w = DMatrix::zeros(k, k);
        w[(0, 0)] = 1.0;
        WeightMatrix(w)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// `trace(W · posterior covariance)` as an oracle.
#[derive(Debug, Clone)]
pub struct WeightedObjective {
    model: PosteriorModel,
    weights: WeightMatrix,
}

impl WeightedObjective {
    pub fn new(env: &Environment, weights: WeightMatrix) -> Result<Self> {
        let k = env.num_signals();
        if weights.0.nrows() != k {
            return Err(Error::DimensionMismatch {
                what: "weight matrix",
                expected: k,
                found: weights.0.nrows(),
            });
        }
        Ok(WeightedObjective { model: PosteriorModel::new(env)?, weights })
    }

    pub fn value_at(&self, q: &[f64]) -> f64 {
        let cov = self.model.posterior_cov_at(q);
        (&self.weights.0 * cov).trace()
    }
}

impl ObjectiveOracle for WeightedObjective {
    fn num_signals(&self) -> usize {
        self.model.num_signals()
    }

    fn evaluate(&self, counts: &[u32]) -> f64 {
        let q: Vec<f64> = counts.iter().map(|&c| f64::from(c)).collect();
        self.value_at(&q)
    }
}

pub fn weighted_posterior_objective(
    env: &Environment,
    weights: &WeightMatrix,
    q: &Division,
) -> Result<f64> {
    let obj = WeightedObjective::new(env, weights.clone())?;
    obj.model.check_len(q.len())?;
    Ok(obj.value(q))
}
