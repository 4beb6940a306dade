//! Canonical environments and closed-form posterior variances.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::Environment;
use crate::objective::{Division, ObjectiveOracle};

/// Three-signal chain: `V⁰ = I`, `σ² = 1`, signals `θ₁+θ₂`, `θ₂+θ₃`, `θ₃`.
///
/// Its t-optimal divisions fail to be monotone at every `t = 3N+2 → 3N+3`.
pub fn chain_environment() -> Environment {
    Environment::from_rows(
        &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]],
        &[&[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0], &[0.0, 0.0, 1.0]],
        &[1.0, 1.0, 1.0],
    )
    .expect("static shape")
}

/// `1/q` with `1/0 = +∞`.
fn recip(q: u32) -> f64 {
    if q == 0 {
        f64::INFINITY
    } else {
        1.0 / f64::from(q)
    }
}

/// `f(q₁,q₂,q₃) = 1 − 1/(1 + 1/q₁ + 1 − 1/(1 + 1/q₂ + 1/(1+q₃)))`.
pub fn chain_closed_form_f(q1: u32, q2: u32, q3: u32) -> f64 {
    if q1 == 0 {
        return 1.0;
    }
    let inner = if q2 == 0 { 0.0 } else { 1.0 / (1.0 + recip(q2) + 1.0 / (1.0 + f64::from(q3))) };
    1.0 - 1.0 / (1.0 + recip(q1) + 1.0 - inner)
}

/// The chain closed form as an oracle.
#[derive(Debug, Clone, Copy, Default)]
pub struct ChainClosedForm;

impl ObjectiveOracle for ChainClosedForm {
    fn num_signals(&self) -> usize {
        3
    }

    fn evaluate(&self, counts: &[u32]) -> f64 {
        chain_closed_form_f(counts[0], counts[1], counts[2])
    }
}

/// Unique t-optimal division of the chain for `t ≥ 4`:
/// `(N+2,N,N−1)` at `3N+1`, `(N+3,N,N−1)` at `3N+2`, `(N+2,N+1,N)` at `3N+3`.
pub fn appendix_toptimal_formula(t: u32) -> Result<Division> {
    if t < 4 {
        return Err(Error::FormulaDomain(t));
    }
    let counts = match t % 3 {
        1 => {
            let n = (t - 1) / 3;
            vec![n + 2, n, n - 1]
        }
        2 => {
            let n = (t - 2) / 3;
            vec![n + 3, n, n - 1]
        }
        _ => {
            let n = (t - 3) / 3;
            vec![n + 2, n + 1, n]
        }
    };
    Ok(Division::new(counts))
}

/// `X₁ = θ₁ + θ₂ + … + θ_K + ε₁` and `X_i = θ_i + ε_i` for the biases,
/// with independent priors `θ_i ~ N(0, v_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipleBiasesEnvironment {
    prior_vars: Vec<f64>,
    noise_vars: Vec<f64>,
}

impl MultipleBiasesEnvironment {
    /// `prior_vars[0]` is the variance of θ₁.
    pub fn new(prior_vars: Vec<f64>, noise_vars: Vec<f64>) -> Result<Self> {
        if prior_vars.is_empty() {
            return Err(Error::EmptyEnvironment);
        }
        if prior_vars.len() != noise_vars.len() {
            return Err(Error::DimensionMismatch {
                what: "noise variances",
                expected: prior_vars.len(),
                found: noise_vars.len(),
            });
        }
        if prior_vars.iter().chain(&noise_vars).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("variances must be positive and finite".into()));
        }
        Ok(MultipleBiasesEnvironment { prior_vars, noise_vars })
    }

    pub fn prior_vars(&self) -> &[f64] {
        &self.prior_vars
    }

    pub fn noise_vars(&self) -> &[f64] {
        &self.noise_vars
    }

    /// Matrix encoding: states `(θ₁, …, θ_K)`, prior `diag(v)`, first
    /// coefficient row all ones, remaining rows `e_i`.
    pub fn to_environment(&self) -> Environment {
        let k = self.prior_vars.len();
        let cov = DMatrix::from_diagonal(&DVector::from_vec(self.prior_vars.clone()));
        let coeffs = DMatrix::from_fn(k, k, |i, j| if i == 0 || i == j { 1.0 } else { 0.0 });
        Environment::new(vec![0.0; k], cov, coeffs, self.noise_vars.clone()).expect("square by construction")
    }
}

/// `v₀ − v₀²/(v₀ + σ₁²/q₁ + Σ_{i≥2}(v_i − v_i²/(v_i + σ_i²/q_i)))`; returns
/// `v₀` when `q₁ = 0`.
pub fn multiple_biases_f(mb: &MultipleBiasesEnvironment, q: &[u32]) -> f64 {
    let v0 = mb.prior_vars[0];
    if q[0] == 0 {
        return v0;
    }
    let mut denom = v0 + mb.noise_vars[0] / f64::from(q[0]);
    for i in 1..mb.prior_vars.len() {
        let v = mb.prior_vars[i];
        denom += if q[i] == 0 { v } else { v - v * v / (v + mb.noise_vars[i] / f64::from(q[i])) };
    }
    v0 - v0 * v0 / denom
}

impl ObjectiveOracle for MultipleBiasesEnvironment {
    fn num_signals(&self) -> usize {
        self.prior_vars.len()
    }

    fn evaluate(&self, counts: &[u32]) -> f64 {
        multiple_biases_f(self, counts)
    }
}

/// `V⁰ = I`, `σ = 1` and a Householder reflection `C` whose first column is
/// `(1,…,1)/√K`: orthogonal signal rows with equal weight on θ₁.
pub fn orthogonal_environment(k: usize) -> Result<Environment> {
    if k == 0 {
        return Err(Error::EmptyEnvironment);
    }
    let u = DVector::from_element(k, 1.0 / libm::sqrt(k as f64));
    let mut v = -u;
    v[0] += 1.0;
    let vv = v.dot(&v);
    let coeffs = if vv < 1e-15 {
        DMatrix::identity(k, k)
    } else {
        DMatrix::identity(k, k) - (&v * v.transpose()) * (2.0 / vv)
    };
    Environment::new(vec![0.0; k], DMatrix::identity(k, k), coeffs, vec![1.0; k])
}

/// Environment whose transformed model has prior `til_cov` and payoff
/// weights `w = 1`: `σ = 1`, `C` with `C⁻¹` first row all ones, and
/// `V⁰ = C⁻¹ Ṽ C⁻ᵀ`.
pub fn unit_weight_environment(til_cov: &DMatrix<f64>) -> Result<Environment> {
    let k = til_cov.nrows();
    if k == 0 {
        return Err(Error::EmptyEnvironment);
    }
    let c_inv = DMatrix::from_fn(k, k, |i, j| if i == 0 || i == j { 1.0 } else { 0.0 });
    let coeffs = DMatrix::from_fn(k, k, |i, j| match (i, j) {
        (0, 0) => 1.0,
        (0, _) => -1.0,
        _ if i == j => 1.0,
        _ => 0.0,
    });
    let cov = &c_inv * til_cov * c_inv.transpose();
    let cov = (&cov + cov.transpose()) * 0.5;
    Environment::new(vec![0.0; k], cov, coeffs, vec![1.0; k])
}

/// Three-signal `w = 1` instance with a mildly correlated transformed prior.
pub fn w1_demo_til_cov() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.3, 0.5, 2.0, 0.4, 0.3, 0.4, 2.0])
}

pub fn w1_demo_environment() -> Environment {
    unit_weight_environment(&w1_demo_til_cov()).expect("static shape")
}

/// Two-signal coefficients `C = ((a, b), (c, d))` with `|ad| ≥ |bc|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct K2Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl K2Coefficients {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if [a, b, c, d].iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("coefficients must be finite".into()));
        }
        if (a * d).abs() < (b * c).abs() {
            return Err(Error::K2Normalization);
        }
        Ok(K2Coefficients { a, b, c, d })
    }

    /// Swaps the signal rows when needed to satisfy the normalization.
    pub fn normalized(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if (a * d).abs() < (b * c).abs() {
            K2Coefficients::new(c, d, a, b)
        } else {
            K2Coefficients::new(a, b, c, d)
        }
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// `V⁰ = I₂`, unit noise.
    pub fn to_environment(&self) -> Environment {
        Environment::from_rows(
            &[&[1.0, 0.0], &[0.0, 1.0]],
            &[&[self.a, self.b], &[self.c, self.d]],
            &[1.0, 1.0],
        )
        .expect("static shape")
    }

    /// `(1 + b²q₁ + d²q₂) / (1 + (a²+b²)q₁ + (c²+d²)q₂ + (ad−bc)²q₁q₂)`.
    pub fn f(&self, q1: f64, q2: f64) -> f64 {
        let K2Coefficients { a, b, c, d } = *self;
        let det = self.determinant();
        (1.0 + b * b * q1 + d * d * q2)
            / (1.0 + (a * a + b * b) * q1 + (c * c + d * d) * q2 + det * det * q1 * q2)
    }
}

impl ObjectiveOracle for K2Coefficients {
    fn num_signals(&self) -> usize {
        2
    }

    fn evaluate(&self, counts: &[u32]) -> f64 {
        self.f(f64::from(counts[0]), f64::from(counts[1]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct K2Condition {
    /// `(1+2b²)|ad−bc| ≥ |ad+bc|`.
    pub holds: bool,
    /// The sufficient shortcut `abcd ≤ 0`.
    pub abcd_nonpositive: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// Sufficient condition for the myopic rule to be optimal from period 1.
pub fn k2_condition(k2: &K2Coefficients) -> K2Condition {
    let K2Coefficients { a, b, c, d } = *k2;
    let lhs = (1.0 + 2.0 * b * b) * (a * d - b * c).abs();
    let rhs = (a * d + b * c).abs();
    K2Condition { holds: lhs >= rhs, abcd_nonpositive: a * b * c * d <= 0.0, lhs, rhs }
}

/// Relative tolerance under which the two sides of the myopic rule tie.
pub const K2_TIE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct K2Choice {
    /// Zero-based signal index chosen next.
    pub signal: usize,
    /// Both sides agree to relative precision; `signal` is then 0 by convention.
    pub tie: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// Myopic choice from the polynomial form of `f(q₁+1,q₂) < f(q₁,q₂+1)`.
pub fn k2_myopic_choice(k2: &K2Coefficients, q1: u32, q2: u32) -> K2Choice {
    let K2Coefficients { a, b, c, d } = *k2;
    let (q1, q2) = (f64::from(q1), f64::from(q2));
    let det2 = k2.determinant() * k2.determinant();
    let cross = a * a * d * d - b * b * c * c;
    let lhs = det2 * b * b * q1 * q1 + (1.0 + b * b) * det2 * q1 - cross * q1 + c * c * (1.0 + b * b);
    let rhs = det2 * d * d * q2 * q2 + (1.0 + d * d) * det2 * q2 + cross * q2 + a * a * (1.0 + d * d);
    let scale = lhs.abs().max(rhs.abs()).max(1.0);
    let tie = (lhs - rhs).abs() <= K2_TIE_TOL * scale;
    let signal = if tie || lhs < rhs { 0 } else { 1 };
    K2Choice { signal, tie, lhs, rhs }
}
