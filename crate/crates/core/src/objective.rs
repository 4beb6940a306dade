//! Signal divisions and the objective-oracle abstraction shared by the
//! search routines.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Number of observations allocated to each signal.
///
/// Ordering is lexicographic on the counts, which is what "canonical"
/// minimizers refer to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Division(Vec<u32>);

impl Division {
    pub fn new(counts: Vec<u32>) -> Self {
        Division(counts)
    }

    pub fn zeros(k: usize) -> Self {
        Division(vec![0; k])
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total number of observations `t`.
    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| u64::from(c)).sum()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| f64::from(c)).collect()
    }

    /// Coordinate-wise `self >= other`.
    pub fn dominates(&self, other: &Division) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    /// `self + e_i`.
    pub fn incremented(&self, i: usize) -> Division {
        let mut d = self.clone();
        d.0[i] += 1;
        d
    }

    pub fn plus(&self, increment: &[u32]) -> Division {
        Division(self.0.iter().zip(increment).map(|(a, b)| a + b).collect())
    }
}

impl From<Vec<u32>> for Division {
    fn from(v: Vec<u32>) -> Self {
        Division(v)
    }
}

impl fmt::Display for Division {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// A deterministic posterior-risk evaluator over divisions.
///
/// Implementations must be coordinate-wise non-increasing in the counts.
pub trait ObjectiveOracle {
    fn num_signals(&self) -> usize;

    /// Objective value at the given signal counts (`counts.len() == num_signals()`).
    fn evaluate(&self, counts: &[u32]) -> f64;

    fn value(&self, q: &Division) -> f64 {
        self.evaluate(q.counts())
    }
}

impl<T: ObjectiveOracle + ?Sized> ObjectiveOracle for &T {
    fn num_signals(&self) -> usize {
        (**self).num_signals()
    }

    fn evaluate(&self, counts: &[u32]) -> f64 {
        (**self).evaluate(counts)
    }
}

/// Wraps a closure as an oracle.
pub struct FnOracle<F> {
    k: usize,
    f: F,
}

impl<F: Fn(&[u32]) -> f64> FnOracle<F> {
    pub fn new(k: usize, f: F) -> Self {
        FnOracle { k, f }
    }
}

impl<F: Fn(&[u32]) -> f64> ObjectiveOracle for FnOracle<F> {
    fn num_signals(&self) -> usize {
        self.k
    }

    fn evaluate(&self, counts: &[u32]) -> f64 {
        (self.f)(counts)
    }
}
