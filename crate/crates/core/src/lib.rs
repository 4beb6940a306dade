//! Sequential acquisition of correlated Gaussian signals.
//!
//! A decision maker learns about `θ₁`, the first coordinate of a Gaussian
//! state, by sampling linear signals `X_k = ⟨c_k, θ⟩ + ε_k`. The posterior
//! variance depends only on how many times each signal was observed, so
//! every question here is a combinatorial one about count vectors: which
//! division of `t` observations is best, whether the greedy rule reaches it,
//! and how the answers behave as `t` grows.
//!
//! Everything is `no_std` with `alloc`; file formats and the command line
//! live in the companion `infoseq` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod linalg;

pub mod allocation;
pub mod blackwell;
pub mod games;
pub mod gaussian;
pub mod objective;
pub mod special_cases;

pub use error::{Error, Result};
pub use gaussian::{Environment, PosteriorModel, TransformedEnvironment};
pub use objective::{Division, FnOracle, ObjectiveOracle};
