//! Numerical test bench for moment-based tests of locality and
//! noncontextuality.
//!
//! The crate evaluates symmetrized quantum moments of labeled observable
//! sets on finite-dimensional Hilbert spaces, constructs classical
//! (local-hidden-variable) models reproducing low-order moments, and runs a
//! catalog of moment inequalities whose quantum violation it quantifies:
//! the GHZ third-moment contradiction, the fourth-moment Mermin-Peres
//! square inequality, a five-observable state-dependent contextuality
//! check, and the CFRD family of Bell-type inequalities including the
//! quadripartite continuous-variable violation found by minimizing a
//! symmetric tridiagonal quadratic form over truncated Fock states.

pub mod catalog;
pub mod cli;
pub mod error;
pub mod hilbert;
pub mod lhv;
pub mod moments;
pub mod search;

pub use error::{Error, Result};

/// Deterministic RNG used by all seeded sweeps.
pub fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
pub(crate) use seeded_rng as test_rng;
