//! Constructive classical (local-hidden-variable) models reproducing
//! prescribed quantum moments.
//!
//! Four constructions: the Gaussian model matching any positive semidefinite
//! correlation matrix, the delta-peak extension matching arbitrary third
//! moments on a strictly positive definite base, the factorized
//! noncontextual models for up to four observables, and the contextual
//! kernel-reduction preprocessing that makes the peak construction
//! applicable to singular correlation matrices.

mod factor;
mod fit;
mod gaussian;
mod peaked;
mod reduce;

pub use factor::{factor_model, Atom, FactorModel};
pub use fit::{fit, fit_with_lambda, Elimination, FitMode, FitReport};
pub use gaussian::{gaussian_model, GaussianLHV};
pub use peaked::{peaked_model, Peak, PeakedLHV};
pub use reduce::{kernel_reduce, Perturbation, ReduceLog};
