//! Lebesgue decomposition of positive operators and normal positive functionals.
//!
//! Finite-dimensional operators are [`PsdMatrix`] values; diagonal
//! infinite-rank operators are [`L1Sequence`] values. A normal functional
//! `f_T(A) = tr(AT)` is held by its representing operator.

pub mod ell1;
pub mod engine;
pub mod error;
pub mod formats;
pub mod functional;
pub mod panel;
pub mod parallel;
pub mod psd;

pub use ell1::{L1Sequence, RatioCertificate, RatioWitness, Tail};
pub use engine::{IterationStep, IterationTrace, LebesgueDecomposition, UniquenessCertificate};
pub use error::{Error, Result};
pub use functional::{NormalFunctional, Rep};
pub use psd::{CMatrix, HermitianMatrix, PsdMatrix, SpectralDecomp, ToleranceConfig, C64};
