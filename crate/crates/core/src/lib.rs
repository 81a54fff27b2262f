//! Divisor sums over values of quadratic polynomials.
//!
//! For a nonsingular quadratic polynomial `F` in `n >= 3` variables and a box
//! `𝓑`, this crate computes the exact sum `Σ τ_k(F(x))` over `x ∈ X𝓑 ∩ ℤⁿ`,
//! the asymptotic main term `Σ_r C_{k,r}(F) ∫_{X𝓑} (log F)^r`, and every
//! intermediate object in between: local densities, Gauss sums, the kernel
//! `Φ_k`, the singular series and its Euler product, and the Laurent
//! expansion of `ζ(s)^k` at `s = 1`.

pub mod arith;
pub mod error;
pub mod exact;
pub mod harness;
pub mod integral;
pub mod jet;
pub mod local;
pub mod phi;
pub mod quad;
pub mod series;
pub mod zeta;

pub use error::{Error, Result};

/// The guide's snippets, compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/divisor-functions.md")]
    pub struct DivisorFunctions;
    #[doc = include_str!("../../../book/src/polynomials-and-boxes.md")]
    pub struct PolynomialsAndBoxes;
    #[doc = include_str!("../../../book/src/local-densities.md")]
    pub struct LocalDensities;
    #[doc = include_str!("../../../book/src/zeta.md")]
    pub struct Zeta;
    #[doc = include_str!("../../../book/src/kernel.md")]
    pub struct Kernel;
    #[doc = include_str!("../../../book/src/singular-series.md")]
    pub struct SingularSeries;
    #[doc = include_str!("../../../book/src/singular-integral.md")]
    pub struct SingularIntegral;
    #[doc = include_str!("../../../book/src/exact-sums.md")]
    pub struct ExactSums;
    #[doc = include_str!("../../../book/src/harness.md")]
    pub struct Harness;
}
