//! Numerical spectral theory of the periodic Zakharov–Shabat operator.
//!
//! The crate computes the Floquet discriminant and its λ-derivatives, the
//! periodic spectrum with counting certificates, the canonical square root of
//! `Δ² − 4` on the plane cut along the spectral gaps, normalized holomorphic
//! differentials on the spectral curve, the zeros of their numerators, and the
//! area growth functional `V(r)`.
//!
//! Data flows one way: [`Potential`] → [`discriminant`] → [`spectrum`] →
//! [`riemann_surface`] → [`normalization`] → [`zeros`] / [`growth`].

pub mod discriminant;
pub mod error;
pub mod growth;
pub mod index;
pub mod normalization;
pub mod ode;
pub mod potential;
pub mod quadrature;
pub mod riemann_surface;
pub mod spectrum;
pub mod zeros;

pub use discriminant::{DiscSample, Discriminant};
pub use error::{Error, Result};
pub use index::ZVec;
pub use num_complex::Complex64;
pub use potential::{Potential, Symmetry};

/// Lexicographic order on ℂ: real part first, then imaginary part.
pub fn lex_cmp(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// `π_k = kπ` for `k ≠ 0` and `π_0 = 1`.
pub fn pi_k(k: i64) -> f64 {
    if k == 0 {
        1.0
    } else {
        k as f64 * std::f64::consts::PI
    }
}
