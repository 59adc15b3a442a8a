//! Floquet discriminant `Δ(λ) = tr M(1, λ)`, its λ-derivatives and `R = Δ² − 4`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ode::{transfer_matrix, TransferMatrix};
use crate::potential::Potential;

/// Default relative tolerance of the integrator.
pub const DEFAULT_ODE_TOL: f64 = 1e-12;

/// `Δ`, `Δ̇`, `Δ̈` at one spectral parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscSample {
    pub lambda: Complex64,
    pub delta: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
}

impl DiscSample {
    /// `R = Δ² − 4`.
    pub fn char_value(&self) -> Complex64 {
        self.delta * self.delta - 4.0
    }

    /// `R' = 2ΔΔ̇`.
    pub fn char_derivative(&self) -> Complex64 {
        2.0 * self.delta * self.d1
    }
}

/// Evaluator bound to one potential and tolerance. Cheap to clone.
#[derive(Clone, Debug)]
pub struct Discriminant {
    phi: Arc<Potential>,
    tol: f64,
}

impl Discriminant {
    pub fn new(phi: Potential, tol: f64) -> Self {
        Self {
            phi: Arc::new(phi),
            tol,
        }
    }

    pub fn potential(&self) -> &Potential {
        &self.phi
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Same potential, different tolerance.
    pub fn with_tol(&self, tol: f64) -> Self {
        Self {
            phi: Arc::clone(&self.phi),
            tol,
        }
    }

    pub fn fundamental_matrix(&self, lambda: Complex64, x: f64) -> Result<TransferMatrix> {
        transfer_matrix(&self.phi, lambda, x, self.tol)
    }

    pub fn sample(&self, lambda: Complex64) -> Result<DiscSample> {
        let jet = self.fundamental_matrix(lambda, 1.0)?.jet;
        Ok(DiscSample {
            lambda,
            delta: jet.m.trace(),
            d1: jet.dm.trace(),
            d2: jet.d2m.trace(),
        })
    }

    pub fn delta(&self, lambda: Complex64) -> Result<Complex64> {
        Ok(self.sample(lambda)?.delta)
    }

    pub fn delta_dot(&self, lambda: Complex64) -> Result<Complex64> {
        Ok(self.sample(lambda)?.d1)
    }

    pub fn char_function(&self, lambda: Complex64) -> Result<Complex64> {
        Ok(self.sample(lambda)?.char_value())
    }
}
