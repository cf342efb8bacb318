//! Dense linear-systems utilities.

mod discretize;
mod eig;
mod lqr;

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};

pub use discretize::{euler_discretize, expm, zoh_discretize};
pub use eig::{eigenvalues, is_schur, spectral_radius};
pub use lqr::{dare_residual, dlqr, LqrResult};

/// `x+ = A x + B u` (discrete) or `x' = A x + B u` (continuous, `dt = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub dt: f64,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, dt: f64) -> Result<Self> {
        check_dim(a.nrows(), a.ncols(), "state matrix must be square")?;
        check_dim(a.nrows(), b.nrows(), "input matrix rows")?;
        if !(dt >= 0.0) {
            return Err(Error::InvalidSet(format!("sample time {dt} must be >= 0")));
        }
        Ok(Self { a, b, dt })
    }

    pub fn continuous(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        Self::new(a, b, 0.0)
    }

    pub fn nx(&self) -> usize {
        self.a.nrows()
    }

    pub fn nu(&self) -> usize {
        self.b.ncols()
    }

    pub fn is_discrete(&self) -> bool {
        self.dt > 0.0
    }

    /// `A + B K`.
    pub fn closed_loop(&self, k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.nu(), k.nrows(), "gain rows")?;
        check_dim(self.nx(), k.ncols(), "gain columns")?;
        Ok(&self.a + &self.b * k)
    }
}
