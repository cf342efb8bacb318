use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::ctrl::spectral_radius;
use crate::error::{check_dim, Error, Result};

/// Outcome of the symmetric-box PI test for scalar subsystems.
#[derive(Debug, Clone, Serialize)]
pub struct SquarePi {
    pub exists: bool,
    /// Spectral radius of the entrywise absolute value `|F|`.
    pub rho_abs: f64,
    /// Half-widths `a > 0` with `|F| a <= a`, when `rho(|F|) < 1`.
    pub half_widths: Option<Vec<f64>>,
}

/// Decides whether a box `[-a_1, a_1] x ... x [-a_M, a_M]` is positively
/// invariant for `x+ = F x` when every subsystem is scalar.
///
/// The image of such a box has half-widths `|F| a`, so a box is invariant
/// iff `|F| a <= a` for some `a > 0`, which for a non-negative matrix holds
/// iff `rho(|F|) <= 1`.
pub fn square_box_pi_exists(f: &DMatrix<f64>, state_dims: &[usize]) -> Result<SquarePi> {
    check_dim(f.nrows(), f.ncols(), "closed loop must be square")?;
    check_dim(f.nrows(), state_dims.iter().sum(), "state partition")?;
    if let Some(n) = state_dims.iter().find(|&&n| n != 1) {
        return Err(Error::Unsupported(format!(
            "square PI test covers scalar subsystems only (found dimension {n})"
        )));
    }
    let abs = f.map(f64::abs);
    let rho_abs = spectral_radius(&abs)?;
    let half_widths = if rho_abs < 1.0 {
        let n = f.nrows();
        let lhs = DMatrix::identity(n, n) - &abs;
        lhs.lu()
            .solve(&DVector::from_element(n, 1.0))
            .map(|a| a.iter().copied().collect())
    } else {
        None
    };
    Ok(SquarePi {
        exists: rho_abs <= 1.0 + 1e-12,
        rho_abs,
        half_widths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_schur() {
        let f = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -0.9]);
        let r = square_box_pi_exists(&f, &[1, 1]).unwrap();
        assert!(r.exists);
        assert!((r.rho_abs - 0.9).abs() < 1e-14);
    }

    #[test]
    fn symmetric_offdiagonal() {
        let f = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        let r = square_box_pi_exists(&f, &[1, 1]).unwrap();
        assert!(r.exists);
        assert!((r.rho_abs - 0.5).abs() < 1e-14);
        let a = r.half_widths.unwrap();
        let fa = f.map(f64::abs) * DVector::from_vec(a.clone());
        assert!(fa.iter().zip(&a).all(|(x, y)| x <= y));
    }

    #[test]
    fn rejects_block_subsystems() {
        let f = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(square_box_pi_exists(&f, &[2, 1]), Err(Error::Unsupported(_))));
    }
}
