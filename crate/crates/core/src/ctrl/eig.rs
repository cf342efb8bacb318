use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_QR_ITER: usize = 10_000;

/// Eigenvalues of a small dense matrix: closed form up to 2x2, otherwise
/// Hessenberg reduction followed by shifted QR (real Schur form).
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension {
            expected: m.nrows(),
            got: m.ncols(),
            context: "eigenvalues need a square matrix",
        });
    }
    match m.nrows() {
        0 => Ok(Vec::new()),
        1 => Ok(vec![Complex64::new(m[(0, 0)], 0.0)]),
        2 => {
            let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
            let half_tr = 0.5 * (a + d);
            let disc = 0.25 * (a - d) * (a - d) + b * c;
            if disc >= 0.0 {
                let s = disc.sqrt();
                // Avoid cancellation: take the larger root first.
                let l1 = if half_tr >= 0.0 { half_tr + s } else { half_tr - s };
                let det = a * d - b * c;
                let l2 = if l1 != 0.0 { det / l1 } else { 2.0 * half_tr - l1 };
                Ok(vec![Complex64::new(l1, 0.0), Complex64::new(l2, 0.0)])
            } else {
                let s = (-disc).sqrt();
                Ok(vec![Complex64::new(half_tr, s), Complex64::new(half_tr, -s)])
            }
        }
        _ => {
            let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, MAX_QR_ITER)
                .ok_or(Error::NoConvergence {
                    what: "shifted QR iteration",
                    iterations: MAX_QR_ITER,
                })?;
            Ok(schur
                .complex_eigenvalues()
                .iter()
                .map(|z| Complex64::new(z.re, z.im))
                .collect())
        }
    }
}

pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// `rho(M) < 1 - margin`.
pub fn is_schur(m: &DMatrix<f64>, margin: f64) -> Result<bool> {
    Ok(spectral_radius(m)? < 1.0 - margin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupled_integrators_closed_loop() {
        let f = DMatrix::from_row_slice(2, 2, &[-0.5, -0.75, -0.75, -0.5]);
        let mut ev: Vec<f64> = eigenvalues(&f).unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 1.25).abs() < 1e-15);
        assert!((ev[1] - 0.25).abs() < 1e-15);
        assert!(!is_schur(&f, 0.0).unwrap());
    }

    #[test]
    fn identity_is_not_schur() {
        let i = DMatrix::<f64>::identity(3, 3);
        assert!((spectral_radius(&i).unwrap() - 1.0).abs() < 1e-14);
        assert!(!is_schur(&i, 1e-12).unwrap());
        assert!(!is_schur(&i, 0.0).unwrap());
    }

    #[test]
    fn complex_pair() {
        let r = DMatrix::from_row_slice(3, 3, &[0., -0.5, 0., 0.5, 0., 0., 0., 0., 0.2]);
        assert!((spectral_radius(&r).unwrap() - 0.5).abs() < 1e-12);
        let ev = eigenvalues(&r).unwrap();
        assert_eq!(ev.iter().filter(|z| z.im.abs() > 0.1).count(), 2);
    }
}
