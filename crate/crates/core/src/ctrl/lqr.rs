use nalgebra::DMatrix;

use super::eig::spectral_radius;
use crate::error::{check_dim, Error, Result};

/// Discrete LQR solution with `u = K x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrResult {
    pub k: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub iterations: usize,
}

/// `P - (Q + A'PA - A'PB (R + B'PB)^-1 B'PA)`, infinity norm.
pub fn dare_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<f64> {
    let next = riccati_step(a, b, q, r, p)?;
    Ok((p - next).amax())
}

fn riccati_step(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let bt_p = b.transpose() * p;
    let s = r + &bt_p * b;
    let gain = solve(&s, &(&bt_p * a))?;
    let next = q + a.transpose() * p * a - a.transpose() * p * b * gain;
    Ok(symmetrize(&next))
}

fn gain(a: &DMatrix<f64>, b: &DMatrix<f64>, r: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let bt_p = b.transpose() * p;
    let s = r + &bt_p * b;
    Ok(-solve(&s, &(&bt_p * a))?)
}

fn solve(s: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    s.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::Infeasible("singular matrix in Riccati iteration".into()))
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Stabilizing solution of the discrete algebraic Riccati equation.
///
/// Structure-preserving doubling runs first; a few plain Riccati steps then
/// polish the result until the residual drops below `tol`.
pub fn dlqr(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<LqrResult> {
    let n = a.nrows();
    check_dim(n, a.ncols(), "state matrix must be square")?;
    check_dim(n, b.nrows(), "input matrix rows")?;
    check_dim(n, q.nrows(), "state weight")?;
    check_dim(n, q.ncols(), "state weight")?;
    check_dim(b.ncols(), r.nrows(), "input weight")?;
    check_dim(b.ncols(), r.ncols(), "input weight")?;
    if r.clone().cholesky().is_none() {
        return Err(Error::InvalidSet("input weight must be positive definite".into()));
    }

    let eye = DMatrix::<f64>::identity(n, n);
    let mut ak = a.clone();
    let mut gk = b * solve(r, &b.transpose())?;
    let mut hk = symmetrize(q);
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let w = &eye + &gk * &hk;
        let w_inv_a = solve(&w, &ak)?;
        let w_inv_g = solve(&w, &gk)?;
        let h_next = symmetrize(&(&hk + ak.transpose() * &hk * &w_inv_a));
        let g_next = symmetrize(&(&gk + &ak * w_inv_g * ak.transpose()));
        ak = &ak * w_inv_a;
        let change = (&h_next - &hk).amax();
        hk = h_next;
        gk = g_next;
        if !hk.iter().all(|v| v.is_finite()) {
            break;
        }
        if change <= tol * hk.amax().max(1.0) * 1e-3 || ak.amax() <= 1e-300 {
            break;
        }
    }
    let mut p = hk;
    while iterations < max_iter && p.iter().all(|v| v.is_finite()) {
        if dare_residual(a, b, q, r, &p)? <= tol {
            break;
        }
        p = riccati_step(a, b, q, r, &p)?;
        iterations += 1;
    }
    if !p.iter().all(|v| v.is_finite()) || dare_residual(a, b, q, r, &p)? > tol {
        return Err(Error::NoConvergence {
            what: "Riccati iteration",
            iterations,
        });
    }
    let k = gain(a, b, r, &p)?;
    let rho = spectral_radius(&(a + b * &k))?;
    if rho >= 1.0 {
        return Err(Error::NotSchur { rho });
    }
    Ok(LqrResult { k, p, iterations })
}
