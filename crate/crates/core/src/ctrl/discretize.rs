use nalgebra::DMatrix;

use super::StateSpace;
use crate::error::{Error, Result};

const SERIES_TOL: f64 = 1e-12;

/// Matrix exponential by scaling and squaring with a Taylor series.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.iter().map(|v| v.abs()).fold(0.0, f64::max) * n as f64;
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = m * scale;
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..64 {
        term = &term * &x / k as f64;
        sum += &term;
        if term.amax() <= SERIES_TOL * sum.amax() * 1e-4 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Exact zero-order-hold sampling through the exponential of the augmented
/// block `[[A, B], [0, 0]]`.
pub fn zoh_discretize(sys: &StateSpace, ts: f64) -> Result<StateSpace> {
    check_continuous(sys, ts)?;
    let (n, m) = (sys.nx(), sys.nu());
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&sys.a);
    aug.view_mut((0, n), (n, m)).copy_from(&sys.b);
    let e = expm(&(aug * ts));
    StateSpace::new(
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, m)).into_owned(),
        ts,
    )
}

/// Forward Euler: `A_d = I + Ts A`, `B_d = Ts B`.
pub fn euler_discretize(sys: &StateSpace, ts: f64) -> Result<StateSpace> {
    check_continuous(sys, ts)?;
    let n = sys.nx();
    StateSpace::new(DMatrix::identity(n, n) + &sys.a * ts, &sys.b * ts, ts)
}

fn check_continuous(sys: &StateSpace, ts: f64) -> Result<()> {
    if !(ts > 0.0) || !ts.is_finite() {
        return Err(Error::InvalidSet(format!("sample time {ts} must be positive")));
    }
    if sys.is_discrete() {
        return Err(Error::Unsupported("system is already discrete".into()));
    }
    Ok(())
}
