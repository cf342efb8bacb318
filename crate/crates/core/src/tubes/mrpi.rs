use nalgebra::{DMatrix, DVector};

use crate::ctrl::spectral_radius;
use crate::error::{check_dim, Error, Result};
use crate::setcalc::{linear_map, minkowski_sum, minkowski_sum_all, ConvexSet, Zonotope};

/// Relative size of the box added to a flat disturbance set so that the
/// contraction test `F^s W in alpha W` can succeed.
const FLAT_INFLATION: f64 = 1e-6;

/// Truncated-sum outer approximation of the minimal RPI set.
#[derive(Debug, Clone)]
pub struct RpiSet {
    pub z: ConvexSet,
    /// Number of summed images `F^k W`.
    pub s: usize,
    /// Contraction factor with `F^s W in alpha W`.
    pub alpha: f64,
    pub eps: f64,
    /// Half-width of the box added to a flat `W` (0 when none was needed).
    pub inflation: f64,
}

fn axis_dirs(n: usize) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(2 * n);
    for j in 0..n {
        for s in [1.0, -1.0] {
            let mut d = DVector::zeros(n);
            d[j] = s;
            out.push(d);
        }
    }
    out
}

/// Returns `Some(delta)` when the zonotope spans fewer than `n` dimensions.
fn flatness(z: &Zonotope) -> Option<f64> {
    let g = z.generators();
    let n = z.dim();
    if g.ncols() == 0 {
        return None;
    }
    let sv = g.clone().svd(false, false).singular_values;
    let top = sv.max();
    let rank = sv.iter().filter(|&&v| v > 1e-9 * top).count();
    (rank < n).then_some(FLAT_INFLATION * top)
}

/// Outer approximation `Z = (1 - alpha)^-1 (W + F W + ... + F^(s-1) W)` of
/// the minimal RPI set of `x+ = F x + w`, `w in W`.
///
/// `s` is the smallest order with `F^s W in alpha W` and
/// `alpha / (1 - alpha) * max_j h(F_s, +-e_j) <= eps`, where `F_s` is the
/// plain truncated sum. The inclusion is tested on the facet normals of `W`
/// (exact for boxes and zonotopes in up to 3 dimensions) plus a 64-direction
/// fan in the plane.
pub fn mrpi_approx(f: &DMatrix<f64>, w: &ConvexSet, eps: f64, s_max: usize) -> Result<RpiSet> {
    let n = w.dim();
    check_dim(n, f.nrows(), "closed-loop rows")?;
    check_dim(n, f.ncols(), "closed-loop columns")?;
    if !(eps > 0.0) {
        return Err(Error::InvalidSet(format!("eps {eps} must be positive")));
    }
    let rho = spectral_radius(f)?;
    if rho >= 1.0 {
        return Err(Error::NotSchur { rho });
    }

    let axes = axis_dirs(n);
    let width = axes
        .iter()
        .map(|d| w.support(d))
        .collect::<Result<Vec<_>>>()?
        .chunks(2)
        .map(|c| c[0] + c[1])
        .fold(0.0, f64::max);
    if width <= 1e-14 {
        return Err(Error::SingletonDisturbance);
    }

    let zono = w.to_zonotope().map(|z| z.compact(0.0));
    let mut inflation = 0.0;
    let (w, zono) = match zono {
        Some(z) => match flatness(&z) {
            Some(delta) => {
                inflation = delta;
                let lo = vec![-delta; n];
                let hi = vec![delta; n];
                let z = z.minkowski_sum(&Zonotope::from_bounds(&lo, &hi)?)?.compact(0.0);
                (ConvexSet::zonotope(z.clone()), Some(z))
            }
            None => (ConvexSet::zonotope(z.clone()), Some(z)),
        },
        None => (w.clone(), None),
    };

    let dirs = w.test_directions(64);
    let h_dirs: Vec<f64> = dirs.iter().map(|d| w.support(d)).collect::<Result<_>>()?;
    if h_dirs.iter().any(|&h| h <= 0.0) {
        return Err(Error::InvalidSet(
            "disturbance set must contain the origin in its interior".into(),
        ));
    }

    let mut fk = DMatrix::identity(n, n);
    // Running supports of the truncated sum along +-e_j.
    let mut sum_axes = vec![0.0; 2 * n];
    for s in 1..=s_max {
        for (acc, d) in sum_axes.iter_mut().zip(&axes) {
            *acc += w.support(&(fk.transpose() * d))?;
        }
        fk = f * fk;
        let mut alpha: f64 = 0.0;
        for (d, h) in dirs.iter().zip(&h_dirs) {
            alpha = alpha.max(w.support(&(fk.transpose() * d))? / h);
        }
        let reach = sum_axes.iter().copied().fold(0.0, f64::max);
        if alpha < 1.0 && alpha / (1.0 - alpha) * reach <= eps {
            let scale = 1.0 / (1.0 - alpha);
            let z = match &zono {
                Some(zw) => {
                    let mut acc = zw.clone();
                    let mut m = DMatrix::identity(n, n);
                    for _ in 1..s {
                        m = f * m;
                        acc = acc.minkowski_sum(&zw.linear_map(&m)?)?;
                    }
                    ConvexSet::zonotope(acc.compact(0.0).scaled(scale))
                }
                None => {
                    let mut parts = Vec::with_capacity(s);
                    let mut m = DMatrix::identity(n, n);
                    for _ in 0..s {
                        parts.push(linear_map(&m, &w)?);
                        m = f * m;
                    }
                    minkowski_sum_all(n, parts)?.scale(scale)?
                }
            };
            return Ok(RpiSet {
                z,
                s,
                alpha,
                eps,
                inflation,
            });
        }
        if s == s_max {
            return Err(Error::TruncationLimit { s_max, alpha });
        }
    }
    Err(Error::TruncationLimit { s_max, alpha: f64::NAN })
}

/// Directions used by [`check_rpi`]: facet normals of the sets involved
/// plus the deterministic fan.
pub fn rpi_directions(w: &ConvexSet, z: &ConvexSet) -> Vec<DVector<f64>> {
    let mut dirs = z.test_directions(64);
    dirs.extend(w.test_directions(0));
    dirs
}

/// `max_d [h(Z, F'd) + h(W, d) - h(Z, d)]` over `directions`; a value at
/// most `tol` means `F Z + W in Z` on those directions.
pub fn check_rpi(
    f: &DMatrix<f64>,
    w: &ConvexSet,
    z: &ConvexSet,
    directions: &[DVector<f64>],
) -> Result<f64> {
    check_dim(z.dim(), w.dim(), "RPI check")?;
    check_dim(z.dim(), f.nrows(), "RPI check")?;
    let fz = linear_map(f, z)?;
    let lhs = minkowski_sum(&fz, w)?;
    let mut worst = f64::NEG_INFINITY;
    for d in directions {
        worst = worst.max(lhs.support(d)? - z.support(d)?);
    }
    Ok(worst)
}
