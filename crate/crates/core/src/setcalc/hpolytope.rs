use nalgebra::{DMatrix, DVector};

use super::lp::{self, LpOutcome};
use crate::error::{check_dim, Error, Result};

/// Row norms below this are treated as zero facets.
const ZERO_ROW: f64 = 1e-14;

/// A polyhedron `{x | A x <= b}`.
///
/// Constraint sets must additionally be bounded with the origin in their
/// interior; see [`HPolytope::validate_constraint_set`].
#[derive(Debug, Clone, PartialEq)]
pub struct HPolytope {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl HPolytope {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        check_dim(a.nrows(), b.len(), "facet offsets")?;
        if a.ncols() == 0 {
            return Err(Error::InvalidSet("zero-dimensional polytope".into()));
        }
        for (k, row) in a.row_iter().enumerate() {
            if row.norm() <= ZERO_ROW {
                return Err(Error::InvalidSet(format!("facet {k} has a zero normal")));
            }
        }
        Ok(Self { a, b })
    }

    /// Axis-aligned box `lo <= x <= hi`.
    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Result<Self> {
        check_dim(lo.len(), hi.len(), "box bounds")?;
        let n = lo.len();
        let mut a = DMatrix::zeros(2 * n, n);
        let mut b = DVector::zeros(2 * n);
        for j in 0..n {
            if lo[j] > hi[j] {
                return Err(Error::InvalidSet(format!(
                    "box bound {j}: lower {} exceeds upper {}",
                    lo[j], hi[j]
                )));
            }
            a[(2 * j, j)] = 1.0;
            b[2 * j] = hi[j];
            a[(2 * j + 1, j)] = -1.0;
            b[2 * j + 1] = -lo[j];
        }
        Self::new(a, b)
    }

    /// Symmetric box `|x_j| <= half_widths[j]`.
    pub fn symmetric_box(half_widths: &[f64]) -> Result<Self> {
        let lo: Vec<f64> = half_widths.iter().map(|h| -h).collect();
        Self::from_bounds(&lo, half_widths)
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn num_facets(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn normal(&self, k: usize) -> DVector<f64> {
        self.a.row(k).transpose()
    }

    /// `{alpha x | x in P}` for `alpha > 0`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            a: self.a.clone(),
            b: &self.b * alpha,
        }
    }

    pub fn with_offsets(&self, b: DVector<f64>) -> Result<Self> {
        check_dim(self.b.len(), b.len(), "facet offsets")?;
        Ok(Self {
            a: self.a.clone(),
            b,
        })
    }

    pub fn intersect(&self, other: &HPolytope) -> Result<Self> {
        check_dim(self.dim(), other.dim(), "polytope intersection")?;
        let m = self.num_facets() + other.num_facets();
        let mut a = DMatrix::zeros(m, self.dim());
        a.rows_mut(0, self.num_facets()).copy_from(&self.a);
        a.rows_mut(self.num_facets(), other.num_facets())
            .copy_from(&other.a);
        let b = DVector::from_iterator(m, self.b.iter().chain(other.b.iter()).copied());
        Self::new(a, b)
    }

    /// Preimage `{x | M x in P}`.
    pub fn preimage(&self, m: &DMatrix<f64>) -> Result<Self> {
        check_dim(self.dim(), m.nrows(), "polytope preimage")?;
        let a = &self.a * m;
        // Rows that vanish under the map are either trivially satisfied or
        // make the set empty; keep the rest.
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for k in 0..a.nrows() {
            if a.row(k).norm() <= ZERO_ROW {
                if self.b[k] < 0.0 {
                    return Err(Error::InvalidSet("preimage is empty".into()));
                }
                continue;
            }
            rows.push(a.row(k).into_owned());
            rhs.push(self.b[k]);
        }
        if rows.is_empty() {
            return Err(Error::Unbounded("preimage has no constraints".into()));
        }
        Self::new(DMatrix::from_rows(&rows), DVector::from_vec(rhs))
    }

    /// Per-coordinate bounds when every facet normal is a signed unit axis.
    pub fn as_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.dim();
        let mut lo = vec![f64::NEG_INFINITY; n];
        let mut hi = vec![f64::INFINITY; n];
        for k in 0..self.num_facets() {
            let row = self.a.row(k);
            let mut axis = None;
            for j in 0..n {
                if row[j] != 0.0 {
                    if axis.is_some() {
                        return None;
                    }
                    axis = Some(j);
                }
            }
            let j = axis?;
            let c = row[j];
            let bound = self.b[k] / c;
            if c > 0.0 {
                hi[j] = hi[j].min(bound);
            } else {
                lo[j] = lo[j].max(bound);
            }
        }
        if lo.iter().chain(hi.iter()).any(|v| !v.is_finite()) {
            return None;
        }
        Some((lo, hi))
    }

    /// Support function `max { d'x | A x <= b }`.
    pub fn support(&self, d: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), d.len(), "support direction")?;
        if let Some((lo, hi)) = self.as_box() {
            if lo.iter().zip(&hi).any(|(l, h)| l > h) {
                return Err(Error::InvalidSet("support of an empty box".into()));
            }
            return Ok(d
                .iter()
                .enumerate()
                .map(|(j, &dj)| if dj >= 0.0 { dj * hi[j] } else { dj * lo[j] })
                .sum());
        }
        match lp::maximize(d, &self.a, &self.b) {
            LpOutcome::Optimal { value, .. } => Ok(value),
            LpOutcome::Unbounded => Err(Error::Unbounded(
                "H-polytope support is unbounded".into(),
            )),
            LpOutcome::Infeasible => Err(Error::InvalidSet("support of an empty polytope".into())),
        }
    }

    /// Maximizer of `d'x`, needed for vertex enumeration fallbacks.
    pub fn support_point(&self, d: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), d.len(), "support direction")?;
        match lp::maximize(d, &self.a, &self.b) {
            LpOutcome::Optimal { x, .. } => Ok(x),
            LpOutcome::Unbounded => Err(Error::Unbounded("H-polytope support is unbounded".into())),
            LpOutcome::Infeasible => Err(Error::InvalidSet("support of an empty polytope".into())),
        }
    }

    pub fn is_empty(&self) -> bool {
        if let Some((lo, hi)) = self.as_box() {
            return lo.iter().zip(&hi).any(|(l, h)| l > h);
        }
        !lp::feasible(&self.a, &self.b)
    }

    pub fn contains_point(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.violation(x) <= tol
    }

    /// Largest constraint violation `max_k (a_k'x - b_k)`; negative inside.
    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        (&self.a * x - &self.b).max()
    }

    /// Checks the requirements on X_i / U_i: bounded, origin in the interior.
    pub fn validate_constraint_set(&self) -> Result<()> {
        if self.b.iter().any(|&bk| bk <= 0.0) {
            return Err(Error::InvalidSet(
                "origin is not in the interior of the constraint set".into(),
            ));
        }
        for j in 0..self.dim() {
            for s in [1.0, -1.0] {
                let mut d = DVector::zeros(self.dim());
                d[j] = s;
                self.support(&d)?;
            }
        }
        Ok(())
    }

    /// Drops facets implied by the others (LP test per facet).
    pub fn remove_redundant(&self, tol: f64) -> Result<Self> {
        let mut keep: Vec<usize> = (0..self.num_facets()).collect();
        let mut k = 0;
        while k < keep.len() {
            let idx = keep[k];
            let others: Vec<usize> = keep.iter().copied().filter(|&i| i != idx).collect();
            if others.is_empty() {
                break;
            }
            let a = self.a.select_rows(others.iter());
            let mut b = DVector::from_iterator(others.len(), others.iter().map(|&i| self.b[i]));
            // Relax the candidate by one unit so the LP stays bounded when
            // the remaining rows alone do not close the set.
            let normal = self.normal(idx);
            let mut a_ext = DMatrix::zeros(a.nrows() + 1, a.ncols());
            a_ext.rows_mut(0, a.nrows()).copy_from(&a);
            a_ext.row_mut(a.nrows()).copy_from(&normal.transpose());
            b = DVector::from_iterator(b.len() + 1, b.iter().copied().chain([self.b[idx] + 1.0]));
            let redundant = match lp::maximize(&normal, &a_ext, &b) {
                LpOutcome::Optimal { value, .. } => value <= self.b[idx] + tol,
                _ => false,
            };
            if redundant {
                keep.remove(k);
            } else {
                k += 1;
            }
        }
        Self::new(
            self.a.select_rows(keep.iter()),
            DVector::from_iterator(keep.len(), keep.iter().map(|&i| self.b[i])),
        )
    }
}
