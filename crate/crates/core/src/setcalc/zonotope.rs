use nalgebra::{DMatrix, DVector};

use super::hpolytope::HPolytope;
use crate::error::{check_dim, Error, Result};

/// `{c + G l | l in [-1, 1]^g}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope {
    center: DVector<f64>,
    generators: DMatrix<f64>,
}

impl Zonotope {
    pub fn new(center: DVector<f64>, generators: DMatrix<f64>) -> Result<Self> {
        check_dim(center.len(), generators.nrows(), "zonotope generators")?;
        Ok(Self { center, generators })
    }

    pub fn point(center: DVector<f64>) -> Self {
        let n = center.len();
        Self {
            center,
            generators: DMatrix::zeros(n, 0),
        }
    }

    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Result<Self> {
        check_dim(lo.len(), hi.len(), "box bounds")?;
        let n = lo.len();
        let center = DVector::from_iterator(n, lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)));
        let mut g = DMatrix::zeros(n, n);
        for j in 0..n {
            if lo[j] > hi[j] {
                return Err(Error::InvalidSet("empty box".into()));
            }
            g[(j, j)] = 0.5 * (hi[j] - lo[j]);
        }
        Self::new(center, g)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.generators
    }

    pub fn num_generators(&self) -> usize {
        self.generators.ncols()
    }

    pub fn support(&self, d: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), d.len(), "support direction")?;
        let spread: f64 = (self.generators.transpose() * d).iter().map(|v| v.abs()).sum();
        Ok(self.center.dot(d) + spread)
    }

    pub fn linear_map(&self, m: &DMatrix<f64>) -> Result<Self> {
        check_dim(self.dim(), m.ncols(), "zonotope linear map")?;
        Ok(Self {
            center: m * &self.center,
            generators: m * &self.generators,
        })
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            center: &self.center * alpha,
            generators: &self.generators * alpha.abs(),
        }
    }

    pub fn minkowski_sum(&self, other: &Zonotope) -> Result<Self> {
        check_dim(self.dim(), other.dim(), "zonotope sum")?;
        let g = self.num_generators() + other.num_generators();
        let mut gens = DMatrix::zeros(self.dim(), g);
        gens.columns_mut(0, self.num_generators())
            .copy_from(&self.generators);
        gens.columns_mut(self.num_generators(), other.num_generators())
            .copy_from(&other.generators);
        Ok(Self {
            center: &self.center + &other.center,
            generators: gens,
        })
    }

    /// Drops negligible generators and, in 2-D, merges parallel ones.
    /// The represented set is unchanged up to `tol` in support value.
    pub fn compact(&self, tol: f64) -> Self {
        let mut cols: Vec<DVector<f64>> = self
            .generators
            .column_iter()
            .map(|c| c.into_owned())
            .filter(|c| c.norm() > tol)
            .collect();
        if self.dim() == 2 {
            for c in cols.iter_mut() {
                if c[1] < 0.0 || (c[1] == 0.0 && c[0] < 0.0) {
                    *c = -c.clone();
                }
            }
            cols.sort_by(|a, b| angle(a).total_cmp(&angle(b)));
            let mut merged: Vec<DVector<f64>> = Vec::new();
            for c in cols {
                if let Some(last) = merged.last_mut() {
                    let cross = last[0] * c[1] - last[1] * c[0];
                    if cross.abs() <= 1e-12 * last.norm() * c.norm() {
                        *last += c;
                        continue;
                    }
                }
                merged.push(c);
            }
            cols = merged;
        }
        let g = if cols.is_empty() {
            DMatrix::zeros(self.dim(), 0)
        } else {
            DMatrix::from_columns(&cols)
        };
        Self {
            center: self.center.clone(),
            generators: g,
        }
    }

    /// Exact counterclockwise vertex list of a planar zonotope.
    pub fn vertices_2d(&self) -> Result<Vec<[f64; 2]>> {
        if self.dim() != 2 {
            return Err(Error::Unsupported("zonotope vertices need dimension 2".into()));
        }
        let z = self.compact(1e-15);
        let c = [z.center[0], z.center[1]];
        let gens: Vec<[f64; 2]> = z
            .generators
            .column_iter()
            .map(|g| [g[0], g[1]])
            .collect();
        if gens.is_empty() {
            return Ok(vec![c]);
        }
        // Generators are oriented into the upper half plane and sorted by
        // angle; walking +2g then -2g traces the boundary counterclockwise
        // from the lowest vertex.
        let mut v = [c[0], c[1]];
        for g in &gens {
            v[0] -= g[0];
            v[1] -= g[1];
        }
        let mut out = Vec::with_capacity(2 * gens.len());
        for g in &gens {
            out.push(v);
            v[0] += 2.0 * g[0];
            v[1] += 2.0 * g[1];
        }
        for g in &gens {
            out.push(v);
            v[0] -= 2.0 * g[0];
            v[1] -= 2.0 * g[1];
        }
        if gens.len() == 1 {
            out.truncate(2);
        }
        Ok(out)
    }

    /// Exact facet representation of a planar zonotope.
    pub fn to_hpolytope_2d(&self) -> Result<HPolytope> {
        if self.dim() != 2 {
            return Err(Error::Unsupported("zonotope facets need dimension 2".into()));
        }
        let z = self.compact(1e-15);
        if z.num_generators() < 2 {
            return Err(Error::InvalidSet(
                "zonotope is not full-dimensional; no facet form".into(),
            ));
        }
        let mut rows = Vec::with_capacity(2 * z.num_generators());
        let mut rhs = Vec::with_capacity(2 * z.num_generators());
        for g in z.generators.column_iter() {
            let n = DVector::from_vec(vec![-g[1], g[0]]) / g.norm();
            for s in [1.0, -1.0] {
                let d = &n * s;
                rhs.push(z.support(&d)?);
                rows.push(d.transpose());
            }
        }
        HPolytope::new(DMatrix::from_rows(&rows), DVector::from_vec(rhs))
    }
}

fn angle(v: &DVector<f64>) -> f64 {
    v[1].atan2(v[0])
}
