use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::hpolytope::HPolytope;
use super::polygon::{self, Point};
use super::zonotope::Zonotope;
use crate::error::{check_dim, Error, Result};

/// Expression node of a [`ConvexSet`].
#[derive(Debug, Clone)]
pub enum Node {
    HPolytope(HPolytope),
    /// Convex hull of the listed points.
    VPolytope(Vec<DVector<f64>>),
    Zonotope(Zonotope),
    /// `alpha * S` with `alpha >= 0`.
    Scale(f64, ConvexSet),
    /// `M S`.
    LinearMap(DMatrix<f64>, ConvexSet),
    /// `S_1 + ... + S_k` (Minkowski).
    MinkowskiSum(Vec<ConvexSet>),
}

/// A compact convex set kept as a lazy expression and evaluated through its
/// support function `h(S, d) = max { <x, d> | x in S }`.
///
/// Cloning is cheap: subtrees are shared.
#[derive(Debug, Clone)]
pub struct ConvexSet {
    node: Arc<Node>,
    dim: usize,
}

impl ConvexSet {
    pub fn hpolytope(p: HPolytope) -> Self {
        let dim = p.dim();
        Self {
            node: Arc::new(Node::HPolytope(p)),
            dim,
        }
    }

    pub fn vpolytope(points: Vec<DVector<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::InvalidSet("empty vertex list".into()));
        };
        let dim = first.len();
        for p in &points {
            check_dim(dim, p.len(), "vertex")?;
        }
        Ok(Self {
            node: Arc::new(Node::VPolytope(points)),
            dim,
        })
    }

    pub fn zonotope(z: Zonotope) -> Self {
        let dim = z.dim();
        Self {
            node: Arc::new(Node::Zonotope(z)),
            dim,
        }
    }

    /// The singleton `{0}` in `R^dim`.
    pub fn origin(dim: usize) -> Self {
        Self::zonotope(Zonotope::point(DVector::zeros(dim)))
    }

    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Result<Self> {
        Ok(Self::zonotope(Zonotope::from_bounds(lo, hi)?))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn scale(&self, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidSet(format!("scale factor {alpha} must be finite and >= 0")));
        }
        Ok(Self {
            node: Arc::new(Node::Scale(alpha, self.clone())),
            dim: self.dim,
        })
    }

    pub fn support(&self, d: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim, d.len(), "support direction")?;
        match &*self.node {
            Node::HPolytope(p) => p.support(d),
            Node::VPolytope(pts) => Ok(pts
                .iter()
                .map(|p| p.dot(d))
                .fold(f64::NEG_INFINITY, f64::max)),
            Node::Zonotope(z) => z.support(d),
            Node::Scale(alpha, s) => Ok(alpha * s.support(d)?),
            Node::LinearMap(m, s) => s.support(&(m.transpose() * d)),
            Node::MinkowskiSum(parts) => {
                let mut acc = 0.0;
                for p in parts {
                    acc += p.support(d)?;
                }
                Ok(acc)
            }
        }
    }

    /// Flattens the expression into a single zonotope when every atom is a
    /// zonotope, a box, or a single point.
    pub fn to_zonotope(&self) -> Option<Zonotope> {
        match &*self.node {
            Node::Zonotope(z) => Some(z.clone()),
            Node::HPolytope(p) => {
                let (lo, hi) = p.as_box()?;
                Zonotope::from_bounds(&lo, &hi).ok()
            }
            Node::VPolytope(pts) if pts.len() == 1 => Some(Zonotope::point(pts[0].clone())),
            Node::VPolytope(_) => None,
            Node::Scale(alpha, s) => Some(s.to_zonotope()?.scaled(*alpha)),
            Node::LinearMap(m, s) => s.to_zonotope()?.linear_map(m).ok(),
            Node::MinkowskiSum(parts) => {
                let mut acc = Zonotope::point(DVector::zeros(self.dim));
                for p in parts {
                    acc = acc.minkowski_sum(&p.to_zonotope()?).ok()?;
                }
                Some(acc)
            }
        }
    }

    /// Exact planar polygon for trees whose atoms can be drawn exactly.
    fn exact_polygon(&self) -> Option<Vec<Point>> {
        if self.dim != 2 {
            return None;
        }
        match &*self.node {
            Node::Zonotope(z) => z.vertices_2d().ok(),
            Node::HPolytope(p) => polygon::hpolytope_vertices(p).ok(),
            Node::VPolytope(pts) => Some(polygon::convex_hull(
                &pts.iter().map(|p| [p[0], p[1]]).collect::<Vec<_>>(),
            )),
            Node::Scale(alpha, s) => Some(
                s.exact_polygon()?
                    .into_iter()
                    .map(|p| [alpha * p[0], alpha * p[1]])
                    .collect(),
            ),
            Node::LinearMap(m, s) => {
                let pts: Vec<Point> = if s.dim == 2 {
                    s.exact_polygon()?
                        .into_iter()
                        .map(|p| {
                            [
                                m[(0, 0)] * p[0] + m[(0, 1)] * p[1],
                                m[(1, 0)] * p[0] + m[(1, 1)] * p[1],
                            ]
                        })
                        .collect()
                } else if s.dim == 1 {
                    let hi = s.support(&DVector::from_vec(vec![1.0])).ok()?;
                    let lo = -s.support(&DVector::from_vec(vec![-1.0])).ok()?;
                    [lo, hi]
                        .iter()
                        .map(|&x| [m[(0, 0)] * x, m[(1, 0)] * x])
                        .collect()
                } else {
                    return s.to_zonotope()?.linear_map(m).ok()?.vertices_2d().ok();
                };
                Some(polygon::convex_hull(&pts))
            }
            Node::MinkowskiSum(parts) => {
                if let Some(z) = self.to_zonotope() {
                    return z.vertices_2d().ok();
                }
                let mut acc: Vec<Point> = vec![[0.0, 0.0]];
                for p in parts {
                    acc = polygon::minkowski_sum(&acc, &p.exact_polygon()?);
                }
                Some(acc)
            }
        }
    }

    /// Counterclockwise vertex list of a set of dimension at most 2.
    ///
    /// Exact whenever every atom is drawable in the plane (zonotopes,
    /// H- and V-polytopes, and images of zonotopes); other trees fall back to
    /// an outer polygon built from `fallback_directions` supporting lines.
    pub fn vertices_2d(&self, fallback_directions: usize) -> Result<Vec<DVector<f64>>> {
        match self.dim {
            1 => {
                let hi = self.support(&DVector::from_vec(vec![1.0]))?;
                let lo = -self.support(&DVector::from_vec(vec![-1.0]))?;
                if (hi - lo).abs() <= 1e-14 * hi.abs().max(1.0) {
                    Ok(vec![DVector::from_vec(vec![lo])])
                } else {
                    Ok(vec![DVector::from_vec(vec![lo]), DVector::from_vec(vec![hi])])
                }
            }
            2 => {
                let pts = match self.exact_polygon() {
                    Some(p) => p,
                    None => polygon::from_supports(fallback_directions, |d| {
                        self.support(&DVector::from_vec(d.to_vec()))
                    })?,
                };
                Ok(pts.into_iter().map(|p| DVector::from_vec(p.to_vec())).collect())
            }
            d => Err(Error::Unsupported(format!(
                "vertex enumeration is limited to dimension <= 2 (got {d})"
            ))),
        }
    }

    /// Exact facet form for planar zonotope-convertible trees.
    pub fn facets_2d(&self) -> Result<HPolytope> {
        if self.dim != 2 {
            return Err(Error::Unsupported(
                "facet form is available for planar sets only".into(),
            ));
        }
        if let Some(z) = self.to_zonotope() {
            return z.to_hpolytope_2d();
        }
        let verts = self.vertices_2d(256)?;
        if verts.len() < 3 {
            return Err(Error::InvalidSet("set is not full-dimensional".into()));
        }
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for k in 0..verts.len() {
            let p = &verts[k];
            let q = &verts[(k + 1) % verts.len()];
            let e = q - p;
            let n = DVector::from_vec(vec![e[1], -e[0]]) / e.norm();
            rhs.push(n.dot(p));
            rows.push(n.transpose());
        }
        HPolytope::new(DMatrix::from_rows(&rows), DVector::from_vec(rhs))
    }

    /// Exact facet form for sets of dimension 1, planar sets, and
    /// zonotope-convertible sets in 3-D.
    pub fn facets(&self) -> Result<HPolytope> {
        match self.dim {
            1 => {
                let hi = self.support(&DVector::from_vec(vec![1.0]))?;
                let lo = -self.support(&DVector::from_vec(vec![-1.0]))?;
                if hi - lo <= 1e-14 * hi.abs().max(1.0) {
                    return Err(Error::InvalidSet("set is a single point".into()));
                }
                HPolytope::from_bounds(&[lo], &[hi])
            }
            2 => self.facets_2d(),
            3 => {
                let z = self.to_zonotope().ok_or_else(|| {
                    Error::Unsupported("3-D facet form needs a zonotope-convertible set".into())
                })?;
                let g = z.compact(1e-14).generators().clone();
                let mut normals: Vec<DVector<f64>> = Vec::new();
                for i in 0..g.ncols() {
                    for j in (i + 1)..g.ncols() {
                        let c = g.column(i).cross(&g.column(j));
                        if c.norm() <= 1e-12 * g.column(i).norm() * g.column(j).norm() {
                            continue;
                        }
                        let c = c.normalize();
                        if normals.iter().any(|m| (m - &c).norm() < 1e-10 || (m + &c).norm() < 1e-10) {
                            continue;
                        }
                        normals.push(c);
                    }
                }
                if normals.is_empty() || g.clone().rank(1e-12) < 3 {
                    return Err(Error::InvalidSet("set is not full-dimensional".into()));
                }
                let mut rows = Vec::with_capacity(2 * normals.len());
                let mut rhs = Vec::with_capacity(2 * normals.len());
                for n in normals {
                    for d in [n.clone(), -n] {
                        rhs.push(z.support(&d)?);
                        rows.push(d.transpose());
                    }
                }
                HPolytope::new(DMatrix::from_rows(&rows), DVector::from_vec(rhs))
            }
            d => Err(Error::Unsupported(format!(
                "facet form is limited to dimension <= 3 (got {d})"
            ))),
        }
    }

    /// Directions on which set inclusions involving this set are tested:
    /// exact facet normals where they are cheap to obtain, plus axis
    /// directions and (in 2-D) a fixed fan of `fan` directions.
    pub fn test_directions(&self, fan: usize) -> Vec<DVector<f64>> {
        let n = self.dim;
        let mut dirs = Vec::new();
        for j in 0..n {
            for s in [1.0, -1.0] {
                let mut d = DVector::zeros(n);
                d[j] = s;
                dirs.push(d);
            }
        }
        if n == 2 {
            if let Ok(h) = self.facets_2d() {
                for k in 0..h.num_facets() {
                    dirs.push(h.normal(k).normalize());
                }
            }
            dirs.extend(polygon::direction_fan(fan));
        } else if n == 3 {
            if let Some(z) = self.to_zonotope() {
                let z = z.compact(1e-14);
                let g = z.generators();
                for i in 0..g.ncols() {
                    for j in (i + 1)..g.ncols() {
                        let c = g.column(i).cross(&g.column(j));
                        if c.norm() > 1e-14 {
                            let c = c.normalize();
                            dirs.push(-&c);
                            dirs.push(c);
                        }
                    }
                }
            }
            self.collect_atom_normals(&mut dirs);
        } else if n > 3 {
            self.collect_atom_normals(&mut dirs);
        }
        dirs
    }

    fn collect_atom_normals(&self, dirs: &mut Vec<DVector<f64>>) {
        match &*self.node {
            Node::HPolytope(p) => {
                for k in 0..p.num_facets() {
                    dirs.push(p.normal(k).normalize());
                }
            }
            Node::Scale(_, s) => s.collect_atom_normals(dirs),
            Node::MinkowskiSum(parts) => {
                for p in parts {
                    if p.dim == self.dim {
                        p.collect_atom_normals(dirs);
                    }
                }
            }
            _ => {}
        }
    }
}

/// Lazy Minkowski sum.
pub fn minkowski_sum(a: &ConvexSet, b: &ConvexSet) -> Result<ConvexSet> {
    check_dim(a.dim(), b.dim(), "Minkowski sum")?;
    Ok(ConvexSet {
        node: Arc::new(Node::MinkowskiSum(vec![a.clone(), b.clone()])),
        dim: a.dim(),
    })
}

/// Lazy Minkowski sum of many sets; the empty sum is `{0}` in `R^dim`.
pub fn minkowski_sum_all(dim: usize, parts: Vec<ConvexSet>) -> Result<ConvexSet> {
    for p in &parts {
        check_dim(dim, p.dim(), "Minkowski sum")?;
    }
    if parts.is_empty() {
        return Ok(ConvexSet::origin(dim));
    }
    Ok(ConvexSet {
        node: Arc::new(Node::MinkowskiSum(parts)),
        dim,
    })
}

/// Lazy linear image `M S`.
pub fn linear_map(m: &DMatrix<f64>, s: &ConvexSet) -> Result<ConvexSet> {
    check_dim(s.dim(), m.ncols(), "linear map")?;
    Ok(ConvexSet {
        node: Arc::new(Node::LinearMap(m.clone(), s.clone())),
        dim: m.nrows(),
    })
}

/// `X - S = {x | x + s in X for all s in S}`, computed facet-wise as
/// `{x | a_k'x <= b_k - h(S, a_k)}`.
///
/// An empty result is a legal value; check [`HPolytope::is_empty`].
pub fn pontryagin_diff(x: &HPolytope, s: &ConvexSet) -> Result<HPolytope> {
    check_dim(x.dim(), s.dim(), "Pontryagin difference")?;
    let mut b = x.b().clone();
    for k in 0..x.num_facets() {
        b[k] -= s.support(&x.normal(k))?;
    }
    x.with_offsets(b)
}

/// Outcome of an inclusion test `S in X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Containment {
    pub holds: bool,
    /// `min_k (b_k - h(S, a_k))`, in the units of the facet offsets.
    pub margin: f64,
    pub worst_facet: usize,
}

/// Tests `S in X` facet by facet: `h(S, a_k) <= b_k + tol` for every `k`.
pub fn contains(x: &HPolytope, s: &ConvexSet, tol: f64) -> Result<Containment> {
    check_dim(x.dim(), s.dim(), "containment")?;
    let mut margin = f64::INFINITY;
    let mut worst = 0;
    for k in 0..x.num_facets() {
        let gap = x.b()[k] - s.support(&x.normal(k))?;
        if gap < margin {
            margin = gap;
            worst = k;
        }
    }
    Ok(Containment {
        holds: margin >= -tol,
        margin,
        worst_facet: worst,
    })
}
