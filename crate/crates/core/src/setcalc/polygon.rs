//! Planar polygon helpers used for exact 2-D vertex output.

use nalgebra::DVector;

use super::hpolytope::HPolytope;
use crate::error::{Error, Result};

pub type Point = [f64; 2];

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counterclockwise convex hull without collinear points (monotone chain).
/// Degenerate inputs give one point or the two segment endpoints.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() <= 1e-14 && (a[1] - b[1]).abs() <= 1e-14);
    if pts.len() <= 2 {
        return pts;
    }
    let scale = pts
        .iter()
        .fold(0.0_f64, |m, p| m.max(p[0].abs()).max(p[1].abs()))
        .max(1e-300);
    let eps = 1e-13 * scale * scale;
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= eps {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= eps {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Minkowski sum of two convex polygons given as vertex lists.
pub fn minkowski_sum(a: &[Point], b: &[Point]) -> Vec<Point> {
    if a.is_empty() {
        return b.to_vec();
    }
    if b.is_empty() {
        return a.to_vec();
    }
    let mut pts = Vec::with_capacity(a.len() * b.len());
    for p in a {
        for q in b {
            pts.push([p[0] + q[0], p[1] + q[1]]);
        }
    }
    convex_hull(&pts)
}

pub fn support(poly: &[Point], d: Point) -> f64 {
    poly.iter()
        .map(|p| p[0] * d[0] + p[1] * d[1])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Vertices of a bounded planar H-polytope by pairwise facet intersection.
pub fn hpolytope_vertices(p: &HPolytope) -> Result<Vec<Point>> {
    if p.dim() != 2 {
        return Err(Error::Unsupported("polygon vertices need dimension 2".into()));
    }
    // Boundedness check doubles as emptiness check.
    for d in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
        p.support(&DVector::from_vec(d.to_vec()))?;
    }
    let a = p.a();
    let b = p.b();
    let m = p.num_facets();
    let scale = b.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
    let mut pts = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            let det = a[(i, 0)] * a[(j, 1)] - a[(i, 1)] * a[(j, 0)];
            if det.abs() < 1e-14 {
                continue;
            }
            let x = (b[i] * a[(j, 1)] - a[(i, 1)] * b[j]) / det;
            let y = (a[(i, 0)] * b[j] - b[i] * a[(j, 0)]) / det;
            let v = DVector::from_vec(vec![x, y]);
            if p.violation(&v) <= 1e-9 * scale {
                pts.push([x, y]);
            }
        }
    }
    if pts.is_empty() {
        // Single point or numerically flat set: fall back to LP maximizers.
        for d in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            let x = p.support_point(&DVector::from_vec(d.to_vec()))?;
            pts.push([x[0], x[1]]);
        }
    }
    Ok(convex_hull(&pts))
}

/// Outer polygon from supporting lines at `count` equally spaced angles.
pub fn from_supports<F>(count: usize, mut h: F) -> Result<Vec<Point>>
where
    F: FnMut(Point) -> Result<f64>,
{
    let count = count.max(3);
    let dirs: Vec<Point> = (0..count)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            [th.cos(), th.sin()]
        })
        .collect();
    let hs: Vec<f64> = dirs.iter().map(|&d| h(d)).collect::<Result<_>>()?;
    let mut pts = Vec::with_capacity(count);
    for k in 0..count {
        let l = (k + 1) % count;
        let (d1, d2) = (dirs[k], dirs[l]);
        let det = d1[0] * d2[1] - d1[1] * d2[0];
        let x = (hs[k] * d2[1] - d1[1] * hs[l]) / det;
        let y = (d1[0] * hs[l] - hs[k] * d2[0]) / det;
        pts.push([x, y]);
    }
    Ok(convex_hull(&pts))
}

/// Unit directions: `count` equally spaced angles starting at 0.
pub fn direction_fan(count: usize) -> Vec<DVector<f64>> {
    (0..count)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            DVector::from_vec(vec![th.cos(), th.sin()])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_drops_interior_and_collinear_points() {
        let pts = [[0., 0.], [1., 0.], [2., 0.], [2., 2.], [0., 2.], [1., 1.], [1., 2.]];
        let h = convex_hull(&pts);
        assert_eq!(h, vec![[0., 0.], [2., 0.], [2., 2.], [0., 2.]]);
    }

    #[test]
    fn hull_of_segment_and_point() {
        assert_eq!(convex_hull(&[[0., 0.], [1., 1.], [2., 2.]]), vec![[0., 0.], [2., 2.]]);
        assert_eq!(convex_hull(&[[1., 1.], [1., 1.]]), vec![[1., 1.]]);
    }

    #[test]
    fn square_plus_segment() {
        let sq = [[0., 0.], [1., 0.], [1., 1.], [0., 1.]];
        let seg = [[0., 0.], [1., 0.]];
        let s = minkowski_sum(&sq, &seg);
        assert_eq!(support(&s, [1., 0.]), 2.0);
        assert_eq!(support(&s, [0., 1.]), 1.0);
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn sampled_outer_polygon_contains_disk() {
        let poly = from_supports(64, |_| Ok(1.0)).unwrap();
        assert_eq!(poly.len(), 64);
        for p in &poly {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!(r >= 1.0 - 1e-12 && r <= 1.0 / (std::f64::consts::PI / 64.0).cos() + 1e-12);
        }
    }
}
