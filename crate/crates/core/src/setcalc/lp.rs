//! Dense two-phase simplex for the tiny linear programs behind H-polytope
//! support evaluation, emptiness checks and redundancy removal.
//!
//! Solves `maximize c'x subject to A x <= b` with `x` free. Bland's rule is
//! used for both entering and leaving variables, so the method terminates on
//! degenerate vertices (which are common here: boxes, symmetric polytopes).

use nalgebra::{DMatrix, DVector};

const PIVOT_EPS: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: DVector<f64>, value: f64 },
    Unbounded,
    Infeasible,
}

struct Tableau {
    t: DMatrix<f64>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, row: usize) -> f64 {
        self.t[(row, self.cols)]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[(row, col)];
        let width = self.cols + 1;
        for j in 0..width {
            self.t[(row, j)] /= p;
        }
        for i in 0..self.t.nrows() {
            if i == row {
                continue;
            }
            let f = self.t[(i, col)];
            if f != 0.0 {
                for j in 0..width {
                    let v = self.t[(row, j)];
                    self.t[(i, j)] -= f * v;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Maximizes `cost' y` over the current feasible basis. Returns false when
    /// the objective is unbounded along an improving ray.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> bool {
        let m = self.t.nrows();
        let max_iter = 50 * (m + self.cols) + 1000;
        for _ in 0..max_iter {
            let mut entering = None;
            for j in 0..self.cols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut d = cost[j];
                for i in 0..m {
                    d -= cost[self.basis[i]] * self.t[(i, j)];
                }
                if d > 1e-10 {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.t[(i, col)];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-13
                                || (ratio <= lr + 1e-13 && self.basis[i] < self.basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            match leave {
                None => return false,
                Some((row, _)) => self.pivot(row, col),
            }
        }
        // Bland's rule cannot cycle; hitting the cap means numerical trouble.
        // The current basis is still primal feasible, so report it as final.
        true
    }
}

/// Maximizes `c'x` subject to `a x <= b`.
pub fn maximize(c: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> LpOutcome {
    let n = a.ncols();
    let m = a.nrows();
    assert_eq!(c.len(), n);
    assert_eq!(b.len(), m);

    // Row scaling keeps pivot tolerances meaningful.
    let mut a_s = a.clone();
    let mut b_s = b.clone();
    for i in 0..m {
        let norm = a.row(i).norm();
        if norm > 0.0 {
            a_s.row_mut(i).scale_mut(1.0 / norm);
            b_s[i] /= norm;
        }
    }

    let negative: Vec<usize> = (0..m).filter(|&i| b_s[i] < 0.0).collect();
    let n_art = negative.len();
    let cols = 2 * n + m + n_art;
    let mut t = DMatrix::zeros(m, cols + 1);
    let mut basis = vec![0; m];
    let mut art = 0;
    for i in 0..m {
        let sign = if b_s[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(i, j)] = sign * a_s[(i, j)];
            t[(i, n + j)] = -sign * a_s[(i, j)];
        }
        t[(i, 2 * n + i)] = sign;
        t[(i, cols)] = sign * b_s[i];
        if sign < 0.0 {
            let col = 2 * n + m + art;
            t[(i, col)] = 1.0;
            basis[i] = col;
            art += 1;
        } else {
            basis[i] = 2 * n + i;
        }
    }
    let mut tab = Tableau { t, basis, cols };

    if n_art > 0 {
        let mut cost = vec![0.0; cols];
        for c in cost.iter_mut().skip(2 * n + m) {
            *c = -1.0;
        }
        let allowed = vec![true; cols];
        tab.optimize(&cost, &allowed);
        let infeas: f64 = (0..m)
            .filter(|&i| tab.basis[i] >= 2 * n + m)
            .map(|i| tab.rhs(i))
            .sum();
        if infeas > 1e-9 {
            return LpOutcome::Infeasible;
        }
        // Drive zero-valued artificials out of the basis where possible.
        for i in 0..m {
            if tab.basis[i] >= 2 * n + m {
                if let Some(j) = (0..2 * n + m).find(|&j| tab.t[(i, j)].abs() > 1e-9) {
                    tab.pivot(i, j);
                }
            }
        }
    }

    let mut cost = vec![0.0; cols];
    for j in 0..n {
        cost[j] = c[j];
        cost[n + j] = -c[j];
    }
    let allowed: Vec<bool> = (0..cols).map(|j| j < 2 * n + m).collect();
    if !tab.optimize(&cost, &allowed) {
        return LpOutcome::Unbounded;
    }

    let mut x = DVector::zeros(n);
    for i in 0..m {
        let col = tab.basis[i];
        let v = tab.rhs(i);
        if col < n {
            x[col] += v;
        } else if col < 2 * n {
            x[col - n] -= v;
        }
    }
    let value = c.dot(&x);
    LpOutcome::Optimal { x, value }
}

/// True when `{x | a x <= b}` has at least one point.
pub fn feasible(a: &DMatrix<f64>, b: &DVector<f64>) -> bool {
    let c = DVector::zeros(a.ncols());
    !matches!(maximize(&c, a, b), LpOutcome::Infeasible)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_support() {
        let a = DMatrix::from_row_slice(4, 2, &[1., 0., -1., 0., 0., 1., 0., -1.]);
        let b = DVector::from_vec(vec![2., 2., 8., 8.]);
        match maximize(&DVector::from_vec(vec![1.0, 1.0]), &a, &b) {
            LpOutcome::Optimal { value, x } => {
                assert!((value - 10.0).abs() < 1e-12);
                assert!((x[0] - 2.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn origin_outside_needs_phase_one() {
        // 1 <= x <= 3, 2 <= y <= 5
        let a = DMatrix::from_row_slice(4, 2, &[1., 0., -1., 0., 0., 1., 0., -1.]);
        let b = DVector::from_vec(vec![3., -1., 5., -2.]);
        match maximize(&DVector::from_vec(vec![-1.0, -1.0]), &a, &b) {
            LpOutcome::Optimal { value, .. } => assert!((value + 3.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_unbounded_and_infeasible() {
        let a = DMatrix::from_row_slice(1, 2, &[1., 0.]);
        let b = DVector::from_vec(vec![1.0]);
        assert_eq!(
            maximize(&DVector::from_vec(vec![0.0, 1.0]), &a, &b),
            LpOutcome::Unbounded
        );
        let a = DMatrix::from_row_slice(2, 1, &[1., -1.]);
        let b = DVector::from_vec(vec![-1.0, -1.0]);
        assert_eq!(
            maximize(&DVector::from_vec(vec![1.0]), &a, &b),
            LpOutcome::Infeasible
        );
        assert!(!feasible(&a, &b));
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // Many constraints through the same vertex (1, 1).
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for k in 0..12 {
            let th = k as f64 * 0.1;
            let (s, c) = th.sin_cos();
            rows.extend_from_slice(&[c, s]);
            rhs.push(c + s);
        }
        rows.extend_from_slice(&[-1., 0., 0., -1.]);
        rhs.extend_from_slice(&[5., 5.]);
        let a = DMatrix::from_row_slice(14, 2, &rows);
        let b = DVector::from_vec(rhs);
        match maximize(&DVector::from_vec(vec![1.0, 1.0]), &a, &b) {
            LpOutcome::Optimal { value, .. } => assert!((value - 2.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }
}
