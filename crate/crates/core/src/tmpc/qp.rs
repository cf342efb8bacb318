//! Dense strictly convex QP solver (Goldfarb-Idnani dual active set).
//!
//! Solves `min 1/2 x'Hx + f'x  s.t.  A_eq x = b_eq,  A_in x <= b_in` with
//! `H` positive definite. The method starts from the unconstrained minimizer
//! and adds violated constraints one at a time while keeping the multipliers
//! dual feasible, so no feasible starting point is needed. Each step solves
//! the KKT system of the current active set directly; problem sizes here are
//! a few dozen variables.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub h: DMatrix<f64>,
    pub f: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub a_in: DMatrix<f64>,
    pub b_in: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub lambda_eq: DVector<f64>,
    pub lambda_in: DVector<f64>,
    /// `|H x + f + A_eq' l_eq + A_in' l_in|_inf`.
    pub stationarity: f64,
    /// Largest equality or inequality violation.
    pub primal_residual: f64,
    pub iterations: usize,
    pub status: QpStatus,
}

impl QpProblem {
    pub fn new(h: DMatrix<f64>, f: DVector<f64>) -> Self {
        let n = f.len();
        Self {
            h,
            f,
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            a_in: DMatrix::zeros(0, n),
            b_in: DVector::zeros(0),
        }
    }

    pub fn with_inequalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.a_in = a;
        self.b_in = b;
        self
    }

    pub fn with_equalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.a_eq = a;
        self.b_eq = b;
        self
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.f.dot(x)
    }

    fn validate(&self) -> Result<()> {
        let n = self.f.len();
        check_dim(n, self.h.nrows(), "QP Hessian rows")?;
        check_dim(n, self.h.ncols(), "QP Hessian columns")?;
        check_dim(n, self.a_eq.ncols(), "QP equality columns")?;
        check_dim(n, self.a_in.ncols(), "QP inequality columns")?;
        check_dim(self.a_eq.nrows(), self.b_eq.len(), "QP equality offsets")?;
        check_dim(self.a_in.nrows(), self.b_in.len(), "QP inequality offsets")?;
        Ok(())
    }

    /// Solves the problem; `tol` bounds the final primal violation.
    pub fn solve(&self, tol: f64) -> Result<QpSolution> {
        self.validate()?;
        let n = self.f.len();
        let h_sym = (&self.h + self.h.transpose()) * 0.5;
        if h_sym.clone().cholesky().is_none() {
            return Err(Error::InvalidSet("QP Hessian must be positive definite".into()));
        }
        let n_eq = self.a_eq.nrows();
        let m = self.a_in.nrows();
        let row_norm: Vec<f64> = (0..m).map(|i| self.a_in.row(i).norm().max(1e-300)).collect();

        // Active set: equalities first, then inequality indices.
        let mut active: Vec<usize> = Vec::new();
        let mut lam_active: Vec<f64> = Vec::new();

        let normal = |k: usize| -> DVector<f64> { self.a_in.row(k).transpose() };
        let kkt = |active: &[usize], rhs_x: &DVector<f64>, rhs_c: &DVector<f64>| -> Result<(DVector<f64>, DVector<f64>)> {
            let p = n_eq + active.len();
            let mut k = DMatrix::zeros(n + p, n + p);
            k.view_mut((0, 0), (n, n)).copy_from(&h_sym);
            for r in 0..n_eq {
                for c in 0..n {
                    k[(c, n + r)] = self.a_eq[(r, c)];
                    k[(n + r, c)] = self.a_eq[(r, c)];
                }
            }
            for (q, &idx) in active.iter().enumerate() {
                for c in 0..n {
                    k[(c, n + n_eq + q)] = self.a_in[(idx, c)];
                    k[(n + n_eq + q, c)] = self.a_in[(idx, c)];
                }
            }
            let mut rhs = DVector::zeros(n + p);
            rhs.rows_mut(0, n).copy_from(rhs_x);
            rhs.rows_mut(n, p).copy_from(rhs_c);
            let sol = k
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Infeasible("singular KKT system (dependent equalities)".into()))?;
            Ok((sol.rows(0, n).into_owned(), sol.rows(n, p).into_owned()))
        };

        // Equality-constrained minimizer.
        let (mut x, mut lam_eq) = kkt(&[], &(-&self.f), &self.b_eq)?;
        let max_iter = 10 * (m + n + 10);
        let mut iterations = 0;
        let mut status = QpStatus::Optimal;

        'outer: loop {
            // Most violated inequality, measured in distance units.
            let mut pick: Option<(usize, f64)> = None;
            for i in 0..m {
                if active.contains(&i) {
                    continue;
                }
                let viol = (self.a_in.row(i).dot(&x.transpose()) - self.b_in[i]) / row_norm[i];
                if viol > tol && pick.is_none_or(|(_, v)| viol > v) {
                    pick = Some((i, viol));
                }
            }
            let Some((p, _)) = pick else { break };
            let ap = normal(p);
            let mut lam_p = 0.0;
            loop {
                iterations += 1;
                if iterations > max_iter {
                    status = QpStatus::IterationLimit;
                    break 'outer;
                }
                let zeros = DVector::zeros(n_eq + active.len());
                let (z, r) = kkt(&active, &(-&ap), &zeros)?;
                let r_eq = r.rows(0, n_eq).into_owned();
                let r_in = r.rows(n_eq, active.len()).into_owned();
                // Dual step limit over inequality multipliers that decrease.
                let mut t_dual = f64::INFINITY;
                let mut drop = None;
                for (q, (&lam, &rq)) in lam_active.iter().zip(r_in.iter()).enumerate() {
                    if rq < -1e-14 {
                        let t = -lam / rq;
                        if t < t_dual {
                            t_dual = t;
                            drop = Some(q);
                        }
                    }
                }
                let curvature = ap.dot(&z);
                let slack = ap.dot(&x) - self.b_in[p];
                let t_primal = if curvature < -1e-14 * ap.norm_squared() {
                    -slack / curvature
                } else {
                    f64::INFINITY
                };
                let t = t_primal.min(t_dual);
                if !t.is_finite() {
                    status = QpStatus::Infeasible;
                    break 'outer;
                }
                if t_primal.is_finite() {
                    x += &z * t;
                }
                lam_eq += &r_eq * t;
                for (lam, rq) in lam_active.iter_mut().zip(r_in.iter()) {
                    *lam += t * rq;
                }
                lam_p += t;
                if t_primal <= t_dual {
                    active.push(p);
                    lam_active.push(lam_p);
                    break;
                }
                let q = drop.expect("dual step has a blocking constraint");
                active.remove(q);
                lam_active.remove(q);
            }
        }

        let mut lambda_in = DVector::zeros(m);
        for (&idx, &lam) in active.iter().zip(&lam_active) {
            lambda_in[idx] = lam.max(0.0);
        }
        let grad = &h_sym * &x + &self.f + self.a_eq.transpose() * &lam_eq + self.a_in.transpose() * &lambda_in;
        let eq_res = if n_eq > 0 { (&self.a_eq * &x - &self.b_eq).amax() } else { 0.0 };
        let in_res = if m > 0 { (&self.a_in * &x - &self.b_in).max().max(0.0) } else { 0.0 };
        let sol = QpSolution {
            objective: self.objective(&x),
            stationarity: grad.amax(),
            primal_residual: eq_res.max(in_res),
            x,
            lambda_eq: lam_eq,
            lambda_in,
            iterations,
            status,
        };
        Ok(sol)
    }
}
