use nalgebra::{DMatrix, DVector};

use super::qp::{QpProblem, QpSolution, QpStatus};
use crate::ctrl::{dlqr, spectral_radius};
use crate::error::{check_dim, Error, Result};
use crate::netmodel::Subsystem;
use crate::setcalc::{linear_map, pontryagin_diff, ConvexSet, HPolytope};
use crate::tubes::Tube;

/// QP feasibility tolerance used for every transcribed problem.
pub const QP_TOL: f64 = 1e-10;

/// `X - Z` and `U - K Z`; an empty result means the tube is not admissible.
pub fn tighten(
    x: &HPolytope,
    u: &HPolytope,
    z: &ConvexSet,
    k: &DMatrix<f64>,
) -> Result<(HPolytope, HPolytope)> {
    let xh = pontryagin_diff(x, z)?;
    let uh = pontryagin_diff(u, &linear_map(k, z)?)?;
    if xh.is_empty() || uh.is_empty() {
        return Err(Error::Infeasible(
            "tightened constraint set is empty; the tube is not admissible".into(),
        ));
    }
    Ok((xh, uh))
}

#[derive(Debug, Clone)]
pub struct TerminalSet {
    pub set: HPolytope,
    /// False when the iteration cap was hit before a fixed point.
    pub converged: bool,
    pub iterations: usize,
}

/// Maximal positively invariant set of `x+ = (A + B Kf) x` inside
/// `{x in Xh | Kf x in Uh}`, by adding preimage constraints until every new
/// row is implied by the current set.
pub fn terminal_set(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    kf: &DMatrix<f64>,
    xh: &HPolytope,
    uh: &HPolytope,
    iter_cap: usize,
) -> Result<TerminalSet> {
    let acl = a + b * kf;
    let rho = spectral_radius(&acl)?;
    if rho >= 1.0 {
        return Err(Error::NotSchur { rho });
    }
    let base = xh.intersect(&uh.preimage(kf).or_else(|e| match e {
        // Kf = 0: the input constraint holds everywhere.
        Error::Unbounded(_) => Ok(xh.clone()),
        other => Err(other),
    })?)?;
    let h0 = base.a().clone();
    let b0 = base.b().clone();
    let mut current = base.remove_redundant(1e-10)?;
    let mut power = acl.clone();
    for it in 1..=iter_cap {
        let rows = &h0 * &power;
        let mut added = Vec::new();
        for k in 0..rows.nrows() {
            let d = rows.row(k).transpose();
            if d.norm() <= 1e-14 {
                continue;
            }
            if current.support(&d)? > b0[k] + 1e-10 {
                added.push(k);
            }
        }
        if added.is_empty() {
            return Ok(TerminalSet {
                set: current,
                converged: true,
                iterations: it,
            });
        }
        let extra = HPolytope::new(
            rows.select_rows(added.iter()),
            DVector::from_iterator(added.len(), added.iter().map(|&k| b0[k])),
        )?;
        current = current.intersect(&extra)?.remove_redundant(1e-10)?;
        power = &acl * power;
    }
    Ok(TerminalSet {
        set: current,
        converged: false,
        iterations: iter_cap,
    })
}

/// Ingredients of one subsystem's tube MPC problem.
#[derive(Debug, Clone)]
pub struct OcpSpec {
    pub id: usize,
    pub horizon: usize,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    /// Terminal weight from the Riccati equation for `(Q, R)`.
    pub p: DMatrix<f64>,
    /// Ancillary gain.
    pub k: DMatrix<f64>,
    /// Terminal gain.
    pub kf: DMatrix<f64>,
    pub z: ConvexSet,
    /// Facet form of `Z` for the initial-state constraint.
    pub z_facets: HPolytope,
    pub x_hat: HPolytope,
    pub u_hat: HPolytope,
    pub terminal: TerminalSet,
}

impl OcpSpec {
    /// Tightened sets from `tube`, terminal pair from LQR with the stage
    /// weights, terminal set by preimage iteration.
    pub fn new(
        sub: &Subsystem,
        tube: &Tube,
        horizon: usize,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidSet("horizon must be at least 1".into()));
        }
        if sub.nx() > 3 {
            return Err(Error::Unsupported(format!(
                "tube MPC supports local state dimension <= 3 (got {})",
                sub.nx()
            )));
        }
        let (x_hat, u_hat) = tighten(&sub.x, &sub.u, &tube.z, &tube.k)?;
        let lqr = dlqr(&sub.a, &sub.b, &q, &r, 1e-11, 10_000)?;
        let terminal = terminal_set(&sub.a, &sub.b, &lqr.k, &x_hat, &u_hat, 200)?;
        let z_facets = tube.z.facets()?;
        Ok(Self {
            id: sub.id,
            horizon,
            a: sub.a.clone(),
            b: sub.b.clone(),
            q,
            r,
            p: lqr.p,
            k: tube.k.clone(),
            kf: lqr.k,
            z: tube.z.clone(),
            z_facets,
            x_hat,
            u_hat,
            terminal,
        })
    }

    pub fn nx(&self) -> usize {
        self.a.nrows()
    }

    pub fn nu(&self) -> usize {
        self.b.ncols()
    }

    pub fn stage_cost(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        x.dot(&(&self.q * x)) + u.dot(&(&self.r * u))
    }

    /// Maps the decision vector `[x0; u_0; ...; u_{N-1}]` to the predicted
    /// nominal states `x_0..x_N`.
    fn prediction_maps(&self) -> Vec<DMatrix<f64>> {
        let (n, m, big_n) = (self.nx(), self.nu(), self.horizon);
        let nv = n + big_n * m;
        let mut maps = Vec::with_capacity(big_n + 1);
        let mut s = DMatrix::zeros(n, nv);
        s.view_mut((0, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
        maps.push(s.clone());
        for k in 0..big_n {
            let mut next = &self.a * &s;
            let mut bu = next.view_mut((0, n + k * m), (n, m));
            bu += &self.b;
            s = next;
            maps.push(s.clone());
        }
        maps
    }

    /// Builds the condensed QP. With `fixed_nominal` the initial nominal state
    /// is pinned; otherwise it is free subject to `x - x0 in Z`.
    pub fn transcribe(&self, x: &DVector<f64>, fixed_nominal: Option<&DVector<f64>>) -> Result<QpProblem> {
        check_dim(self.nx(), x.len(), "OCP state")?;
        let (n, m, big_n) = (self.nx(), self.nu(), self.horizon);
        let nv = n + big_n * m;
        let maps = self.prediction_maps();
        let sel_u = |k: usize| {
            let mut e = DMatrix::zeros(m, nv);
            e.view_mut((0, n + k * m), (m, m)).copy_from(&DMatrix::identity(m, m));
            e
        };

        let mut h = DMatrix::zeros(nv, nv);
        for k in 0..big_n {
            h += maps[k].transpose() * &self.q * &maps[k];
            let e = sel_u(k);
            h += e.transpose() * &self.r * &e;
        }
        h += maps[big_n].transpose() * &self.p * &maps[big_n];
        // The solver minimizes 1/2 v'Hv, so pass twice the cost matrix.
        let h = &h + h.transpose();

        let mut rows: Vec<DMatrix<f64>> = Vec::new();
        let mut rhs: Vec<DVector<f64>> = Vec::new();
        if fixed_nominal.is_none() {
            let zf = &self.z_facets;
            rows.push(-(zf.a() * &maps[0]));
            rhs.push(zf.b() - zf.a() * x);
        }
        for k in 0..big_n {
            rows.push(self.x_hat.a() * &maps[k]);
            rhs.push(self.x_hat.b().clone());
            rows.push(self.u_hat.a() * sel_u(k));
            rhs.push(self.u_hat.b().clone());
        }
        rows.push(self.terminal.set.a() * &maps[big_n]);
        rhs.push(self.terminal.set.b().clone());

        let total: usize = rows.iter().map(|r| r.nrows()).sum();
        let mut a_in = DMatrix::zeros(total, nv);
        let mut b_in = DVector::zeros(total);
        let mut off = 0;
        for (r, b) in rows.iter().zip(&rhs) {
            a_in.view_mut((off, 0), r.shape()).copy_from(r);
            b_in.rows_mut(off, b.len()).copy_from(b);
            off += r.nrows();
        }
        let mut qp = QpProblem::new(h, DVector::zeros(nv)).with_inequalities(a_in, b_in);
        if let Some(x0) = fixed_nominal {
            check_dim(n, x0.len(), "nominal state")?;
            qp = qp.with_equalities(maps[0].clone(), x0.clone());
        }
        Ok(qp)
    }
}

/// Solution of one tube MPC problem.
#[derive(Debug, Clone)]
pub struct OcpSolution {
    pub x_hat: DVector<f64>,
    /// Planned nominal inputs `u_0..u_{N-1}`.
    pub u_hat: Vec<DVector<f64>>,
    /// Optimal cost `sum l(x_k, u_k) + x_N' P x_N`.
    pub value: f64,
    pub qp: QpSolution,
}

/// Solves the tube MPC problem at state `x`. `fixed_nominal` replaces the
/// free initial nominal state by an equality.
pub fn solve_ocp(
    x: &DVector<f64>,
    spec: &OcpSpec,
    fixed_nominal: Option<&DVector<f64>>,
) -> Result<OcpSolution> {
    let qp = spec.transcribe(x, fixed_nominal)?;
    let sol = qp.solve(QP_TOL)?;
    match sol.status {
        QpStatus::Optimal => {}
        QpStatus::Infeasible => {
            return Err(Error::Infeasible(format!(
                "subsystem {}: state cannot be steered into the tube",
                spec.id
            )))
        }
        QpStatus::IterationLimit => {
            return Err(Error::NoConvergence {
                what: "QP active-set iteration",
                iterations: sol.iterations,
            })
        }
    }
    let (n, m) = (spec.nx(), spec.nu());
    let x_hat = sol.x.rows(0, n).into_owned();
    let u_hat = (0..spec.horizon)
        .map(|k| sol.x.rows(n + k * m, m).into_owned())
        .collect();
    Ok(OcpSolution {
        x_hat,
        u_hat,
        value: sol.objective,
        qp: sol,
    })
}

/// `u = u_hat + K (x - x_hat)`.
pub fn control_policy(
    x: &DVector<f64>,
    x_hat: &DVector<f64>,
    u_hat: &DVector<f64>,
    k: &DMatrix<f64>,
) -> DVector<f64> {
    u_hat + k * (x - x_hat)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    fn one(v: f64) -> DVector<f64> {
        DVector::from_vec(vec![v])
    }

    fn interval(h: f64) -> HPolytope {
        HPolytope::symmetric_box(&[h]).unwrap()
    }

    #[test]
    fn tightening_examples() {
        let (xh, uh) = tighten(&interval(2.0), &interval(1.0), &ConvexSet::origin(1), &s(-1.0)).unwrap();
        assert_eq!(xh.as_box(), Some((vec![-2.0], vec![2.0])));
        assert_eq!(uh.as_box(), Some((vec![-1.0], vec![1.0])));
        let z = ConvexSet::from_bounds(&[-0.5], &[0.5]).unwrap();
        let (xh, uh) = tighten(&interval(2.0), &interval(1.0), &z, &s(-1.0)).unwrap();
        assert_eq!(xh.as_box(), Some((vec![-1.5], vec![1.5])));
        assert_eq!(uh.as_box(), Some((vec![-0.5], vec![0.5])));
        let big = ConvexSet::from_bounds(&[-3.0], &[3.0]).unwrap();
        assert!(matches!(tighten(&interval(2.0), &interval(1.0), &big, &s(0.0)), Err(Error::Infeasible(_))));
    }

    #[test]
    fn terminal_set_examples() {
        let t = terminal_set(&s(0.5), &s(1.0), &s(0.0), &interval(1.0), &interval(1.0), 50).unwrap();
        assert!(t.converged);
        assert_eq!(t.set.as_box(), Some((vec![-1.0], vec![1.0])));
        // The input bound |0.5 x| <= 0.25 binds before the state bound.
        let t = terminal_set(&s(1.0), &s(1.0), &s(-0.5), &interval(1.0), &interval(0.25), 50).unwrap();
        assert!(t.converged);
        let (lo, hi) = t.set.as_box().unwrap();
        assert!((hi[0] - 0.5).abs() < 1e-12 && (lo[0] + 0.5).abs() < 1e-12);
        assert!(terminal_set(&s(1.0), &s(1.0), &s(0.0), &interval(1.0), &interval(1.0), 5).is_err());
    }

    #[test]
    fn planar_terminal_set_is_invariant() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.005, 0.1]);
        let lqr = dlqr(&a, &b, &DMatrix::identity(2, 2), &s(1.0), 1e-11, 1000).unwrap();
        let xh = HPolytope::symmetric_box(&[1.0, 2.0]).unwrap();
        let uh = interval(0.5);
        let t = terminal_set(&a, &b, &lqr.k, &xh, &uh, 200).unwrap();
        assert!(t.converged);
        let acl = &a + &b * &lqr.k;
        let img = linear_map(&acl, &ConvexSet::hpolytope(t.set.clone())).unwrap();
        let c = crate::setcalc::contains(&t.set, &img, 1e-8).unwrap();
        assert!(c.holds, "margin {}", c.margin);
    }

    fn scalar_spec(delta: f64) -> OcpSpec {
        let p = 0.5 * (1.0 + 5f64.sqrt());
        OcpSpec {
            id: 1,
            horizon: 1,
            a: s(1.0),
            b: s(1.0),
            q: s(1.0),
            r: s(1.0),
            p: s(p),
            k: s(-0.5),
            kf: s(-p / (1.0 + p)),
            z: ConvexSet::from_bounds(&[-delta], &[delta]).unwrap(),
            z_facets: interval(delta),
            x_hat: interval(100.0),
            u_hat: interval(100.0),
            terminal: TerminalSet {
                set: interval(100.0),
                converged: true,
                iterations: 1,
            },
        }
    }

    #[test]
    fn origin_is_free() {
        let sol = solve_ocp(&one(0.0), &scalar_spec(0.3), None).unwrap();
        assert!(sol.value.abs() < 1e-14);
        assert!(sol.x_hat.amax() < 1e-14 && sol.u_hat[0].amax() < 1e-14);
    }

    #[test]
    fn one_step_closed_form() {
        // For fixed x0 the best input is -P x0 / (1 + P), leaving a cost
        // x0^2 (1 + P / (1 + P)) that grows with |x0|; the tube constraint
        // therefore pins x0 = x - delta.
        let p = 0.5 * (1.0 + 5f64.sqrt());
        let sol = solve_ocp(&one(1.0), &scalar_spec(0.3), None).unwrap();
        assert!((sol.x_hat[0] - 0.7).abs() < 1e-12);
        assert!((sol.u_hat[0][0] + 0.7 * p / (1.0 + p)).abs() < 1e-12);
        assert!((sol.value - 0.49 * (1.0 + p / (1.0 + p))).abs() < 1e-12);
        assert!(sol.qp.stationarity < 1e-10);
        let fixed = solve_ocp(&one(1.0), &scalar_spec(0.3), Some(&one(0.9))).unwrap();
        assert!((fixed.x_hat[0] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn infeasible_start_is_reported() {
        let mut spec = scalar_spec(0.3);
        spec.x_hat = interval(1.0);
        assert!(matches!(solve_ocp(&one(5.0), &spec, None), Err(Error::Infeasible(_))));
    }

    #[test]
    fn policy_examples() {
        assert_eq!(control_policy(&one(0.4), &one(0.4), &one(0.7), &s(-1.5)), one(0.7));
        let u = control_policy(&one(0.2), &one(0.0), &one(0.0), &s(-1.5));
        assert!((u[0] + 0.3).abs() < 1e-15);
    }
}
