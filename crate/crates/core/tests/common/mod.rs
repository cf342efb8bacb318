//! Random instance generators and independent reference solvers shared by
//! the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use std::collections::BTreeMap;
use tubecert::netmodel::{Coupling, Network, Subsystem};
use tubecert::setcalc::{ConvexSet, HPolytope, Zonotope};
use tubecert::tmpc::QpProblem;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-scale..scale))
}

pub fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let d = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        if d.norm() > 1e-3 {
            return d.normalize();
        }
    }
}

pub fn random_box(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> HPolytope {
    let h: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    HPolytope::symmetric_box(&h).unwrap()
}

pub fn random_zonotope(rng: &mut ChaCha8Rng, n: usize, gens: usize, scale: f64) -> Zonotope {
    let c = DVector::from_fn(n, |_, _| rng.random_range(-0.1 * scale..0.1 * scale));
    Zonotope::new(c, random_matrix(rng, n, gens, scale)).unwrap()
}

pub fn random_vpolytope(rng: &mut ChaCha8Rng, n: usize, count: usize, scale: f64) -> Vec<DVector<f64>> {
    (0..count)
        .map(|_| DVector::from_fn(n, |_, _| rng.random_range(-scale..scale)))
        .collect()
}

/// Bounded polytope containing the origin: random unit normals plus a box.
pub fn random_hpolytope(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> HPolytope {
    let bx = random_box(rng, n, 1.0, 3.0);
    let mut rows: Vec<_> = bx.a().row_iter().map(|r| r.into_owned()).collect();
    let mut b: Vec<f64> = bx.b().iter().copied().collect();
    for _ in 0..extra {
        rows.push(random_unit(rng, n).transpose());
        b.push(rng.random_range(0.5..2.5));
    }
    let a = DMatrix::from_rows(&rows);
    HPolytope::new(a, DVector::from_vec(b)).unwrap()
}

pub fn random_set(rng: &mut ChaCha8Rng, n: usize) -> ConvexSet {
    let kind = rng.random_range(0..3);
    let count = rng.random_range(1..7);
    match kind {
        0 => ConvexSet::hpolytope(random_hpolytope(rng, n, count % 3)),
        1 => ConvexSet::zonotope(random_zonotope(rng, n, count.min(4), 1.0)),
        _ => ConvexSet::vpolytope(random_vpolytope(rng, n, count, 1.5)).unwrap(),
    }
}

/// Random strictly convex QP with a strictly feasible point.
pub fn random_qp(rng: &mut ChaCha8Rng) -> QpProblem {
    let n = rng.random_range(2..9);
    let m = rng.random_range(1..14);
    let mh = random_matrix(rng, n, n, 1.0);
    let h = mh.transpose() * &mh + DMatrix::identity(n, n) * 0.5;
    let f = random_matrix(rng, n, 1, 3.0).column(0).into_owned();
    let xf = random_matrix(rng, n, 1, 1.0).column(0).into_owned();
    let a = random_matrix(rng, m, n, 1.0);
    let slack = DVector::from_fn(m, |_, _| rng.random_range(0.05..1.0));
    let b = &a * &xf + slack;
    let mut qp = QpProblem::new(h, f).with_inequalities(a, b);
    if rng.random_bool(0.3) {
        let e = random_matrix(rng, 1, n, 1.0);
        let rhs = &e * &xf;
        qp = qp.with_equalities(e, rhs);
    }
    qp
}

/// Accelerated projected gradient ascent on the QP dual.
///
/// Returns the dual value, a lower bound on the primal optimum that
/// converges to it.
pub fn dual_gradient_oracle(qp: &QpProblem, tol: f64, max_iter: usize) -> f64 {
    let n = qp.f.len();
    let n_in = qp.a_in.nrows();
    let n_eq = qp.a_eq.nrows();
    let mut c = DMatrix::zeros(n_in + n_eq, n);
    c.rows_mut(0, n_in).copy_from(&qp.a_in);
    c.rows_mut(n_in, n_eq).copy_from(&qp.a_eq);
    let mut d = DVector::zeros(n_in + n_eq);
    d.rows_mut(0, n_in).copy_from(&qp.b_in);
    d.rows_mut(n_in, n_eq).copy_from(&qp.b_eq);
    let h_inv = qp.h.clone().try_inverse().unwrap();
    let hess = &c * &h_inv * c.transpose();
    let lip = hess.symmetric_eigenvalues().max().max(1e-12);

    let primal = |nu: &DVector<f64>| -> DVector<f64> { -(&h_inv * (&qp.f + c.transpose() * nu)) };
    let dual_value = |nu: &DVector<f64>| -> f64 {
        let x = primal(nu);
        qp.objective(&x) + nu.dot(&(&c * &x - &d))
    };
    let project = |nu: &mut DVector<f64>| {
        for k in 0..n_in {
            nu[k] = nu[k].max(0.0);
        }
    };

    let mut nu = DVector::zeros(n_in + n_eq);
    let mut y = nu.clone();
    let mut t = 1.0_f64;
    let mut best = dual_value(&nu);
    for _ in 0..max_iter {
        let grad = &c * primal(&y) - &d;
        let mut next = &y + grad / lip;
        project(&mut next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let val = dual_value(&next);
        // Adaptive restart keeps the iteration monotone.
        if val < best {
            y = nu.clone();
            t = 1.0;
            continue;
        }
        y = &next + (&next - &nu) * ((t - 1.0) / t_next);
        let step = (&next - &nu).amax();
        nu = next;
        t = t_next;
        best = val;
        if step <= tol {
            break;
        }
    }
    best
}

pub struct RandomNetworkSpec {
    pub max_subsystems: usize,
    pub max_state: usize,
    pub coupling: f64,
}

/// Random network of `M <= max_subsystems` subsystems with at most
/// `max_state` states and one input each, box constraints and random
/// couplings of size `coupling`. Local pairs are drawn until every one is
/// stabilizable by LQR.
pub fn random_network(rng: &mut ChaCha8Rng, spec: &RandomNetworkSpec) -> Network {
    let m = rng.random_range(2..=spec.max_subsystems);
    let dims: Vec<usize> = (0..m).map(|_| rng.random_range(1..=spec.max_state)).collect();
    let mut subs = Vec::with_capacity(m);
    for i in 0..m {
        let n = dims[i];
        let a = random_matrix(rng, n, n, 1.2);
        let b = random_matrix(rng, n, 1, 1.0) + DMatrix::from_element(n, 1, 0.2);
        let mut couplings = BTreeMap::new();
        for j in 0..m {
            if j == i || rng.random_bool(0.4) {
                continue;
            }
            let ca = random_matrix(rng, n, dims[j], spec.coupling);
            let cb = if rng.random_bool(0.3) {
                random_matrix(rng, n, 1, spec.coupling)
            } else {
                DMatrix::zeros(n, 1)
            };
            couplings.insert(j + 1, Coupling { a: ca, b: cb });
        }
        subs.push(Subsystem {
            id: i + 1,
            a,
            b,
            couplings,
            x: random_box(rng, n, 0.5, 4.0),
            u: random_box(rng, 1, 0.5, 4.0),
        });
    }
    Network::new(subs).unwrap()
}

/// Per-subsystem LQR gains with identity weights, `None` when some local
/// pair is not stabilizable.
pub fn lqr_gains(net: &Network) -> Option<Vec<DMatrix<f64>>> {
    net.subsystems()
        .iter()
        .map(|s| {
            let q = DMatrix::identity(s.nx(), s.nx());
            let r = DMatrix::identity(s.nu(), s.nu());
            tubecert::ctrl::dlqr(&s.a, &s.b, &q, &r, 1e-10, 10_000).ok().map(|l| l.k)
        })
        .collect()
}

/// Random network with stabilizable local pairs and its LQR gains.
pub fn random_scenario(rng: &mut ChaCha8Rng) -> (Network, Vec<DMatrix<f64>>) {
    loop {
        let spec = RandomNetworkSpec {
            max_subsystems: 4,
            max_state: 2,
            coupling: rng.random_range(0.01..0.4),
        };
        let net = random_network(rng, &spec);
        if let Some(k) = lqr_gains(&net) {
            return (net, k);
        }
    }
}

/// Random matrix rescaled to spectral radius `rho`.
pub fn random_schur(rng: &mut ChaCha8Rng, n: usize, rho: f64) -> DMatrix<f64> {
    loop {
        let m = random_matrix(rng, n, n, 1.0);
        let r = tubecert::ctrl::spectral_radius(&m).unwrap();
        if r > 1e-3 {
            return m * (rho / r);
        }
    }
}
