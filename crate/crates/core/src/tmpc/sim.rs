use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ocp::{control_policy, solve_ocp, OcpSpec};
use crate::error::{check_dim, Error, Result};
use crate::netmodel::{LqrWeights, Network};
use crate::setcalc::HPolytope;
use crate::tubes::Tube;

/// Membership tolerance for the recorded flags.
pub const FLAG_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// `u = K x` on every subsystem.
    Linear,
    /// Tube MPC with the initial nominal state re-optimized each step.
    Tmpc,
    /// Tube MPC where the nominal state evolves on its own after `t = 0`.
    TmpcPropagate,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Mode::Linear),
            "tmpc" => Ok(Mode::Tmpc),
            "tmpc-propagate" => Ok(Mode::TmpcPropagate),
            other => Err(Error::Scenario(format!(
                "unknown mode '{other}' (expected linear, tmpc or tmpc-propagate)"
            ))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Linear => "linear",
            Mode::Tmpc => "tmpc",
            Mode::TmpcPropagate => "tmpc-propagate",
        })
    }
}

/// Local controller of one subsystem.
#[derive(Debug, Clone)]
pub struct Controller {
    pub tube: Tube,
    pub z_facets: HPolytope,
    /// Present for the tube MPC modes.
    pub ocp: Option<OcpSpec>,
}

/// One controller per subsystem, in subsystem order.
pub fn build_controllers(
    net: &Network,
    tubes: &[Tube],
    mode: Mode,
    horizon: usize,
    weights: &LqrWeights,
) -> Result<Vec<Controller>> {
    check_dim(net.len(), tubes.len(), "number of tubes")?;
    net.subsystems()
        .par_iter()
        .zip(tubes.par_iter())
        .map(|(s, t)| {
            let z_facets = t.z.facets()?;
            let ocp = match mode {
                Mode::Linear => None,
                Mode::Tmpc | Mode::TmpcPropagate => {
                    let (q, r) = weights.for_subsystem(net, s.id)?;
                    Some(OcpSpec::new(s, t, horizon, q, r)?)
                }
            };
            Ok(Controller {
                tube: t.clone(),
                z_facets,
                ocp,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub t: usize,
    pub id: usize,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub u_hat: Vec<f64>,
    /// Realized coupling `sum_j A_ij x_j + B_ij u_j`.
    pub w: Vec<f64>,
    /// Largest facet violation of `x - x_hat` with respect to `Z`.
    pub tube_violation: f64,
    pub in_tube: bool,
    pub in_x: bool,
    pub in_u: bool,
    pub value: Option<f64>,
    pub qp_iterations: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SimTrace {
    pub mode: Mode,
    pub records: Vec<StepRecord>,
    pub final_states: Vec<DVector<f64>>,
    pub steps_completed: usize,
    /// Diagnostic when a local problem failed mid-run.
    pub halted: Option<String>,
    /// Worst `V_t + l(x_{t-1}, u_{t-1}) - V_{t-1}` along the run (tube MPC
    /// modes only, from `t = 1`).
    pub max_descent_violation: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub mode: Mode,
    pub seed: u64,
    pub steps_requested: usize,
    pub steps_completed: usize,
    pub horizon: usize,
    pub flag_tol: f64,
    pub all_in_tube: bool,
    pub all_in_x: bool,
    pub all_in_u: bool,
    pub max_tube_violation: f64,
    pub max_descent_violation: Option<f64>,
    pub final_state_norms: Vec<f64>,
    pub halted: Option<String>,
}

impl SimTrace {
    pub fn all_in_tube(&self) -> bool {
        self.records.iter().all(|r| r.in_tube)
    }

    pub fn all_in_constraints(&self) -> bool {
        self.records.iter().all(|r| r.in_x && r.in_u)
    }

    pub fn summary(&self, scenario: &str, seed: u64, steps: usize, horizon: usize) -> RunSummary {
        RunSummary {
            scenario: scenario.to_string(),
            mode: self.mode,
            seed,
            steps_requested: steps,
            steps_completed: self.steps_completed,
            horizon,
            flag_tol: FLAG_TOL,
            all_in_tube: self.all_in_tube(),
            all_in_x: self.records.iter().all(|r| r.in_x),
            all_in_u: self.records.iter().all(|r| r.in_u),
            max_tube_violation: self
                .records
                .iter()
                .map(|r| r.tube_violation)
                .fold(f64::NEG_INFINITY, f64::max),
            max_descent_violation: self.max_descent_violation,
            final_state_norms: self.final_states.iter().map(|x| x.norm()).collect(),
            halted: self.halted.clone(),
        }
    }

    /// One row per subsystem and step. Vector columns are padded to the
    /// largest subsystem so every row has the same width.
    pub fn to_csv(&self) -> String {
        let width = |f: fn(&StepRecord) -> usize| self.records.iter().map(f).max().unwrap_or(0);
        let (nx, nu) = (width(|r| r.x.len()), width(|r| r.u.len()));
        let mut out = String::from("t,i");
        for (name, n) in [("x", nx), ("u", nu), ("xhat", nx), ("uhat", nu)] {
            for k in 0..n {
                let _ = write!(out, ",{name}{k}");
            }
        }
        out.push_str(",in_tube,in_x,in_u,value\n");
        for r in &self.records {
            let _ = write!(out, "{},{}", r.t, r.id);
            for (v, n) in [(&r.x, nx), (&r.u, nu), (&r.x_hat, nx), (&r.u_hat, nu)] {
                for k in 0..n {
                    match v.get(k) {
                        Some(c) => {
                            let _ = write!(out, ",{c}");
                        }
                        None => out.push(','),
                    }
                }
            }
            let _ = write!(out, ",{},{},{},", r.in_tube as u8, r.in_x as u8, r.in_u as u8);
            if let Some(v) = r.value {
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }
}

struct LocalStep {
    u: DVector<f64>,
    x_hat: DVector<f64>,
    u_hat: DVector<f64>,
    value: Option<f64>,
    qp_iterations: Option<usize>,
}

fn local_step(
    c: &Controller,
    mode: Mode,
    x: &DVector<f64>,
    fixed: Option<&DVector<f64>>,
) -> Result<LocalStep> {
    match (&c.ocp, mode) {
        (_, Mode::Linear) => Ok(LocalStep {
            u: &c.tube.k * x,
            x_hat: DVector::zeros(x.len()),
            u_hat: DVector::zeros(c.tube.k.nrows()),
            value: None,
            qp_iterations: None,
        }),
        (Some(spec), _) => {
            let sol = solve_ocp(x, spec, fixed)?;
            let u_hat = sol.u_hat[0].clone();
            Ok(LocalStep {
                u: control_policy(x, &sol.x_hat, &u_hat, &spec.k),
                x_hat: sol.x_hat,
                u_hat,
                value: Some(sol.value),
                qp_iterations: Some(sol.qp.iterations),
            })
        }
        (None, _) => Err(Error::InvalidSet(
            "tube MPC mode needs controllers built for it".into(),
        )),
    }
}

/// Closed-loop rollout of the coupled plant for `steps` steps. Local
/// problems within a step are solved in parallel; results are gathered in
/// subsystem order so the trace is independent of scheduling.
pub fn simulate(
    net: &Network,
    controllers: &[Controller],
    mode: Mode,
    x0: &[DVector<f64>],
    steps: usize,
) -> Result<SimTrace> {
    check_dim(net.len(), controllers.len(), "number of controllers")?;
    check_dim(net.len(), x0.len(), "number of initial states")?;
    for (s, x) in net.subsystems().iter().zip(x0) {
        check_dim(s.nx(), x.len(), "initial state")?;
    }
    let mut xs: Vec<DVector<f64>> = x0.to_vec();
    let mut nominal: Option<Vec<DVector<f64>>> = None;
    let mut prev: Option<Vec<(f64, f64)>> = None;
    let mut records = Vec::with_capacity(steps * net.len());
    let mut halted = None;
    let mut steps_completed = 0;
    let mut descent: Option<f64> = None;

    for t in 0..steps {
        let results: Vec<Result<LocalStep>> = (0..net.len())
            .into_par_iter()
            .map(|k| {
                let fixed = match mode {
                    Mode::TmpcPropagate => nominal.as_ref().map(|v| &v[k]),
                    _ => None,
                };
                local_step(&controllers[k], mode, &xs[k], fixed)
            })
            .collect();
        let mut locals = Vec::with_capacity(net.len());
        for (k, r) in results.into_iter().enumerate() {
            match r {
                Ok(l) => locals.push(l),
                Err(e) => {
                    halted = Some(format!("t = {t}, subsystem {}: {e}", k + 1));
                    break;
                }
            }
        }
        if halted.is_some() {
            break;
        }

        let mut next = Vec::with_capacity(net.len());
        let mut stage = Vec::with_capacity(net.len());
        for (k, s) in net.subsystems().iter().enumerate() {
            let l = &locals[k];
            let mut w = DVector::zeros(s.nx());
            for (&j, c) in &s.couplings {
                w += &c.a * &xs[j - 1] + &c.b * &locals[j - 1].u;
            }
            let ctl = &controllers[k];
            let tube_violation = ctl.z_facets.violation(&(&xs[k] - &l.x_hat));
            records.push(StepRecord {
                t,
                id: s.id,
                x: xs[k].iter().copied().collect(),
                u: l.u.iter().copied().collect(),
                x_hat: l.x_hat.iter().copied().collect(),
                u_hat: l.u_hat.iter().copied().collect(),
                w: w.iter().copied().collect(),
                tube_violation,
                in_tube: tube_violation <= FLAG_TOL,
                in_x: s.x.violation(&xs[k]) <= FLAG_TOL,
                in_u: s.u.violation(&l.u) <= FLAG_TOL,
                value: l.value,
                qp_iterations: l.qp_iterations,
            });
            if let (Some(v), Some(spec)) = (l.value, &ctl.ocp) {
                if let Some(p) = &prev {
                    let (v_prev, l_prev) = p[k];
                    let d = v + l_prev - v_prev;
                    descent = Some(descent.map_or(d, |m: f64| m.max(d)));
                }
                stage.push((v, spec.stage_cost(&l.x_hat, &l.u_hat)));
            }
            next.push(&s.a * &xs[k] + &s.b * &l.u + w);
        }
        if stage.len() == net.len() {
            prev = Some(stage);
        }
        if mode == Mode::TmpcPropagate {
            nominal = Some(
                controllers
                    .iter()
                    .zip(&locals)
                    .map(|(c, l)| {
                        let spec = c.ocp.as_ref().expect("tube MPC controller");
                        &spec.a * &l.x_hat + &spec.b * &l.u_hat
                    })
                    .collect(),
            );
        }
        xs = next;
        steps_completed = t + 1;
    }
    Ok(SimTrace {
        mode,
        records,
        final_states: xs,
        steps_completed,
        halted,
        max_descent_violation: if mode == Mode::Tmpc { None } else { descent },
    })
}

fn bounding_box(p: &HPolytope) -> Result<Vec<(f64, f64)>> {
    let n = p.dim();
    (0..n)
        .map(|k| {
            let mut d = DVector::zeros(n);
            d[k] = 1.0;
            Ok((-p.support(&(-&d))?, p.support(&d)?))
        })
        .collect()
}

fn sample_in<R: Rng>(rng: &mut R, bounds: &[(f64, f64)], shrink: f64) -> DVector<f64> {
    DVector::from_iterator(
        bounds.len(),
        bounds.iter().map(|&(lo, hi)| shrink * rng.random_range(lo..=hi)),
    )
}

/// Random admissible initial state per subsystem. The linear mode draws
/// uniformly from `Z_i`; the tube MPC modes draw uniformly from `X_i` and
/// keep the first sample for which the local problem is feasible, shrinking
/// the sampling box after repeated failures.
pub fn sample_initial_state<R: Rng>(
    rng: &mut R,
    net: &Network,
    controllers: &[Controller],
    mode: Mode,
) -> Result<Vec<DVector<f64>>> {
    check_dim(net.len(), controllers.len(), "number of controllers")?;
    let mut out = Vec::with_capacity(net.len());
    for (s, c) in net.subsystems().iter().zip(controllers) {
        let region = match mode {
            Mode::Linear => &c.z_facets,
            _ => &s.x,
        };
        let bounds = bounding_box(region)?;
        let mut found = None;
        'search: for round in 0..8 {
            let shrink = 0.5f64.powi(round);
            for _ in 0..64 {
                let x = sample_in(rng, &bounds, shrink);
                if region.violation(&x) > 0.0 {
                    continue;
                }
                let ok = match (&c.ocp, mode) {
                    (Some(spec), Mode::Tmpc | Mode::TmpcPropagate) => solve_ocp(&x, spec, None).is_ok(),
                    _ => true,
                };
                if ok {
                    found = Some(x);
                    break 'search;
                }
            }
        }
        out.push(found.unwrap_or_else(|| DVector::zeros(s.nx())));
    }
    Ok(out)
}

/// Tubes from a certification run, failing if any subsystem has none.
pub fn collect_tubes(tubes: &[Option<Tube>]) -> Result<Vec<Tube>> {
    tubes
        .iter()
        .enumerate()
        .map(|(k, t)| {
            t.clone()
                .ok_or_else(|| Error::Infeasible(format!("subsystem {} has no tube", k + 1)))
        })
        .collect()
}
