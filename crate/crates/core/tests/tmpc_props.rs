mod common;

use common::*;
use nalgebra::DVector;
use proptest::prelude::*;
use tubecert::netmodel::{builtin_scenario, LqrWeights};
use tubecert::tmpc::{build_controllers, sample_initial_state, simulate, Controller, QpStatus};
use tubecert::tubes::certify;
use tubecert::{Mode, Network, TubeOptions};

fn trucks(mode: Mode) -> (Network, Vec<Controller>) {
    let sc = builtin_scenario("trucks-case1").unwrap();
    let cert = certify("trucks-case1", &sc.network, &sc.gains().unwrap(), &TubeOptions::default()).unwrap();
    let tubes = tubecert::tmpc::collect_tubes(&cert.tubes).unwrap();
    let ctl = build_controllers(&sc.network, &tubes, mode, 10, &LqrWeights::default()).unwrap();
    (sc.network, ctl)
}

#[test]
fn qp_solutions_satisfy_kkt_and_match_the_dual_oracle() {
    for seed in 0..50 {
        let mut r = rng(1000 + seed);
        let qp = random_qp(&mut r);
        let sol = qp.solve(1e-10).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal, "seed {seed}");
        assert!(sol.stationarity <= 1e-7, "seed {seed}: stationarity {}", sol.stationarity);
        assert!(sol.primal_residual <= 1e-7, "seed {seed}: primal {}", sol.primal_residual);
        assert!(sol.lambda_in.iter().all(|&l| l >= -1e-12));
        let oracle = dual_gradient_oracle(&qp, 1e-13, 400_000);
        assert!(
            (sol.objective - oracle).abs() <= 1e-6,
            "seed {seed}: solver {} oracle {oracle}",
            sol.objective
        );
    }
}

#[test]
fn linear_mode_keeps_states_starting_in_the_tube_admissible() {
    let (net, ctl) = trucks(Mode::Linear);
    for seed in 0..100 {
        let mut r = rng(seed);
        let x0 = sample_initial_state(&mut r, &net, &ctl, Mode::Linear).unwrap();
        let trace = simulate(&net, &ctl, Mode::Linear, &x0, 100).unwrap();
        assert_eq!(trace.steps_completed, 100);
        assert!(trace.all_in_constraints(), "seed {seed}");
        assert!(trace.all_in_tube(), "seed {seed}");
        // A state inside Z is never followed by a constraint violation.
        let m = net.len();
        for w in trace.records.chunks(m).collect::<Vec<_>>().windows(2) {
            for (prev, cur) in w[0].iter().zip(w[1]) {
                let z = &ctl[prev.id - 1].z_facets;
                if z.violation(&DVector::from_vec(prev.x.clone())) <= 1e-9 {
                    assert!(cur.in_x && cur.in_u, "seed {seed}, t {}", cur.t);
                }
            }
        }
    }
}

#[test]
fn equilibrium_stays_at_rest_in_every_mode() {
    for mode in [Mode::Linear, Mode::Tmpc, Mode::TmpcPropagate] {
        let (net, ctl) = trucks(mode);
        let x0 = vec![DVector::zeros(2); net.len()];
        let trace = simulate(&net, &ctl, mode, &x0, 20).unwrap();
        for rec in &trace.records {
            assert!(rec.x.iter().chain(&rec.u).all(|v| v.abs() <= 1e-9), "{mode}: {rec:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tube_mpc_runs_stay_in_tube_and_constraints(seed in any::<u64>(), propagate in any::<bool>()) {
        let mode = if propagate { Mode::TmpcPropagate } else { Mode::Tmpc };
        let (net, ctl) = trucks(mode);
        let mut r = rng(seed);
        let x0 = sample_initial_state(&mut r, &net, &ctl, mode).unwrap();
        let trace = simulate(&net, &ctl, mode, &x0, 40).unwrap();
        prop_assert!(trace.halted.is_none(), "{:?}", trace.halted);
        prop_assert!(trace.all_in_tube());
        prop_assert!(trace.all_in_constraints());
        if let Some(d) = trace.max_descent_violation {
            prop_assert!(d <= 1e-6, "descent violation {d}");
        }
    }
}
