//! Tube MPC and closed-loop simulation of the coupled network.

mod ocp;
pub mod qp;
mod sim;

pub use ocp::{control_policy, solve_ocp, terminal_set, tighten, OcpSolution, OcpSpec, TerminalSet, QP_TOL};
pub use qp::{QpProblem, QpSolution, QpStatus};
pub use sim::{
    build_controllers, collect_tubes, sample_initial_state, simulate, Controller, Mode, RunSummary,
    SimTrace, StepRecord, FLAG_TOL,
};

/// Default prediction horizon.
pub const DEFAULT_HORIZON: usize = 10;
