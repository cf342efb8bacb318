//! Stability certificates for networks of constrained LTI subsystems built
//! from local robust tubes, plus tube MPC simulation of the closed loop.

pub mod ctrl;
pub mod error;
pub mod netmodel;
pub mod setcalc;
pub mod tmpc;
pub mod tubes;

pub use ctrl::{LqrResult, StateSpace};
pub use error::{Error, Result};
pub use netmodel::{Network, Scenario, Subsystem};
pub use setcalc::{ConvexSet, HPolytope, Zonotope};
pub use tmpc::{Mode, SimTrace};
pub use tubes::{CertificateReport, Conclusion, Tube, TubeOptions};
