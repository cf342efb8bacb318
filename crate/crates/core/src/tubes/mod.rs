//! Local robust tubes and the network stability certificate built on them.

mod certificate;
mod mrpi;
mod squarepi;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::setcalc::{contains, linear_map, Containment, ConvexSet, HPolytope, DEFAULT_TOL};

pub use certificate::{
    certify, theorem2_certificate, Certification, CertificateReport, Conclusion, GlobalReport,
    InclusionReport, SubsystemReport,
};
pub use mrpi::{check_rpi, mrpi_approx, rpi_directions, RpiSet};
pub use squarepi::{square_box_pi_exists, SquarePi};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeOptions {
    /// Outer-approximation tolerance of the RPI sets.
    pub eps: f64,
    /// Containment tolerance; inclusions must hold with margin above it.
    pub tol: f64,
    pub s_max: usize,
}

impl Default for TubeOptions {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            tol: DEFAULT_TOL,
            s_max: 500,
        }
    }
}

/// Local tube of subsystem `id`: ancillary gain and RPI cross-section of the
/// error dynamics `z+ = F_ii z + w`.
#[derive(Debug, Clone)]
pub struct Tube {
    pub id: usize,
    pub k: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub w: ConvexSet,
    pub z: ConvexSet,
    pub s: usize,
    pub alpha: f64,
    pub eps: f64,
}

impl Tube {
    /// `K Z`.
    pub fn input_set(&self) -> Result<ConvexSet> {
        linear_map(&self.k, &self.z)
    }

    pub fn rpi_residual(&self) -> Result<f64> {
        check_rpi(&self.f, &self.w, &self.z, &rpi_directions(&self.w, &self.z))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Admissibility {
    pub admissible: bool,
    pub state: Containment,
    pub input: Containment,
}

/// Strict inclusions `Z in X` and `K Z in U`: both margins must exceed `tol`.
pub fn tube_admissible(t: &Tube, x: &HPolytope, u: &HPolytope, tol: f64) -> Result<Admissibility> {
    let state = contains(x, &t.z, tol)?;
    let input = contains(u, &t.input_set()?, tol)?;
    Ok(Admissibility {
        admissible: state.margin > tol && input.margin > tol,
        state,
        input,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_constraint_box_is_state_admissible() {
        let x = HPolytope::symmetric_box(&[2.0, 8.0]).unwrap();
        let u = HPolytope::symmetric_box(&[1.0]).unwrap();
        let t = Tube {
            id: 1,
            k: DMatrix::zeros(1, 2),
            f: DMatrix::zeros(2, 2),
            w: ConvexSet::origin(2),
            z: ConvexSet::hpolytope(x.scaled(0.999)),
            s: 1,
            alpha: 0.0,
            eps: 0.0,
        };
        let a = tube_admissible(&t, &x, &u, 1e-8).unwrap();
        assert!(a.admissible);
        assert!((a.state.margin - 0.002).abs() < 1e-12);
        assert_eq!(a.input.margin, 1.0);
        let t_full = Tube { z: ConvexSet::hpolytope(x.clone()), ..t };
        assert!(!tube_admissible(&t_full, &x, &u, 1e-8).unwrap().admissible);
    }
}
