use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::{mrpi_approx, tube_admissible, RpiSet, Tube, TubeOptions};
use crate::ctrl::spectral_radius;
use crate::error::{check_dim, Error, Result};
use crate::netmodel::{Disturbance, Network};
use crate::setcalc::{linear_map, ConvexSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Conclusion {
    Certified,
    NotCertified,
}

impl std::fmt::Display for Conclusion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Conclusion::Certified => "CERTIFIED",
            Conclusion::NotCertified => "NOT_CERTIFIED",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SubsystemReport {
    pub id: usize,
    pub neighbours: Vec<usize>,
    pub rho_local: f64,
    pub admissible: bool,
    pub state_margin: Option<f64>,
    pub input_margin: Option<f64>,
    pub rpi_residual: Option<f64>,
    pub truncation_order: Option<usize>,
    pub alpha: Option<f64>,
    /// `[h(Z, -e_k), h(Z, e_k)]` per state coordinate, i.e. the bounding box
    /// of the tube cross-section as `(lo, hi)`.
    pub z_bounds: Option<Vec<[f64; 2]>>,
    pub error: Option<String>,
}

/// Inclusion of the closed-loop neighbour image `(A_ij + B_ij K_j) Z_j` in
/// the disturbance part `A_ij X_j + B_ij U_j`.
#[derive(Debug, Clone, Serialize)]
pub struct InclusionReport {
    pub i: usize,
    pub j: usize,
    pub holds: bool,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GlobalReport {
    pub rho: f64,
    pub schur: bool,
    /// Worst value of `h(F Z, d) - h(Z, d)` for the product of the tube
    /// cross-sections, over the facet normals of each factor.
    pub product_pi_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub scenario: String,
    pub eps: f64,
    pub tol: f64,
    pub subsystems: Vec<SubsystemReport>,
    pub inclusions: Vec<InclusionReport>,
    pub global: GlobalReport,
    pub conclusion: Conclusion,
}

impl CertificateReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario: {}", self.scenario);
        let _ = writeln!(out, "eps = {:e}, tol = {:e}", self.eps, self.tol);
        for s in &self.subsystems {
            let _ = write!(
                out,
                "subsystem {}: rho(F_ii) = {:.4}, {}",
                s.id,
                s.rho_local,
                if s.admissible { "admissible" } else { "NOT admissible" }
            );
            if let (Some(xm), Some(um)) = (s.state_margin, s.input_margin) {
                let _ = write!(out, ", state margin {xm:.4}, input margin {um:.4}");
            }
            if let Some(r) = s.rpi_residual {
                let _ = write!(out, ", RPI residual {r:.2e}");
            }
            if let (Some(order), Some(a)) = (s.truncation_order, s.alpha) {
                let _ = write!(out, ", s = {order}, alpha = {a:.2e}");
            }
            if let Some(e) = &s.error {
                let _ = write!(out, " ({e})");
            }
            out.push('\n');
        }
        for inc in &self.inclusions {
            let _ = writeln!(
                out,
                "inclusion V_{}{} in W_{}{}: {} (margin {:.4})",
                inc.i,
                inc.j,
                inc.i,
                inc.j,
                if inc.holds { "holds" } else { "fails" },
                inc.margin
            );
        }
        if let Some(r) = self.global.product_pi_residual {
            let _ = writeln!(out, "product set PI residual: {r:.2e}");
        }
        let _ = writeln!(
            out,
            "rho(F) = {:.4} ({})",
            self.global.rho,
            if self.global.schur { "Schur" } else { "not Schur" }
        );
        let _ = writeln!(out, "conclusion: {}", self.conclusion);
        out
    }
}

/// Certificate plus the tubes it was built from (`None` where a tube could
/// not be constructed).
#[derive(Debug, Clone)]
pub struct Certification {
    pub report: CertificateReport,
    pub tubes: Vec<Option<Tube>>,
    pub disturbances: Vec<Disturbance>,
}

fn axis_bounds(z: &ConvexSet) -> Result<Vec<[f64; 2]>> {
    let n = z.dim();
    (0..n)
        .map(|k| {
            let mut d = DVector::zeros(n);
            d[k] = 1.0;
            let hi = z.support(&d)?;
            let lo = -z.support(&(-d))?;
            Ok([lo, hi])
        })
        .collect()
}

fn build_tube(
    net: &Network,
    id: usize,
    k: &DMatrix<f64>,
    w: &Disturbance,
    opts: &TubeOptions,
) -> (SubsystemReport, Option<Tube>) {
    let s = net.subsystem(id).expect("id in range");
    let f = &s.a + &s.b * k;
    let mut rep = SubsystemReport {
        id,
        neighbours: s.neighbours().collect(),
        rho_local: spectral_radius(&f).unwrap_or(f64::NAN),
        admissible: false,
        state_margin: None,
        input_margin: None,
        rpi_residual: None,
        truncation_order: None,
        alpha: None,
        z_bounds: None,
        error: None,
    };
    let rpi = if w.parts.is_empty() {
        // No neighbours: the error dynamics are undisturbed and the tube
        // collapses to the origin.
        if rep.rho_local < 1.0 {
            Ok(RpiSet {
                z: ConvexSet::origin(s.nx()),
                s: 0,
                alpha: 0.0,
                eps: opts.eps,
                inflation: 0.0,
            })
        } else {
            Err(Error::NotSchur { rho: rep.rho_local })
        }
    } else {
        mrpi_approx(&f, &w.total, opts.eps, opts.s_max)
    };
    let rpi = match rpi {
        Ok(r) => r,
        Err(e) => {
            rep.error = Some(e.to_string());
            return (rep, None);
        }
    };
    let tube = Tube {
        id,
        k: k.clone(),
        f,
        w: w.total.clone(),
        z: rpi.z,
        s: rpi.s,
        alpha: rpi.alpha,
        eps: rpi.eps,
    };
    rep.truncation_order = Some(tube.s);
    rep.alpha = Some(tube.alpha);
    let checks = (|| -> Result<()> {
        let adm = tube_admissible(&tube, &s.x, &s.u, opts.tol)?;
        rep.admissible = adm.admissible;
        rep.state_margin = Some(adm.state.margin);
        rep.input_margin = Some(adm.input.margin);
        rep.rpi_residual = Some(tube.rpi_residual()?);
        rep.z_bounds = Some(axis_bounds(&tube.z)?);
        Ok(())
    })();
    if let Err(e) = checks {
        rep.admissible = false;
        rep.error = Some(e.to_string());
    }
    (rep, Some(tube))
}

/// Builds every local tube, checks admissibility and the inclusions used by
/// the stability argument, and reports the global spectral radius.
///
/// Subsystems are processed in parallel; the report does not depend on
/// scheduling.
pub fn certify(
    name: &str,
    net: &Network,
    gains: &[DMatrix<f64>],
    opts: &TubeOptions,
) -> Result<Certification> {
    check_dim(net.len(), gains.len(), "number of gains")?;
    let big_k = net.block_gain(gains)?;
    let disturbances: Vec<Disturbance> = (1..=net.len())
        .map(|id| net.disturbance_set(id))
        .collect::<Result<_>>()?;

    let built: Vec<(SubsystemReport, Option<Tube>)> = (1..=net.len())
        .into_par_iter()
        .map(|id| build_tube(net, id, &gains[id - 1], &disturbances[id - 1], opts))
        .collect();
    let (subsystems, tubes): (Vec<_>, Vec<_>) = built.into_iter().unzip();

    let mut inclusions = Vec::new();
    for s in net.subsystems() {
        for (j, w_ij) in &disturbances[s.id - 1].parts {
            let Some(tj) = &tubes[j - 1] else { continue };
            let c = &s.couplings[j];
            let f_ij = &c.a + &c.b * &gains[j - 1];
            let v_ij = linear_map(&f_ij, &tj.z)?;
            let mut dirs = w_ij.test_directions(64);
            dirs.extend(v_ij.test_directions(0));
            let mut margin = f64::INFINITY;
            for d in &dirs {
                margin = margin.min(w_ij.support(d)? - v_ij.support(d)?);
            }
            inclusions.push(InclusionReport {
                i: s.id,
                j: *j,
                holds: margin >= -opts.tol,
                margin,
            });
        }
    }

    let product_pi_residual = if tubes.iter().all(Option::is_some) {
        let tubes: Vec<&Tube> = tubes.iter().flatten().collect();
        let mut worst = f64::NEG_INFINITY;
        for s in net.subsystems() {
            let ti = tubes[s.id - 1];
            for d in ti.z.test_directions(64) {
                let mut lhs = ti.z.support(&(ti.f.transpose() * &d))?;
                for (&j, c) in &s.couplings {
                    let f_ij = &c.a + &c.b * &gains[j - 1];
                    lhs += tubes[j - 1].z.support(&(f_ij.transpose() * &d))?;
                }
                worst = worst.max(lhs - ti.z.support(&d)?);
            }
        }
        Some(worst)
    } else {
        None
    };

    let sys = net.assemble_global();
    let rho = spectral_radius(&(&sys.a + &sys.b * big_k))?;
    let conclusion = if subsystems.iter().all(|s| s.admissible) {
        Conclusion::Certified
    } else {
        Conclusion::NotCertified
    };
    let report = CertificateReport {
        scenario: name.to_string(),
        eps: opts.eps,
        tol: opts.tol,
        subsystems,
        inclusions,
        global: GlobalReport {
            rho,
            schur: rho < 1.0,
            product_pi_residual,
        },
        conclusion,
    };
    Ok(Certification {
        report,
        tubes,
        disturbances,
    })
}

pub fn theorem2_certificate(
    net: &Network,
    gains: &[DMatrix<f64>],
    opts: &TubeOptions,
) -> Result<CertificateReport> {
    Ok(certify("network", net, gains, opts)?.report)
}
