use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Coupling, Network, Subsystem};
use crate::ctrl::{euler_discretize, expm, zoh_discretize, StateSpace};
use crate::error::{Error, Result};
use crate::setcalc::HPolytope;

/// How the continuous truck model is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discretization {
    /// Exact ZOH of each truck with its neighbours' states held constant
    /// over the sample, the way a local model is identified in practice.
    #[default]
    PerSubsystemZoh,
    /// Exact ZOH of the full coupled model, then block partition.
    FullZoh,
    /// Forward Euler of the full model.
    Euler,
}

/// Masses on a line, each linked to the next by a spring and a damper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruckChainParams {
    pub masses: Vec<f64>,
    /// `springs[k]` links trucks `k+1` and `k+2`.
    pub springs: Vec<f64>,
    pub dampers: Vec<f64>,
    #[serde(rename = "Ts")]
    pub ts: f64,
    /// Newtons per unit of control input.
    #[serde(default = "default_force_unit")]
    pub force_unit: f64,
    #[serde(default)]
    pub discretization: Discretization,
}

fn default_force_unit() -> f64 {
    100.0
}

impl Default for TruckChainParams {
    fn default() -> Self {
        Self {
            masses: vec![3.0, 2.0, 3.0, 6.0],
            springs: vec![7.5, 0.75, 1.0],
            dampers: vec![4.0, 0.25, 0.3],
            ts: 0.1,
            force_unit: default_force_unit(),
            discretization: Discretization::default(),
        }
    }
}

impl TruckChainParams {
    fn validate(&self) -> Result<()> {
        let m = self.masses.len();
        if m == 0 {
            return Err(Error::Scenario("truck chain needs at least one mass".into()));
        }
        if self.springs.len() + 1 != m || self.dampers.len() + 1 != m {
            return Err(Error::Scenario(format!(
                "{m} trucks need {} springs and dampers",
                m - 1
            )));
        }
        if self.masses.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Scenario("masses must be positive".into()));
        }
        if self.springs.iter().chain(&self.dampers).any(|&v| !(v >= 0.0)) {
            return Err(Error::Scenario("springs and dampers must be non-negative".into()));
        }
        if !(self.ts > 0.0) || !(self.force_unit > 0.0) {
            return Err(Error::Scenario("sample time and force unit must be positive".into()));
        }
        Ok(())
    }
}

/// Continuous-time chain with state `(p_1, v_1, ..., p_M, v_M)`:
/// `m_i v_i' = f u_i - sum_j [k_ij (p_i - p_j) + c_ij (v_i - v_j)]`.
pub fn truck_chain_continuous(p: &TruckChainParams) -> Result<StateSpace> {
    p.validate()?;
    let m = p.masses.len();
    let mut a = DMatrix::zeros(2 * m, 2 * m);
    let mut b = DMatrix::zeros(2 * m, m);
    for i in 0..m {
        a[(2 * i, 2 * i + 1)] = 1.0;
        b[(2 * i + 1, i)] = p.force_unit / p.masses[i];
    }
    for l in 0..m.saturating_sub(1) {
        let (k, c) = (p.springs[l], p.dampers[l]);
        for (s, o) in [(l, l + 1), (l + 1, l)] {
            let mass = p.masses[s];
            a[(2 * s + 1, 2 * s)] -= k / mass;
            a[(2 * s + 1, 2 * s + 1)] -= c / mass;
            a[(2 * s + 1, 2 * o)] += k / mass;
            a[(2 * s + 1, 2 * o + 1)] += c / mass;
        }
    }
    StateSpace::continuous(a, b)
}

/// Sampled truck chain with `X_i = [-2,2] x [-8,8]` and `U_i = [-4,4]`.
pub fn truck_chain(p: &TruckChainParams) -> Result<Network> {
    let cont = truck_chain_continuous(p)?;
    let m = p.masses.len();
    let x = HPolytope::symmetric_box(&[2.0, 8.0])?;
    let u = HPolytope::symmetric_box(&[4.0])?;
    match p.discretization {
        Discretization::FullZoh | Discretization::Euler => {
            let d = if p.discretization == Discretization::FullZoh {
                zoh_discretize(&cont, p.ts)?
            } else {
                euler_discretize(&cont, p.ts)?
            };
            Network::from_global(&d, &vec![2; m], &vec![1; m], vec![x; m], vec![u; m])
        }
        Discretization::PerSubsystemZoh => {
            let mut subs = Vec::with_capacity(m);
            for i in 0..m {
                let nbrs: Vec<usize> = [i.checked_sub(1), (i + 1 < m).then_some(i + 1)]
                    .into_iter()
                    .flatten()
                    .collect();
                // Augmented generator: [A_ii, A_ij..., B_ii] over the held inputs.
                let k = 2 + 2 * nbrs.len() + 1;
                let mut aug = DMatrix::zeros(k, k);
                aug.view_mut((0, 0), (2, 2))
                    .copy_from(&cont.a.view((2 * i, 2 * i), (2, 2)));
                for (n, &j) in nbrs.iter().enumerate() {
                    aug.view_mut((0, 2 + 2 * n), (2, 2))
                        .copy_from(&cont.a.view((2 * i, 2 * j), (2, 2)));
                }
                aug.view_mut((0, k - 1), (2, 1))
                    .copy_from(&cont.b.view((2 * i, i), (2, 1)));
                let e = expm(&(aug * p.ts));
                let mut couplings = BTreeMap::new();
                for (n, &j) in nbrs.iter().enumerate() {
                    couplings.insert(
                        j + 1,
                        Coupling {
                            a: e.view((0, 2 + 2 * n), (2, 2)).into_owned(),
                            b: DMatrix::zeros(2, 1),
                        },
                    );
                }
                subs.push(Subsystem {
                    id: i + 1,
                    a: e.view((0, 0), (2, 2)).into_owned(),
                    b: e.view((0, k - 1), (2, 1)).into_owned(),
                    couplings,
                    x: x.clone(),
                    u: u.clone(),
                });
            }
            Network::new(subs)
        }
    }
}
