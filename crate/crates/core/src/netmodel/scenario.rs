//! Named scenarios and the JSON scenario format.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::trucks::{truck_chain, TruckChainParams};
use super::{Coupling, Network, Subsystem};
use crate::ctrl::dlqr;
use crate::error::{check_dim, Error, Result};
use crate::setcalc::HPolytope;

/// Published gains of the truck chain, one row `[k_p, k_v]` per truck.
const TRUCK_GAINS: [[f64; 2]; 4] = [
    [-1.203, -0.283],
    [-0.949, -0.203],
    [-1.188, -0.303],
    [-1.612, -0.482],
];

/// Diagonal LQR weights. Each vector is either one subsystem long (used for
/// every subsystem) or covers the whole network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LqrWeights {
    #[serde(rename = "Q_diag")]
    pub q_diag: Vec<f64>,
    #[serde(rename = "R_diag")]
    pub r_diag: Vec<f64>,
}

impl Default for LqrWeights {
    fn default() -> Self {
        Self {
            q_diag: Vec::new(),
            r_diag: Vec::new(),
        }
    }
}

impl LqrWeights {
    fn block(v: &[f64], total: usize, offset: usize, size: usize) -> Result<DMatrix<f64>> {
        let diag: Vec<f64> = if v.is_empty() {
            vec![1.0; size]
        } else if v.len() == total {
            v[offset..offset + size].to_vec()
        } else if v.len() == size {
            v.to_vec()
        } else {
            return Err(Error::Scenario(format!(
                "LQR weight has {} entries; expected {size} or {total}",
                v.len()
            )));
        };
        Ok(DMatrix::from_diagonal(&DVector::from_vec(diag)))
    }

    /// `(Q_i, R_i)` for one subsystem. `Q` must be non-negative and `R`
    /// positive on the diagonal.
    pub fn for_subsystem(&self, net: &Network, id: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if self.q_diag.iter().any(|&q| !(q >= 0.0)) || self.r_diag.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::Scenario(
                "LQR weights need Q_diag >= 0 and R_diag > 0".into(),
            ));
        }
        let s = net.subsystem(id)?;
        Ok((
            Self::block(&self.q_diag, net.nx(), net.state_offset(id), s.nx())?,
            Self::block(&self.r_diag, net.nu(), net.input_offset(id), s.nu())?,
        ))
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub network: Network,
    /// Attached local gains; when absent they come from LQR.
    pub gains: Option<Vec<DMatrix<f64>>>,
    pub lqr: LqrWeights,
}

impl Scenario {
    /// Attached gains, or per-subsystem LQR gains for the configured weights.
    pub fn gains(&self) -> Result<Vec<DMatrix<f64>>> {
        match &self.gains {
            Some(g) => Ok(g.clone()),
            None => self.lqr_gains(),
        }
    }

    pub fn lqr_gains(&self) -> Result<Vec<DMatrix<f64>>> {
        self.network
            .subsystems()
            .iter()
            .map(|s| {
                let (q, r) = self.lqr.for_subsystem(&self.network, s.id)?;
                Ok(dlqr(&s.a, &s.b, &q, &r, 1e-10, 10_000)?.k)
            })
            .collect()
    }

    pub fn from_json_str(name: &str, text: &str) -> Result<Self> {
        let doc: ScenarioDoc = serde_json::from_str(text)?;
        doc.build(name)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        Self::from_json_str(&name, &text)
    }
}

pub fn builtin_names() -> &'static [&'static str] {
    &["example1", "case3", "trucks-case1", "trucks-case2"]
}

pub fn builtin_scenarios() -> Vec<Scenario> {
    builtin_names()
        .iter()
        .map(|n| builtin_scenario(n).expect("builtin scenarios are valid"))
        .collect()
}

pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    match name {
        "example1" => scalar_pair(
            name,
            [[1.0, 0.0], [0.0, 1.0]],
            [[1.0, 0.5], [0.5, 1.0]],
            [-1.5, -1.5],
        ),
        "case3" => scalar_pair(
            name,
            [[2.070, 1.924], [0.316, 0.203]],
            [[0.660, -1.274], [0.113, 0.810]],
            [-2.924, 0.977],
        ),
        "trucks-case1" | "trucks-case2" => {
            let mut net = truck_chain(&TruckChainParams::default())?;
            if name == "trucks-case2" {
                let x2 = net.subsystem(2)?.x.scaled(3.0);
                net = net.with_state_set(2, x2)?;
            }
            Ok(Scenario {
                name: name.into(),
                network: net,
                gains: Some(
                    TRUCK_GAINS
                        .iter()
                        .map(|k| DMatrix::from_row_slice(1, 2, k))
                        .collect(),
                ),
                lqr: LqrWeights::default(),
            })
        }
        other => Err(Error::Scenario(format!(
            "unknown builtin scenario '{other}' (known: {})",
            builtin_names().join(", ")
        ))),
    }
}

/// Two scalar subsystems with unit-interval state and input constraints.
fn scalar_pair(name: &str, a: [[f64; 2]; 2], b: [[f64; 2]; 2], k: [f64; 2]) -> Result<Scenario> {
    let g = crate::ctrl::StateSpace {
        a: DMatrix::from_fn(2, 2, |i, j| a[i][j]),
        b: DMatrix::from_fn(2, 2, |i, j| b[i][j]),
        dt: 1.0,
    };
    let unit = HPolytope::symmetric_box(&[1.0])?;
    let net = Network::from_global(&g, &[1, 1], &[1, 1], vec![unit.clone(); 2], vec![unit; 2])?;
    Ok(Scenario {
        name: name.into(),
        network: net,
        gains: Some(k.iter().map(|&v| DMatrix::from_element(1, 1, v)).collect()),
        lqr: LqrWeights::default(),
    })
}

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    subsystems: Option<Vec<SubsystemDoc>>,
    #[serde(default)]
    truck_chain: Option<TruckDoc>,
    #[serde(default)]
    gains: Option<Vec<Rows>>,
    #[serde(default)]
    lqr: Option<LqrWeights>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubsystemDoc {
    #[serde(rename = "A")]
    a: Rows,
    #[serde(rename = "B")]
    b: Rows,
    #[serde(default)]
    couplings: BTreeMap<String, CouplingDoc>,
    #[serde(rename = "X")]
    x: PolytopeDoc,
    #[serde(rename = "U")]
    u: PolytopeDoc,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingDoc {
    #[serde(rename = "A", default)]
    a: Option<Rows>,
    #[serde(rename = "B", default)]
    b: Option<Rows>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolytopeDoc {
    #[serde(rename = "A")]
    a: Rows,
    b: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TruckDoc {
    #[serde(flatten)]
    params: TruckChainParams,
    /// Per-truck factor on the state constraint box.
    #[serde(default)]
    x_scale: Option<Vec<f64>>,
}

fn matrix(rows: &Rows, what: &str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Scenario(format!("{what}: ragged matrix rows")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Scenario(format!("{what}: non-finite entry")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn polytope(doc: &PolytopeDoc, what: &str) -> Result<HPolytope> {
    HPolytope::new(matrix(&doc.a, what)?, DVector::from_vec(doc.b.clone()))
}

impl ScenarioDoc {
    fn build(self, fallback_name: &str) -> Result<Scenario> {
        let net = match (self.subsystems, self.truck_chain) {
            (Some(subs), None) => {
                let dims: Vec<(usize, usize)> = subs
                    .iter()
                    .map(|s| (s.a.len(), s.b.first().map_or(0, Vec::len)))
                    .collect();
                let mut out = Vec::with_capacity(subs.len());
                for (k, s) in subs.into_iter().enumerate() {
                    let id = k + 1;
                    let mut couplings = BTreeMap::new();
                    for (key, c) in s.couplings {
                        let j: usize = key.trim().parse().map_err(|_| {
                            Error::Scenario(format!("subsystem {id}: coupling key '{key}' is not an id"))
                        })?;
                        let (nj, mj) = *dims.get(j.wrapping_sub(1)).ok_or_else(|| {
                            Error::Scenario(format!("subsystem {id}: unknown neighbour {j}"))
                        })?;
                        let a = match &c.a {
                            Some(r) => matrix(r, "coupling A")?,
                            None => DMatrix::zeros(dims[k].0, nj),
                        };
                        let b = match &c.b {
                            Some(r) => matrix(r, "coupling B")?,
                            None => DMatrix::zeros(dims[k].0, mj),
                        };
                        couplings.insert(j, Coupling { a, b });
                    }
                    out.push(Subsystem {
                        id,
                        a: matrix(&s.a, "A")?,
                        b: matrix(&s.b, "B")?,
                        couplings,
                        x: polytope(&s.x, "X")?,
                        u: polytope(&s.u, "U")?,
                    });
                }
                Network::new(out)?
            }
            (None, Some(t)) => {
                let mut net = truck_chain(&t.params)?;
                if let Some(scale) = t.x_scale {
                    check_dim(net.len(), scale.len(), "x_scale entries")?;
                    for (k, f) in scale.into_iter().enumerate() {
                        if !(f > 0.0) {
                            return Err(Error::Scenario("x_scale entries must be positive".into()));
                        }
                        let x = net.subsystem(k + 1)?.x.scaled(f);
                        net = net.with_state_set(k + 1, x)?;
                    }
                }
                net
            }
            _ => {
                return Err(Error::Scenario(
                    "exactly one of 'subsystems' or 'truck_chain' is required".into(),
                ))
            }
        };
        let gains = match self.gains {
            Some(g) => {
                check_dim(net.len(), g.len(), "number of gains")?;
                let gains: Vec<DMatrix<f64>> =
                    g.iter().map(|r| matrix(r, "gain")).collect::<Result<_>>()?;
                net.block_gain(&gains)?;
                Some(gains)
            }
            None => None,
        };
        Ok(Scenario {
            name: self.name.unwrap_or_else(|| fallback_name.to_string()),
            network: net,
            gains,
            lqr: self.lqr.unwrap_or_default(),
        })
    }
}
