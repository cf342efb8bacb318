//! Networks of coupled LTI subsystems with local polytopic constraints.

mod scenario;
mod trucks;

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::ctrl::StateSpace;
use crate::error::{check_dim, Error, Result};
use crate::setcalc::{linear_map, minkowski_sum, minkowski_sum_all, ConvexSet, HPolytope};

pub use scenario::{builtin_names, builtin_scenario, builtin_scenarios, LqrWeights, Scenario};
pub use trucks::{truck_chain, truck_chain_continuous, Discretization, TruckChainParams};

/// Coupling blocks with entries at most this large count as absent.
pub const ZERO_BLOCK_TOL: f64 = 1e-12;

/// Influence of neighbour `j` on subsystem `i`: `A_ij x_j + B_ij u_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

/// One subsystem. Ids are 1-based and equal the position in the network.
#[derive(Debug, Clone)]
pub struct Subsystem {
    pub id: usize,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    /// Keyed by neighbour id.
    pub couplings: BTreeMap<usize, Coupling>,
    pub x: HPolytope,
    pub u: HPolytope,
}

impl Subsystem {
    pub fn nx(&self) -> usize {
        self.a.nrows()
    }

    pub fn nu(&self) -> usize {
        self.b.ncols()
    }

    pub fn neighbours(&self) -> impl Iterator<Item = usize> + '_ {
        self.couplings.keys().copied()
    }

    pub fn local(&self) -> StateSpace {
        StateSpace {
            a: self.a.clone(),
            b: self.b.clone(),
            dt: 1.0,
        }
    }
}

/// Disturbance bound of one subsystem together with its per-neighbour parts.
#[derive(Debug, Clone)]
pub struct Disturbance {
    pub total: ConvexSet,
    /// `(j, A_ij X_j + B_ij U_j)` in neighbour order.
    pub parts: Vec<(usize, ConvexSet)>,
}

#[derive(Debug, Clone)]
pub struct Network {
    subsystems: Vec<Subsystem>,
    x_offsets: Vec<usize>,
    u_offsets: Vec<usize>,
}

impl Network {
    /// Validates block shapes, drops zero couplings and checks that every
    /// constraint set is bounded with the origin in its interior.
    pub fn new(mut subsystems: Vec<Subsystem>) -> Result<Self> {
        if subsystems.is_empty() {
            return Err(Error::Network("network has no subsystems".into()));
        }
        let m = subsystems.len();
        let dims: Vec<(usize, usize)> = subsystems.iter().map(|s| (s.nx(), s.nu())).collect();
        for (k, s) in subsystems.iter_mut().enumerate() {
            if s.id != k + 1 {
                return Err(Error::Network(format!(
                    "subsystem at position {} has id {}",
                    k + 1,
                    s.id
                )));
            }
            check_dim(s.nx(), s.a.ncols(), "local state matrix must be square")?;
            check_dim(s.nx(), s.b.nrows(), "local input matrix rows")?;
            check_dim(s.nx(), s.x.dim(), "state constraint dimension")?;
            check_dim(s.nu(), s.u.dim(), "input constraint dimension")?;
            for (&j, c) in &s.couplings {
                if j == s.id {
                    return Err(Error::Network(format!("subsystem {j} couples to itself")));
                }
                if j == 0 || j > m {
                    return Err(Error::Network(format!(
                        "subsystem {} couples to unknown subsystem {j}",
                        s.id
                    )));
                }
                let (nj, mj) = dims[j - 1];
                check_dim(s.nx(), c.a.nrows(), "coupling state block rows")?;
                check_dim(nj, c.a.ncols(), "coupling state block columns")?;
                check_dim(s.nx(), c.b.nrows(), "coupling input block rows")?;
                check_dim(mj, c.b.ncols(), "coupling input block columns")?;
            }
            s.couplings
                .retain(|_, c| c.a.amax() > ZERO_BLOCK_TOL || c.b.amax() > ZERO_BLOCK_TOL);
            s.x.validate_constraint_set()?;
            s.u.validate_constraint_set()?;
        }
        let mut x_offsets = vec![0; m + 1];
        let mut u_offsets = vec![0; m + 1];
        for k in 0..m {
            x_offsets[k + 1] = x_offsets[k] + dims[k].0;
            u_offsets[k + 1] = u_offsets[k] + dims[k].1;
        }
        Ok(Self {
            subsystems,
            x_offsets,
            u_offsets,
        })
    }

    /// Splits a global model into blocks. `x_sets`/`u_sets` give the local
    /// constraint sets in subsystem order.
    pub fn from_global(
        sys: &StateSpace,
        state_dims: &[usize],
        input_dims: &[usize],
        x_sets: Vec<HPolytope>,
        u_sets: Vec<HPolytope>,
    ) -> Result<Self> {
        let m = state_dims.len();
        check_dim(m, input_dims.len(), "number of input partitions")?;
        check_dim(m, x_sets.len(), "number of state constraint sets")?;
        check_dim(m, u_sets.len(), "number of input constraint sets")?;
        check_dim(sys.nx(), state_dims.iter().sum(), "state partition")?;
        check_dim(sys.nu(), input_dims.iter().sum(), "input partition")?;
        let xo: Vec<usize> = offsets(state_dims);
        let uo: Vec<usize> = offsets(input_dims);
        let mut subs = Vec::with_capacity(m);
        for (i, (x, u)) in x_sets.into_iter().zip(u_sets).enumerate() {
            let rows = (xo[i], state_dims[i]);
            let mut couplings = BTreeMap::new();
            for j in 0..m {
                if j == i {
                    continue;
                }
                couplings.insert(
                    j + 1,
                    Coupling {
                        a: sys.a.view((rows.0, xo[j]), (rows.1, state_dims[j])).into_owned(),
                        b: sys.b.view((rows.0, uo[j]), (rows.1, input_dims[j])).into_owned(),
                    },
                );
            }
            subs.push(Subsystem {
                id: i + 1,
                a: sys.a.view((rows.0, xo[i]), (rows.1, state_dims[i])).into_owned(),
                b: sys.b.view((rows.0, uo[i]), (rows.1, input_dims[i])).into_owned(),
                couplings,
                x,
                u,
            });
        }
        Self::new(subs)
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    /// Subsystem by 1-based id.
    pub fn subsystem(&self, id: usize) -> Result<&Subsystem> {
        id.checked_sub(1)
            .and_then(|k| self.subsystems.get(k))
            .ok_or_else(|| Error::Network(format!("no subsystem {id}")))
    }

    pub fn nx(&self) -> usize {
        self.x_offsets[self.len()]
    }

    pub fn nu(&self) -> usize {
        self.u_offsets[self.len()]
    }

    /// Start of subsystem `id`'s state in the global vector.
    pub fn state_offset(&self, id: usize) -> usize {
        self.x_offsets[id - 1]
    }

    pub fn input_offset(&self, id: usize) -> usize {
        self.u_offsets[id - 1]
    }

    pub fn assemble_global(&self) -> StateSpace {
        let mut a = DMatrix::zeros(self.nx(), self.nx());
        let mut b = DMatrix::zeros(self.nx(), self.nu());
        for s in &self.subsystems {
            let r = self.state_offset(s.id);
            a.view_mut((r, r), (s.nx(), s.nx())).copy_from(&s.a);
            b.view_mut((r, self.input_offset(s.id)), (s.nx(), s.nu()))
                .copy_from(&s.b);
            for (&j, c) in &s.couplings {
                a.view_mut((r, self.state_offset(j)), c.a.shape()).copy_from(&c.a);
                b.view_mut((r, self.input_offset(j)), c.b.shape()).copy_from(&c.b);
            }
        }
        StateSpace { a, b, dt: 1.0 }
    }

    /// `diag(K_1, ..., K_M)`.
    pub fn block_gain(&self, gains: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
        check_dim(self.len(), gains.len(), "number of gains")?;
        let mut k = DMatrix::zeros(self.nu(), self.nx());
        for (s, g) in self.subsystems.iter().zip(gains) {
            check_dim(s.nu(), g.nrows(), "gain rows")?;
            check_dim(s.nx(), g.ncols(), "gain columns")?;
            k.view_mut((self.input_offset(s.id), self.state_offset(s.id)), g.shape())
                .copy_from(g);
        }
        Ok(k)
    }

    /// Global closed loop `A + B diag(K_i)`.
    pub fn closed_loop(&self, gains: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
        let sys = self.assemble_global();
        Ok(&sys.a + &sys.b * self.block_gain(gains)?)
    }

    /// `W_i = sum over neighbours j of (A_ij X_j + B_ij U_j)`.
    pub fn disturbance_set(&self, id: usize) -> Result<Disturbance> {
        let s = self.subsystem(id)?;
        let mut parts = Vec::new();
        for (&j, c) in &s.couplings {
            let nb = self.subsystem(j)?;
            let part = self.coupling_image(c, nb)?;
            parts.push((j, part));
        }
        let total = minkowski_sum_all(s.nx(), parts.iter().map(|(_, p)| p.clone()).collect())?;
        Ok(Disturbance { total, parts })
    }

    fn coupling_image(&self, c: &Coupling, nb: &Subsystem) -> Result<ConvexSet> {
        let n = c.a.nrows();
        let mut terms = Vec::new();
        if c.a.amax() > ZERO_BLOCK_TOL {
            terms.push(linear_map(&c.a, &ConvexSet::hpolytope(nb.x.clone()))?);
        }
        if c.b.amax() > ZERO_BLOCK_TOL {
            terms.push(linear_map(&c.b, &ConvexSet::hpolytope(nb.u.clone()))?);
        }
        match terms.len() {
            2 => minkowski_sum(&terms[0], &terms[1]),
            1 => Ok(terms.pop().expect("one term")),
            _ => Ok(ConvexSet::origin(n)),
        }
    }

    /// Copy with subsystem `id`'s state constraint replaced.
    pub fn with_state_set(&self, id: usize, x: HPolytope) -> Result<Self> {
        let mut subs = self.subsystems.clone();
        let s = subs
            .get_mut(id.wrapping_sub(1))
            .ok_or_else(|| Error::Network(format!("no subsystem {id}")))?;
        s.x = x;
        Self::new(subs)
    }
}

fn offsets(dims: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(dims.len());
    let mut acc = 0;
    for d in dims {
        out.push(acc);
        acc += d;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn s(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    fn interval(h: f64) -> HPolytope {
        HPolytope::symmetric_box(&[h]).unwrap()
    }

    pub(crate) fn scalar_pair(a12: f64, b12: f64) -> Network {
        let mk = |id: usize, other: usize| Subsystem {
            id,
            a: s(1.0),
            b: s(1.0),
            couplings: BTreeMap::from([(other, Coupling { a: s(a12), b: s(b12) })]),
            x: interval(2.0),
            u: interval(1.0),
        };
        Network::new(vec![mk(1, 2), mk(2, 1)]).unwrap()
    }

    #[test]
    fn coupled_integrators_assemble() {
        let net = scalar_pair(0.0, 0.5);
        let g = net.assemble_global();
        assert_eq!(g.a, DMatrix::identity(2, 2));
        assert_eq!(g.b, DMatrix::from_row_slice(2, 2, &[1., 0.5, 0.5, 1.]));
        let f = net.closed_loop(&[s(-1.5), s(-1.5)]).unwrap();
        assert_eq!(f, DMatrix::from_row_slice(2, 2, &[-0.5, -0.75, -0.75, -0.5]));
    }

    #[test]
    fn global_round_trip_and_blocks() {
        let net = scalar_pair(0.3, 0.5);
        let g = net.assemble_global();
        let back = Network::from_global(&g, &[1, 1], &[1, 1], vec![interval(2.0); 2], vec![interval(1.0); 2]).unwrap();
        assert_eq!(back.assemble_global(), g);
        assert_eq!(back.subsystem(1).unwrap().couplings[&2].a, s(0.3));
    }

    #[test]
    fn interval_disturbance() {
        let net = scalar_pair(0.5, 1.0);
        let w = net.disturbance_set(1).unwrap();
        let d = DVector::from_vec(vec![1.0]);
        assert_eq!(w.total.support(&d).unwrap(), 2.0);
        assert_eq!(w.total.support(&(-d)).unwrap(), 2.0);
        assert_eq!(w.parts.len(), 1);
    }

    #[test]
    fn isolated_subsystem_has_trivial_disturbance() {
        let sub = Subsystem {
            id: 1,
            a: s(0.5),
            b: s(1.0),
            couplings: BTreeMap::from([(2, Coupling { a: s(0.0), b: s(0.0) })]),
            x: interval(1.0),
            u: interval(1.0),
        };
        let other = Subsystem { id: 2, couplings: BTreeMap::new(), ..sub.clone() };
        let net = Network::new(vec![sub, other]).unwrap();
        assert_eq!(net.subsystem(1).unwrap().neighbours().count(), 0);
        let w = net.disturbance_set(1).unwrap();
        assert_eq!(w.total.support(&DVector::from_vec(vec![1.0])).unwrap(), 0.0);
        assert_eq!(net.assemble_global().a, DMatrix::from_row_slice(2, 2, &[0.5, 0., 0., 0.5]));
    }

    #[test]
    fn rejects_bad_networks() {
        let net = scalar_pair(0.5, 0.0);
        let mut subs = net.subsystems().to_vec();
        subs[0].couplings.insert(1, Coupling { a: s(1.0), b: s(0.0) });
        assert!(matches!(Network::new(subs), Err(Error::Network(_))));
        let mut subs = net.subsystems().to_vec();
        subs[1].x = HPolytope::from_bounds(&[0.5], &[1.0]).unwrap();
        assert!(Network::new(subs).is_err());
        let mut subs = net.subsystems().to_vec();
        subs[0].couplings.insert(2, Coupling { a: DMatrix::zeros(1, 2), b: s(0.0) });
        assert!(matches!(Network::new(subs), Err(Error::Dimension { .. })));
    }
}
