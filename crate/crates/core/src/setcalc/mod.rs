//! Compact convex sets evaluated through support functions.

mod convex;
mod hpolytope;
pub mod lp;
pub mod plot;
pub mod polygon;
mod zonotope;

pub use convex::{
    contains, linear_map, minkowski_sum, minkowski_sum_all, pontryagin_diff, Containment, ConvexSet,
    Node,
};
pub use hpolytope::HPolytope;
pub use zonotope::Zonotope;

/// Default tolerance for containment margins.
pub const DEFAULT_TOL: f64 = 1e-8;
