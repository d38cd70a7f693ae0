//! Numerical certification of convex confinement for semilinear elliptic
//! systems `Δu = F(u)`.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure
//! numerics:
//!
//! - [`geometry`]: convex bodies with signed distance, boundary projection
//!   and outward normals.
//! - [`fields`]: the catalog of right-hand sides `F` together with their
//!   Jacobians.
//! - [`certifier`]: sampling-based checks of the structural sign conditions
//!   that force solutions into a convex set.
//! - [`solver`]: a finite-difference Newton solver for 1D walls and a
//!   semi-implicit relaxation solver for 2D problems.
//! - [`monitors`]: confinement, strictness, P-function, half-space and
//!   symmetry statistics over computed solutions.
//!
//! File formats, scenario handling and the command line live in the
//! companion `confine` crate.
#![no_std]
// `!(x > 0.0)` deliberately rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod certifier;
pub mod fields;
pub mod geometry;
pub mod linalg;
pub mod lowdisc;
pub mod monitors;
pub mod solver;

pub use certifier::{Certificate, CertifyError, CertifyOptions, Status};
pub use fields::{Field, FieldError, VectorField};
pub use geometry::{Classification, ConvexBody, GeometryError, Shape};
pub use monitors::{MonitorKind, MonitorReport};
pub use solver::{BoundaryData, GridSpec, SolutionGrid, SolverError};

/// Crate version, recorded in run reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Default tolerance for geometric boundary tests.
pub const DEFAULT_GEOMETRIC_TOL: f64 = 1e-10;
