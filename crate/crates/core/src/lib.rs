//! A hybridizable discontinuous Galerkin solver for the dynamic Biot
//! poroelasticity system in the four-field velocity/stress-pressure form,
//! with Crank-Nicolson time stepping.
//!
//! The crate provides:
//! - conforming triangular meshes and their face skeletons ([`mesh`]),
//! - orthonormal simplex bases, quadrature and L2 projections ([`fem`]),
//! - material coefficients and wave speeds ([`materials`]),
//! - the HDG operators and static condensation ([`hdg`]),
//! - sparse direct linear algebra for the trace system ([`solver`]),
//! - the Crank-Nicolson integrator with energy monitoring ([`transient`]),
//! - a manufactured-solution convergence harness ([`verification`]),
//! - a poroelastic wave benchmark with Ricker source, free surface and
//!   absorbing boundaries ([`wavebench`]).

pub mod fem;
pub mod fields;
pub mod hdg;
pub mod materials;
pub mod mesh;
pub mod solver;
pub mod transient;
pub mod verification;
pub mod wavebench;

pub use fields::{BoundaryData, ExactFields, VolumeForcing, ZeroFields};
pub use hdg::{BcSpec, BoundaryRole, DGState, HdgOptions, HdgSystem, Spaces};
pub use materials::{MaterialParams, Sym2, WaveSpeeds};
pub use mesh::{build_skeleton, generate_structured, read_mesh, Mesh, Rect, Skeleton};
pub use transient::{EnergyRecord, TimeGrid};
