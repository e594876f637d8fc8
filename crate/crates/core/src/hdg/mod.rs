//! Element-local HDG operators for the four-field scheme and their static
//! condensation onto the skeleton trace unknowns.
//!
//! Discrete spaces: velocities in P_{k+1} per element, stress and pressure
//! in P_k, numerical traces in P_{k+1} per face. The per-step Crank-Nicolson
//! matrix is assembled element by element, volume unknowns are eliminated by
//! Schur complements, and the remaining global system couples only trace
//! unknowns on faces sharing an element.

mod bc;
mod local;
mod monolithic;
mod probe;
mod system;

pub use bc::{
    absorbing_pressure_flux, absorbing_traction, BcSpec, BoundaryRole, DofStatus, TraceDofs,
};
pub use local::{ElemOps, FaceContext, LocalOperator, QuadOrders, StepBlocks};
pub use monolithic::{monolithic_cn_step, monolithic_matrix};
pub use probe::{ProbeSample, StateProbe};
pub use system::{energy_of, HdgOptions, HdgSystem};

use nalgebra::DVector;
use thiserror::Error;

use crate::fem::{edge_dim, tri_dim};

#[derive(Debug, Error)]
pub enum HdgError {
    #[error("boundary tag {0} has no boundary-condition role")]
    UnmappedTag(u32),
    #[error("boundary tag {0} is mapped to more than one role")]
    ConflictingRole(u32),
    #[error("face {0}: normal-component constraints need an axis-aligned boundary face")]
    NonAxisNormal(usize),
    #[error("singular element-local block on element {elem}")]
    SingularLocal { elem: usize },
    #[error(transparent)]
    Solver(#[from] crate::solver::SolverError),
    #[error(transparent)]
    Material(#[from] crate::materials::MaterialError),
}

/// Dimensions and coefficient layout of the discrete spaces for a given
/// polynomial degree k.
///
/// Per-element layout: [u_s x | u_s y | u_f x | u_f y | sigma (3 comps) | p],
/// velocities with `n1 = dim P_{k+1}` coefficients per component, stress and
/// pressure with `n0 = dim P_k`. The stress uses the orthonormal component
/// basis (E_xx, E_yy, (E_xy + E_yx)/sqrt(2)) so that the coefficient dot
/// product equals the tensor inner product.
///
/// Per-face layout: [hat u_s x | hat u_s y | hat u_f x | hat u_f y], each
/// with `k + 2` edge coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Spaces {
    pub k: usize,
}

impl Spaces {
    pub fn new(k: usize) -> Self {
        Spaces { k }
    }

    /// dim P_{k+1} on the triangle (velocity components).
    pub fn n1(&self) -> usize {
        tri_dim(self.k + 1)
    }

    /// dim P_k on the triangle (stress components and pressure).
    pub fn n0(&self) -> usize {
        tri_dim(self.k)
    }

    /// Edge basis size k + 2 (one trace component).
    pub fn fdim(&self) -> usize {
        edge_dim(self.k + 1)
    }

    /// Total volume coefficients per element.
    pub fn vol_dim(&self) -> usize {
        4 * self.n1() + 4 * self.n0()
    }

    /// Velocity block size (u_s and u_f).
    pub fn vel_dim(&self) -> usize {
        4 * self.n1()
    }

    /// Stress + pressure block size.
    pub fn sp_dim(&self) -> usize {
        4 * self.n0()
    }

    pub fn us_offset(&self) -> usize {
        0
    }

    pub fn uf_offset(&self) -> usize {
        2 * self.n1()
    }

    pub fn sigma_offset(&self) -> usize {
        4 * self.n1()
    }

    pub fn pressure_offset(&self) -> usize {
        4 * self.n1() + 3 * self.n0()
    }

    /// Trace coefficients per face.
    pub fn trace_per_face(&self) -> usize {
        4 * self.fdim()
    }

    /// Offset of the fluid trace inside a face block.
    pub fn trace_uf_offset(&self) -> usize {
        2 * self.fdim()
    }
}

/// Discrete solution: per-element volume coefficients, the global (single
/// valued) trace coefficient vector, and the time stamp.
#[derive(Debug, Clone)]
pub struct DGState {
    pub t: f64,
    pub vol: Vec<DVector<f64>>,
    pub trace: DVector<f64>,
}

impl DGState {
    pub fn zero(spaces: Spaces, n_elems: usize, n_faces: usize) -> Self {
        DGState {
            t: 0.0,
            vol: vec![DVector::zeros(spaces.vol_dim()); n_elems],
            trace: DVector::zeros(n_faces * spaces.trace_per_face()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.trace.iter().all(|v| v.is_finite())
            && self.vol.iter().all(|v| v.iter().all(|x| x.is_finite()))
    }
}
