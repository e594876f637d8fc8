//! Field interfaces shared by the time integrator, the verification harness
//! and the wave benchmark: volume forcing terms, exact/initial fields, and
//! boundary trace data.

use crate::materials::Sym2;

/// Right-hand sides of the four-field system, evaluable pointwise in space
/// and time.
pub trait VolumeForcing: Sync + Send {
    fn solid_force(&self, x: f64, y: f64, t: f64) -> [f64; 2];
    fn fluid_force(&self, x: f64, y: f64, t: f64) -> [f64; 2];
    fn mass_source(&self, x: f64, y: f64, t: f64) -> f64;
}

/// A full set of fields (u_s, u_f, sigma, p); used for initial data and for
/// error measurement against exact solutions.
pub trait ExactFields: Sync + Send {
    fn solid_velocity(&self, x: f64, y: f64, t: f64) -> [f64; 2];
    fn fluid_velocity(&self, x: f64, y: f64, t: f64) -> [f64; 2];
    fn stress(&self, x: f64, y: f64, t: f64) -> Sym2;
    fn pressure(&self, x: f64, y: f64, t: f64) -> f64;
}

/// Prescribed boundary velocities for Dirichlet-type trace constraints.
pub trait BoundaryData: Sync + Send {
    fn solid_velocity(&self, x: f64, y: f64, t: f64) -> [f64; 2];
    fn fluid_velocity(&self, x: f64, y: f64, t: f64) -> [f64; 2];
}

/// Identically zero fields, forcing and boundary data.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroFields;

impl VolumeForcing for ZeroFields {
    fn solid_force(&self, _: f64, _: f64, _: f64) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn fluid_force(&self, _: f64, _: f64, _: f64) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn mass_source(&self, _: f64, _: f64, _: f64) -> f64 {
        0.0
    }
}

impl ExactFields for ZeroFields {
    fn solid_velocity(&self, _: f64, _: f64, _: f64) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn fluid_velocity(&self, _: f64, _: f64, _: f64) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn stress(&self, _: f64, _: f64, _: f64) -> Sym2 {
        Sym2::default()
    }
    fn pressure(&self, _: f64, _: f64, _: f64) -> f64 {
        0.0
    }
}

impl BoundaryData for ZeroFields {
    fn solid_velocity(&self, _: f64, _: f64, _: f64) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn fluid_velocity(&self, _: f64, _: f64, _: f64) -> [f64; 2] {
        [0.0, 0.0]
    }
}
