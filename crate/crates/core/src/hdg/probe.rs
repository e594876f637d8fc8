//! Point evaluation of a discrete state inside its containing element
//! (receivers sample the DG polynomial directly, no smoothing).

use nalgebra::DVector;

use super::{DGState, Spaces};
use crate::fem::basis::TriTabulation;
use crate::materials::Sym2;
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy)]
pub struct ProbeSample {
    pub solid_velocity: [f64; 2],
    pub fluid_velocity: [f64; 2],
    pub stress: Sym2,
    pub pressure: f64,
}

/// Precomputed basis values at one physical point.
#[derive(Debug, Clone)]
pub struct StateProbe {
    pub position: [f64; 2],
    pub element: usize,
    spaces: Spaces,
    vals1: DVector<f64>,
    vals0: DVector<f64>,
    inv_sqrt_det: f64,
}

impl StateProbe {
    /// Returns `None` when the point lies outside the mesh.
    pub fn new(mesh: &Mesh, spaces: Spaces, position: [f64; 2]) -> Option<Self> {
        let (element, r) = mesh.locate(position)?;
        let map = mesh.element_map(element);
        let t1 = TriTabulation::new(spaces.k + 1, &[r]);
        let t0 = TriTabulation::new(spaces.k, &[r]);
        Some(StateProbe {
            position,
            element,
            spaces,
            vals1: DVector::from_fn(spaces.n1(), |i, _| t1.values[(i, 0)]),
            vals0: DVector::from_fn(spaces.n0(), |i, _| t0.values[(i, 0)]),
            inv_sqrt_det: 1.0 / map.det.abs().sqrt(),
        })
    }

    pub fn eval(&self, state: &DGState) -> ProbeSample {
        let x = &state.vol[self.element];
        let n1 = self.spaces.n1();
        let n0 = self.spaces.n0();
        let so = self.spaces.sigma_offset();
        let dot1 = |off: usize| -> f64 {
            (0..n1).map(|i| x[off + i] * self.vals1[i]).sum::<f64>() * self.inv_sqrt_det
        };
        let dot0 = |off: usize| -> f64 {
            (0..n0).map(|i| x[off + i] * self.vals0[i]).sum::<f64>() * self.inv_sqrt_det
        };
        ProbeSample {
            solid_velocity: [dot1(0), dot1(n1)],
            fluid_velocity: [dot1(2 * n1), dot1(3 * n1)],
            stress: Sym2::new(
                dot0(so),
                dot0(so + n0),
                dot0(so + 2 * n0) * std::f64::consts::FRAC_1_SQRT_2,
            ),
            pressure: dot0(so + 3 * n0),
        }
    }
}
