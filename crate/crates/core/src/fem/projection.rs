//! Element and face L2 projections onto the orthonormal modal bases.
//!
//! With bases orthonormal in the physical L2 inner product (reference basis
//! scaled by |det J|^{-1/2} on elements, |F|^{-1/2} on faces) the projection
//! reduces to a quadrature sum and reconstruction to a dot product.

use nalgebra::DVector;

use super::basis::{EdgeTabulation, TriTabulation};
use super::cache;
use crate::mesh::ElementMap;

/// L2 projection of `f` onto P_degree of the element described by `map`.
/// The quadrature `order` must cover `2*degree` plus the degree needed by `f`.
pub fn project_element(
    f: impl Fn(f64, f64) -> f64,
    degree: usize,
    map: &ElementMap,
    order: usize,
) -> DVector<f64> {
    let vt = cache::volume(degree, order);
    let scale = map.det.abs().sqrt();
    let nb = vt.tab.n_basis();
    let mut coeffs = DVector::zeros(nb);
    for (q, pt) in vt.quad.points.iter().enumerate() {
        let xy = map.to_physical(*pt);
        let wf = vt.quad.weights[q] * f(xy[0], xy[1]);
        for m in 0..nb {
            coeffs[m] += wf * vt.tab.values[(m, q)];
        }
    }
    coeffs * scale
}

/// Evaluate an element-local coefficient vector at a reference point.
pub fn eval_element(coeffs: &DVector<f64>, degree: usize, map: &ElementMap, r: [f64; 2]) -> f64 {
    let tab = TriTabulation::new(degree, &[r]);
    let scale = 1.0 / map.det.abs().sqrt();
    (0..coeffs.len()).map(|m| coeffs[m] * tab.values[(m, 0)]).sum::<f64>() * scale
}

/// L2 projection of `f` onto P_degree of the face with endpoints `p0`, `p1`
/// (the stored face parameterization x(t) = p0 + t (p1 - p0)).
pub fn project_face(
    f: impl Fn(f64, f64) -> f64,
    degree: usize,
    p0: [f64; 2],
    p1: [f64; 2],
    order: usize,
) -> DVector<f64> {
    let et = cache::edge(degree, order);
    let len = ((p1[0] - p0[0]).powi(2) + (p1[1] - p0[1]).powi(2)).sqrt();
    let scale = len.sqrt();
    let nb = et.tab.n_basis();
    let mut coeffs = DVector::zeros(nb);
    for (q, &t) in et.quad.points.iter().enumerate() {
        let x = p0[0] + t * (p1[0] - p0[0]);
        let y = p0[1] + t * (p1[1] - p0[1]);
        let wf = et.quad.weights[q] * f(x, y);
        for m in 0..nb {
            coeffs[m] += wf * et.tab.values[(m, q)];
        }
    }
    coeffs * scale
}

/// Evaluate a face coefficient vector at parameter t in [0, 1].
pub fn eval_face(coeffs: &DVector<f64>, degree: usize, length: f64, t: f64) -> f64 {
    let tab = EdgeTabulation::new(degree, &[t]);
    let scale = 1.0 / length.sqrt();
    (0..coeffs.len()).map(|m| coeffs[m] * tab.values[(m, 0)]).sum::<f64>() * scale
}
