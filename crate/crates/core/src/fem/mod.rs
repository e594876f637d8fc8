//! Polynomial bases, quadrature, tabulation caches and L2 projections.

pub mod basis;
pub mod cache;
pub mod projection;
pub mod quadrature;

pub use basis::{edge_dim, tri_dim, EdgeTabulation, TriTabulation};
pub use projection::{eval_element, eval_face, project_element, project_face};
pub use quadrature::{EdgeQuadrature, TriQuadrature};
