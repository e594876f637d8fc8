//! Boundary-condition roles, trace degree-of-freedom bookkeeping, and the
//! first-order absorbing relations.
//!
//! Dirichlet-type data is imposed strongly on boundary trace coefficients
//! (face L2 projections of the prescribed velocities, evaluated at the
//! Crank-Nicolson endpoint times). The fluid Dirichlet condition p = 0 is
//! natural and needs no bookkeeping: the pressure flux term carries it.
//! Free-surface faces keep the solid trace free (zero numerical traction)
//! and pin the normal fluid trace. Absorbing faces add Robin face blocks
//! built from [`absorbing_traction`] and [`absorbing_pressure_flux`].

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;

use super::{HdgError, Spaces};
use crate::fem::projection::project_face;
use crate::fields::BoundaryData;
use crate::materials::{MaterialParams, WaveSpeeds};
use crate::mesh::Skeleton;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryRole {
    /// Both velocity traces prescribed (full vectors) from boundary data.
    Dirichlet,
    /// Solid trace prescribed fully; fluid trace prescribed in the normal
    /// component only (tangential left free). Requires axis-aligned faces.
    DirichletNormalFluid,
    /// Zero normal traction (natural) and zero normal fluid velocity.
    FreeSurface,
    /// First-order absorbing condition on both the traction and the
    /// pressure flux.
    Absorbing,
}

/// Mapping from boundary tags to roles plus the Dirichlet data source.
#[derive(Clone)]
pub struct BcSpec {
    roles: BTreeMap<u32, BoundaryRole>,
    pub data: Arc<dyn BoundaryData>,
}

impl BcSpec {
    pub fn new(
        roles: impl IntoIterator<Item = (u32, BoundaryRole)>,
        data: Arc<dyn BoundaryData>,
    ) -> Result<Self, HdgError> {
        let mut map = BTreeMap::new();
        for (tag, role) in roles {
            if map.insert(tag, role).is_some() {
                return Err(HdgError::ConflictingRole(tag));
            }
        }
        Ok(BcSpec { roles: map, data })
    }

    /// Dirichlet on every listed tag.
    pub fn dirichlet(tags: impl IntoIterator<Item = u32>, data: Arc<dyn BoundaryData>) -> Self {
        BcSpec {
            roles: tags.into_iter().map(|t| (t, BoundaryRole::Dirichlet)).collect(),
            data,
        }
    }

    pub fn role(&self, tag: u32) -> Result<BoundaryRole, HdgError> {
        self.roles.get(&tag).copied().ok_or(HdgError::UnmappedTag(tag))
    }

    pub fn has_absorbing(&self) -> bool {
        self.roles.values().any(|r| *r == BoundaryRole::Absorbing)
    }
}

/// Constraint status of one global trace coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofStatus {
    Free(usize),
    Fixed(usize),
}

#[derive(Debug, Clone, Copy)]
enum FixedKind {
    /// All four trace components prescribed from data.
    Both,
    /// Solid components prescribed; fluid only in component `comp`.
    SolidAndFluidComponent { comp: usize },
    /// Fluid normal component pinned to zero (free surface).
    FluidComponentZero,
}

/// Global trace constraint table with compressed free/fixed numbering.
#[derive(Debug, Clone)]
pub struct TraceDofs {
    pub status: Vec<DofStatus>,
    pub n_free: usize,
    pub n_fixed: usize,
    fixed_faces: Vec<(usize, FixedKind)>,
}

fn axis_component(normal: [f64; 2]) -> Option<usize> {
    let tol = 1e-12;
    if (normal[0].abs() - 1.0).abs() < tol && normal[1].abs() < tol {
        Some(0)
    } else if (normal[1].abs() - 1.0).abs() < tol && normal[0].abs() < tol {
        Some(1)
    } else {
        None
    }
}

impl TraceDofs {
    pub fn build(skeleton: &Skeleton, spaces: Spaces, bc: &BcSpec) -> Result<Self, HdgError> {
        let tpf = spaces.trace_per_face();
        let fdim = spaces.fdim();
        let n = skeleton.n_faces() * tpf;
        let mut fixed_mask = vec![false; n];
        let mut fixed_faces = Vec::new();
        for (fid, face) in skeleton.faces().iter().enumerate() {
            if !face.is_boundary() {
                continue;
            }
            let tag = face.tag.expect("boundary faces carry a tag");
            let role = bc.role(tag)?;
            let base = fid * tpf;
            match role {
                BoundaryRole::Dirichlet => {
                    for d in 0..tpf {
                        fixed_mask[base + d] = true;
                    }
                    fixed_faces.push((fid, FixedKind::Both));
                }
                BoundaryRole::DirichletNormalFluid => {
                    let comp = axis_component(face.normal).ok_or(HdgError::NonAxisNormal(fid))?;
                    for d in 0..2 * fdim {
                        fixed_mask[base + d] = true;
                    }
                    let uf = base + spaces.trace_uf_offset() + comp * fdim;
                    for d in 0..fdim {
                        fixed_mask[uf + d] = true;
                    }
                    fixed_faces.push((fid, FixedKind::SolidAndFluidComponent { comp }));
                }
                BoundaryRole::FreeSurface => {
                    let comp = axis_component(face.normal).ok_or(HdgError::NonAxisNormal(fid))?;
                    let uf = base + spaces.trace_uf_offset() + comp * fdim;
                    for d in 0..fdim {
                        fixed_mask[uf + d] = true;
                    }
                    fixed_faces.push((fid, FixedKind::FluidComponentZero));
                }
                BoundaryRole::Absorbing => {}
            }
        }
        let mut status = Vec::with_capacity(n);
        let (mut n_free, mut n_fixed) = (0, 0);
        for fixed in fixed_mask {
            if fixed {
                status.push(DofStatus::Fixed(n_fixed));
                n_fixed += 1;
            } else {
                status.push(DofStatus::Free(n_free));
                n_free += 1;
            }
        }
        Ok(TraceDofs {
            status,
            n_free,
            n_fixed,
            fixed_faces,
        })
    }

    /// Values of all fixed trace coefficients at time `t` (face L2
    /// projections of the prescribed data).
    pub fn fixed_values(
        &self,
        skeleton: &Skeleton,
        spaces: Spaces,
        bc: &BcSpec,
        quad_order: usize,
        t: f64,
    ) -> DVector<f64> {
        let tpf = spaces.trace_per_face();
        let fdim = spaces.fdim();
        let mut out = DVector::zeros(self.n_fixed);
        for &(fid, kind) in &self.fixed_faces {
            let base = fid * tpf;
            let mut write = |block: usize, coeffs: &DVector<f64>| {
                for (j, &v) in coeffs.iter().enumerate() {
                    match self.status[base + block * fdim + j] {
                        DofStatus::Fixed(idx) => out[idx] = v,
                        DofStatus::Free(_) => unreachable!("fixed block contains a free dof"),
                    }
                }
            };
            match kind {
                FixedKind::Both | FixedKind::SolidAndFluidComponent { .. } => {
                    let (p0, p1) = face_endpoints(skeleton, fid);
                    let data = bc.data.as_ref();
                    for c in 0..2 {
                        let coeffs = project_face(
                            |x, y| data.solid_velocity(x, y, t)[c],
                            spaces.k + 1,
                            p0,
                            p1,
                            quad_order,
                        );
                        write(c, &coeffs);
                    }
                    match kind {
                        FixedKind::Both => {
                            for c in 0..2 {
                                let coeffs = project_face(
                                    |x, y| data.fluid_velocity(x, y, t)[c],
                                    spaces.k + 1,
                                    p0,
                                    p1,
                                    quad_order,
                                );
                                write(2 + c, &coeffs);
                            }
                        }
                        FixedKind::SolidAndFluidComponent { comp } => {
                            let coeffs = project_face(
                                |x, y| data.fluid_velocity(x, y, t)[comp],
                                spaces.k + 1,
                                p0,
                                p1,
                                quad_order,
                            );
                            write(2 + comp, &coeffs);
                        }
                        FixedKind::FluidComponentZero => unreachable!(),
                    }
                }
                FixedKind::FluidComponentZero => {
                    // zero-initialized
                }
            }
        }
        out
    }
}

pub(crate) fn face_endpoints(skeleton: &Skeleton, fid: usize) -> ([f64; 2], [f64; 2]) {
    let face = &skeleton.faces()[fid];
    (face.p0, face.p1)
}

/// First line of the absorbing relation: the traction the boundary exerts,
/// evaluated verbatim from the stated formula
/// c_pI rho11 (u_s.n) n + c_pII rho_f (u_f.n) n
/// + (rho11 - rho_f phi / nu) c_s (I - n n^T) u_s.
pub fn absorbing_traction(
    params: &MaterialParams,
    speeds: &WaveSpeeds,
    n: [f64; 2],
    us: [f64; 2],
    uf: [f64; 2],
) -> [f64; 2] {
    let usn = us[0] * n[0] + us[1] * n[1];
    let ufn = uf[0] * n[0] + uf[1] * n[1];
    let m = params.rho_f_phi_over_nu();
    let tang = [us[0] - usn * n[0], us[1] - usn * n[1]];
    let cn = speeds.fast * params.rho11 * usn + speeds.slow * params.rho12 * ufn;
    let ct = (params.rho11 - m) * speeds.shear;
    [cn * n[0] + ct * tang[0], cn * n[1] + ct * tang[1]]
}

/// Second line of the absorbing relation (the -p n flux):
/// c_pII rho_f phi / nu (u_f.n) n + c_pI rho_f (u_s.n) n.
pub fn absorbing_pressure_flux(
    params: &MaterialParams,
    speeds: &WaveSpeeds,
    n: [f64; 2],
    us: [f64; 2],
    uf: [f64; 2],
) -> [f64; 2] {
    let usn = us[0] * n[0] + us[1] * n[1];
    let ufn = uf[0] * n[0] + uf[1] * n[1];
    let m = params.rho_f_phi_over_nu();
    let c = speeds.slow * m * ufn + speeds.fast * params.rho12 * usn;
    [c * n[0], c * n[1]]
}
