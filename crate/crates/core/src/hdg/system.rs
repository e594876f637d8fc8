//! Global assembly: per-element step blocks, Schur condensation onto the
//! skeleton traces, the factorized trace system, and the Crank-Nicolson
//! step (right-hand side, trace solve, volume recovery).

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;

use super::bc::{BcSpec, BoundaryRole, DofStatus, TraceDofs};
use super::local::{ElemOps, FaceContext, LocalOperator, QuadOrders};
use super::{DGState, HdgError, Spaces};
use crate::fem::cache;
use crate::fields::{ExactFields, VolumeForcing};
use crate::materials::{MaterialParams, WaveSpeeds};
use crate::mesh::{Mesh, Skeleton};
use crate::solver::{factorize, factorize_hinted, Factorization, OrderingHints, SparseMatrix};

/// Above this trace-system size, the factorization switches from the
/// general minimum-degree ordering to geometric nested dissection, whose
/// fill stays bounded on large two-dimensional skeletons.
const ND_THRESHOLD: usize = 40_000;

#[derive(Debug, Clone, Copy)]
pub struct HdgOptions {
    /// Multiplier on the (k+1)^2 / h_F stabilization; 1.0 for the method,
    /// 0.0 only as a test hook for the conservative limit.
    pub stab_scale: f64,
    /// Quadrature order for forcing terms, boundary/initial data and error
    /// norms. Defaults to 2(k+1)+6 (over-integration for trig data).
    pub data_quad_order: Option<usize>,
}

impl Default for HdgOptions {
    fn default() -> Self {
        HdgOptions {
            stab_scale: 1.0,
            data_quad_order: None,
        }
    }
}

struct ElemInstance {
    op: usize,
    faces: [usize; 3],
}

/// The condensed per-step system: element Schur data, the factorized global
/// trace matrix, and the fixed-column coupling used for time-dependent
/// Dirichlet data. Factorization happens once per (mesh, k, dt, material)
/// combination; every step reuses it.
pub struct HdgSystem<'a> {
    pub mesh: &'a Mesh,
    pub skeleton: &'a Skeleton,
    spaces: Spaces,
    params: MaterialParams,
    bc: BcSpec,
    dt: f64,
    options: HdgOptions,
    speeds: Option<WaveSpeeds>,
    dofs: TraceDofs,
    elems: Vec<ElemInstance>,
    ops: Vec<Arc<ElemOps>>,
    trace_factor: Option<Factorization>,
    trace_fixed_cols: Option<SparseMatrix>,
}

fn quantize(x: f64) -> u64 {
    x.to_bits() & !0xFFF
}

/// Ordering hints for the trace system: one supernode per face (its free
/// coefficients), located at the face midpoint.
fn trace_ordering_hints(skeleton: &Skeleton, dofs: &TraceDofs, tpf: usize) -> OrderingHints {
    let mut group_of = vec![0u32; dofs.n_free];
    let mut coords = Vec::new();
    let mut group_of_face = vec![u32::MAX; skeleton.n_faces()];
    for (d, status) in dofs.status.iter().enumerate() {
        if let DofStatus::Free(i) = status {
            let face = d / tpf;
            if group_of_face[face] == u32::MAX {
                group_of_face[face] = coords.len() as u32;
                let f = &skeleton.faces()[face];
                coords.push([(f.p0[0] + f.p1[0]) / 2.0, (f.p0[1] + f.p1[1]) / 2.0]);
            }
            group_of[*i] = group_of_face[face];
        }
    }
    OrderingHints { group_of, coords }
}

/// Scatter the per-element Schur complements into triplets of the free-free
/// trace system and the free-fixed coupling block.
#[allow(clippy::type_complexity)]
fn scatter_schur(
    elems: &[ElemInstance],
    ops: &[Arc<ElemOps>],
    dofs: &TraceDofs,
    tpf: usize,
) -> (Vec<(usize, usize, f64)>, Vec<(usize, usize, f64)>) {
    let mut trip_ff: Vec<(usize, usize, f64)> = Vec::new();
    let mut trip_fb: Vec<(usize, usize, f64)> = Vec::new();
    for inst in elems {
        let op = &ops[inst.op];
        for (lr, &fr) in inst.faces.iter().enumerate() {
            for r in 0..tpf {
                let grow = fr * tpf + r;
                let DofStatus::Free(row) = dofs.status[grow] else {
                    continue;
                };
                for (lc, &fc) in inst.faces.iter().enumerate() {
                    for c in 0..tpf {
                        let v = op.schur[(lr * tpf + r, lc * tpf + c)];
                        if v == 0.0 {
                            continue;
                        }
                        match dofs.status[fc * tpf + c] {
                            DofStatus::Free(col) => trip_ff.push((row, col, v)),
                            DofStatus::Fixed(col) => trip_fb.push((row, col, v)),
                        }
                    }
                }
            }
        }
    }
    (trip_ff, trip_fb)
}

impl<'a> HdgSystem<'a> {
    pub fn build(
        mesh: &'a Mesh,
        skeleton: &'a Skeleton,
        spaces: Spaces,
        params: MaterialParams,
        bc: BcSpec,
        dt: f64,
        options: HdgOptions,
    ) -> Result<Self, HdgError> {
        assert!(dt > 0.0, "time step must be positive");
        let dofs = TraceDofs::build(skeleton, spaces, &bc)?;
        let speeds = if bc.has_absorbing() {
            Some(params.wave_speeds()?)
        } else {
            None
        };
        let orders = QuadOrders::for_degree(spaces.k);
        // Pre-populate shared tabulation caches before the parallel section.
        let _ = cache::volume(spaces.k + 1, orders.volume);
        let _ = cache::volume(spaces.k, orders.volume);
        let _ = cache::edge(spaces.k + 1, orders.face);

        let n_elems = mesh.n_elements();
        let tpf = spaces.trace_per_face();
        let mut elems = Vec::with_capacity(n_elems);
        let mut ops: Vec<Arc<ElemOps>> = Vec::new();
        let mut op_index: HashMap<Vec<u64>, usize> = HashMap::new();

        // Congruent elements (same Jacobian, face configuration and roles)
        // share one factorized operator; structured meshes collapse to a
        // handful of uniques.
        let mut contexts: Vec<([FaceContext; 3], [usize; 3])> = Vec::with_capacity(n_elems);
        for e in 0..n_elems {
            let efs = skeleton.elem_faces(e);
            let mut ctx = [FaceContext {
                la: 0,
                lb: 0,
                absorbing: false,
            }; 3];
            let mut fids = [0usize; 3];
            for (i, ef) in efs.iter().enumerate() {
                let face = &skeleton.faces()[ef.face];
                let absorbing = match face.tag {
                    Some(tag) if face.is_boundary() => {
                        bc.role(tag)? == BoundaryRole::Absorbing
                    }
                    _ => false,
                };
                ctx[i] = FaceContext {
                    la: ef.local[0],
                    lb: ef.local[1],
                    absorbing,
                };
                fids[i] = ef.face;
            }
            contexts.push((ctx, fids));
        }

        let built: Vec<(Vec<u64>, usize)> = (0..n_elems)
            .map(|e| {
                let map = mesh.element_map(e);
                let (ctx, _) = &contexts[e];
                let mut key = Vec::with_capacity(4 + 9);
                for row in &map.jac {
                    for &v in row {
                        key.push(quantize(v));
                    }
                }
                for c in ctx {
                    key.push(c.la as u64);
                    key.push(c.lb as u64);
                    key.push(c.absorbing as u64);
                }
                (key, e)
            })
            .collect();

        for (key, e) in built {
            let next_idx = ops.len();
            let entry = op_index.entry(key).or_insert(next_idx);
            if *entry == next_idx {
                let map = mesh.element_map(e);
                let (ctx, _) = &contexts[e];
                let local = LocalOperator::build(
                    spaces,
                    &params,
                    speeds.as_ref(),
                    &map,
                    ctx,
                    orders,
                    options.stab_scale,
                );
                let blocks = local.step_blocks(&params, dt);
                ops.push(Arc::new(ElemOps::new(blocks, e)?));
            }
            elems.push(ElemInstance {
                op: *entry,
                faces: contexts[e].1,
            });
        }

        let (trip_ff, trip_fb) = scatter_schur(&elems, &ops, &dofs, tpf);

        let trace_factor = if dofs.n_free > 0 {
            let t_ff = SparseMatrix::from_triplets(dofs.n_free, dofs.n_free, &trip_ff)?;
            drop(trip_ff);
            let factor = if dofs.n_free >= ND_THRESHOLD {
                let hints = trace_ordering_hints(skeleton, &dofs, tpf);
                factorize_hinted(t_ff, &hints)?
            } else {
                factorize(t_ff)?
            };
            crate::solver::release_unused_memory();
            Some(factor)
        } else {
            None
        };
        let trace_fixed_cols = if dofs.n_free > 0 && dofs.n_fixed > 0 {
            Some(SparseMatrix::from_triplets(
                dofs.n_free,
                dofs.n_fixed,
                &trip_fb,
            )?)
        } else {
            None
        };

        Ok(HdgSystem {
            mesh,
            skeleton,
            spaces,
            params,
            bc,
            dt,
            options,
            speeds,
            dofs,
            elems,
            ops,
            trace_factor,
            trace_fixed_cols,
        })
    }

    pub fn spaces(&self) -> Spaces {
        self.spaces
    }

    pub fn params(&self) -> &MaterialParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dofs(&self) -> &TraceDofs {
        &self.dofs
    }

    pub fn wave_speeds(&self) -> Option<&WaveSpeeds> {
        self.speeds.as_ref()
    }

    pub fn n_unique_ops(&self) -> usize {
        self.ops.len()
    }

    pub fn elem_ops(&self, e: usize) -> &ElemOps {
        &self.ops[self.elems[e].op]
    }

    pub fn elem_faces(&self, e: usize) -> [usize; 3] {
        self.elems[e].faces
    }

    pub fn data_quad_order(&self) -> usize {
        self.options
            .data_quad_order
            .unwrap_or(2 * (self.spaces.k + 1) + 6)
    }

    /// Gather the trace coefficients of one element's three faces.
    pub fn lambda_local(&self, e: usize, trace: &DVector<f64>) -> DVector<f64> {
        let tpf = self.spaces.trace_per_face();
        let mut out = DVector::zeros(3 * tpf);
        for (lf, &f) in self.elems[e].faces.iter().enumerate() {
            out.rows_mut(lf * tpf, tpf)
                .copy_from(&trace.rows(f * tpf, tpf));
        }
        out
    }

    /// Volume load vector (F_s, v_s) + (F_f, v_f) + (g, q) per element.
    pub fn volume_loads(&self, forcing: &dyn VolumeForcing, t: f64) -> Vec<DVector<f64>> {
        let spaces = self.spaces;
        let order = self.data_quad_order();
        let vt1 = cache::volume(spaces.k + 1, order);
        let vt0 = cache::volume(spaces.k, order);
        (0..self.mesh.n_elements())
            .into_par_iter()
            .map(|e| {
                let map = self.mesh.element_map(e);
                let scale = map.det.abs().sqrt();
                let (n1, n0) = (spaces.n1(), spaces.n0());
                let mut load = DVector::zeros(spaces.vol_dim());
                for (q, pt) in vt1.quad.points.iter().enumerate() {
                    let xy = map.to_physical(*pt);
                    let w = vt1.quad.weights[q];
                    let fs = forcing.solid_force(xy[0], xy[1], t);
                    let ff = forcing.fluid_force(xy[0], xy[1], t);
                    let g = forcing.mass_source(xy[0], xy[1], t);
                    for i in 0..n1 {
                        let phi = w * vt1.tab.values[(i, q)];
                        load[i] += phi * fs[0];
                        load[n1 + i] += phi * fs[1];
                        load[2 * n1 + i] += phi * ff[0];
                        load[3 * n1 + i] += phi * ff[1];
                    }
                    if g != 0.0 {
                        let off = spaces.pressure_offset();
                        for m in 0..n0 {
                            load[off + m] += w * vt0.tab.values[(m, q)] * g;
                        }
                    }
                }
                load * scale
            })
            .collect()
    }

    /// Fixed trace coefficient values at time `t`.
    pub fn fixed_values(&self, t: f64) -> DVector<f64> {
        self.dofs
            .fixed_values(self.skeleton, self.spaces, &self.bc, self.data_quad_order(), t)
    }

    /// Projected initial data: element L2 projections of the four fields and
    /// face projections of the velocity traces, all at t = 0.
    pub fn initial_state(&self, fields: &dyn ExactFields) -> DGState {
        let spaces = self.spaces;
        let order = self.data_quad_order();
        let t = 0.0;
        let vol: Vec<DVector<f64>> = (0..self.mesh.n_elements())
            .into_par_iter()
            .map(|e| {
                let map = self.mesh.element_map(e);
                let mut x = DVector::zeros(spaces.vol_dim());
                let n1 = spaces.n1();
                let n0 = spaces.n0();
                for c in 0..2 {
                    let cs = crate::fem::project_element(
                        |px, py| fields.solid_velocity(px, py, t)[c],
                        spaces.k + 1,
                        &map,
                        order,
                    );
                    x.rows_mut(c * n1, n1).copy_from(&cs);
                    let cf = crate::fem::project_element(
                        |px, py| fields.fluid_velocity(px, py, t)[c],
                        spaces.k + 1,
                        &map,
                        order,
                    );
                    x.rows_mut(2 * n1 + c * n1, n1).copy_from(&cf);
                }
                let so = spaces.sigma_offset();
                let comps: [Box<dyn Fn(f64, f64) -> f64>; 3] = [
                    Box::new(|px, py| fields.stress(px, py, t).xx),
                    Box::new(|px, py| fields.stress(px, py, t).yy),
                    Box::new(|px, py| fields.stress(px, py, t).xy * std::f64::consts::SQRT_2),
                ];
                for (a, comp) in comps.iter().enumerate() {
                    let cs = crate::fem::project_element(comp, spaces.k, &map, order);
                    x.rows_mut(so + a * n0, n0).copy_from(&cs);
                }
                let cp = crate::fem::project_element(
                    |px, py| fields.pressure(px, py, t),
                    spaces.k,
                    &map,
                    order,
                );
                x.rows_mut(spaces.pressure_offset(), n0).copy_from(&cp);
                x
            })
            .collect();

        let tpf = spaces.trace_per_face();
        let fdim = spaces.fdim();
        let mut trace = DVector::zeros(self.skeleton.n_faces() * tpf);
        for (fid, face) in self.skeleton.faces().iter().enumerate() {
            let base = fid * tpf;
            for c in 0..2 {
                let cs = crate::fem::project_face(
                    |px, py| fields.solid_velocity(px, py, t)[c],
                    spaces.k + 1,
                    face.p0,
                    face.p1,
                    order,
                );
                trace.rows_mut(base + c * fdim, fdim).copy_from(&cs);
                let cf = crate::fem::project_face(
                    |px, py| fields.fluid_velocity(px, py, t)[c],
                    spaces.k + 1,
                    face.p0,
                    face.p1,
                    order,
                );
                trace
                    .rows_mut(base + 2 * fdim + c * fdim, fdim)
                    .copy_from(&cf);
            }
        }
        DGState { t, vol, trace }
    }

    /// One Crank-Nicolson step: condensed trace solve plus volume recovery.
    /// `loads_n` and `loads_next` are the volume load vectors at the two
    /// endpoint times; the trapezoidal average is formed internally.
    pub fn cn_step(
        &self,
        state: &DGState,
        loads_n: &[DVector<f64>],
        loads_next: &[DVector<f64>],
        t_next: f64,
    ) -> Result<DGState, HdgError> {
        let spaces = self.spaces;
        let tpf = spaces.trace_per_face();
        let two_over_dt = 2.0 / self.dt;

        // Per-element right-hand sides and their condensed trace residuals.
        let per_elem: Vec<(DVector<f64>, DVector<f64>)> = (0..self.mesh.n_elements())
            .into_par_iter()
            .map(|e| {
                let op = self.elem_ops(e);
                let x = &state.vol[e];
                let lam = self.lambda_local(e, &state.trace);
                let mut r_x = LocalOperator::apply_mass(&self.params, spaces, x) * two_over_dt;
                r_x -= &op.blocks.g_xx * x;
                r_x -= &op.blocks.g_xl * &lam;
                r_x += 0.5 * (&loads_n[e] + &loads_next[e]);
                let z = op.lu_xx.solve(&r_x).expect("factorized volume block");
                let mut r_l = -(&op.blocks.g_lx * x) - &op.blocks.g_ll * &lam;
                r_l -= &op.blocks.g_lx * &z;
                (z, r_l)
            })
            .collect();

        // Deterministic serial scatter of the condensed residuals.
        let mut rhs_free = DVector::zeros(self.dofs.n_free);
        for (e, inst) in self.elems.iter().enumerate() {
            let r_l = &per_elem[e].1;
            for (lf, &f) in inst.faces.iter().enumerate() {
                for r in 0..tpf {
                    if let DofStatus::Free(idx) = self.dofs.status[f * tpf + r] {
                        rhs_free[idx] += r_l[lf * tpf + r];
                    }
                }
            }
        }

        let fixed = if self.dofs.n_fixed > 0 {
            self.fixed_values(t_next)
        } else {
            DVector::zeros(0)
        };
        if let Some(fb) = &self.trace_fixed_cols {
            rhs_free -= fb.matvec(&fixed);
        }

        let lam_free = match &self.trace_factor {
            Some(f) => f.solve(&rhs_free)?,
            None => DVector::zeros(0),
        };

        let mut trace = DVector::zeros(state.trace.len());
        for (d, status) in self.dofs.status.iter().enumerate() {
            trace[d] = match status {
                DofStatus::Free(i) => lam_free[*i],
                DofStatus::Fixed(i) => fixed[*i],
            };
        }

        let vol: Vec<DVector<f64>> = (0..self.mesh.n_elements())
            .into_par_iter()
            .map(|e| {
                let op = self.elem_ops(e);
                let lam = self.lambda_local(e, &trace);
                &per_elem[e].0 - &op.z * &lam
            })
            .collect();

        Ok(DGState {
            t: t_next,
            vol,
            trace,
        })
    }

    /// Squared weighted norms (|u|_H1^2, |(sigma, p)|_H2^2) of a state.
    pub fn energy(&self, state: &DGState) -> (f64, f64) {
        energy_of(&self.params, self.spaces, state)
    }

    /// Re-assemble the condensed free-free trace matrix (for inspection; the
    /// factorized copy is what solves carry).
    pub fn assemble_trace_matrix(&self) -> SparseMatrix {
        let (trip_ff, _) = scatter_schur(&self.elems, &self.ops, &self.dofs, self.spaces.trace_per_face());
        SparseMatrix::from_triplets(self.dofs.n_free, self.dofs.n_free, &trip_ff)
            .expect("indices in range by construction")
    }

    /// Global free trace index of one face coefficient, if free.
    pub fn free_index(&self, face: usize, comp: usize) -> Option<usize> {
        match self.dofs.status[face * self.spaces.trace_per_face() + comp] {
            DofStatus::Free(i) => Some(i),
            DofStatus::Fixed(_) => None,
        }
    }
}

/// Squared H1/H2 norms of a state, directly from coefficients (the bases are
/// orthonormal, so the weighted mass matrices are material-coefficient
/// blocks).
pub fn energy_of(params: &MaterialParams, spaces: Spaces, state: &DGState) -> (f64, f64) {
    let n1 = spaces.n1();
    let n0 = spaces.n0();
    let so = spaces.sigma_offset();
    let (inv2mu, kl) = params.compliance_coeffs();
    let mut h1 = 0.0;
    let mut h2 = 0.0;
    for x in &state.vol {
        for c in 0..2 {
            for i in 0..n1 {
                let us = x[c * n1 + i];
                let uf = x[2 * n1 + c * n1 + i];
                h1 += params.rho11 * us * us + 2.0 * params.rho12 * us * uf + params.rho22 * uf * uf;
            }
        }
        for m in 0..n0 {
            let c1 = x[so + m];
            let c2 = x[so + n0 + m];
            let c3 = x[so + 2 * n0 + m];
            let p = x[so + 3 * n0 + m];
            let tr = kl * (c1 + c2);
            h2 += inv2mu * ((c1 - tr) * c1 + (c2 - tr) * c2 + c3 * c3) + params.s * p * p;
        }
    }
    (h1, h2)
}
