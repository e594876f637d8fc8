//! Element-local operator blocks: the bilinear form B_h, the jump
//! stabilization, the weighted mass blocks, absorbing face blocks, and the
//! composition into per-step Crank-Nicolson blocks.
//!
//! Bases are orthonormal in the physical L2 inner products (reference basis
//! scaled by |det J|^{-1/2}, edge basis by |F|^{-1/2}), so mass blocks reduce
//! to the material coefficient matrices and the trace-trace stabilization to
//! scaled identities.

use nalgebra::{DMatrix, DVector};

use super::{HdgError, Spaces};
use crate::fem::cache::{self, REF_VERTICES};
use crate::materials::{MaterialParams, WaveSpeeds};
use crate::mesh::ElementMap;

/// Geometry and role of one local face as seen from the owning element.
#[derive(Debug, Clone, Copy)]
pub struct FaceContext {
    /// Local reference-vertex indices of the stored face endpoints, so the
    /// shared parameterization t -> ref point is la + t (lb - la).
    pub la: usize,
    pub lb: usize,
    /// True if this face carries absorbing Robin blocks.
    pub absorbing: bool,
}

/// Raw time-independent operator pieces of one element.
///
/// `b` is the bilinear form B_h restricted to the element: rows indexed by
/// the (sigma, p) basis, columns by (u_s, u_f, hat u per local face);
/// `stab` is the symmetric jump stabilization on (u, hat u); `absorb` holds
/// the Robin blocks on the trace block alone.
pub struct LocalOperator {
    pub spaces: Spaces,
    pub b: DMatrix<f64>,
    pub stab: DMatrix<f64>,
    pub absorb: DMatrix<f64>,
    pub det: f64,
    pub face_lengths: [f64; 3],
}

/// Per-step blocks of one element: G = M / dt + K / 2 split into volume (x)
/// and trace (lambda) groups, plus the pieces needed for the right-hand side
/// and recovery.
pub struct StepBlocks {
    pub g_xx: DMatrix<f64>,
    pub g_xl: DMatrix<f64>,
    pub g_lx: DMatrix<f64>,
    pub g_ll: DMatrix<f64>,
}

/// Quadrature orders used to build the operator. The defaults are exact for
/// every constant-coefficient bilinear-form integrand.
#[derive(Debug, Clone, Copy)]
pub struct QuadOrders {
    pub volume: usize,
    pub face: usize,
}

impl QuadOrders {
    pub fn for_degree(k: usize) -> Self {
        QuadOrders {
            volume: 2 * (k + 1) + 2,
            face: 2 * (k + 1) + 1,
        }
    }
}

const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

impl LocalOperator {
    pub fn build(
        spaces: Spaces,
        params: &MaterialParams,
        speeds: Option<&WaveSpeeds>,
        map: &ElementMap,
        faces: &[FaceContext; 3],
        orders: QuadOrders,
        stab_scale: f64,
    ) -> Self {
        let (n1, n0, fdim) = (spaces.n1(), spaces.n0(), spaces.fdim());
        let tpf = spaces.trace_per_face();
        let nvel = spaces.vel_dim();
        let nsp = spaces.sp_dim();
        let ncols = nvel + 3 * tpf;
        let mut b = DMatrix::zeros(nsp, ncols);
        let mut stab = DMatrix::zeros(ncols, ncols);
        let mut absorb = DMatrix::zeros(3 * tpf, 3 * tpf);

        let vt1 = cache::volume(spaces.k + 1, orders.volume);
        let vt0 = cache::volume(spaces.k, orders.volume);
        let nq = vt1.quad.len();
        // Physical gradients of the P_{k+1} basis at volume points.
        let mut gpx = DMatrix::zeros(n1, nq);
        let mut gpy = DMatrix::zeros(n1, nq);
        for i in 0..n1 {
            for q in 0..nq {
                let g = map.grad_to_physical([vt1.tab.grad_x[(i, q)], vt1.tab.grad_y[(i, q)]]);
                gpx[(i, q)] = g[0];
                gpy[(i, q)] = g[1];
            }
        }
        let w = &vt1.quad.weights;
        let alpha = params.alpha;

        // Volume terms. In the orthonormal scaling, det J cancels against the
        // two 1/sqrt(det J) basis factors, leaving plain reference weights.
        // (tau, eps(v_s)): sigma rows x u_s columns.
        for m in 0..n0 {
            for i in 0..n1 {
                let mut exx = 0.0;
                let mut exy_x = 0.0; // sqrt2-weighted shear from e_x phi
                let mut eyy = 0.0;
                let mut exy_y = 0.0;
                for q in 0..nq {
                    let p0 = w[q] * vt0.tab.values[(m, q)];
                    exx += p0 * gpx[(i, q)];
                    eyy += p0 * gpy[(i, q)];
                    exy_x += p0 * gpy[(i, q)] * INV_SQRT2;
                    exy_y += p0 * gpx[(i, q)] * INV_SQRT2;
                }
                b[(m, i)] += exx; // E_xx row, u_s x
                b[(n0 + m, n1 + i)] += eyy; // E_yy row, u_s y
                b[(2 * n0 + m, i)] += exy_x; // shear row, u_s x
                b[(2 * n0 + m, n1 + i)] += exy_y; // shear row, u_s y
            }
        }
        // (-alpha q I, eps(v_s)) and (-q, div v_f): p rows.
        let prow = 3 * n0;
        for m in 0..n0 {
            for i in 0..n1 {
                let mut dx = 0.0;
                let mut dy = 0.0;
                for q in 0..nq {
                    let p0 = w[q] * vt0.tab.values[(m, q)];
                    dx += p0 * gpx[(i, q)];
                    dy += p0 * gpy[(i, q)];
                }
                b[(prow + m, i)] -= alpha * dx;
                b[(prow + m, n1 + i)] -= alpha * dy;
                b[(prow + m, 2 * n1 + i)] -= dx;
                b[(prow + m, 3 * n1 + i)] -= dy;
            }
        }

        // Face terms.
        let et = cache::edge(spaces.k + 1, orders.face);
        let inv_det = 1.0 / map.det.abs();
        let tau_base = stab_scale * ((spaces.k + 1) * (spaces.k + 1)) as f64;
        let mut face_lengths = [0.0; 3];
        for (lf, ctx) in faces.iter().enumerate() {
            let ra = REF_VERTICES[ctx.la];
            let rb = REF_VERTICES[ctx.lb];
            let d = [
                map.jac[0][0] * (rb[0] - ra[0]) + map.jac[0][1] * (rb[1] - ra[1]),
                map.jac[1][0] * (rb[0] - ra[0]) + map.jac[1][1] * (rb[1] - ra[1]),
            ];
            let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
            face_lengths[lf] = len;
            // Outward normal: perp of the edge direction, oriented away from
            // the centroid.
            let mut n = [d[1] / len, -d[0] / len];
            let mid = map.to_physical([(ra[0] + rb[0]) / 2.0, (ra[1] + rb[1]) / 2.0]);
            let cen = map.to_physical([1.0 / 3.0, 1.0 / 3.0]);
            if n[0] * (mid[0] - cen[0]) + n[1] * (mid[1] - cen[1]) < 0.0 {
                n = [-n[0], -n[1]];
            }

            let t1 = cache::volume_trace(spaces.k + 1, orders.face, ctx.la, ctx.lb);
            let t0 = cache::volume_trace(spaces.k, orders.face, ctx.la, ctx.lb);
            let nfq = et.quad.len();
            let wf = &et.quad.weights;
            // Physical scalings: volume x volume picks |F| / det J, volume x
            // trace picks sqrt(|F| / det J), trace x trace is orthonormal.
            let s_vv = len * inv_det;
            let s_vt = (len * inv_det).sqrt();
            let tau = tau_base / len;
            let tcol = nvel + lf * tpf;

            // Normal contraction of the stress component basis:
            // E_xx n = (n0x, 0), E_yy n = (0, n_y), E_sh n = (n_y, n_x)/sqrt2.
            let en: [[f64; 2]; 3] = [
                [n[0], 0.0],
                [0.0, n[1]],
                [n[1] * INV_SQRT2, n[0] * INV_SQRT2],
            ];

            for m in 0..n0 {
                // - <(tau - alpha q I) n, v_s - hat v_s> and + <q n, v_f - hat v_f>
                for i in 0..n1 {
                    let mut acc = 0.0;
                    for q in 0..nfq {
                        acc += wf[q] * t0.values[(m, q)] * t1.values[(i, q)];
                    }
                    let acc = acc * s_vv;
                    for (a, ena) in en.iter().enumerate() {
                        for c in 0..2 {
                            if ena[c] != 0.0 {
                                b[(a * n0 + m, c * n1 + i)] -= acc * ena[c];
                            }
                        }
                    }
                    for c in 0..2 {
                        if n[c] != 0.0 {
                            b[(prow + m, c * n1 + i)] += alpha * acc * n[c];
                            b[(prow + m, 2 * n1 + c * n1 + i)] += acc * n[c];
                        }
                    }
                }
                for j in 0..fdim {
                    let mut acc = 0.0;
                    for q in 0..nfq {
                        acc += wf[q] * t0.values[(m, q)] * et.tab.values[(j, q)];
                    }
                    let acc = acc * s_vt;
                    for (a, ena) in en.iter().enumerate() {
                        for c in 0..2 {
                            if ena[c] != 0.0 {
                                b[(a * n0 + m, tcol + c * fdim + j)] += acc * ena[c];
                            }
                        }
                    }
                    for c in 0..2 {
                        if n[c] != 0.0 {
                            b[(prow + m, tcol + c * fdim + j)] -= alpha * acc * n[c];
                            b[(prow + m, tcol + 2 * fdim + c * fdim + j)] -= acc * n[c];
                        }
                    }
                }
            }

            // Stabilization tau_F <(u - hat u), (v - hat v)> on both pairs,
            // diagonal in the vector component.
            for i in 0..n1 {
                for i2 in 0..n1 {
                    let mut acc = 0.0;
                    for q in 0..nfq {
                        acc += wf[q] * t1.values[(i, q)] * t1.values[(i2, q)];
                    }
                    let acc = acc * s_vv * tau;
                    for field in 0..2 {
                        for c in 0..2 {
                            let r = field * 2 * n1 + c * n1;
                            stab[(r + i, r + i2)] += acc;
                        }
                    }
                }
                for j in 0..fdim {
                    let mut acc = 0.0;
                    for q in 0..nfq {
                        acc += wf[q] * t1.values[(i, q)] * et.tab.values[(j, q)];
                    }
                    let acc = acc * s_vt * tau;
                    for field in 0..2 {
                        for c in 0..2 {
                            let r = field * 2 * n1 + c * n1 + i;
                            let cc = tcol + field * 2 * fdim + c * fdim + j;
                            stab[(r, cc)] -= acc;
                            stab[(cc, r)] -= acc;
                        }
                    }
                }
            }
            for field in 0..2 {
                for c in 0..2 {
                    for j in 0..fdim {
                        let cc = tcol + field * 2 * fdim + c * fdim + j;
                        stab[(cc, cc)] += tau;
                    }
                }
            }

            // Absorbing Robin blocks on (hat u_s, hat u_f), identity in the
            // edge basis index. The normal coupling uses the modal impedance
            // (symmetric positive definite, exactly absorbing for normally
            // incident plane modes); the tangential solid part dissipates
            // with the shear impedance.
            if ctx.absorbing {
                let speeds = speeds.expect("absorbing faces need wave speeds");
                let z = params
                    .absorbing_impedance()
                    .expect("absorbing faces need an SPD density matrix");
                let m_fl = params.rho_f_phi_over_nu();
                let nn = [[n[0] * n[0], n[0] * n[1]], [n[1] * n[0], n[1] * n[1]]];
                let idt = [[1.0 - nn[0][0], -nn[0][1]], [-nn[1][0], 1.0 - nn[1][1]]];
                let c_ss = |r: usize, c: usize| {
                    z[(0, 0)] * nn[r][c] + (params.rho11 - m_fl) * speeds.shear * idt[r][c]
                };
                let c_sf = |r: usize, c: usize| z[(0, 1)] * nn[r][c];
                let c_fs = |r: usize, c: usize| z[(1, 0)] * nn[r][c];
                let c_ff = |r: usize, c: usize| z[(1, 1)] * nn[r][c];
                let lbase = lf * tpf;
                for r in 0..2 {
                    for c in 0..2 {
                        for j in 0..fdim {
                            let row_s = lbase + r * fdim + j;
                            let col_s = lbase + c * fdim + j;
                            let row_f = lbase + 2 * fdim + r * fdim + j;
                            let col_f = lbase + 2 * fdim + c * fdim + j;
                            absorb[(row_s, col_s)] += c_ss(r, c);
                            absorb[(row_s, col_f)] += c_sf(r, c);
                            absorb[(row_f, col_s)] += c_fs(r, c);
                            absorb[(row_f, col_f)] += c_ff(r, c);
                        }
                    }
                }
            }
        }

        LocalOperator {
            spaces,
            b,
            stab,
            absorb,
            det: map.det.abs(),
            face_lengths,
        }
    }

    /// Weighted-mass action (H1 density block, H2 compliance/storage block)
    /// on a full volume coefficient vector.
    pub fn apply_mass(params: &MaterialParams, spaces: Spaces, x: &DVector<f64>) -> DVector<f64> {
        let n1 = spaces.n1();
        let n0 = spaces.n0();
        let o = spaces.sigma_offset();
        let mut out = DVector::zeros(x.len());
        for c in 0..2 {
            for i in 0..n1 {
                let us = x[c * n1 + i];
                let uf = x[2 * n1 + c * n1 + i];
                out[c * n1 + i] = params.rho11 * us + params.rho12 * uf;
                out[2 * n1 + c * n1 + i] = params.rho12 * us + params.rho22 * uf;
            }
        }
        let (inv2mu, kl) = params.compliance_coeffs();
        for m in 0..n0 {
            let c1 = x[o + m];
            let c2 = x[o + n0 + m];
            let c3 = x[o + 2 * n0 + m];
            let tr = kl * (c1 + c2);
            out[o + m] = inv2mu * (c1 - tr);
            out[o + n0 + m] = inv2mu * (c2 - tr);
            out[o + 2 * n0 + m] = inv2mu * c3;
            out[o + 3 * n0 + m] = params.s * x[o + 3 * n0 + m];
        }
        out
    }

    /// Compose the per-step Crank-Nicolson blocks G = M / dt + K / 2.
    pub fn step_blocks(&self, params: &MaterialParams, dt: f64) -> StepBlocks {
        let spaces = self.spaces;
        let (n1, n0) = (spaces.n1(), spaces.n0());
        let nvel = spaces.vel_dim();
        let nsp = spaces.sp_dim();
        let m = nvel + nsp;
        let nt = 3 * spaces.trace_per_face();
        let mut g_xx = DMatrix::zeros(m, m);
        let mut g_xl = DMatrix::zeros(m, nt);
        let mut g_lx = DMatrix::zeros(nt, m);
        let mut g_ll = DMatrix::zeros(nt, nt);

        // Velocity-velocity: M1 / dt + (stab_vv + beta on u_f) / 2.
        let inv_dt = 1.0 / dt;
        for c in 0..2 {
            for i in 0..n1 {
                let a = c * n1 + i;
                let bidx = 2 * n1 + c * n1 + i;
                g_xx[(a, a)] += params.rho11 * inv_dt;
                g_xx[(a, bidx)] += params.rho12 * inv_dt;
                g_xx[(bidx, a)] += params.rho12 * inv_dt;
                g_xx[(bidx, bidx)] += params.rho22 * inv_dt + 0.5 * params.beta;
            }
        }
        for r in 0..nvel {
            for c in 0..nvel {
                g_xx[(r, c)] += 0.5 * self.stab[(r, c)];
            }
        }
        // Velocity rows vs (sigma, p): + B^T / 2; (sigma, p) rows vs
        // velocity: - B / 2.
        for row in 0..nsp {
            for c in 0..nvel {
                let v = 0.5 * self.b[(row, c)];
                g_xx[(c, nvel + row)] += v;
                g_xx[(nvel + row, c)] -= v;
            }
        }
        // (sigma, p) mass M2 / dt.
        let (inv2mu, kl) = params.compliance_coeffs();
        for mm in 0..n0 {
            let i1 = nvel + mm;
            let i2 = nvel + n0 + mm;
            let i3 = nvel + 2 * n0 + mm;
            let ip = nvel + 3 * n0 + mm;
            g_xx[(i1, i1)] += inv2mu * (1.0 - kl) * inv_dt;
            g_xx[(i1, i2)] += -inv2mu * kl * inv_dt;
            g_xx[(i2, i1)] += -inv2mu * kl * inv_dt;
            g_xx[(i2, i2)] += inv2mu * (1.0 - kl) * inv_dt;
            g_xx[(i3, i3)] += inv2mu * inv_dt;
            g_xx[(ip, ip)] += params.s * inv_dt;
        }
        // Trace couplings.
        for r in 0..nvel {
            for t in 0..nt {
                g_xl[(r, t)] += 0.5 * self.stab[(r, nvel + t)];
                g_lx[(t, r)] += 0.5 * self.stab[(nvel + t, r)];
            }
        }
        for row in 0..nsp {
            for t in 0..nt {
                let v = 0.5 * self.b[(row, nvel + t)];
                g_xl[(nvel + row, t)] -= v;
                g_lx[(t, nvel + row)] += v;
            }
        }
        for r in 0..nt {
            for c in 0..nt {
                g_ll[(r, c)] = 0.5 * (self.stab[(nvel + r, nvel + c)] + self.absorb[(r, c)]);
            }
        }

        StepBlocks {
            g_xx,
            g_xl,
            g_lx,
            g_ll,
        }
    }
}

/// Dense LU of the volume block plus derived recovery operators.
pub struct ElemOps {
    pub blocks: StepBlocks,
    pub lu_xx: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// lu_xx^{-1} g_xl, used for both the Schur complement and recovery.
    pub z: DMatrix<f64>,
    /// Schur complement g_ll - g_lx z.
    pub schur: DMatrix<f64>,
}

impl ElemOps {
    pub fn new(blocks: StepBlocks, elem: usize) -> Result<Self, HdgError> {
        let lu_xx = blocks.g_xx.clone().lu();
        let z = lu_xx
            .solve(&blocks.g_xl)
            .ok_or(HdgError::SingularLocal { elem })?;
        let schur = &blocks.g_ll - &blocks.g_lx * &z;
        Ok(ElemOps {
            blocks,
            lu_xx,
            z,
            schur,
        })
    }
}
