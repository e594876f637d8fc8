//! Dense monolithic step over the full (volume + trace) unknown set.
//!
//! This is the oracle the static condensation is validated against: it
//! shares the element-local blocks but none of the Schur-complement path,
//! and solves the whole saddle system with a dense LU. Intended for small
//! meshes only.

use nalgebra::{DMatrix, DVector};

use super::bc::DofStatus;
use super::local::LocalOperator;
use super::system::HdgSystem;
use super::DGState;

/// Assemble the full per-step matrix over [all volume | all trace] unknowns,
/// without boundary-condition row replacement.
pub fn monolithic_matrix(sys: &HdgSystem) -> DMatrix<f64> {
    let spaces = sys.spaces();
    let m = spaces.vol_dim();
    let tpf = spaces.trace_per_face();
    let n_elems = sys.mesh.n_elements();
    let n_trace = sys.skeleton.n_faces() * tpf;
    let n = n_elems * m + n_trace;
    let tbase = n_elems * m;
    let mut g = DMatrix::zeros(n, n);
    for e in 0..n_elems {
        let op = sys.elem_ops(e);
        let faces = sys.elem_faces(e);
        let voff = e * m;
        for r in 0..m {
            for c in 0..m {
                g[(voff + r, voff + c)] += op.blocks.g_xx[(r, c)];
            }
        }
        for (lf, &f) in faces.iter().enumerate() {
            for r in 0..m {
                for c in 0..tpf {
                    g[(voff + r, tbase + f * tpf + c)] += op.blocks.g_xl[(r, lf * tpf + c)];
                }
            }
            for r in 0..tpf {
                for c in 0..m {
                    g[(tbase + f * tpf + r, voff + c)] += op.blocks.g_lx[(lf * tpf + r, c)];
                }
            }
            for (lc, &fc) in faces.iter().enumerate() {
                for r in 0..tpf {
                    for c in 0..tpf {
                        g[(tbase + f * tpf + r, tbase + fc * tpf + c)] +=
                            op.blocks.g_ll[(lf * tpf + r, lc * tpf + c)];
                    }
                }
            }
        }
    }
    g
}

pub fn monolithic_cn_step(
    sys: &HdgSystem,
    state: &DGState,
    loads_n: &[DVector<f64>],
    loads_next: &[DVector<f64>],
    t_next: f64,
) -> DGState {
    let spaces = sys.spaces();
    let m = spaces.vol_dim();
    let tpf = spaces.trace_per_face();
    let n_elems = sys.mesh.n_elements();
    let n_trace = sys.skeleton.n_faces() * tpf;
    let n = n_elems * m + n_trace;
    let tbase = n_elems * m;

    let mut g = monolithic_matrix(sys);
    let mut rhs = DVector::zeros(n);
    let two_over_dt = 2.0 / sys.dt();

    for e in 0..n_elems {
        let op = sys.elem_ops(e);
        let faces = sys.elem_faces(e);
        let voff = e * m;
        let x = &state.vol[e];
        let lam = sys.lambda_local(e, &state.trace);
        let mut r_x = LocalOperator::apply_mass(sys.params(), spaces, x) * two_over_dt;
        r_x -= &op.blocks.g_xx * x;
        r_x -= &op.blocks.g_xl * &lam;
        r_x += 0.5 * (&loads_n[e] + &loads_next[e]);
        for r in 0..m {
            rhs[voff + r] += r_x[r];
        }
        let r_l = -(&op.blocks.g_lx * x) - &op.blocks.g_ll * &lam;
        for (lf, &f) in faces.iter().enumerate() {
            for r in 0..tpf {
                rhs[tbase + f * tpf + r] += r_l[lf * tpf + r];
            }
        }
    }

    // Fixed trace coefficients: identity rows with prescribed values.
    let fixed = if sys.dofs().n_fixed > 0 {
        sys.fixed_values(t_next)
    } else {
        DVector::zeros(0)
    };
    for (d, status) in sys.dofs().status.iter().enumerate() {
        if let DofStatus::Fixed(i) = status {
            for c in 0..n {
                g[(tbase + d, c)] = 0.0;
            }
            g[(tbase + d, tbase + d)] = 1.0;
            rhs[tbase + d] = fixed[*i];
        }
    }

    let sol = g.lu().solve(&rhs).expect("monolithic system is nonsingular");
    let vol = (0..n_elems)
        .map(|e| DVector::from(sol.rows(e * m, m).into_owned()))
        .collect();
    let trace = DVector::from(sol.rows(tbase, n_trace).into_owned());
    DGState {
        t: t_next,
        vol,
        trace,
    }
}
