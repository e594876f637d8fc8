//! Structural validation of the element-local HDG operators: the bilinear
//! form against an independent quadrature oracle, the elementwise
//! integration-by-parts identity, stabilization kernel, exact antisymmetry
//! of the coupling blocks, the polynomial inclusions used by the scheme,
//! coercivity of the per-step matrix, and the condensation-vs-monolithic
//! oracle on small meshes.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use porohdg::fem::basis::TriTabulation;
use porohdg::fem::cache::REF_VERTICES;
use porohdg::fem::quadrature::{EdgeQuadrature, TriQuadrature};
use porohdg::fields::ZeroFields;
use porohdg::hdg::{
    monolithic_cn_step, monolithic_matrix, BcSpec, DofStatus, FaceContext, LocalOperator,
    QuadOrders, Spaces,
};
use porohdg::materials::MaterialParams;
use porohdg::mesh::{build_skeleton, generate_structured, BoundaryEdge, ElementMap, Mesh, Rect, Triangle};
use porohdg::transient::{self, Problem, TimeGrid};
use porohdg::verification::PatchSolution;
use porohdg::{HdgOptions, HdgSystem};

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn sample_map() -> ElementMap {
    ElementMap::new([0.1, 0.2], [0.9, 0.35], [0.3, 1.0])
}

fn sample_contexts() -> [FaceContext; 3] {
    // The three local edges {0,1}, {1,2}, {2,0} with mixed orientations.
    [
        FaceContext { la: 1, lb: 0, absorbing: false },
        FaceContext { la: 1, lb: 2, absorbing: false },
        FaceContext { la: 0, lb: 2, absorbing: false },
    ]
}

/// Evaluate the four terms of B_h by direct quadrature at a much higher
/// order, from raw coefficient vectors, organized completely differently
/// from the assembly (actual tensor components, term by term).
#[allow(clippy::too_many_arguments)]
fn bh_oracle(
    spaces: Spaces,
    params: &MaterialParams,
    map: &ElementMap,
    faces: &[FaceContext; 3],
    sp: &DVector<f64>,
    vel: &DVector<f64>,
    hat: &DVector<f64>,
) -> f64 {
    let (n1, n0, fdim) = (spaces.n1(), spaces.n0(), spaces.fdim());
    let tpf = spaces.trace_per_face();
    let det = map.det.abs();
    let isq = 1.0 / det.sqrt();
    let alpha = params.alpha;
    let quad = TriQuadrature::with_exactness(2 * (spaces.k + 1) + 8);
    let t1 = TriTabulation::new(spaces.k + 1, &quad.points);
    let t0 = TriTabulation::new(spaces.k, &quad.points);

    let mut total = 0.0;
    for (q, _) in quad.points.iter().enumerate() {
        let w = quad.weights[q] * det;
        // sigma, p from coefficients.
        let mut sxx = 0.0;
        let mut syy = 0.0;
        let mut sxy = 0.0;
        let mut p = 0.0;
        for m in 0..n0 {
            let phi = t0.values[(m, q)] * isq;
            sxx += sp[m] * phi;
            syy += sp[n0 + m] * phi;
            sxy += sp[2 * n0 + m] * phi / SQRT2;
            p += sp[3 * n0 + m] * phi;
        }
        // grad of v_s, v_f.
        let mut gvs = [[0.0; 2]; 2];
        let mut div_vf = 0.0;
        for i in 0..n1 {
            let g = map.grad_to_physical([t1.grad_x[(i, q)], t1.grad_y[(i, q)]]);
            let gx = g[0] * isq;
            let gy = g[1] * isq;
            gvs[0][0] += vel[i] * gx;
            gvs[0][1] += vel[i] * gy;
            gvs[1][0] += vel[n1 + i] * gx;
            gvs[1][1] += vel[n1 + i] * gy;
            div_vf += vel[2 * n1 + i] * gx + vel[3 * n1 + i] * gy;
        }
        let exx = gvs[0][0];
        let eyy = gvs[1][1];
        let exy = 0.5 * (gvs[0][1] + gvs[1][0]);
        total += w * ((sxx - alpha * p) * exx + (syy - alpha * p) * eyy + 2.0 * sxy * exy);
        total -= w * p * div_vf;
    }

    // Face terms.
    let equad = EdgeQuadrature::with_exactness(2 * (spaces.k + 1) + 8);
    for (lf, ctx) in faces.iter().enumerate() {
        let ra = REF_VERTICES[ctx.la];
        let rb = REF_VERTICES[ctx.lb];
        let pts: Vec<[f64; 2]> = equad
            .points
            .iter()
            .map(|&t| [ra[0] + t * (rb[0] - ra[0]), ra[1] + t * (rb[1] - ra[1])])
            .collect();
        let f1 = TriTabulation::new(spaces.k + 1, &pts);
        let f0 = TriTabulation::new(spaces.k, &pts);
        let pa = map.to_physical(ra);
        let pb = map.to_physical(rb);
        let d = [pb[0] - pa[0], pb[1] - pa[1]];
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        let mut n = [d[1] / len, -d[0] / len];
        let mid = map.to_physical([(ra[0] + rb[0]) / 2.0, (ra[1] + rb[1]) / 2.0]);
        let cen = map.to_physical([1.0 / 3.0, 1.0 / 3.0]);
        if n[0] * (mid[0] - cen[0]) + n[1] * (mid[1] - cen[1]) < 0.0 {
            n = [-n[0], -n[1]];
        }
        let isl = 1.0 / len.sqrt();
        for (q, &t) in equad.points.iter().enumerate() {
            let w = equad.weights[q] * len;
            let mut sxx = 0.0;
            let mut syy = 0.0;
            let mut sxy = 0.0;
            let mut p = 0.0;
            for m in 0..n0 {
                let phi = f0.values[(m, q)] * isq;
                sxx += sp[m] * phi;
                syy += sp[n0 + m] * phi;
                sxy += sp[2 * n0 + m] * phi / SQRT2;
                p += sp[3 * n0 + m] * phi;
            }
            let mut vs = [0.0; 2];
            let mut vf = [0.0; 2];
            for i in 0..n1 {
                let phi = f1.values[(i, q)] * isq;
                vs[0] += vel[i] * phi;
                vs[1] += vel[n1 + i] * phi;
                vf[0] += vel[2 * n1 + i] * phi;
                vf[1] += vel[3 * n1 + i] * phi;
            }
            // shifted-Legendre edge basis
            let etab = porohdg::fem::basis::EdgeTabulation::new(spaces.k + 1, &[t]);
            let mut hs = [0.0; 2];
            let mut hf = [0.0; 2];
            for j in 0..fdim {
                let mu = etab.values[(j, 0)] * isl;
                hs[0] += hat[lf * tpf + j] * mu;
                hs[1] += hat[lf * tpf + fdim + j] * mu;
                hf[0] += hat[lf * tpf + 2 * fdim + j] * mu;
                hf[1] += hat[lf * tpf + 3 * fdim + j] * mu;
            }
            let tn = [
                (sxx - alpha * p) * n[0] + sxy * n[1],
                sxy * n[0] + (syy - alpha * p) * n[1],
            ];
            total -= w * (tn[0] * (vs[0] - hs[0]) + tn[1] * (vs[1] - hs[1]));
            total += w * p * (n[0] * (vf[0] - hf[0]) + n[1] * (vf[1] - hf[1]));
        }
    }
    total
}

#[test]
fn local_bh_matches_quadrature_oracle() {
    let params = MaterialParams::preset_l1();
    let map = sample_map();
    let faces = sample_contexts();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for k in 0..=3 {
        let spaces = Spaces::new(k);
        let local = LocalOperator::build(
            spaces,
            &params,
            None,
            &map,
            &faces,
            QuadOrders::for_degree(k),
            1.0,
        );
        for _ in 0..4 {
            let sp = DVector::from_fn(spaces.sp_dim(), |_, _| rng.gen_range(-1.0..1.0));
            let vel = DVector::from_fn(spaces.vel_dim(), |_, _| rng.gen_range(-1.0..1.0));
            let hat = DVector::from_fn(3 * spaces.trace_per_face(), |_, _| rng.gen_range(-1.0..1.0));
            // matrix route: rows (sigma, p), cols (vel | traces)
            let mut cols = DVector::zeros(spaces.vel_dim() + 3 * spaces.trace_per_face());
            cols.rows_mut(0, spaces.vel_dim()).copy_from(&vel);
            cols.rows_mut(spaces.vel_dim(), 3 * spaces.trace_per_face())
                .copy_from(&hat);
            let matrix_value = (sp.transpose() * &local.b * &cols)[(0, 0)];
            let oracle = bh_oracle(spaces, &params, &map, &faces, &sp, &vel, &hat);
            assert!(
                (matrix_value - oracle).abs() < 1e-11 * oracle.abs().max(1.0),
                "k={k}: matrix {matrix_value} vs oracle {oracle}"
            );
        }
    }
}

#[test]
fn elementwise_integration_by_parts() {
    // For smooth (sigma, p) with continuous normal traces and hat v = 0:
    // sum_K B_h((sigma, p), (v, 0)) = -(div(sigma - alpha p I), v_s) + (grad p, v_f).
    let params = MaterialParams::preset_l1();
    let alpha = params.alpha;
    let k = 2usize;
    let spaces = Spaces::new(k);
    let mesh = generate_structured(3, Rect::unit_square());
    let skeleton = build_skeleton(&mesh);
    let orders = QuadOrders::for_degree(k);

    // Global degree-2 polynomial stress/pressure with hand-coded derivatives.
    let sxx = |x: f64, y: f64| 1.0 + 2.0 * x - y * y;
    let syy = |x: f64, y: f64| x * y - 0.5;
    let sxy = |x: f64, y: f64| 0.3 * x * x - y;
    let p = |x: f64, y: f64| 0.5 - x + x * y;
    let div_tot_x = move |_x: f64, y: f64| 2.0 + (0.3 * 0.0 - 1.0) - alpha * (-1.0 + y);
    let div_tot_y = move |x: f64, _y: f64| 0.6 * x + x - alpha * x;
    let grad_p = |x: f64, y: f64| [-1.0 + y, x];

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let quad = TriQuadrature::with_exactness(2 * (k + 1) + 6);
    let t1 = TriTabulation::new(k + 1, &quad.points);
    for e in 0..mesh.n_elements() {
        let map = mesh.element_map(e);
        let efs = skeleton.elem_faces(e);
        let ctx: [FaceContext; 3] = std::array::from_fn(|i| FaceContext {
            la: efs[i].local[0],
            lb: efs[i].local[1],
            absorbing: false,
        });
        let local = LocalOperator::build(spaces, &params, None, &map, &ctx, orders, 1.0);
        // exact coefficients of the global polynomial on this element
        let (n0, n1) = (spaces.n0(), spaces.n1());
        let mut sp = DVector::zeros(spaces.sp_dim());
        sp.rows_mut(0, n0)
            .copy_from(&porohdg::fem::project_element(sxx, k, &map, orders.volume));
        sp.rows_mut(n0, n0)
            .copy_from(&porohdg::fem::project_element(syy, k, &map, orders.volume));
        sp.rows_mut(2 * n0, n0).copy_from(&porohdg::fem::project_element(
            |x, y| SQRT2 * sxy(x, y),
            k,
            &map,
            orders.volume,
        ));
        sp.rows_mut(3 * n0, n0)
            .copy_from(&porohdg::fem::project_element(p, k, &map, orders.volume));
        let vel = DVector::from_fn(spaces.vel_dim(), |_, _| rng.gen_range(-1.0..1.0));
        let mut cols = DVector::zeros(spaces.vel_dim() + 3 * spaces.trace_per_face());
        cols.rows_mut(0, spaces.vel_dim()).copy_from(&vel);
        lhs += (sp.transpose() * &local.b * &cols)[(0, 0)];

        // quadrature of the right-hand side on this element
        let det = map.det.abs();
        let isq = 1.0 / det.sqrt();
        for (q, pt) in quad.points.iter().enumerate() {
            let w = quad.weights[q] * det;
            let xy = map.to_physical(*pt);
            let mut vs = [0.0; 2];
            let mut vf = [0.0; 2];
            for i in 0..n1 {
                let phi = t1.values[(i, q)] * isq;
                vs[0] += vel[i] * phi;
                vs[1] += vel[n1 + i] * phi;
                vf[0] += vel[2 * n1 + i] * phi;
                vf[1] += vel[3 * n1 + i] * phi;
            }
            let g = grad_p(xy[0], xy[1]);
            rhs += w
                * (-(div_tot_x(xy[0], xy[1]) * vs[0] + div_tot_y(xy[0], xy[1]) * vs[1])
                    + g[0] * vf[0]
                    + g[1] * vf[1]);
        }
    }
    assert!(
        (lhs - rhs).abs() < 1e-11 * rhs.abs().max(1.0),
        "lhs {lhs} vs rhs {rhs}"
    );
}

#[test]
fn stabilization_kernel_and_positivity() {
    let params = MaterialParams::preset_l1();
    let map = sample_map();
    let faces = sample_contexts();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in [0usize, 2] {
        let spaces = Spaces::new(k);
        let local = LocalOperator::build(
            spaces,
            &params,
            None,
            &map,
            &faces,
            QuadOrders::for_degree(k),
            1.0,
        );
        let (n1, fdim, tpf) = (spaces.n1(), spaces.fdim(), spaces.trace_per_face());
        // Kernel: hat u equal to the element trace of u.
        let vel = DVector::from_fn(spaces.vel_dim(), |_, _| rng.gen_range(-1.0..1.0));
        let mut full = DVector::zeros(spaces.vel_dim() + 3 * tpf);
        full.rows_mut(0, spaces.vel_dim()).copy_from(&vel);
        let det = map.det.abs();
        for (lf, ctx) in faces.iter().enumerate() {
            let ra = REF_VERTICES[ctx.la];
            let rb = REF_VERTICES[ctx.lb];
            let pa = map.to_physical(ra);
            let pb = map.to_physical(rb);
            for (field, c) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)] {
                let coeffs = porohdg::fem::project_face(
                    |x, y| {
                        let r = map.to_reference([x, y]);
                        let tab = TriTabulation::new(spaces.k + 1, &[r]);
                        (0..n1)
                            .map(|i| vel[field * 2 * n1 + c * n1 + i] * tab.values[(i, 0)])
                            .sum::<f64>()
                            / det.sqrt()
                    },
                    spaces.k + 1,
                    pa,
                    pb,
                    2 * (k + 1) + 4,
                );
                full.rows_mut(
                    spaces.vel_dim() + lf * tpf + field * 2 * fdim + c * fdim,
                    fdim,
                )
                .copy_from(&coeffs);
            }
        }
        let energy = (full.transpose() * &local.stab * &full)[(0, 0)];
        assert!(energy.abs() < 1e-10, "k={k}: kernel energy {energy}");

        // Positivity on random vectors.
        for _ in 0..20 {
            let x = DVector::from_fn(spaces.vel_dim() + 3 * tpf, |_, _| rng.gen_range(-1.0..1.0));
            let e = (x.transpose() * &local.stab * &x)[(0, 0)];
            assert!(e > -1e-12, "k={k}: negative stabilization energy {e}");
        }
    }
}

#[test]
fn coupling_blocks_exactly_antisymmetric() {
    let params = MaterialParams::preset_l1();
    let map = sample_map();
    let faces = sample_contexts();
    let spaces = Spaces::new(1);
    let local = LocalOperator::build(
        spaces,
        &params,
        None,
        &map,
        &faces,
        QuadOrders::for_degree(1),
        1.0,
    );
    let blocks = local.step_blocks(&params, 0.01);
    let nvel = spaces.vel_dim();
    let nsp = spaces.sp_dim();
    // (vel, sp) block == -(sp, vel)^T exactly (same stored values, negated).
    for r in 0..nvel {
        for c in 0..nsp {
            assert_eq!(blocks.g_xx[(r, nvel + c)], -blocks.g_xx[(nvel + c, r)]);
        }
    }
    for row in 0..nsp {
        for t in 0..3 * spaces.trace_per_face() {
            assert_eq!(blocks.g_xl[(nvel + row, t)], -blocks.g_lx[(t, nvel + row)]);
        }
    }
}

#[test]
fn strain_and_divergence_inclusions() {
    // eps(P_{k+1}) and div(P_{k+1}) lie in degree k: projecting onto P_k
    // loses nothing.
    let map = sample_map();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for k in [0usize, 1, 3] {
        let spaces = Spaces::new(k);
        let n1 = spaces.n1();
        let coeffs = DVector::from_fn(2 * n1, |_, _| rng.gen_range(-1.0..1.0));
        let quad = TriQuadrature::with_exactness(2 * (k + 1) + 4);
        let t1 = TriTabulation::new(k + 1, &quad.points);
        let isq = 1.0 / map.det.abs().sqrt();
        let field = |q: usize| {
            let mut g = [[0.0; 2]; 2];
            for i in 0..n1 {
                let gr = map.grad_to_physical([t1.grad_x[(i, q)], t1.grad_y[(i, q)]]);
                g[0][0] += coeffs[i] * gr[0] * isq;
                g[0][1] += coeffs[i] * gr[1] * isq;
                g[1][0] += coeffs[n1 + i] * gr[0] * isq;
                g[1][1] += coeffs[n1 + i] * gr[1] * isq;
            }
            g
        };
        // Project each strain/divergence component onto P_k and compare
        // pointwise at the quadrature points.
        let comps: Vec<Box<dyn Fn(usize) -> f64>> = vec![
            Box::new(move |q| field(q)[0][0]),
            Box::new(move |q| field(q)[1][1]),
            Box::new(move |q| 0.5 * (field(q)[0][1] + field(q)[1][0])),
            Box::new(move |q| field(q)[0][0] + field(q)[1][1]),
        ];
        let t0 = TriTabulation::new(k, &quad.points);
        for comp in &comps {
            // projection coefficients via quadrature
            let n0 = spaces.n0();
            let mut proj = vec![0.0; n0];
            for q in 0..quad.len() {
                let w = quad.weights[q] * map.det.abs();
                for m in 0..n0 {
                    proj[m] += w * comp(q) * t0.values[(m, q)] * isq;
                }
            }
            for q in 0..quad.len() {
                let recon: f64 = (0..n0).map(|m| proj[m] * t0.values[(m, q)] * isq).sum();
                assert!(
                    (recon - comp(q)).abs() < 1e-11,
                    "k={k}: projection lost information"
                );
            }
        }
    }
}

#[test]
fn per_step_matrix_has_positive_definite_symmetric_part() {
    let mesh = generate_structured(2, Rect::unit_square());
    let skeleton = build_skeleton(&mesh);
    let spaces = Spaces::new(1);
    let params = MaterialParams::preset_l1();
    let bc = BcSpec::dirichlet([0, 1, 2, 3], Arc::new(ZeroFields));
    let sys = HdgSystem::build(&mesh, &skeleton, spaces, params, bc, 0.05, HdgOptions::default())
        .unwrap();
    let g = monolithic_matrix(&sys);
    // Restrict to volume + free trace unknowns.
    let tbase = mesh.n_elements() * spaces.vol_dim();
    let mut keep: Vec<usize> = (0..tbase).collect();
    for (d, s) in sys.dofs().status.iter().enumerate() {
        if matches!(s, DofStatus::Free(_)) {
            keep.push(tbase + d);
        }
    }
    let nk = keep.len();
    let mut sym = DMatrix::zeros(nk, nk);
    for (i, &gi) in keep.iter().enumerate() {
        for (j, &gj) in keep.iter().enumerate() {
            sym[(i, j)] = 0.5 * (g[(gi, gj)] + g[(gj, gi)]);
        }
    }
    let eig = nalgebra::SymmetricEigen::new(sym);
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    assert!(min > 0.0, "smallest eigenvalue of symmetric part: {min}");
}

fn single_triangle_mesh() -> Mesh {
    Mesh::new(
        vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        vec![Triangle {
            vertices: [0, 1, 2],
            region: 0,
        }],
        vec![
            BoundaryEdge { vertices: [0, 1], tag: 0 },
            BoundaryEdge { vertices: [1, 2], tag: 1 },
            BoundaryEdge { vertices: [2, 0], tag: 2 },
        ],
    )
    .unwrap()
}

fn relative_state_diff(a: &porohdg::DGState, b: &porohdg::DGState) -> f64 {
    let mut num = 0.0;
    let mut den = 1e-300;
    for (xa, xb) in a.vol.iter().zip(&b.vol) {
        num += (xa - xb).norm_squared();
        den += xa.norm_squared();
    }
    num += (&a.trace - &b.trace).norm_squared();
    den += a.trace.norm_squared();
    (num / den).sqrt()
}

#[test]
fn condensation_matches_monolithic_two_elements() {
    let mesh = generate_structured(1, Rect::unit_square());
    let skeleton = build_skeleton(&mesh);
    let spaces = Spaces::new(0);
    let params = MaterialParams::preset_l1();
    let patch = Arc::new(PatchSolution::random(0, params.clone(), 3));
    let bc = BcSpec::dirichlet([0, 1, 2, 3], patch.clone());
    let sys = HdgSystem::build(&mesh, &skeleton, spaces, params, bc, 0.02, HdgOptions::default())
        .unwrap();
    let mut state = sys.initial_state(patch.as_ref());
    for n in 0..3 {
        let t0 = state.t;
        let t1 = t0 + 0.02;
        let l0 = sys.volume_loads(patch.as_ref(), t0);
        let l1 = sys.volume_loads(patch.as_ref(), t1);
        let condensed = sys.cn_step(&state, &l0, &l1, t1).unwrap();
        let mono = monolithic_cn_step(&sys, &state, &l0, &l1, t1);
        let diff = relative_state_diff(&condensed, &mono);
        assert!(diff < 1e-10, "step {n}: relative difference {diff}");
        state = condensed;
    }
}

#[test]
fn single_element_all_dirichlet_recovers_local_solve() {
    // No free trace unknowns: the condensed path must reduce to the pure
    // local solve and still match the monolithic oracle.
    let mesh = single_triangle_mesh();
    let skeleton = build_skeleton(&mesh);
    let spaces = Spaces::new(1);
    let params = MaterialParams::preset_l1();
    let patch = Arc::new(PatchSolution::random(1, params.clone(), 8));
    let bc = BcSpec::dirichlet([0, 1, 2], patch.clone());
    let sys = HdgSystem::build(&mesh, &skeleton, spaces, params, bc, 0.01, HdgOptions::default())
        .unwrap();
    assert_eq!(sys.dofs().n_free, 0);
    let state = sys.initial_state(patch.as_ref());
    let l0 = sys.volume_loads(patch.as_ref(), 0.0);
    let l1 = sys.volume_loads(patch.as_ref(), 0.01);
    let condensed = sys.cn_step(&state, &l0, &l1, 0.01).unwrap();
    let mono = monolithic_cn_step(&sys, &state, &l0, &l1, 0.01);
    assert!(relative_state_diff(&condensed, &mono) < 1e-10);
}

#[test]
fn trace_matrix_couples_only_element_neighbors() {
    let mesh = generate_structured(3, Rect::unit_square());
    let skeleton = build_skeleton(&mesh);
    let spaces = Spaces::new(0);
    let params = MaterialParams::preset_l1();
    let bc = BcSpec::dirichlet([0, 1, 2, 3], Arc::new(ZeroFields));
    let sys = HdgSystem::build(&mesh, &skeleton, spaces, params, bc, 0.05, HdgOptions::default())
        .unwrap();
    let t = sys.assemble_trace_matrix();
    // free index -> face
    let tpf = spaces.trace_per_face();
    let mut face_of_free = vec![usize::MAX; sys.dofs().n_free];
    for (d, s) in sys.dofs().status.iter().enumerate() {
        if let DofStatus::Free(i) = s {
            face_of_free[*i] = d / tpf;
        }
    }
    // face -> adjacent elements
    let share_element = |fa: usize, fb: usize| -> bool {
        let f1 = &skeleton.faces()[fa];
        let f2 = &skeleton.faces()[fb];
        let e1 = [Some(f1.left), f1.right];
        let e2 = [Some(f2.left), f2.right];
        e1.iter()
            .flatten()
            .any(|a| e2.iter().flatten().any(|b| a == b))
    };
    for r in 0..t.n_rows() {
        let (cols, _) = t.row(r);
        for &c in cols {
            assert!(
                share_element(face_of_free[r], face_of_free[c]),
                "coupling between faces not sharing an element"
            );
        }
    }
}

#[test]
fn mass_block_rayleigh_quotient_within_density_bounds() {
    // The H1 part of the energy is a Rayleigh quotient of the density matrix.
    let mesh = generate_structured(1, Rect::unit_square());
    let skeleton = build_skeleton(&mesh);
    let spaces = Spaces::new(2);
    let params = MaterialParams::preset_l1();
    let (lo, hi) = params.rho_eigen_bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let mut state = transient::random_state(&mesh, &skeleton, spaces, rng.gen(), 1.0);
        // zero the (sigma, p) block so only the velocity mass contributes
        for x in &mut state.vol {
            for i in spaces.sigma_offset()..spaces.vol_dim() {
                x[i] = 0.0;
            }
        }
        let (h1, _) = porohdg::hdg::energy_of(&params, spaces, &state);
        let l2: f64 = state.vol.iter().map(|x| x.norm_squared()).sum();
        let q = h1 / l2;
        assert!(q >= lo - 1e-10 && q <= hi + 1e-10, "rayleigh {q}");
    }
}

#[test]
fn free_surface_zero_state_zero_residual() {
    // With a zero state, free-surface and absorbing faces contribute nothing
    // to the right-hand side: one step from zero stays zero.
    let mesh = generate_structured(4, Rect::square(4800.0));
    let skeleton = build_skeleton(&mesh);
    let spaces = Spaces::new(1);
    let params = MaterialParams::preset_coeffs(0.0);
    let bc = BcSpec::new(
        [
            (porohdg::mesh::TAG_TOP, porohdg::BoundaryRole::FreeSurface),
            (porohdg::mesh::TAG_BOTTOM, porohdg::BoundaryRole::Absorbing),
            (porohdg::mesh::TAG_LEFT, porohdg::BoundaryRole::Absorbing),
            (porohdg::mesh::TAG_RIGHT, porohdg::BoundaryRole::Absorbing),
        ],
        Arc::new(ZeroFields),
    )
    .unwrap();
    let sys = HdgSystem::build(&mesh, &skeleton, spaces, params, bc, 0.01, HdgOptions::default())
        .unwrap();
    let state = porohdg::DGState::zero(spaces, mesh.n_elements(), skeleton.n_faces());
    let loads = transient::zero_loads(&sys);
    let next = sys.cn_step(&state, &loads, &loads, 0.01).unwrap();
    let (h1, h2) = sys.energy(&next);
    assert!(h1 + h2 < 1e-24, "zero state must stay zero, energy {}", h1 + h2);
}

#[test]
fn patch_solution_reproduced_one_step() {
    // Quick single-step version of the consistency property.
    for k in [0usize, 1] {
        let mesh = generate_structured(2, Rect::unit_square());
        let skeleton = build_skeleton(&mesh);
        let spaces = Spaces::new(k);
        let params = MaterialParams::preset_l1();
        let patch = Arc::new(PatchSolution::random(k, params.clone(), 42 + k as u64));
        let bc = BcSpec::dirichlet([0, 1, 2, 3], patch.clone());
        let problem = Problem {
            mesh: &mesh,
            skeleton: &skeleton,
            spaces,
            params: params.clone(),
            bc,
            options: HdgOptions::default(),
        };
        let time = TimeGrid::new(0.1, 2);
        let out = transient::run(&problem, patch.as_ref(), patch.as_ref(), &time, |_, _| Ok(()))
            .unwrap();
        let (e_sp, e_u) = porohdg::verification::error_norms(
            &mesh,
            spaces,
            &params,
            &out.state,
            patch.as_ref(),
            2 * (k + 1) + 6,
        );
        assert!(e_sp < 1e-9 && e_u < 1e-9, "k={k}: errors {e_sp}, {e_u}");
    }
}
