//! Legacy ASCII VTK snapshots of the discontinuous fields: each element is
//! subtriangulated on the degree-(k+1) lattice with duplicated points, so no
//! inter-element smoothing happens.

use std::io::Write;
use std::path::Path;

use crate::fem::basis::TriTabulation;
use crate::hdg::{DGState, Spaces};
use crate::materials::MaterialParams;
use crate::mesh::Mesh;
use crate::wavebench::von_mises;

/// Lattice nodes {(a, b) / deg : a + b <= deg} in row-major (b, then a) order.
fn lattice(deg: usize) -> Vec<[f64; 2]> {
    let mut pts = Vec::new();
    for b in 0..=deg {
        for a in 0..=(deg - b) {
            pts.push([a as f64 / deg as f64, b as f64 / deg as f64]);
        }
    }
    pts
}

/// Triangulation of the lattice into upward and downward subtriangles.
fn lattice_cells(deg: usize) -> Vec<[usize; 3]> {
    let row_start = |b: usize| -> usize { (0..b).map(|j| deg + 2 - j).sum::<usize>() - b + b };
    // row b has deg + 1 - b nodes starting at offset sum_{j<b} (deg + 1 - j)
    let start = |b: usize| -> usize { (0..b).map(|j| deg + 1 - j).sum() };
    let _ = row_start;
    let mut cells = Vec::new();
    for b in 0..deg {
        for a in 0..(deg - b) {
            let n00 = start(b) + a;
            let n10 = start(b) + a + 1;
            let n01 = start(b + 1) + a;
            cells.push([n00, n10, n01]);
            if a + b < deg - 1 {
                let n11 = start(b + 1) + a + 1;
                cells.push([n10, n11, n01]);
            }
        }
    }
    cells
}

/// Write one snapshot with point fields u_s, u_f, p, solid pressure
/// p_s = -tr(sigma)/2, and the von Mises stress of sigma - alpha p I.
pub fn write_snapshot(
    path: &Path,
    mesh: &Mesh,
    spaces: Spaces,
    params: &MaterialParams,
    state: &DGState,
) -> std::io::Result<()> {
    let deg = spaces.k + 1;
    let nodes = lattice(deg);
    let cells = lattice_cells(deg);
    let t1 = TriTabulation::new(spaces.k + 1, &nodes);
    let t0 = TriTabulation::new(spaces.k, &nodes);
    let (n1, n0) = (spaces.n1(), spaces.n0());
    let so = spaces.sigma_offset();
    let npe = nodes.len();
    let n_elems = mesh.n_elements();
    let n_points = n_elems * npe;

    let mut points = Vec::with_capacity(n_points);
    let mut us = Vec::with_capacity(n_points);
    let mut uf = Vec::with_capacity(n_points);
    let mut p = Vec::with_capacity(n_points);
    let mut ps = Vec::with_capacity(n_points);
    let mut vm = Vec::with_capacity(n_points);

    for e in 0..n_elems {
        let map = mesh.element_map(e);
        let inv_sqrt = 1.0 / map.det.abs().sqrt();
        let x = &state.vol[e];
        for (q, r) in nodes.iter().enumerate() {
            points.push(map.to_physical(*r));
            let d1 = |off: usize| -> f64 {
                (0..n1).map(|i| x[off + i] * t1.values[(i, q)]).sum::<f64>() * inv_sqrt
            };
            let d0 = |off: usize| -> f64 {
                (0..n0).map(|i| x[off + i] * t0.values[(i, q)]).sum::<f64>() * inv_sqrt
            };
            us.push([d1(0), d1(n1)]);
            uf.push([d1(2 * n1), d1(3 * n1)]);
            let sig = crate::materials::Sym2::new(
                d0(so),
                d0(so + n0),
                d0(so + 2 * n0) * std::f64::consts::FRAC_1_SQRT_2,
            );
            let pr = d0(so + 3 * n0);
            p.push(pr);
            ps.push(-0.5 * sig.trace());
            let total = crate::materials::Sym2::new(
                sig.xx - params.alpha * pr,
                sig.yy - params.alpha * pr,
                sig.xy,
            );
            vm.push(von_mises(&total));
        }
    }

    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str(&format!("porohdg snapshot t={:.6e}\n", state.t));
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    out.push_str(&format!("POINTS {n_points} double\n"));
    for pt in &points {
        out.push_str(&format!("{:.9e} {:.9e} 0.0\n", pt[0], pt[1]));
    }
    let n_cells = n_elems * cells.len();
    out.push_str(&format!("CELLS {} {}\n", n_cells, 4 * n_cells));
    for e in 0..n_elems {
        let base = e * npe;
        for c in &cells {
            out.push_str(&format!("3 {} {} {}\n", base + c[0], base + c[1], base + c[2]));
        }
    }
    out.push_str(&format!("CELL_TYPES {n_cells}\n"));
    for _ in 0..n_cells {
        out.push_str("5\n");
    }
    out.push_str(&format!("POINT_DATA {n_points}\n"));
    out.push_str("VECTORS solid_velocity double\n");
    for v in &us {
        out.push_str(&format!("{:.9e} {:.9e} 0.0\n", v[0], v[1]));
    }
    out.push_str("VECTORS fluid_velocity double\n");
    for v in &uf {
        out.push_str(&format!("{:.9e} {:.9e} 0.0\n", v[0], v[1]));
    }
    for (name, data) in [
        ("pressure", &p),
        ("solid_pressure", &ps),
        ("von_mises", &vm),
    ] {
        out.push_str(&format!("SCALARS {name} double 1\nLOOKUP_TABLE default\n"));
        for v in data {
            out.push_str(&format!("{v:.9e}\n"));
        }
    }

    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())
}
