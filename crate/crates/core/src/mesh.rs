//! Conforming triangular meshes, their face skeletons, and element geometry.
//!
//! Meshes are immutable after construction and validated on creation:
//! consistent counterclockwise orientation, conforming edges (every interior
//! edge shared by exactly two triangles) and boundary tags covering exactly
//! the boundary edge set.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("i/o error reading mesh: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("mesh topology error: {0}")]
    Topology(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub vertices: [usize; 3],
    pub region: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: u32,
}

/// Axis-aligned rectangular domain.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
}

impl Rect {
    pub fn unit_square() -> Self {
        Rect {
            x0: 0.0,
            y0: 0.0,
            width: 1.0,
            height: 1.0,
        }
    }

    pub fn square(side: f64) -> Self {
        Rect {
            x0: 0.0,
            y0: 0.0,
            width: side,
            height: side,
        }
    }
}

/// Boundary tags assigned by [`generate_structured`], one per side.
pub const TAG_BOTTOM: u32 = 0;
pub const TAG_RIGHT: u32 = 1;
pub const TAG_TOP: u32 = 2;
pub const TAG_LEFT: u32 = 3;

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<Triangle>,
    boundary_edges: Vec<BoundaryEdge>,
}

impl Mesh {
    /// Build a mesh and validate every invariant. Triangles must already be
    /// counterclockwise; [`read_mesh`] repairs orientation before calling this.
    pub fn new(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<Triangle>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self, MeshError> {
        let mesh = Mesh {
            vertices,
            triangles,
            boundary_edges,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<(), MeshError> {
        let nv = self.vertices.len();
        for (e, t) in self.triangles.iter().enumerate() {
            for &v in &t.vertices {
                if v >= nv {
                    return Err(MeshError::Topology(format!(
                        "triangle {e} references vertex {v} out of range ({nv} vertices)"
                    )));
                }
            }
            if self.signed_area(e) <= 0.0 {
                return Err(MeshError::Topology(format!(
                    "triangle {e} has non-positive area"
                )));
            }
        }
        // Conformity: each undirected edge belongs to one or two triangles.
        let mut edge_count: HashMap<[usize; 2], usize> = HashMap::new();
        for t in &self.triangles {
            for i in 0..3 {
                let a = t.vertices[i];
                let b = t.vertices[(i + 1) % 3];
                let key = [a.min(b), a.max(b)];
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        for (key, count) in &edge_count {
            if *count > 2 {
                return Err(MeshError::Topology(format!(
                    "edge ({}, {}) is shared by {count} triangles",
                    key[0], key[1]
                )));
            }
        }
        // Boundary tags partition the set of single-triangle edges.
        let mut tagged: HashMap<[usize; 2], u32> = HashMap::new();
        for be in &self.boundary_edges {
            let key = [be.vertices[0].min(be.vertices[1]), be.vertices[0].max(be.vertices[1])];
            if be.vertices[0] >= nv || be.vertices[1] >= nv {
                return Err(MeshError::Topology(format!(
                    "boundary edge ({}, {}) out of vertex range",
                    be.vertices[0], be.vertices[1]
                )));
            }
            if tagged.insert(key, be.tag).is_some() {
                return Err(MeshError::Topology(format!(
                    "boundary edge ({}, {}) tagged twice",
                    key[0], key[1]
                )));
            }
            match edge_count.get(&key) {
                Some(1) => {}
                Some(_) => {
                    return Err(MeshError::Topology(format!(
                        "boundary tag on interior edge ({}, {})",
                        key[0], key[1]
                    )))
                }
                None => {
                    return Err(MeshError::Topology(format!(
                        "boundary tag on nonexistent edge ({}, {})",
                        key[0], key[1]
                    )))
                }
            }
        }
        for (key, count) in &edge_count {
            if *count == 1 && !tagged.contains_key(key) {
                return Err(MeshError::Topology(format!(
                    "boundary edge ({}, {}) has no tag",
                    key[0], key[1]
                )));
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    fn signed_area(&self, e: usize) -> f64 {
        let [a, b, c] = self.triangles[e].vertices;
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]))
    }

    pub fn area(&self, e: usize) -> f64 {
        self.signed_area(e)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.area(e)).sum()
    }

    /// Element diameter (longest edge).
    pub fn h_k(&self, e: usize) -> f64 {
        let [a, b, c] = self.triangles[e].vertices;
        let d = |p: [f64; 2], q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        d(pa, pb).max(d(pb, pc)).max(d(pc, pa))
    }

    pub fn max_h(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.h_k(e)).fold(0.0, f64::max)
    }

    /// Affine map from the reference triangle to element `e`.
    pub fn element_map(&self, e: usize) -> ElementMap {
        let [a, b, c] = self.triangles[e].vertices;
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        ElementMap::new(pa, pb, pc)
    }

    /// Locate the element containing a point; returns reference coordinates.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 2])> {
        for e in 0..self.n_elements() {
            let map = self.element_map(e);
            let r = map.to_reference(p);
            let tol = 1e-12;
            if r[0] >= -tol && r[1] >= -tol && r[0] + r[1] <= 1.0 + tol {
                return Some((e, r));
            }
        }
        None
    }

    /// Serialize in the ASCII mesh format accepted by [`read_mesh`].
    pub fn to_ascii(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "$vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:.17e} {:.17e}", v[0], v[1]);
        }
        let _ = writeln!(s, "$triangles {}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {} {}", t.vertices[0], t.vertices[1], t.vertices[2], t.region);
        }
        let _ = writeln!(s, "$boundary {}", self.boundary_edges.len());
        for b in &self.boundary_edges {
            let _ = writeln!(s, "{} {} {}", b.vertices[0], b.vertices[1], b.tag);
        }
        s
    }
}

/// Affine map x = v0 + J * (x_ref) from the reference triangle
/// {(0,0), (1,0), (0,1)} to a physical triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementMap {
    pub origin: [f64; 2],
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    inv: [[f64; 2]; 2],
}

impl ElementMap {
    pub fn new(v0: [f64; 2], v1: [f64; 2], v2: [f64; 2]) -> Self {
        let jac = [
            [v1[0] - v0[0], v2[0] - v0[0]],
            [v1[1] - v0[1], v2[1] - v0[1]],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        ElementMap {
            origin: v0,
            jac,
            det,
            inv,
        }
    }

    pub fn to_physical(&self, r: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.jac[0][0] * r[0] + self.jac[0][1] * r[1],
            self.origin[1] + self.jac[1][0] * r[0] + self.jac[1][1] * r[1],
        ]
    }

    pub fn to_reference(&self, p: [f64; 2]) -> [f64; 2] {
        let d = [p[0] - self.origin[0], p[1] - self.origin[1]];
        [
            self.inv[0][0] * d[0] + self.inv[0][1] * d[1],
            self.inv[1][0] * d[0] + self.inv[1][1] * d[1],
        ]
    }

    /// Push a reference gradient to the physical gradient: J^{-T} grad_ref.
    pub fn grad_to_physical(&self, gr: [f64; 2]) -> [f64; 2] {
        [
            self.inv[0][0] * gr[0] + self.inv[1][0] * gr[1],
            self.inv[0][1] * gr[0] + self.inv[1][1] * gr[1],
        ]
    }
}

/// Uniform n x n grid of squares, each split into two triangles by the
/// bottom-left to top-right diagonal. Boundary edges tagged by side.
pub fn generate_structured(n: usize, domain: Rect) -> Mesh {
    assert!(n >= 1, "structured mesh needs n >= 1");
    let dx = domain.width / n as f64;
    let dy = domain.height / n as f64;
    let vid = |ix: usize, iy: usize| iy * (n + 1) + ix;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for iy in 0..=n {
        for ix in 0..=n {
            vertices.push([domain.x0 + ix as f64 * dx, domain.y0 + iy as f64 * dy]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for iy in 0..n {
        for ix in 0..n {
            let a = vid(ix, iy);
            let b = vid(ix + 1, iy);
            let c = vid(ix + 1, iy + 1);
            let d = vid(ix, iy + 1);
            triangles.push(Triangle {
                vertices: [a, b, c],
                region: 0,
            });
            triangles.push(Triangle {
                vertices: [a, c, d],
                region: 0,
            });
        }
    }
    let mut boundary_edges = Vec::with_capacity(4 * n);
    for i in 0..n {
        boundary_edges.push(BoundaryEdge {
            vertices: [vid(i, 0), vid(i + 1, 0)],
            tag: TAG_BOTTOM,
        });
        boundary_edges.push(BoundaryEdge {
            vertices: [vid(n, i), vid(n, i + 1)],
            tag: TAG_RIGHT,
        });
        boundary_edges.push(BoundaryEdge {
            vertices: [vid(i, n), vid(i + 1, n)],
            tag: TAG_TOP,
        });
        boundary_edges.push(BoundaryEdge {
            vertices: [vid(0, i), vid(0, i + 1)],
            tag: TAG_LEFT,
        });
    }
    Mesh::new(vertices, triangles, boundary_edges).expect("structured mesh is always valid")
}

/// A parsed mesh plus the number of orientation repairs applied on load.
#[derive(Debug)]
pub struct MeshLoad {
    pub mesh: Mesh,
    pub repaired_orientation: usize,
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<MeshLoad, MeshError> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text)
}

/// Parse the ASCII mesh format:
/// ```text
/// $vertices N      (then N lines: x y)
/// $triangles M     (then M lines: i j k region_tag)
/// $boundary B      (then B lines: i j boundary_tag)
/// ```
/// Clockwise triangles are accepted and repaired; the repair count is
/// reported in the result.
pub fn parse_mesh(text: &str) -> Result<MeshLoad, MeshError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut next = |what: &str| {
        lines.next().ok_or_else(|| MeshError::Parse {
            line: 0,
            msg: format!("unexpected end of file, expected {what}"),
        })
    };

    let section = |line: (usize, &str), name: &str| -> Result<usize, MeshError> {
        let (no, l) = line;
        let mut parts = l.split_whitespace();
        let head = parts.next().unwrap_or("");
        if head != name {
            return Err(MeshError::Parse {
                line: no + 1,
                msg: format!("expected section {name}, found {head:?}"),
            });
        }
        parts
            .next()
            .and_then(|c| c.parse::<usize>().ok())
            .ok_or(MeshError::Parse {
                line: no + 1,
                msg: format!("section {name} needs a count"),
            })
    };

    let nv = section(next("$vertices")?, "$vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (no, l) = next("vertex line")?;
        let mut it = l.split_whitespace().map(|t| t.parse::<f64>());
        match (it.next(), it.next()) {
            (Some(Ok(x)), Some(Ok(y))) => vertices.push([x, y]),
            _ => {
                return Err(MeshError::Parse {
                    line: no + 1,
                    msg: "vertex line must be two floats".into(),
                })
            }
        }
    }

    let nt = section(next("$triangles")?, "$triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (no, l) = next("triangle line")?;
        let toks: Vec<_> = l.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(MeshError::Parse {
                line: no + 1,
                msg: "triangle line must be: i j k region_tag".into(),
            });
        }
        let parse = |t: &str| -> Result<usize, MeshError> {
            t.parse().map_err(|_| MeshError::Parse {
                line: no + 1,
                msg: format!("bad index {t:?}"),
            })
        };
        triangles.push(Triangle {
            vertices: [parse(toks[0])?, parse(toks[1])?, parse(toks[2])?],
            region: parse(toks[3])? as u32,
        });
    }

    let nb = section(next("$boundary")?, "$boundary")?;
    let mut boundary_edges = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (no, l) = next("boundary line")?;
        let toks: Vec<_> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(MeshError::Parse {
                line: no + 1,
                msg: "boundary line must be: i j boundary_tag".into(),
            });
        }
        let parse = |t: &str| -> Result<usize, MeshError> {
            t.parse().map_err(|_| MeshError::Parse {
                line: no + 1,
                msg: format!("bad index {t:?}"),
            })
        };
        boundary_edges.push(BoundaryEdge {
            vertices: [parse(toks[0])?, parse(toks[1])?],
            tag: parse(toks[2])? as u32,
        });
    }

    // Repair clockwise triangles before full validation.
    let mut repaired = 0;
    for t in &mut triangles {
        let [a, b, c] = t.vertices;
        let (pa, pb, pc) = (
            *vertices.get(a).ok_or_else(|| MeshError::Topology(format!("vertex {a} out of range")))?,
            *vertices.get(b).ok_or_else(|| MeshError::Topology(format!("vertex {b} out of range")))?,
            *vertices.get(c).ok_or_else(|| MeshError::Topology(format!("vertex {c} out of range")))?,
        );
        let area2 = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]);
        if area2 < 0.0 {
            t.vertices.swap(1, 2);
            repaired += 1;
        }
    }

    Ok(MeshLoad {
        mesh: Mesh::new(vertices, triangles, boundary_edges)?,
        repaired_orientation: repaired,
    })
}

/// One face (edge) of the skeleton. `vertices` is the stored orientation
/// used for the shared trace parameterization t in [0, 1]; the unit normal
/// is outward from the left element.
#[derive(Debug, Clone, Copy)]
pub struct Face {
    pub vertices: [usize; 2],
    pub p0: [f64; 2],
    pub p1: [f64; 2],
    pub left: usize,
    pub right: Option<usize>,
    pub tag: Option<u32>,
    pub length: f64,
    pub normal: [f64; 2],
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

/// Per-element view of one of its faces: the global face, whether the
/// element is on the left (stored-normal) side, and the local reference
/// indices (la, lb) of the face endpoints in stored order.
#[derive(Debug, Clone, Copy)]
pub struct ElemFace {
    pub face: usize,
    pub is_left: bool,
    pub local: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct Skeleton {
    faces: Vec<Face>,
    elem_faces: Vec<[ElemFace; 3]>,
    gamma: f64,
}

impl Skeleton {
    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn elem_faces(&self, e: usize) -> &[ElemFace; 3] {
        &self.elem_faces[e]
    }

    /// Observed local quasi-uniformity constant max h_K / h_F.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn interior_count(&self) -> usize {
        self.faces.iter().filter(|f| !f.is_boundary()).count()
    }

    pub fn boundary_count(&self) -> usize {
        self.faces.iter().filter(|f| f.is_boundary()).count()
    }
}

/// Build the face skeleton: classify edges, orient normals from the left
/// element, and compute per-face diameters and the quasi-uniformity constant.
pub fn build_skeleton(mesh: &Mesh) -> Skeleton {
    #[derive(Default, Clone)]
    struct Adj {
        elems: Vec<(usize, usize)>, // (element, local edge index of its traversal)
    }
    let mut edge_map: HashMap<[usize; 2], Adj> = HashMap::new();
    for (e, t) in mesh.triangles().iter().enumerate() {
        for le in 0..3 {
            let a = t.vertices[le];
            let b = t.vertices[(le + 1) % 3];
            let key = [a.min(b), a.max(b)];
            edge_map.entry(key).or_default().elems.push((e, le));
        }
    }
    let mut tag_map: HashMap<[usize; 2], u32> = HashMap::new();
    for be in mesh.boundary_edges() {
        let key = [be.vertices[0].min(be.vertices[1]), be.vertices[0].max(be.vertices[1])];
        tag_map.insert(key, be.tag);
    }

    // Deterministic face ordering: sort by canonical vertex pair.
    let mut keys: Vec<[usize; 2]> = edge_map.keys().copied().collect();
    keys.sort_unstable();

    let ref_vertices = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let _ = ref_vertices;
    let mut faces = Vec::with_capacity(keys.len());
    let mut elem_faces: Vec<[Option<ElemFace>; 3]> = vec![[None; 3]; mesh.n_elements()];

    for key in keys {
        let adj = &edge_map[&key];
        // Left element: the lowest-indexed adjacent element; the stored
        // orientation is its traversal direction.
        let &(left, le_left) = adj
            .elems
            .iter()
            .min_by_key(|(e, _)| *e)
            .expect("edge with no elements");
        let tl = mesh.triangles()[left].vertices;
        let v0 = tl[le_left];
        let v1 = tl[(le_left + 1) % 3];
        let right = adj.elems.iter().find(|(e, _)| *e != left).map(|&(e, _)| e);
        let (p0, p1) = (mesh.vertices()[v0], mesh.vertices()[v1]);
        let d = [p1[0] - p0[0], p1[1] - p0[1]];
        let length = (d[0] * d[0] + d[1] * d[1]).sqrt();
        // Outward normal of the left element along its CCW traversal.
        let normal = [d[1] / length, -d[0] / length];
        let face_id = faces.len();
        faces.push(Face {
            vertices: [v0, v1],
            p0,
            p1,
            left,
            right,
            tag: tag_map.get(&key).copied(),
            length,
            normal,
        });
        for &(e, le) in &adj.elems {
            let t = mesh.triangles()[e].vertices;
            // Local reference indices of (v0, v1) within element e.
            let loc = |v: usize| t.iter().position(|&x| x == v).expect("vertex in element");
            elem_faces[e][le] = Some(ElemFace {
                face: face_id,
                is_left: e == left,
                local: [loc(v0), loc(v1)],
            });
        }
    }

    let elem_faces: Vec<[ElemFace; 3]> = elem_faces
        .into_iter()
        .map(|efs| {
            [
                efs[0].expect("every local edge has a face"),
                efs[1].expect("every local edge has a face"),
                efs[2].expect("every local edge has a face"),
            ]
        })
        .collect();

    let mut gamma: f64 = 0.0;
    for (e, efs) in elem_faces.iter().enumerate() {
        let hk = mesh.h_k(e);
        for ef in efs {
            gamma = gamma.max(hk / faces[ef.face].length);
        }
    }

    Skeleton {
        faces,
        elem_faces,
        gamma,
    }
}
