//! Immutable tabulation caches keyed by (degree, rule) and, for traces of
//! the volume basis, by the local edge configuration. Population happens at
//! most once per key; readers share `Arc`s.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::basis::{EdgeTabulation, TriTabulation};
use super::quadrature::{EdgeQuadrature, TriQuadrature};

pub struct VolumeTables {
    pub quad: TriQuadrature,
    pub tab: TriTabulation,
}

pub struct EdgeTables {
    pub quad: EdgeQuadrature,
    pub tab: EdgeTabulation,
}

/// Reference vertices of the unit triangle, indexed like local vertices.
pub const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

fn volume_cache() -> &'static Mutex<HashMap<(usize, usize), Arc<VolumeTables>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<VolumeTables>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn edge_cache() -> &'static Mutex<HashMap<(usize, usize), Arc<EdgeTables>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<EdgeTables>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

type TraceKey = (usize, usize, usize, usize);

fn trace_cache() -> &'static Mutex<HashMap<TraceKey, Arc<TriTabulation>>> {
    static CACHE: OnceLock<Mutex<HashMap<TraceKey, Arc<TriTabulation>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Triangle rule of the given exactness plus the basis tabulated at its points.
pub fn volume(degree: usize, order: usize) -> Arc<VolumeTables> {
    let mut cache = volume_cache().lock().unwrap();
    cache
        .entry((degree, order))
        .or_insert_with(|| {
            let quad = TriQuadrature::with_exactness(order);
            let tab = TriTabulation::new(degree, &quad.points);
            Arc::new(VolumeTables { quad, tab })
        })
        .clone()
}

/// Edge rule of the given exactness plus the edge basis at its points.
pub fn edge(degree: usize, order: usize) -> Arc<EdgeTables> {
    let mut cache = edge_cache().lock().unwrap();
    cache
        .entry((degree, order))
        .or_insert_with(|| {
            let quad = EdgeQuadrature::with_exactness(order);
            let tab = EdgeTabulation::new(degree, &quad.points);
            Arc::new(EdgeTables { quad, tab })
        })
        .clone()
}

/// Volume basis tabulated at the edge-rule points of the reference edge from
/// local vertex `la` to `lb` (the shared face parameterization pulled back).
pub fn volume_trace(degree: usize, order: usize, la: usize, lb: usize) -> Arc<TriTabulation> {
    let mut cache = trace_cache().lock().unwrap();
    cache
        .entry((degree, order, la, lb))
        .or_insert_with(|| {
            let quad = EdgeQuadrature::with_exactness(order);
            let a = REF_VERTICES[la];
            let b = REF_VERTICES[lb];
            let pts: Vec<[f64; 2]> = quad
                .points
                .iter()
                .map(|&t| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])])
                .collect();
            Arc::new(TriTabulation::new(degree, &pts))
        })
        .clone()
}
