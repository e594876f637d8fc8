//! Static-pattern sparse LU under a geometric nested-dissection ordering.
//!
//! Built for the condensed trace systems of large meshes, where
//! minimum-degree column orderings produce prohibitive fill. Unknowns are
//! grouped into supernodes (one per mesh face) with a physical coordinate
//! each; recursive coordinate bisection orders the supernodes, separators
//! last. The factorization uses the symbolic Cholesky pattern of the
//! symmetrized matrix and performs no row pivoting: the per-step matrices
//! have symmetric positive definite real part, so every leading principal
//! submatrix is nonsingular. A zero-pivot guard and the caller's recovery
//! probe protect against misuse on general matrices.

use nalgebra::DVector;

use super::{SolverError, SparseMatrix};

/// Supernode grouping and geometry used by the fill-reducing ordering.
#[derive(Debug, Clone)]
pub struct OrderingHints {
    /// Supernode id of each unknown (ids in 0..coords.len()).
    pub group_of: Vec<u32>,
    /// One representative coordinate per supernode.
    pub coords: Vec<[f64; 2]>,
}

pub struct NdLu {
    n: usize,
    /// Old index of the unknown at permuted position p.
    perm: Vec<u32>,
    // Column-compressed factors with a shared symmetric pattern:
    // strict upper U(k, j), k < j, and strict lower L(i, j), i > j, with
    // unit-diagonal L and the diagonal of U stored separately.
    up_ptr: Vec<usize>,
    up_idx: Vec<u32>,
    up_val: Vec<f64>,
    lo_ptr: Vec<usize>,
    lo_idx: Vec<u32>,
    lo_val: Vec<f64>,
    diag: Vec<f64>,
}

/// Recursive coordinate bisection of the supernode graph; returns the
/// supernode elimination order (separators after their subdomains).
fn nested_dissection(adj_ptr: &[usize], adj_idx: &[u32], coords: &[[f64; 2]]) -> Vec<u32> {
    let n = coords.len();
    let mut order = Vec::with_capacity(n);
    let mut side = vec![false; n];
    let mut inset = vec![false; n];
    enum Task {
        Split(Vec<u32>),
        Emit(Vec<u32>),
    }
    let mut stack = vec![Task::Split((0..n as u32).collect())];
    while let Some(task) = stack.pop() {
        match task {
            Task::Emit(sep) => order.extend(sep),
            Task::Split(nodes) => {
                if nodes.len() <= 32 {
                    order.extend(nodes);
                    continue;
                }
                let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
                for &nd in &nodes {
                    for a in 0..2 {
                        lo[a] = lo[a].min(coords[nd as usize][a]);
                        hi[a] = hi[a].max(coords[nd as usize][a]);
                    }
                }
                let axis = usize::from(hi[1] - lo[1] > hi[0] - lo[0]);
                let mut vals: Vec<f64> =
                    nodes.iter().map(|&nd| coords[nd as usize][axis]).collect();
                let mid = vals.len() / 2;
                vals.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap());
                let med = vals[mid];
                let mut left_count = 0usize;
                for &nd in &nodes {
                    let l = coords[nd as usize][axis] < med;
                    side[nd as usize] = l;
                    left_count += usize::from(l);
                }
                if left_count == 0 || left_count == nodes.len() {
                    for (pos, &nd) in nodes.iter().enumerate() {
                        side[nd as usize] = pos < nodes.len() / 2;
                    }
                }
                for &nd in &nodes {
                    inset[nd as usize] = true;
                }
                let mut left = Vec::new();
                let mut right = Vec::new();
                let mut sep = Vec::new();
                for &nd in &nodes {
                    let u = nd as usize;
                    if side[u] {
                        let nbrs = &adj_idx[adj_ptr[u]..adj_ptr[u + 1]];
                        if nbrs.iter().any(|&v| inset[v as usize] && !side[v as usize]) {
                            sep.push(nd);
                        } else {
                            left.push(nd);
                        }
                    } else {
                        right.push(nd);
                    }
                }
                for &nd in &nodes {
                    inset[nd as usize] = false;
                }
                if left.is_empty() || right.is_empty() {
                    order.extend(left);
                    order.extend(right);
                    order.extend(sep);
                    continue;
                }
                stack.push(Task::Emit(sep));
                stack.push(Task::Split(right));
                stack.push(Task::Split(left));
            }
        }
    }
    order
}

impl NdLu {
    pub fn factorize(a: SparseMatrix, hints: &OrderingHints) -> Result<Self, SolverError> {
        let n = a.n_rows();
        assert_eq!(a.n_cols(), n);
        assert_eq!(hints.group_of.len(), n);
        let n_groups = hints.coords.len();

        // Supernode adjacency from the scalar pattern.
        let mut edges: Vec<(u32, u32)> = Vec::new();
        for r in 0..n {
            let gr = hints.group_of[r];
            let (cols, _) = a.row(r);
            for &c in cols {
                let gc = hints.group_of[c];
                if gr != gc {
                    edges.push((gr, gc));
                    edges.push((gc, gr));
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut adj_ptr = vec![0usize; n_groups + 1];
        for &(g, _) in &edges {
            adj_ptr[g as usize + 1] += 1;
        }
        for g in 0..n_groups {
            adj_ptr[g + 1] += adj_ptr[g];
        }
        let adj_idx: Vec<u32> = edges.iter().map(|&(_, h)| h).collect();
        drop(edges);

        let group_order = nested_dissection(&adj_ptr, &adj_idx, &hints.coords);
        drop((adj_ptr, adj_idx));

        // Expand to the scalar permutation, keeping each supernode's
        // unknowns contiguous in their original relative order.
        let mut members: Vec<Vec<u32>> = vec![Vec::new(); n_groups];
        for (i, &g) in hints.group_of.iter().enumerate() {
            members[g as usize].push(i as u32);
        }
        let mut perm = Vec::with_capacity(n);
        for &g in &group_order {
            perm.extend_from_slice(&members[g as usize]);
        }
        let mut iperm = vec![0u32; n];
        for (p, &old) in perm.iter().enumerate() {
            iperm[old as usize] = p as u32;
        }
        drop(members);

        // Permuted matrix in column-compressed form (columns unsorted), and
        // the strict-upper symmetrized pattern per column.
        let mut ap_count = vec![0usize; n + 1];
        for r in 0..n {
            let (cols, _) = a.row(r);
            for &c in cols {
                ap_count[iperm[c] as usize + 1] += 1;
            }
        }
        for j in 0..n {
            ap_count[j + 1] += ap_count[j];
        }
        let ap_ptr = ap_count.clone();
        let nnz = a.nnz();
        let mut ap_idx = vec![0u32; nnz];
        let mut ap_val = vec![0f64; nnz];
        {
            let mut cursor = ap_ptr.clone();
            for r in 0..n {
                let pr = iperm[r];
                let (cols, vals) = a.row(r);
                for (&c, &v) in cols.iter().zip(vals) {
                    let pc = iperm[c] as usize;
                    let dst = cursor[pc];
                    ap_idx[dst] = pr;
                    ap_val[dst] = v;
                    cursor[pc] += 1;
                }
            }
        }

        drop(a);

        let mut sym_up: Vec<Vec<u32>> = vec![Vec::new(); n];
        for j in 0..n {
            for t in ap_ptr[j]..ap_ptr[j + 1] {
                let i = ap_idx[t] as usize;
                match i.cmp(&j) {
                    std::cmp::Ordering::Less => sym_up[j].push(i as u32),
                    std::cmp::Ordering::Greater => sym_up[i].push(j as u32),
                    std::cmp::Ordering::Equal => {}
                }
            }
        }
        for col in &mut sym_up {
            col.sort_unstable();
            col.dedup();
        }

        // Symbolic factorization: row patterns of L via elimination-tree
        // walks (equal to the strict-upper column patterns of the factor),
        // with lower column counts accumulated on the fly.
        let mut parent = vec![u32::MAX; n];
        let mut ancestor = vec![u32::MAX; n];
        let mut up_ptr = vec![0usize; n + 1];
        let mut up_idx: Vec<u32> = Vec::new();
        let mut lo_count = vec![0usize; n];
        for j in 0..n {
            let start = up_idx.len();
            for &k0 in &sym_up[j] {
                let mut k = k0 as usize;
                // walk toward the root, stopping at nodes already reached
                while k != j && ancestor[k] != j as u32 {
                    up_idx.push(k as u32);
                    lo_count[k] += 1;
                    ancestor[k] = j as u32;
                    if parent[k] == u32::MAX {
                        parent[k] = j as u32;
                    }
                    k = parent[k] as usize;
                }
            }
            up_idx[start..].sort_unstable();
            up_ptr[j + 1] = up_idx.len();
        }
        drop(sym_up);
        drop(ancestor);
        drop(parent);

        let total_lower: usize = lo_count.iter().sum();
        let mut lo_ptr = vec![0usize; n + 1];
        for j in 0..n {
            lo_ptr[j + 1] = lo_ptr[j] + lo_count[j];
        }
        let mut lo_idx = vec![0u32; total_lower];
        {
            let mut cursor = lo_ptr.clone();
            // row i of the upper pattern mirrors to (i, k) in the lower part;
            // processing i in ascending order leaves columns sorted.
            for i in 0..n {
                for t in up_ptr[i]..up_ptr[i + 1] {
                    let k = up_idx[t] as usize;
                    lo_idx[cursor[k]] = i as u32;
                    cursor[k] += 1;
                }
            }
        }

        // Numeric left-looking factorization over the static pattern.
        let mut up_val = vec![0f64; up_idx.len()];
        let mut lo_val = vec![0f64; lo_idx.len()];
        let mut diag = vec![0f64; n];
        let mut w = vec![0f64; n];
        let mut max_abs = 0f64;
        for &v in &ap_val {
            max_abs = max_abs.max(v.abs());
        }
        let pivot_floor = max_abs * 1e-20;
        for j in 0..n {
            for t in ap_ptr[j]..ap_ptr[j + 1] {
                w[ap_idx[t] as usize] += ap_val[t];
            }
            for t in up_ptr[j]..up_ptr[j + 1] {
                let k = up_idx[t] as usize;
                let ukj = w[k];
                up_val[t] = ukj;
                if ukj != 0.0 {
                    for s in lo_ptr[k]..lo_ptr[k + 1] {
                        w[lo_idx[s] as usize] -= lo_val[s] * ukj;
                    }
                }
            }
            let d = w[j];
            if !d.is_finite() || d.abs() <= pivot_floor {
                return Err(SolverError::Singular(format!(
                    "zero or non-finite pivot {d:.3e} at permuted unknown {j}"
                )));
            }
            diag[j] = d;
            for t in lo_ptr[j]..lo_ptr[j + 1] {
                let i = lo_idx[t] as usize;
                lo_val[t] = w[i] / d;
                w[i] = 0.0;
            }
            for t in up_ptr[j]..up_ptr[j + 1] {
                w[up_idx[t] as usize] = 0.0;
            }
            w[j] = 0.0;
        }

        Ok(NdLu {
            n,
            perm,
            up_ptr,
            up_idx,
            up_val,
            lo_ptr,
            lo_idx,
            lo_val,
            diag,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn factor_nnz(&self) -> usize {
        self.up_idx.len() + self.lo_idx.len() + self.n
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut x = DVector::zeros(n);
        for p in 0..n {
            x[p] = b[self.perm[p] as usize];
        }
        // forward: (unit lower) L y = b
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for t in self.lo_ptr[j]..self.lo_ptr[j + 1] {
                    x[self.lo_idx[t] as usize] -= self.lo_val[t] * xj;
                }
            }
        }
        // backward: U x = y with U = D + strict upper
        for j in (0..n).rev() {
            let xj = x[j] / self.diag[j];
            x[j] = xj;
            if xj != 0.0 {
                for t in self.up_ptr[j]..self.up_ptr[j + 1] {
                    x[self.up_idx[t] as usize] -= self.up_val[t] * xj;
                }
            }
        }
        let mut out = DVector::zeros(n);
        for p in 0..n {
            out[self.perm[p] as usize] = x[p];
        }
        out
    }
}
