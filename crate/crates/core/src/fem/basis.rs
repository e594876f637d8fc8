//! Orthonormal modal bases on the reference triangle and the reference edge.
//!
//! The triangle basis is the Koornwinder construction in collapsed
//! coordinates, evaluated through division-free polynomial recurrences so
//! values and gradients are well defined on the whole closed triangle
//! (including the collapsed vertex). The reference mass matrix is the
//! identity, which keeps element mass matrices diagonal and makes L2
//! projection a plain quadrature sum.

use nalgebra::DMatrix;

/// dim P_l on a triangle.
pub fn tri_dim(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// dim P_l on an edge.
pub fn edge_dim(degree: usize) -> usize {
    degree + 1
}

/// Basis index of the (i, j) Koornwinder mode, ordered by total degree.
fn mode_index(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + i
}

/// Values (and optionally first derivatives) of the scaled Legendre factor
/// g_i(x, y) = (1-y)^i P_i((2x - (1-y)) / (1-y)) for i = 0..=deg.
///
/// The three-term Legendre recurrence multiplied through by (1-y)^i is
/// polynomial, so no collapsed-coordinate division appears:
///   (i+1) g_{i+1} = (2i+1)(2x+y-1) g_i - i (1-y)^2 g_{i-1}.
fn scaled_legendre(deg: usize, x: f64, y: f64, g: &mut [f64], gx: &mut [f64], gy: &mut [f64]) {
    let a = 2.0 * x + y - 1.0;
    let b2 = (1.0 - y) * (1.0 - y);
    g[0] = 1.0;
    gx[0] = 0.0;
    gy[0] = 0.0;
    if deg == 0 {
        return;
    }
    g[1] = a;
    gx[1] = 2.0;
    gy[1] = 1.0;
    for i in 1..deg {
        let c1 = (2 * i + 1) as f64;
        let c2 = i as f64;
        let inv = 1.0 / (i as f64 + 1.0);
        g[i + 1] = (c1 * a * g[i] - c2 * b2 * g[i - 1]) * inv;
        gx[i + 1] = (c1 * (2.0 * g[i] + a * gx[i]) - c2 * b2 * gx[i - 1]) * inv;
        gy[i + 1] =
            (c1 * (g[i] + a * gy[i]) - c2 * (b2 * gy[i - 1] - 2.0 * (1.0 - y) * g[i - 1])) * inv;
    }
}

/// Jacobi polynomials P_j^(alpha, 0) and their derivatives at `x`, for
/// j = 0..=deg, via the differentiated three-term recurrence.
fn jacobi_with_deriv(alpha: f64, deg: usize, x: f64, p: &mut [f64], dp: &mut [f64]) {
    p[0] = 1.0;
    dp[0] = 0.0;
    if deg == 0 {
        return;
    }
    p[1] = 0.5 * ((alpha + 2.0) * x + alpha);
    dp[1] = 0.5 * (alpha + 2.0);
    for n in 2..=deg {
        let nf = n as f64;
        let c0 = 2.0 * nf * (nf + alpha) * (2.0 * nf + alpha - 2.0);
        let c1 = (2.0 * nf + alpha - 1.0) * (2.0 * nf + alpha) * (2.0 * nf + alpha - 2.0);
        let c2 = (2.0 * nf + alpha - 1.0) * alpha * alpha;
        let c3 = 2.0 * (nf + alpha - 1.0) * (nf - 1.0) * (2.0 * nf + alpha);
        p[n] = ((c1 * x + c2) * p[n - 1] - c3 * p[n - 2]) / c0;
        dp[n] = ((c1 * x + c2) * dp[n - 1] + c1 * p[n - 1] - c3 * dp[n - 2]) / c0;
    }
}

/// Orthonormal triangle basis tabulated at a set of reference points.
///
/// Rows are basis functions (total-degree ordering), columns are points.
#[derive(Debug, Clone)]
pub struct TriTabulation {
    pub degree: usize,
    pub values: DMatrix<f64>,
    pub grad_x: DMatrix<f64>,
    pub grad_y: DMatrix<f64>,
}

impl TriTabulation {
    pub fn new(degree: usize, points: &[[f64; 2]]) -> Self {
        let nb = tri_dim(degree);
        let np = points.len();
        let mut values = DMatrix::zeros(nb, np);
        let mut grad_x = DMatrix::zeros(nb, np);
        let mut grad_y = DMatrix::zeros(nb, np);
        let mut g = vec![0.0; degree + 1];
        let mut gx = vec![0.0; degree + 1];
        let mut gy = vec![0.0; degree + 1];
        let mut pj = vec![0.0; degree + 1];
        let mut dpj = vec![0.0; degree + 1];
        for (q, pt) in points.iter().enumerate() {
            let (x, y) = (pt[0], pt[1]);
            scaled_legendre(degree, x, y, &mut g, &mut gx, &mut gy);
            let b = 2.0 * y - 1.0;
            for i in 0..=degree {
                let alpha = (2 * i + 1) as f64;
                let jmax = degree - i;
                jacobi_with_deriv(alpha, jmax, b, &mut pj, &mut dpj);
                for j in 0..=jmax {
                    let norm = (2.0 * alpha * (i + j + 1) as f64).sqrt();
                    let m = mode_index(i, j);
                    values[(m, q)] = norm * g[i] * pj[j];
                    grad_x[(m, q)] = norm * gx[i] * pj[j];
                    grad_y[(m, q)] = norm * (gy[i] * pj[j] + 2.0 * g[i] * dpj[j]);
                }
            }
        }
        TriTabulation {
            degree,
            values,
            grad_x,
            grad_y,
        }
    }

    pub fn n_basis(&self) -> usize {
        self.values.nrows()
    }
}

/// Orthonormal (shifted Legendre) basis on the reference edge [0, 1],
/// tabulated at a set of parameter values.
#[derive(Debug, Clone)]
pub struct EdgeTabulation {
    pub degree: usize,
    pub values: DMatrix<f64>,
}

impl EdgeTabulation {
    pub fn new(degree: usize, points: &[f64]) -> Self {
        let nb = edge_dim(degree);
        let mut values = DMatrix::zeros(nb, points.len());
        for (q, &t) in points.iter().enumerate() {
            let x = 2.0 * t - 1.0;
            let mut p0 = 1.0;
            let mut p1 = x;
            values[(0, q)] = 1.0;
            if degree >= 1 {
                values[(1, q)] = 3.0_f64.sqrt() * x;
            }
            for n in 2..=degree {
                let nf = n as f64;
                let p2 = ((2.0 * nf - 1.0) * x * p1 - (nf - 1.0) * p0) / nf;
                values[(n, q)] = (2.0 * nf + 1.0).sqrt() * p2;
                p0 = p1;
                p1 = p2;
            }
        }
        EdgeTabulation { degree, values }
    }

    pub fn n_basis(&self) -> usize {
        self.values.nrows()
    }
}
