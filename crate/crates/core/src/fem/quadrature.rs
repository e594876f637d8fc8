//! Quadrature rules on the reference edge [0,1] and the reference triangle
//! {x, y >= 0, x + y <= 1}.
//!
//! Edge rules are Gauss-Legendre. Triangle rules are tensorized Gauss rules
//! under the collapsed (Duffy) map, so all weights are positive.

/// Gauss-Legendre nodes and weights on [-1, 1], exact up to degree 2n - 1.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule on the reference edge [0, 1].
#[derive(Debug, Clone)]
pub struct EdgeQuadrature {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl EdgeQuadrature {
    /// Smallest Gauss rule exact for all polynomials of degree <= `order`.
    pub fn with_exactness(order: usize) -> Self {
        let n = order / 2 + 1;
        let (x, w) = gauss_legendre(n);
        EdgeQuadrature {
            points: x.iter().map(|&t| 0.5 * (t + 1.0)).collect(),
            weights: w.iter().map(|&v| 0.5 * v).collect(),
            exactness_degree: 2 * n - 1,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Collapsed-coordinate rule on the reference triangle, exact for all
/// polynomials of total degree <= `exactness_degree`.
#[derive(Debug, Clone)]
pub struct TriQuadrature {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl TriQuadrature {
    pub fn with_exactness(order: usize) -> Self {
        // Duffy map (u, v) -> (u(1-v), v) turns a total-degree-m integrand
        // into degree m in u and m+1 in v (Jacobian 1-v).
        let q = (order + 2).div_ceil(2).max(1);
        let (gx, gw) = gauss_legendre(q);
        let u: Vec<f64> = gx.iter().map(|&t| 0.5 * (t + 1.0)).collect();
        let wu: Vec<f64> = gw.iter().map(|&v| 0.5 * v).collect();
        let mut points = Vec::with_capacity(q * q);
        let mut weights = Vec::with_capacity(q * q);
        for (j, &vj) in u.iter().enumerate() {
            for (i, &ui) in u.iter().enumerate() {
                points.push([ui * (1.0 - vj), vj]);
                weights.push(wu[i] * wu[j] * (1.0 - vj));
            }
        }
        TriQuadrature {
            points,
            weights,
            exactness_degree: (2 * q - 2).max(order),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrate a function over the reference triangle.
    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p[0], p[1]))
            .sum()
    }
}
