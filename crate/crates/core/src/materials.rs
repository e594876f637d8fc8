//! Physical coefficients of the poroelastic medium: the density matrix R,
//! the isotropic stiffness C and its inverse A, and the wave speeds used by
//! the absorbing boundary condition.

use nalgebra::{Matrix2, Vector2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("invalid material parameter: {0}")]
    Invalid(String),
    #[error("wave speeds need solid/fluid provenance data (rho_s, phi, nu): {0}")]
    MissingProvenance(String),
    #[error("degenerate eigenproblem: {0}")]
    Degenerate(String),
}

/// Symmetric 2x2 tensor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl Sym2 {
    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        Sym2 { xx, yy, xy }
    }

    pub fn identity() -> Self {
        Sym2::new(1.0, 1.0, 0.0)
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Component-wise inner product sigma : tau.
    pub fn ddot(&self, other: &Sym2) -> f64 {
        self.xx * other.xx + self.yy * other.yy + 2.0 * self.xy * other.xy
    }

    pub fn scale(&self, a: f64) -> Sym2 {
        Sym2::new(a * self.xx, a * self.yy, a * self.xy)
    }

    pub fn add(&self, other: &Sym2) -> Sym2 {
        Sym2::new(self.xx + other.xx, self.yy + other.yy, self.xy + other.xy)
    }

    pub fn sub(&self, other: &Sym2) -> Sym2 {
        Sym2::new(self.xx - other.xx, self.yy - other.yy, self.xy - other.xy)
    }

    /// Apply to a vector: (sigma n).
    pub fn dot(&self, n: [f64; 2]) -> [f64; 2] {
        [
            self.xx * n[0] + self.xy * n[1],
            self.xy * n[0] + self.yy * n[1],
        ]
    }
}

/// Optional provenance fields from which the composite densities and the
/// mobility resistance derive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub rho_s: f64,
    pub rho_f: f64,
    pub phi: f64,
    pub nu: f64,
    pub eta: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams {
    pub rho11: f64,
    pub rho12: f64,
    pub rho22: f64,
    pub mu: f64,
    pub lambda: f64,
    pub s: f64,
    pub alpha: f64,
    pub beta: f64,
    pub provenance: Option<Provenance>,
}

impl MaterialParams {
    pub fn new(
        rho11: f64,
        rho12: f64,
        rho22: f64,
        mu: f64,
        lambda: f64,
        s: f64,
        alpha: f64,
        beta: f64,
    ) -> Result<Self, MaterialError> {
        let p = MaterialParams {
            rho11,
            rho12,
            rho22,
            mu,
            lambda,
            s,
            alpha,
            beta,
            provenance: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Derive rho_ij and beta from solid/fluid provenance data.
    pub fn from_provenance(
        prov: Provenance,
        mu: f64,
        lambda: f64,
        s: f64,
        alpha: f64,
    ) -> Result<Self, MaterialError> {
        if !(prov.phi > 0.0 && prov.phi < 1.0) {
            return Err(MaterialError::Invalid(format!("porosity phi = {}", prov.phi)));
        }
        if prov.nu < 1.0 {
            return Err(MaterialError::Invalid(format!("tortuosity nu = {}", prov.nu)));
        }
        if prov.kappa <= 0.0 {
            return Err(MaterialError::Invalid(format!("permeability kappa = {}", prov.kappa)));
        }
        if prov.eta < 0.0 {
            return Err(MaterialError::Invalid(format!("viscosity eta = {}", prov.eta)));
        }
        let p = MaterialParams {
            rho11: prov.phi * prov.rho_f + (1.0 - prov.phi) * prov.rho_s,
            rho12: prov.rho_f,
            rho22: prov.nu / prov.phi * prov.rho_f,
            mu,
            lambda,
            s,
            alpha,
            beta: prov.eta / prov.kappa,
            provenance: Some(prov),
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), MaterialError> {
        if self.rho11 <= 0.0 || self.rho11 * self.rho22 - self.rho12 * self.rho12 <= 0.0 {
            return Err(MaterialError::Invalid(format!(
                "density matrix [[{}, {}], [{}, {}]] is not positive definite",
                self.rho11, self.rho12, self.rho12, self.rho22
            )));
        }
        if self.mu <= 0.0 {
            return Err(MaterialError::Invalid(format!("mu = {}", self.mu)));
        }
        if self.lambda < 0.0 {
            return Err(MaterialError::Invalid(format!("lambda = {}", self.lambda)));
        }
        if self.s <= 0.0 {
            return Err(MaterialError::Invalid(format!("s = {}", self.s)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(MaterialError::Invalid(format!("alpha = {}", self.alpha)));
        }
        if self.beta < 0.0 {
            return Err(MaterialError::Invalid(format!("beta = {}", self.beta)));
        }
        Ok(())
    }

    /// First parameter set of the convergence study.
    pub fn preset_l1() -> Self {
        MaterialParams::new(10.0, 10.0, 20.0, 50.0, 100.0, 1.0, 1.0, 1.0).unwrap()
    }

    /// Nearly incompressible parameter set (large lambda, small storage).
    pub fn preset_l2() -> Self {
        MaterialParams::new(10.0, 10.0, 20.0, 50.0, 1e8, 1e-4, 1.0, 1.0).unwrap()
    }

    /// Wave-propagation benchmark medium; `eta` is the fluid viscosity
    /// (0 for the inviscid case, 0.0015 for the viscous one).
    pub fn preset_coeffs(eta: f64) -> Self {
        MaterialParams::from_provenance(
            Provenance {
                rho_s: 2200.0,
                rho_f: 950.0,
                phi: 0.4,
                nu: 2.0,
                eta,
                kappa: 1e-12,
            },
            4.3738e9,
            7.2073e9,
            1.462e-10,
            0.0290,
        )
        .unwrap()
    }

    pub fn density_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.rho11, self.rho12, self.rho12, self.rho22)
    }

    /// Analytic eigenvalue bounds (rho_minus, rho_plus) of the density matrix.
    pub fn rho_eigen_bounds(&self) -> (f64, f64) {
        let tr = self.rho11 + self.rho22;
        let det = self.rho11 * self.rho22 - self.rho12 * self.rho12;
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        (tr / 2.0 - disc, tr / 2.0 + disc)
    }

    /// Hooke's law: C eps = 2 mu eps + lambda tr(eps) I.
    pub fn apply_c(&self, eps: &Sym2) -> Sym2 {
        let lt = self.lambda * eps.trace();
        Sym2::new(
            2.0 * self.mu * eps.xx + lt,
            2.0 * self.mu * eps.yy + lt,
            2.0 * self.mu * eps.xy,
        )
    }

    /// Compliance A = C^{-1} in two dimensions.
    pub fn apply_a(&self, sigma: &Sym2) -> Sym2 {
        let kl = self.lambda / (2.0 * self.mu + 2.0 * self.lambda);
        let t = kl * sigma.trace();
        Sym2::new(
            (sigma.xx - t) / (2.0 * self.mu),
            (sigma.yy - t) / (2.0 * self.mu),
            sigma.xy / (2.0 * self.mu),
        )
    }

    /// Coefficients (1 / 2mu, lambda / (2mu + 2lambda)) of the compliance in
    /// the orthonormal symmetric-tensor component basis.
    pub fn compliance_coeffs(&self) -> (f64, f64) {
        (
            1.0 / (2.0 * self.mu),
            self.lambda / (2.0 * self.mu + 2.0 * self.lambda),
        )
    }

    /// rho_f * phi / nu, the fluid inertia weight in the absorbing condition.
    pub fn rho_f_phi_over_nu(&self) -> f64 {
        match &self.provenance {
            Some(p) => p.rho_f * p.phi / p.nu,
            None => self.rho12 * self.rho12 / self.rho22,
        }
    }

    /// Shear and compressional wave speeds. The compressional pair solves
    /// the generalized eigenproblem B w = gamma R w with
    /// B = [[lambda + 2 mu + alpha^2/s, alpha/s], [alpha/s, 1/s]].
    pub fn wave_speeds(&self) -> Result<WaveSpeeds, MaterialError> {
        let prov = self.provenance.as_ref().ok_or_else(|| {
            MaterialError::MissingProvenance("shear speed needs the solid density".into())
        })?;
        let b = Matrix2::new(
            self.lambda + 2.0 * self.mu + self.alpha * self.alpha / self.s,
            self.alpha / self.s,
            self.alpha / self.s,
            1.0 / self.s,
        );
        let r = self.density_matrix();
        // Reduce B w = gamma R w to a symmetric standard problem through the
        // Cholesky factor of R.
        let chol = r
            .cholesky()
            .ok_or_else(|| MaterialError::Degenerate("density matrix not SPD".into()))?;
        let l_inv = chol
            .l()
            .try_inverse()
            .ok_or_else(|| MaterialError::Degenerate("singular Cholesky factor".into()))?;
        let c = l_inv * b * l_inv.transpose();
        let sym = nalgebra::SymmetricEigen::new(c);
        let (g1, g2) = (
            sym.eigenvalues[0].min(sym.eigenvalues[1]),
            sym.eigenvalues[0].max(sym.eigenvalues[1]),
        );
        if g1 <= 0.0 {
            return Err(MaterialError::Degenerate(format!(
                "nonpositive generalized eigenvalue {g1}"
            )));
        }
        Ok(WaveSpeeds {
            shear: (self.mu / prov.rho_s).sqrt(),
            fast: g2.sqrt(),
            slow: g1.sqrt(),
        })
    }
}

/// Shear, fast compressional (P I) and slow compressional (P II) speeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSpeeds {
    pub shear: f64,
    pub fast: f64,
    pub slow: f64,
}

impl MaterialParams {
    /// Normal impedance matrix of the compressional modes,
    /// Z = sum_i c_i (R w_i)(R w_i)^T with the generalized eigenvectors
    /// normalized to w_i^T R w_j = delta_ij.
    ///
    /// For a normally incident outgoing mode the stress pair satisfies
    /// (sigma_total n . n, -p) = -Z (u_s . n, u_f . n), so a Robin boundary
    /// block built from Z is exactly absorbing for plane modes and, being
    /// symmetric positive definite, extracts energy for every boundary
    /// state. The componentwise first-order relations in
    /// [`crate::hdg::absorbing_traction`] are not sign-definite and admit
    /// energy growth when solid and fluid move out of phase.
    pub fn absorbing_impedance(&self) -> Result<Matrix2<f64>, MaterialError> {
        let b = Matrix2::new(
            self.lambda + 2.0 * self.mu + self.alpha * self.alpha / self.s,
            self.alpha / self.s,
            self.alpha / self.s,
            1.0 / self.s,
        );
        let r = self.density_matrix();
        let chol = r
            .cholesky()
            .ok_or_else(|| MaterialError::Degenerate("density matrix not SPD".into()))?;
        let l = chol.l();
        let l_inv = l
            .try_inverse()
            .ok_or_else(|| MaterialError::Degenerate("singular Cholesky factor".into()))?;
        let c = l_inv * b * l_inv.transpose();
        let eig = nalgebra::SymmetricEigen::new(c);
        let mut z = Matrix2::zeros();
        for i in 0..2 {
            let gamma = eig.eigenvalues[i];
            if gamma <= 0.0 {
                return Err(MaterialError::Degenerate(format!(
                    "nonpositive generalized eigenvalue {gamma}"
                )));
            }
            // w = L^{-T} y is R-orthonormal when y is orthonormal.
            let w = l_inv.transpose() * eig.eigenvectors.column(i);
            let rw = r * w;
            z += gamma.sqrt() * rw * rw.transpose();
        }
        Ok(z)
    }
}

/// Rayleigh quotient of R on a stacked pair of vectors.
pub fn rayleigh_r(params: &MaterialParams, vs: Vector2<f64>, vf: Vector2<f64>) -> f64 {
    let num = params.rho11 * vs.dot(&vs) + 2.0 * params.rho12 * vs.dot(&vf)
        + params.rho22 * vf.dot(&vf);
    let den = vs.dot(&vs) + vf.dot(&vf);
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hooke_on_identity() {
        let p = MaterialParams::preset_l1();
        let out = p.apply_c(&Sym2::identity());
        assert_relative_eq!(out.xx, 300.0);
        assert_relative_eq!(out.yy, 300.0);
        assert_relative_eq!(out.xy, 0.0);
        let zero = p.apply_c(&Sym2::default());
        assert_eq!(zero, Sym2::default());
    }

    #[test]
    fn hooke_tracefree_ignores_lambda() {
        let p = MaterialParams::preset_l1();
        let out = p.apply_c(&Sym2::new(0.0, 0.0, 1.0));
        assert_relative_eq!(out.xy, 2.0 * p.mu);
        assert_relative_eq!(out.xx, 0.0);
    }

    #[test]
    fn compliance_inverts_stiffness() {
        let p = MaterialParams::preset_l1();
        let back = p.apply_a(&Sym2::new(300.0, 300.0, 0.0));
        assert_relative_eq!(back.xx, 1.0, max_relative = 1e-13);
        assert_relative_eq!(back.yy, 1.0, max_relative = 1e-13);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for params in [MaterialParams::preset_l1(), MaterialParams::preset_l2()] {
            // The reconstruction lambda * tr(A sigma) loses ~lambda * eps in
            // absolute terms; only relevant for the near-incompressible set.
            let tol = (params.lambda * 1e-17).max(1e-13);
            for _ in 0..100 {
                let s = Sym2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let rt = params.apply_c(&params.apply_a(&s));
                assert_relative_eq!(rt.xx, s.xx, max_relative = 1e-13, epsilon = tol);
                assert_relative_eq!(rt.yy, s.yy, max_relative = 1e-13, epsilon = tol);
                assert_relative_eq!(rt.xy, s.xy, max_relative = 1e-13, epsilon = tol);
                // (A sigma, sigma) > 0 for sigma != 0, including lambda = 1e8.
                if s.ddot(&s) > 1e-12 {
                    assert!(params.apply_a(&s).ddot(&s) > 0.0);
                }
            }
        }
    }

    #[test]
    fn provenance_relations_hold() {
        let p = MaterialParams::preset_coeffs(0.0015);
        let prov = p.provenance.unwrap();
        assert_relative_eq!(p.rho11, prov.phi * prov.rho_f + (1.0 - prov.phi) * prov.rho_s, max_relative = 1e-12);
        assert_relative_eq!(p.rho12, prov.rho_f, max_relative = 1e-12);
        assert_relative_eq!(p.rho22, prov.nu / prov.phi * prov.rho_f, max_relative = 1e-12);
        assert_relative_eq!(p.beta, prov.eta / prov.kappa, max_relative = 1e-12);
        assert_relative_eq!(p.rho_f_phi_over_nu(), 190.0, max_relative = 1e-12);
    }

    #[test]
    fn shear_speed_benchmark_value() {
        let p = MaterialParams::preset_coeffs(0.0);
        let ws = p.wave_speeds().unwrap();
        assert_relative_eq!(ws.shear, (4.3738e9_f64 / 2200.0).sqrt(), max_relative = 1e-12);
        assert!((ws.shear - 1410.0).abs() < 1.0);
    }

    #[test]
    fn compressional_speeds_match_quadratic_oracle() {
        // det(B - gamma R) = 0 expanded by the quadratic formula.
        let p = MaterialParams::preset_coeffs(0.0);
        let b11 = p.lambda + 2.0 * p.mu + p.alpha * p.alpha / p.s;
        let b12 = p.alpha / p.s;
        let b22 = 1.0 / p.s;
        let a = p.rho11 * p.rho22 - p.rho12 * p.rho12;
        let bq = -(p.rho11 * b22 + p.rho22 * b11 - 2.0 * p.rho12 * b12);
        let c = b11 * b22 - b12 * b12;
        let disc = (bq * bq - 4.0 * a * c).sqrt();
        let g1 = (-bq - disc) / (2.0 * a);
        let g2 = (-bq + disc) / (2.0 * a);
        let ws = p.wave_speeds().unwrap();
        assert_relative_eq!(ws.slow, g1.min(g2).sqrt(), max_relative = 1e-10);
        assert_relative_eq!(ws.fast, g1.max(g2).sqrt(), max_relative = 1e-10);
        assert!(ws.fast > ws.slow && ws.slow > 0.0);
    }

    #[test]
    fn decoupled_limit() {
        // alpha -> 0 decouples: gammas approach eigenvalues of
        // diag(lambda + 2 mu, 1/s) with respect to R.
        let p = MaterialParams::from_provenance(
            Provenance {
                rho_s: 2200.0,
                rho_f: 950.0,
                phi: 0.4,
                nu: 2.0,
                eta: 0.0,
                kappa: 1e-12,
            },
            4.3738e9,
            7.2073e9,
            1.462e-10,
            1e-12,
        )
        .unwrap();
        let ws = p.wave_speeds().unwrap();
        let b11 = p.lambda + 2.0 * p.mu;
        let b22 = 1.0 / p.s;
        let a = p.rho11 * p.rho22 - p.rho12 * p.rho12;
        let bq = -(p.rho11 * b22 + p.rho22 * b11);
        let c = b11 * b22;
        let disc = (bq * bq - 4.0 * a * c).sqrt();
        let g1 = (-bq - disc) / (2.0 * a);
        let g2 = (-bq + disc) / (2.0 * a);
        assert_relative_eq!(ws.slow, g1.sqrt(), max_relative = 1e-6);
        assert_relative_eq!(ws.fast, g2.sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn rayleigh_quotients_within_eigen_bounds() {
        let p = MaterialParams::preset_l1();
        let (lo, hi) = p.rho_eigen_bounds();
        assert_relative_eq!(lo, 15.0 - 125.0_f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(hi, 15.0 + 125.0_f64.sqrt(), max_relative = 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let vs = Vector2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let vf = Vector2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if vs.norm() + vf.norm() < 1e-9 {
                continue;
            }
            let q = rayleigh_r(&p, vs, vf);
            assert!(q >= lo - 1e-12 && q <= hi + 1e-12, "q = {q}");
        }
    }

    #[test]
    fn h2_coercivity_constants() {
        // a_minus (|tau|^2 + q^2) <= (A tau, tau) + s q^2 <= a_plus (...)
        for p in [MaterialParams::preset_l1(), MaterialParams::preset_l2()] {
            let a_minus = (1.0 / (2.0 * p.mu + 2.0 * p.lambda)).min(p.s);
            let a_plus = (1.0 / (2.0 * p.mu)).max(p.s);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..200 {
                let t = Sym2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let q: f64 = rng.gen_range(-1.0..1.0);
                let norm2 = t.ddot(&t) + q * q;
                let h2 = p.apply_a(&t).ddot(&t) + p.s * q * q;
                assert!(h2 >= a_minus * norm2 * (1.0 - 1e-12));
                assert!(h2 <= a_plus * norm2 * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn impedance_is_spd_and_exact_on_modes() {
        let p = MaterialParams::preset_coeffs(0.0);
        let z = p.absorbing_impedance().unwrap();
        assert_relative_eq!(z[(0, 1)], z[(1, 0)], max_relative = 1e-12);
        assert!(z[(0, 0)] > 0.0 && z.determinant() > 0.0);
        // Z w = c R w for each generalized mode (B w = gamma R w).
        let ws = p.wave_speeds().unwrap();
        let b = Matrix2::new(
            p.lambda + 2.0 * p.mu + p.alpha * p.alpha / p.s,
            p.alpha / p.s,
            p.alpha / p.s,
            1.0 / p.s,
        );
        let r = p.density_matrix();
        for c in [ws.slow, ws.fast] {
            let gamma = c * c;
            let m = b - gamma * r;
            // null vector of the 2x2 singular matrix
            let w = if m[(0, 0)].abs() > m[(0, 1)].abs() {
                Vector2::new(-m[(0, 1)], m[(0, 0)])
            } else {
                Vector2::new(m[(1, 1)], -m[(1, 0)])
            };
            let lhs = z * w;
            let rhs = c * r * w;
            assert_relative_eq!(lhs[0], rhs[0], max_relative = 1e-8);
            assert_relative_eq!(lhs[1], rhs[1], max_relative = 1e-8);
        }
        // Positive boundary power for arbitrary states.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let v = Vector2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if v.norm() < 1e-9 {
                continue;
            }
            assert!((z * v).dot(&v) > 0.0);
        }
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(MaterialParams::new(1.0, 2.0, 1.0, 50.0, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(MaterialParams::new(1.0, 0.0, 1.0, -1.0, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(MaterialParams::new(1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.5, 0.0).is_err());
        assert!(MaterialParams::preset_l1().wave_speeds().is_err());
    }
}
