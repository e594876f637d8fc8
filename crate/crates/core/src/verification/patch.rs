//! Space-polynomial, time-linear solutions lying exactly in the discrete
//! spaces: velocities of degree k+1, stress and pressure of degree k, all
//! linear in time. The scheme must reproduce them to solver accuracy.
//!
//! Compatibility with the stress evolution equation forces the solid
//! acceleration to be a rigid motion: sigma_t = C eps(u_s) stays constant in
//! time exactly when eps(u_s_t) = 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fields::{BoundaryData, ExactFields, VolumeForcing};
use crate::materials::{MaterialParams, Sym2};

/// Sparse bivariate polynomial sum of c x^a y^b terms.
#[derive(Debug, Clone, Default)]
struct Poly2 {
    terms: Vec<(u32, u32, f64)>,
}

impl Poly2 {
    fn random(deg: usize, rng: &mut impl Rng, amp: f64) -> Self {
        let mut terms = Vec::new();
        for a in 0..=deg as u32 {
            for b in 0..=(deg as u32 - a) {
                terms.push((a, b, rng.gen_range(-amp..amp)));
            }
        }
        Poly2 { terms }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(a, b, c)| c * x.powi(a as i32) * y.powi(b as i32))
            .sum()
    }

    fn dx(&self) -> Poly2 {
        Poly2 {
            terms: self
                .terms
                .iter()
                .filter(|&&(a, _, _)| a > 0)
                .map(|&(a, b, c)| (a - 1, b, c * a as f64))
                .collect(),
        }
    }

    fn dy(&self) -> Poly2 {
        Poly2 {
            terms: self
                .terms
                .iter()
                .filter(|&&(_, b, _)| b > 0)
                .map(|&(a, b, c)| (a, b - 1, c * b as f64))
                .collect(),
        }
    }

    fn add(&self, other: &Poly2, scale: f64) -> Poly2 {
        let mut terms = self.terms.clone();
        for &(a, b, c) in &other.terms {
            terms.push((a, b, scale * c));
        }
        Poly2 { terms }
    }
}

#[derive(Debug, Clone)]
pub struct PatchSolution {
    pub params: MaterialParams,
    us0: [Poly2; 2],
    /// Rigid solid acceleration (c1 - w y, c2 + w x).
    rigid: [f64; 3],
    sigma0: [Poly2; 3],
    sigma_dot: [Poly2; 3],
    uf0: [Poly2; 2],
    uf1: [Poly2; 2],
    p0: Poly2,
    p1: Poly2,
}

impl PatchSolution {
    pub fn random(k: usize, params: MaterialParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amp = 1.0;
        let us0 = [
            Poly2::random(k + 1, &mut rng, amp),
            Poly2::random(k + 1, &mut rng, amp),
        ];
        let rigid = [
            rng.gen_range(-amp..amp),
            rng.gen_range(-amp..amp),
            rng.gen_range(-amp..amp),
        ];
        let sigma0 = [
            Poly2::random(k, &mut rng, amp),
            Poly2::random(k, &mut rng, amp),
            Poly2::random(k, &mut rng, amp),
        ];
        // sigma_dot = C eps(us0), a degree-k tensor field.
        let exx = us0[0].dx();
        let eyy = us0[1].dy();
        let two_exy = us0[0].dy().add(&us0[1].dx(), 1.0);
        let tr = exx.add(&eyy, 1.0);
        let sigma_dot = [
            exx.scale_owned(2.0 * params.mu).add(&tr, params.lambda),
            eyy.scale_owned(2.0 * params.mu).add(&tr, params.lambda),
            two_exy.scale_owned(params.mu),
        ];
        let uf0 = [
            Poly2::random(k + 1, &mut rng, amp),
            Poly2::random(k + 1, &mut rng, amp),
        ];
        let uf1 = [
            Poly2::random(k + 1, &mut rng, amp),
            Poly2::random(k + 1, &mut rng, amp),
        ];
        let p0 = Poly2::random(k, &mut rng, amp);
        let p1 = Poly2::random(k, &mut rng, amp);
        PatchSolution {
            params,
            us0,
            rigid,
            sigma0,
            sigma_dot,
            uf0,
            uf1,
            p0,
            p1,
        }
    }

    fn rigid_at(&self, x: f64, y: f64) -> [f64; 2] {
        [
            self.rigid[0] - self.rigid[2] * y,
            self.rigid[1] + self.rigid[2] * x,
        ]
    }

    fn sigma_comp(&self, i: usize, x: f64, y: f64, t: f64) -> f64 {
        self.sigma0[i].eval(x, y) + t * self.sigma_dot[i].eval(x, y)
    }
}

impl Poly2 {
    fn scale_owned(self, s: f64) -> Poly2 {
        Poly2 {
            terms: self.terms.into_iter().map(|(a, b, c)| (a, b, c * s)).collect(),
        }
    }
}

impl ExactFields for PatchSolution {
    fn solid_velocity(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let r = self.rigid_at(x, y);
        [
            self.us0[0].eval(x, y) + t * r[0],
            self.us0[1].eval(x, y) + t * r[1],
        ]
    }

    fn fluid_velocity(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        [
            self.uf0[0].eval(x, y) + t * self.uf1[0].eval(x, y),
            self.uf0[1].eval(x, y) + t * self.uf1[1].eval(x, y),
        ]
    }

    fn stress(&self, x: f64, y: f64, t: f64) -> Sym2 {
        Sym2::new(
            self.sigma_comp(0, x, y, t),
            self.sigma_comp(1, x, y, t),
            self.sigma_comp(2, x, y, t),
        )
    }

    fn pressure(&self, x: f64, y: f64, t: f64) -> f64 {
        self.p0.eval(x, y) + t * self.p1.eval(x, y)
    }
}

impl VolumeForcing for PatchSolution {
    fn solid_force(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let p = &self.params;
        let dus = self.rigid_at(x, y);
        let duf = [self.uf1[0].eval(x, y), self.uf1[1].eval(x, y)];
        // div(sigma - alpha p I), each stress component linear in t.
        let comp = |i: usize, d: fn(&Poly2) -> Poly2| {
            d(&self.sigma0[i]).eval(x, y) + t * d(&self.sigma_dot[i]).eval(x, y)
        };
        let div_tot = [
            comp(0, Poly2::dx) + comp(2, Poly2::dy)
                - p.alpha * (self.p0.dx().eval(x, y) + t * self.p1.dx().eval(x, y)),
            comp(2, Poly2::dx) + comp(1, Poly2::dy)
                - p.alpha * (self.p0.dy().eval(x, y) + t * self.p1.dy().eval(x, y)),
        ];
        [
            p.rho11 * dus[0] + p.rho12 * duf[0] - div_tot[0],
            p.rho11 * dus[1] + p.rho12 * duf[1] - div_tot[1],
        ]
    }

    fn fluid_force(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let p = &self.params;
        let dus = self.rigid_at(x, y);
        let duf = [self.uf1[0].eval(x, y), self.uf1[1].eval(x, y)];
        let uf = ExactFields::fluid_velocity(self, x, y, t);
        let gp = [
            self.p0.dx().eval(x, y) + t * self.p1.dx().eval(x, y),
            self.p0.dy().eval(x, y) + t * self.p1.dy().eval(x, y),
        ];
        [
            p.rho12 * dus[0] + p.rho22 * duf[0] + p.beta * uf[0] + gp[0],
            p.rho12 * dus[1] + p.rho22 * duf[1] + p.beta * uf[1] + gp[1],
        ]
    }

    fn mass_source(&self, x: f64, y: f64, t: f64) -> f64 {
        let p = &self.params;
        let div_uf =
            self.uf0[0].dx().eval(x, y) + self.uf0[1].dy().eval(x, y)
                + t * (self.uf1[0].dx().eval(x, y) + self.uf1[1].dy().eval(x, y));
        let div_us = self.us0[0].dx().eval(x, y) + self.us0[1].dy().eval(x, y);
        p.s * self.p1.eval(x, y) + div_uf + p.alpha * div_us
    }
}

impl BoundaryData for PatchSolution {
    fn solid_velocity(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        ExactFields::solid_velocity(self, x, y, t)
    }

    fn fluid_velocity(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        ExactFields::fluid_velocity(self, x, y, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The construction must satisfy the four field equations identically;
    /// spot-check with finite differences.
    #[test]
    fn strong_equations_hold() {
        let params = MaterialParams::preset_l1();
        let ps = PatchSolution::random(2, params.clone(), 17);
        let h = 1e-6;
        for &(x, y, t) in &[(0.3, 0.4, 0.2), (0.8, 0.1, 0.7), (0.5, 0.9, 1.3)] {
            // sigma_t = C eps(u_s)
            let ds = [
                (ps.stress(x, y, t + h).xx - ps.stress(x, y, t - h).xx) / (2.0 * h),
                (ps.stress(x, y, t + h).yy - ps.stress(x, y, t - h).yy) / (2.0 * h),
                (ps.stress(x, y, t + h).xy - ps.stress(x, y, t - h).xy) / (2.0 * h),
            ];
            let us = |px: f64, py: f64| ExactFields::solid_velocity(&ps, px, py, t);
            let eps = Sym2::new(
                (us(x + h, y)[0] - us(x - h, y)[0]) / (2.0 * h),
                (us(x, y + h)[1] - us(x, y - h)[1]) / (2.0 * h),
                0.5 * ((us(x, y + h)[0] - us(x, y - h)[0]) / (2.0 * h)
                    + (us(x + h, y)[1] - us(x - h, y)[1]) / (2.0 * h)),
            );
            let want = params.apply_c(&eps);
            assert!((ds[0] - want.xx).abs() < 1e-6);
            assert!((ds[1] - want.yy).abs() < 1e-6);
            assert!((ds[2] - want.xy).abs() < 1e-6);

            // mass balance residual
            let dp = (ps.pressure(x, y, t + h) - ps.pressure(x, y, t - h)) / (2.0 * h);
            let uf = |px: f64, py: f64| ExactFields::fluid_velocity(&ps, px, py, t);
            let div_uf = (uf(x + h, y)[0] - uf(x - h, y)[0]) / (2.0 * h)
                + (uf(x, y + h)[1] - uf(x, y - h)[1]) / (2.0 * h);
            let div_us = (us(x + h, y)[0] - us(x - h, y)[0]) / (2.0 * h)
                + (us(x, y + h)[1] - us(x, y - h)[1]) / (2.0 * h);
            let res =
                params.s * dp + div_uf + params.alpha * div_us - ps.mass_source(x, y, t);
            assert!(res.abs() < 1e-6, "mass residual {res}");
        }
    }
}
