//! Closed-form solution for the convergence studies on the unit square:
//!
//!   p = sin(pi x y) cos t,
//!   d = (x cos(pi y) cos t, y sin(pi x) sin t),  u_s = d_t,
//!   sigma = C eps(d),
//!
//! with the fluid velocity constructed as the time-periodic particular
//! solution of the fluid momentum balance with F_f = 0: writing the known
//! part -(rho12 u_s_t + grad p) as G_c cos t + G_s sin t, the ansatz
//! u_f = U_c cos t + U_s sin t solves the pointwise 2x2 system
//! { beta U_c + rho22 U_s = G_c, -rho22 U_c + beta U_s = G_s }.
//! The remaining sources F_s and g follow by substitution into the momentum
//! and mass balances.

use std::f64::consts::PI;

use thiserror::Error;

use crate::fields::{BoundaryData, ExactFields, VolumeForcing};
use crate::materials::{MaterialParams, Sym2};

#[derive(Debug, Error)]
pub enum ManufacturedError {
    #[error("fluid construction needs beta > 0 or rho22 > 0")]
    DegenerateFluidSystem,
}

#[derive(Debug, Clone)]
pub struct ManufacturedSolution {
    pub params: MaterialParams,
    denom: f64,
}

pub fn build_manufactured(params: MaterialParams) -> Result<ManufacturedSolution, ManufacturedError> {
    let denom = params.beta * params.beta + params.rho22 * params.rho22;
    if denom <= 0.0 {
        return Err(ManufacturedError::DegenerateFluidSystem);
    }
    Ok(ManufacturedSolution { params, denom })
}

impl ManufacturedSolution {
    pub fn displacement(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        [x * (PI * y).cos() * t.cos(), y * (PI * x).sin() * t.sin()]
    }

    fn strain_of_displacement(&self, x: f64, y: f64, t: f64) -> Sym2 {
        let exx = (PI * y).cos() * t.cos();
        let eyy = (PI * x).sin() * t.sin();
        let exy = 0.5 * (-PI * x * (PI * y).sin() * t.cos() + PI * y * (PI * x).cos() * t.sin());
        Sym2::new(exx, eyy, exy)
    }

    fn grad_p(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let c = PI * (PI * x * y).cos() * t.cos();
        [y * c, x * c]
    }

    /// Cosine / sine spatial parts of -(rho12 u_s_t + grad p).
    fn g_parts(&self, x: f64, y: f64) -> ([f64; 2], [f64; 2]) {
        let r12 = self.params.rho12;
        let g_cos = [
            r12 * x * (PI * y).cos() - PI * y * (PI * x * y).cos(),
            -PI * x * (PI * x * y).cos(),
        ];
        let g_sin = [0.0, r12 * y * (PI * x).sin()];
        (g_cos, g_sin)
    }

    /// Cosine / sine spatial parts of the fluid velocity.
    fn u_parts(&self, x: f64, y: f64) -> ([f64; 2], [f64; 2]) {
        let (gc, gs) = self.g_parts(x, y);
        let (b, r22) = (self.params.beta, self.params.rho22);
        let mut uc = [0.0; 2];
        let mut us = [0.0; 2];
        for c in 0..2 {
            uc[c] = (b * gc[c] - r22 * gs[c]) / self.denom;
            us[c] = (r22 * gc[c] + b * gs[c]) / self.denom;
        }
        (uc, us)
    }

    fn div_u_parts(&self, x: f64, y: f64) -> (f64, f64) {
        let r12 = self.params.rho12;
        let div_gc = r12 * (PI * y).cos() + PI * PI * (x * x + y * y) * (PI * x * y).sin();
        let div_gs = r12 * (PI * x).sin();
        let (b, r22) = (self.params.beta, self.params.rho22);
        (
            (b * div_gc - r22 * div_gs) / self.denom,
            (r22 * div_gc + b * div_gs) / self.denom,
        )
    }

    fn dt_solid_velocity(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        [
            -x * (PI * y).cos() * t.cos(),
            -y * (PI * x).sin() * t.sin(),
        ]
    }

    fn dt_fluid_velocity(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let (uc, us) = self.u_parts(x, y);
        [
            -uc[0] * t.sin() + us[0] * t.cos(),
            -uc[1] * t.sin() + us[1] * t.cos(),
        ]
    }

    fn div_stress(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let (mu, la) = (self.params.mu, self.params.lambda);
        let lap = [
            -PI * PI * x * (PI * y).cos() * t.cos(),
            -PI * PI * y * (PI * x).sin() * t.sin(),
        ];
        let grad_div = [
            PI * (PI * x).cos() * t.sin(),
            -PI * (PI * y).sin() * t.cos(),
        ];
        [
            mu * lap[0] + (mu + la) * grad_div[0],
            mu * lap[1] + (mu + la) * grad_div[1],
        ]
    }
}

impl ExactFields for ManufacturedSolution {
    fn solid_velocity(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        [
            -x * (PI * y).cos() * t.sin(),
            y * (PI * x).sin() * t.cos(),
        ]
    }

    fn fluid_velocity(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let (uc, us) = self.u_parts(x, y);
        [
            uc[0] * t.cos() + us[0] * t.sin(),
            uc[1] * t.cos() + us[1] * t.sin(),
        ]
    }

    fn stress(&self, x: f64, y: f64, t: f64) -> Sym2 {
        self.params.apply_c(&self.strain_of_displacement(x, y, t))
    }

    fn pressure(&self, x: f64, y: f64, t: f64) -> f64 {
        (PI * x * y).sin() * t.cos()
    }
}

impl VolumeForcing for ManufacturedSolution {
    fn solid_force(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let dus = self.dt_solid_velocity(x, y, t);
        let duf = self.dt_fluid_velocity(x, y, t);
        let ds = self.div_stress(x, y, t);
        let gp = self.grad_p(x, y, t);
        let (r11, r12, a) = (self.params.rho11, self.params.rho12, self.params.alpha);
        [
            r11 * dus[0] + r12 * duf[0] - ds[0] + a * gp[0],
            r11 * dus[1] + r12 * duf[1] - ds[1] + a * gp[1],
        ]
    }

    fn fluid_force(&self, _x: f64, _y: f64, _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn mass_source(&self, x: f64, y: f64, t: f64) -> f64 {
        let dt_p = -(PI * x * y).sin() * t.sin();
        let div_us = -(PI * y).cos() * t.sin() + (PI * x).sin() * t.cos();
        let (duc, dus) = self.div_u_parts(x, y);
        let div_uf = duc * t.cos() + dus * t.sin();
        self.params.s * dt_p + div_uf + self.params.alpha * div_us
    }
}

impl BoundaryData for ManufacturedSolution {
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
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_t<F: Fn(f64) -> f64>(f: F, t: f64, h: f64) -> f64 {
        (f(t + h) - f(t - h)) / (2.0 * h)
    }

    #[test]
    fn pressure_reference_value() {
        let ms = build_manufactured(MaterialParams::preset_l1()).unwrap();
        assert_relative_eq!(
            ms.pressure(0.5, 0.5, 0.0),
            (PI / 4.0).sin(),
            max_relative = 1e-15
        );
        assert!((ms.pressure(0.5, 0.5, 0.0) - 0.70711).abs() < 1e-5);
    }

    #[test]
    fn initial_fields_match_closed_forms() {
        let ms = build_manufactured(MaterialParams::preset_l1()).unwrap();
        let (x, y) = (0.3, 0.8);
        let us = ExactFields::solid_velocity(&ms, x, y, 0.0);
        assert_relative_eq!(us[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(us[1], y * (PI * x).sin(), max_relative = 1e-14);
    }

    /// Centered finite differences of the closed forms must satisfy all four
    /// field equations pointwise.
    #[test]
    fn equations_satisfied_to_fd_accuracy() {
        let h = 1e-5;
        for params in [MaterialParams::preset_l1(), MaterialParams::preset_l2()] {
            let ms = build_manufactured(params.clone()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for _ in 0..100 {
                let x = rng.gen_range(0.05..0.95);
                let y = rng.gen_range(0.05..0.95);
                let t = rng.gen_range(0.0..1.5);
                let scale_sigma = 2.0 * params.mu + 2.0 * params.lambda;

                // (a) rho11 us_t + rho12 uf_t - div(sigma - alpha p I) = F_s
                for c in 0..2 {
                    let dus = fd_t(|tt| ExactFields::solid_velocity(&ms, x, y, tt)[c], t, h);
                    let duf = fd_t(|tt| ExactFields::fluid_velocity(&ms, x, y, tt)[c], t, h);
                    let div_tot = {
                        let tot = |px: f64, py: f64| {
                            let s = ms.stress(px, py, t);
                            let p = ms.pressure(px, py, t);
                            Sym2::new(s.xx - params.alpha * p, s.yy - params.alpha * p, s.xy)
                        };
                        if c == 0 {
                            (tot(x + h, y).xx - tot(x - h, y).xx) / (2.0 * h)
                                + (tot(x, y + h).xy - tot(x, y - h).xy) / (2.0 * h)
                        } else {
                            (tot(x + h, y).xy - tot(x - h, y).xy) / (2.0 * h)
                                + (tot(x, y + h).yy - tot(x, y - h).yy) / (2.0 * h)
                        }
                    };
                    let res = params.rho11 * dus + params.rho12 * duf - div_tot
                        - ms.solid_force(x, y, t)[c];
                    assert!(
                        res.abs() < 1e-8 * scale_sigma.max(1.0),
                        "eq (a) comp {c}: residual {res}"
                    );
                }

                // (b) rho12 us_t + rho22 uf_t + beta uf + grad p = 0
                for c in 0..2 {
                    let dus = fd_t(|tt| ExactFields::solid_velocity(&ms, x, y, tt)[c], t, h);
                    let duf = fd_t(|tt| ExactFields::fluid_velocity(&ms, x, y, tt)[c], t, h);
                    let uf = ExactFields::fluid_velocity(&ms, x, y, t)[c];
                    let gp = if c == 0 {
                        (ms.pressure(x + h, y, t) - ms.pressure(x - h, y, t)) / (2.0 * h)
                    } else {
                        (ms.pressure(x, y + h, t) - ms.pressure(x, y - h, t)) / (2.0 * h)
                    };
                    let res = params.rho12 * dus + params.rho22 * duf + params.beta * uf + gp;
                    assert!(res.abs() < 1e-8 * params.rho22.max(1.0), "eq (b): {res}");
                }

                // (c) sigma_t = C eps(u_s)
                let eps = {
                    let us = |px: f64, py: f64| ExactFields::solid_velocity(&ms, px, py, t);
                    let dxx = (us(x + h, y)[0] - us(x - h, y)[0]) / (2.0 * h);
                    let dyy = (us(x, y + h)[1] - us(x, y - h)[1]) / (2.0 * h);
                    let dxy = 0.5
                        * ((us(x, y + h)[0] - us(x, y - h)[0]) / (2.0 * h)
                            + (us(x + h, y)[1] - us(x - h, y)[1]) / (2.0 * h));
                    Sym2::new(dxx, dyy, dxy)
                };
                let want = params.apply_c(&eps);
                let ds_xx = fd_t(|tt| ms.stress(x, y, tt).xx, t, h);
                let ds_yy = fd_t(|tt| ms.stress(x, y, tt).yy, t, h);
                let ds_xy = fd_t(|tt| ms.stress(x, y, tt).xy, t, h);
                assert!((ds_xx - want.xx).abs() < 1e-7 * scale_sigma, "eq (c) xx");
                assert!((ds_yy - want.yy).abs() < 1e-7 * scale_sigma, "eq (c) yy");
                assert!((ds_xy - want.xy).abs() < 1e-7 * scale_sigma, "eq (c) xy");

                // (d) s p_t + div u_f + alpha div u_s = g
                let dp = fd_t(|tt| ms.pressure(x, y, tt), t, h);
                let div_uf = {
                    let uf = |px: f64, py: f64| ExactFields::fluid_velocity(&ms, px, py, t);
                    (uf(x + h, y)[0] - uf(x - h, y)[0]) / (2.0 * h)
                        + (uf(x, y + h)[1] - uf(x, y - h)[1]) / (2.0 * h)
                };
                let div_us = {
                    let us = |px: f64, py: f64| ExactFields::solid_velocity(&ms, px, py, t);
                    (us(x + h, y)[0] - us(x - h, y)[0]) / (2.0 * h)
                        + (us(x, y + h)[1] - us(x, y - h)[1]) / (2.0 * h)
                };
                let res = params.s * dp + div_uf + params.alpha * div_us - ms.mass_source(x, y, t);
                assert!(res.abs() < 1e-7 * params.rho22.max(1.0), "eq (d): {res}");
            }
        }
    }
}
