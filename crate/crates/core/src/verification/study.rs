//! Weighted error norms against exact fields and the h / dt / p refinement
//! studies with observed-rate computation and CSV emission.

use std::io::Write;
use std::sync::Arc;

use crate::fem::cache;
use crate::fields::ExactFields;
use crate::hdg::{BcSpec, DGState, HdgOptions, Spaces};
use crate::materials::{MaterialParams, Sym2};
use crate::mesh::{build_skeleton, generate_structured, Mesh, Rect};
use crate::transient::{self, Problem, TimeGrid, TransientError};
use crate::verification::manufactured::build_manufactured;

/// Weighted error norms at the state's time stamp:
/// e(sigma, p) in the compliance/storage norm and e(u) in the density norm.
pub fn error_norms(
    mesh: &Mesh,
    spaces: Spaces,
    params: &MaterialParams,
    state: &DGState,
    exact: &dyn ExactFields,
    quad_order: usize,
) -> (f64, f64) {
    let vt1 = cache::volume(spaces.k + 1, quad_order);
    let vt0 = cache::volume(spaces.k, quad_order);
    let (n1, n0) = (spaces.n1(), spaces.n0());
    let so = spaces.sigma_offset();
    let t = state.t;
    let mut e_sp = 0.0;
    let mut e_u = 0.0;
    for e in 0..mesh.n_elements() {
        let map = mesh.element_map(e);
        let det = map.det.abs();
        let inv_sqrt = 1.0 / det.sqrt();
        let x = &state.vol[e];
        for (q, pt) in vt1.quad.points.iter().enumerate() {
            let w = vt1.quad.weights[q] * det;
            let xy = map.to_physical(*pt);
            let mut us = [0.0; 2];
            let mut uf = [0.0; 2];
            for i in 0..n1 {
                let phi = vt1.tab.values[(i, q)] * inv_sqrt;
                us[0] += x[i] * phi;
                us[1] += x[n1 + i] * phi;
                uf[0] += x[2 * n1 + i] * phi;
                uf[1] += x[3 * n1 + i] * phi;
            }
            let mut sig = [0.0; 3];
            let mut p = 0.0;
            for m in 0..n0 {
                let phi = vt0.tab.values[(m, q)] * inv_sqrt;
                sig[0] += x[so + m] * phi;
                sig[1] += x[so + n0 + m] * phi;
                sig[2] += x[so + 2 * n0 + m] * phi;
                p += x[so + 3 * n0 + m] * phi;
            }
            let us_e = exact.solid_velocity(xy[0], xy[1], t);
            let uf_e = exact.fluid_velocity(xy[0], xy[1], t);
            let sg_e = exact.stress(xy[0], xy[1], t);
            let p_e = exact.pressure(xy[0], xy[1], t);
            let dus = [us[0] - us_e[0], us[1] - us_e[1]];
            let duf = [uf[0] - uf_e[0], uf[1] - uf_e[1]];
            e_u += w
                * (params.rho11 * (dus[0] * dus[0] + dus[1] * dus[1])
                    + 2.0 * params.rho12 * (dus[0] * duf[0] + dus[1] * duf[1])
                    + params.rho22 * (duf[0] * duf[0] + duf[1] * duf[1]));
            let dsig = Sym2::new(
                sig[0] - sg_e.xx,
                sig[1] - sg_e.yy,
                sig[2] * std::f64::consts::FRAC_1_SQRT_2 - sg_e.xy,
            );
            let dp = p - p_e;
            e_sp += w * (params.apply_a(&dsig).ddot(&dsig) + params.s * dp * dp);
        }
    }
    (e_sp.sqrt(), e_u.sqrt())
}

#[derive(Debug, Clone, Copy)]
pub struct StudyRow {
    pub level: usize,
    pub h: f64,
    pub dt: f64,
    pub k: usize,
    pub err_sigma_p: f64,
    pub err_u: f64,
    pub rate_sigma_p: Option<f64>,
    pub rate_u: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct StudyResult {
    pub rows: Vec<StudyRow>,
}

/// Observed rate log(e0/e1) / log(x0/x1) between two refinement levels.
pub fn observed_rate(e_coarse: f64, e_fine: f64, x_coarse: f64, x_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (x_coarse / x_fine).ln()
}

impl StudyResult {
    /// Arithmetic means of the per-level rates.
    pub fn mean_rates(&self) -> (Option<f64>, Option<f64>) {
        let mean = |xs: Vec<f64>| {
            if xs.is_empty() {
                None
            } else {
                Some(xs.iter().sum::<f64>() / xs.len() as f64)
            }
        };
        (
            mean(self.rows.iter().filter_map(|r| r.rate_sigma_p).collect()),
            mean(self.rows.iter().filter_map(|r| r.rate_u).collect()),
        )
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("level,h,dt,k,err_sigma_p,err_u,rate_sigma_p,rate_u\n");
        for r in &self.rows {
            let fmt_rate = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{},{:.12e},{:.12e},{},{}\n",
                r.level,
                r.h,
                r.dt,
                r.k,
                r.err_sigma_p,
                r.err_u,
                fmt_rate(r.rate_sigma_p),
                fmt_rate(r.rate_u),
            ));
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_csv_string().as_bytes())
    }
}

/// Time-step rule dt = c h^{(k+2)/2}; the default coefficient gives the
/// coarsest level at least `min_steps` steps so the temporal error stays
/// below the spatial one.
pub fn dt_rule_coefficient(t_end: f64, h_coarse: f64, k: usize, min_steps: usize) -> f64 {
    (t_end / min_steps as f64) / h_coarse.powf((k as f64 + 2.0) / 2.0)
}

fn run_manufactured(
    params: &MaterialParams,
    n: usize,
    k: usize,
    time: &TimeGrid,
) -> Result<(f64, f64), TransientError> {
    let mesh = generate_structured(n, Rect::unit_square());
    let skeleton = build_skeleton(&mesh);
    let ms = Arc::new(build_manufactured(params.clone()).expect("nondegenerate fluid system"));
    let bc = BcSpec::dirichlet([0, 1, 2, 3], ms.clone());
    let spaces = Spaces::new(k);
    let problem = Problem {
        mesh: &mesh,
        skeleton: &skeleton,
        spaces,
        params: params.clone(),
        bc,
        options: HdgOptions::default(),
    };
    let out = transient::run(&problem, ms.as_ref(), ms.as_ref(), time, |_, _| Ok(()))?;
    let order = 2 * (k + 1) + 6;
    Ok(error_norms(&mesh, spaces, params, &out.state, ms.as_ref(), order))
}

/// Spatial refinement study on structured meshes 1/n for n in `levels`.
pub fn h_study(
    params: &MaterialParams,
    k: usize,
    levels: &[usize],
    t_end: f64,
    dt_coeff: Option<f64>,
) -> Result<StudyResult, TransientError> {
    assert!(levels.len() >= 2, "a study needs at least two levels");
    let h0 = 1.0 / levels[0] as f64;
    let c = dt_coeff.unwrap_or_else(|| dt_rule_coefficient(t_end, h0, k, 20));
    let mut result = StudyResult::default();
    for (lvl, &n) in levels.iter().enumerate() {
        let h = 1.0 / n as f64;
        let dt_target = c * h.powf((k as f64 + 2.0) / 2.0);
        let time = TimeGrid::with_dt(t_end, dt_target);
        let (e_sp, e_u) = run_manufactured(params, n, k, &time)?;
        let (rate_sp, rate_u) = match result.rows.last() {
            Some(prev) => (
                Some(observed_rate(prev.err_sigma_p, e_sp, prev.h, h)),
                Some(observed_rate(prev.err_u, e_u, prev.h, h)),
            ),
            None => (None, None),
        };
        result.rows.push(StudyRow {
            level: lvl,
            h,
            dt: time.dt(),
            k,
            err_sigma_p: e_sp,
            err_u: e_u,
            rate_sigma_p: rate_sp,
            rate_u: rate_u,
        });
    }
    Ok(result)
}

/// Temporal refinement study at fixed space discretization.
pub fn dt_study(
    params: &MaterialParams,
    n: usize,
    k: usize,
    steps_list: &[usize],
    t_end: f64,
) -> Result<StudyResult, TransientError> {
    let mut result = StudyResult::default();
    for (lvl, &steps) in steps_list.iter().enumerate() {
        let time = TimeGrid::new(t_end, steps);
        let (e_sp, e_u) = run_manufactured(params, n, k, &time)?;
        let dt = time.dt();
        let (rate_sp, rate_u) = match result.rows.last() {
            Some(prev) => (
                Some(observed_rate(prev.err_sigma_p, e_sp, prev.dt, dt)),
                Some(observed_rate(prev.err_u, e_u, prev.dt, dt)),
            ),
            None => (None, None),
        };
        result.rows.push(StudyRow {
            level: lvl,
            h: 1.0 / n as f64,
            dt,
            k,
            err_sigma_p: e_sp,
            err_u: e_u,
            rate_sigma_p: rate_sp,
            rate_u: rate_u,
        });
    }
    Ok(result)
}

/// Degree sweep at fixed mesh and time step; errors only, no rates.
pub fn p_study(
    params: &MaterialParams,
    n: usize,
    k_range: &[usize],
    dt: f64,
    t_end: f64,
) -> Result<StudyResult, TransientError> {
    let mut result = StudyResult::default();
    for (lvl, &k) in k_range.iter().enumerate() {
        let time = TimeGrid::with_dt(t_end, dt);
        let (e_sp, e_u) = run_manufactured(params, n, k, &time)?;
        result.rows.push(StudyRow {
            level: lvl,
            h: 1.0 / n as f64,
            dt: time.dt(),
            k,
            err_sigma_p: e_sp,
            err_u: e_u,
            rate_sigma_p: None,
            rate_u: None,
        });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rate_formula() {
        // e = 0.1 at h, e = 0.025 at h/2 -> rate exactly 2.
        assert_relative_eq!(observed_rate(0.1, 0.025, 0.5, 0.25), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn csv_header_and_shape() {
        let mut r = StudyResult::default();
        r.rows.push(StudyRow {
            level: 0,
            h: 0.25,
            dt: 0.01,
            k: 1,
            err_sigma_p: 1.0,
            err_u: 0.5,
            rate_sigma_p: None,
            rate_u: None,
        });
        r.rows.push(StudyRow {
            level: 1,
            h: 0.125,
            dt: 0.005,
            k: 1,
            err_sigma_p: 0.25,
            err_u: 0.0625,
            rate_sigma_p: Some(2.0),
            rate_u: Some(3.0),
        });
        let csv = r.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "level,h,dt,k,err_sigma_p,err_u,rate_sigma_p,rate_u"
        );
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().ends_with(",,"));
    }
}
