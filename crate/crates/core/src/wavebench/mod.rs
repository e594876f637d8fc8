//! Poroelastic wave-propagation benchmark: Ricker point source on a square
//! domain with a free surface on top and first-order absorbing conditions on
//! the remaining edges; receiver time series and VTK field snapshots.

pub mod vtk;

use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::Arc;

use thiserror::Error;

use crate::fields::{VolumeForcing, ZeroFields};
use crate::hdg::{BcSpec, BoundaryRole, HdgOptions, Spaces, StateProbe};
use crate::materials::{MaterialParams, Sym2};
use crate::mesh::{build_skeleton, generate_structured, Rect, TAG_BOTTOM, TAG_LEFT, TAG_RIGHT, TAG_TOP};
use crate::transient::{self, EnergyRecord, Problem, TimeGrid, TransientError};

#[derive(Debug, Error)]
pub enum WavebenchError {
    #[error(transparent)]
    Transient(#[from] TransientError),
    #[error("receiver at ({0}, {1}) lies outside the domain")]
    ReceiverOutside(f64, f64),
    #[error("i/o error writing outputs: {0}")]
    Io(#[from] std::io::Error),
}

/// Ricker wavelet S(t) = (1 - 2 w^2 (t - t0)^2) exp(-w^2 (t - t0)^2) with
/// w = pi f0.
pub fn ricker(t: f64, f0: f64, t0: f64) -> f64 {
    let w = std::f64::consts::PI * f0;
    let a = w * w * (t - t0) * (t - t0);
    (1.0 - 2.0 * a) * (-a).exp()
}

/// Point-supported excitation around a source position.
#[derive(Debug, Clone, Copy)]
pub struct SourceSpec {
    pub position: [f64; 2],
    pub peak_frequency: f64,
    pub time_shift: f64,
    /// Support radius (the formula's 2h); the force vanishes outside it.
    pub support_radius: f64,
}

/// Radially symmetric spatial profile (1 - |r|^2 / R^2) r / |r| inside the
/// support, 0 outside; the value at the source point is 0 by antisymmetry.
pub fn spatial_source(x: f64, y: f64, source: &SourceSpec) -> [f64; 2] {
    let r = [x - source.position[0], y - source.position[1]];
    let rn = (r[0] * r[0] + r[1] * r[1]).sqrt();
    if rn >= source.support_radius || rn == 0.0 {
        return [0.0, 0.0];
    }
    let amp = 1.0 - (rn * rn) / (source.support_radius * source.support_radius);
    [amp * r[0] / rn, amp * r[1] / rn]
}

/// F_s = F_f = F(x, y) S(t), g = 0.
#[derive(Debug, Clone, Copy)]
pub struct RickerPointSource {
    pub spec: SourceSpec,
}

impl VolumeForcing for RickerPointSource {
    fn solid_force(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let f = spatial_source(x, y, &self.spec);
        let s = ricker(t, self.spec.peak_frequency, self.spec.time_shift);
        [f[0] * s, f[1] * s]
    }

    fn fluid_force(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        self.solid_force(x, y, t)
    }

    fn mass_source(&self, _: f64, _: f64, _: f64) -> f64 {
        0.0
    }
}

/// Intrinsic 2D von Mises stress sqrt(3/2) |dev sigma|_F.
pub fn von_mises(sigma_total: &Sym2) -> f64 {
    let m = 0.5 * sigma_total.trace();
    let dev = Sym2::new(sigma_total.xx - m, sigma_total.yy - m, sigma_total.xy);
    (1.5 * dev.ddot(&dev)).sqrt()
}

/// Receiver time series sampled at every time node.
#[derive(Debug, Clone)]
pub struct ReceiverTrace {
    pub position: [f64; 2],
    pub times: Vec<f64>,
    pub solid_velocity: Vec<[f64; 2]>,
    pub fluid_velocity: Vec<[f64; 2]>,
    /// Solid pressure -tr(sigma)/2.
    pub solid_pressure: Vec<f64>,
    pub pressure: Vec<f64>,
}

impl ReceiverTrace {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t,usx,usy,ufx,ufy,ps,p\n");
        for i in 0..self.times.len() {
            out.push_str(&format!(
                "{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}\n",
                self.times[i],
                self.solid_velocity[i][0],
                self.solid_velocity[i][1],
                self.fluid_velocity[i][0],
                self.fluid_velocity[i][1],
                self.solid_pressure[i],
                self.pressure[i],
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv_string())
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub domain: Rect,
    pub n: usize,
    pub k: usize,
    pub dt: f64,
    pub t_end: f64,
    pub eta: f64,
    pub source: SourceSpec,
    pub receivers: Vec<[f64; 2]>,
    pub snapshot_times: Vec<f64>,
    /// Snapshots are written only when set.
    pub out_dir: Option<PathBuf>,
}

impl BenchConfig {
    /// Desk-scale defaults: 48 x 48 mesh on (0, 4800)^2, k = 3, dt = 5 ms,
    /// T = 1.2 s, source at (1600, 2900) with f0 = 5 Hz, t0 = 0.3 s and
    /// support radius twice the cell size.
    pub fn desk_scale(eta: f64) -> Self {
        let domain = Rect::square(4800.0);
        let n = 48;
        let h = domain.width / n as f64;
        BenchConfig {
            domain,
            n,
            k: 3,
            dt: 0.005,
            t_end: 1.2,
            eta,
            source: SourceSpec {
                position: [1600.0, 2900.0],
                peak_frequency: 5.0,
                time_shift: 0.3,
                support_radius: 2.0 * h,
            },
            receivers: vec![[2000.0, 2200.0]],
            snapshot_times: Vec::new(),
            out_dir: None,
        }
    }
}

pub struct BenchOutput {
    pub receivers: Vec<ReceiverTrace>,
    pub energy: EnergyRecord,
    pub snapshot_files: Vec<PathBuf>,
    pub params: MaterialParams,
}

/// Run the benchmark: free surface on the top edge, absorbing conditions on
/// the other three, zero initial data, Ricker point source in both momentum
/// balances. Snapshot serialization runs on a separate writer thread fed by
/// a channel from the time loop.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchOutput, WavebenchError> {
    let params = MaterialParams::preset_coeffs(cfg.eta);
    run_benchmark_with_params(cfg, params)
}

pub fn run_benchmark_with_params(
    cfg: &BenchConfig,
    params: MaterialParams,
) -> Result<BenchOutput, WavebenchError> {
    let mesh = generate_structured(cfg.n, cfg.domain);
    let skeleton = build_skeleton(&mesh);
    let spaces = Spaces::new(cfg.k);
    let bc = BcSpec::new(
        [
            (TAG_TOP, BoundaryRole::FreeSurface),
            (TAG_BOTTOM, BoundaryRole::Absorbing),
            (TAG_LEFT, BoundaryRole::Absorbing),
            (TAG_RIGHT, BoundaryRole::Absorbing),
        ],
        Arc::new(ZeroFields),
    )
    .expect("distinct tags");
    let problem = Problem {
        mesh: &mesh,
        skeleton: &skeleton,
        spaces,
        params: params.clone(),
        bc,
        options: HdgOptions::default(),
    };
    let time = TimeGrid::with_dt(cfg.t_end, cfg.dt);
    let forcing = RickerPointSource { spec: cfg.source };

    let probes: Vec<StateProbe> = cfg
        .receivers
        .iter()
        .map(|&pos| {
            StateProbe::new(&mesh, spaces, pos)
                .ok_or(WavebenchError::ReceiverOutside(pos[0], pos[1]))
        })
        .collect::<Result<_, _>>()?;
    let mut traces: Vec<ReceiverTrace> = cfg
        .receivers
        .iter()
        .map(|&position| ReceiverTrace {
            position,
            times: Vec::new(),
            solid_velocity: Vec::new(),
            fluid_velocity: Vec::new(),
            solid_pressure: Vec::new(),
            pressure: Vec::new(),
        })
        .collect();

    // Map snapshot times to step indices.
    let mut snap_steps: Vec<(usize, f64)> = cfg
        .snapshot_times
        .iter()
        .map(|&ts| (((ts / time.dt()).round() as usize).min(time.steps), ts))
        .collect();
    snap_steps.sort_unstable_by_key(|s| s.0);
    snap_steps.dedup_by_key(|s| s.0);

    let snapshot_files;
    let energy;
    {
        let (tx, rx) = mpsc::channel::<(usize, crate::hdg::DGState)>();
        let out_dir = cfg.out_dir.clone();
        let writer_mesh = &mesh;
        let writer_params = params.clone();
        let result = std::thread::scope(|scope| {
            let writer = scope.spawn(move || -> std::io::Result<Vec<PathBuf>> {
                let mut written = Vec::new();
                while let Ok((step, state)) = rx.recv() {
                    if let Some(dir) = &out_dir {
                        let path = dir.join(format!("snapshot_{step:05}.vtk"));
                        vtk::write_snapshot(&path, writer_mesh, spaces, &writer_params, &state)?;
                        written.push(path);
                    }
                }
                Ok(written)
            });

            let run = transient::run(&problem, &forcing, &ZeroFields, &time, |step, state| {
                for (probe, trace) in probes.iter().zip(traces.iter_mut()) {
                    let s = probe.eval(state);
                    trace.times.push(state.t);
                    trace.solid_velocity.push(s.solid_velocity);
                    trace.fluid_velocity.push(s.fluid_velocity);
                    trace.solid_pressure.push(-0.5 * s.stress.trace());
                    trace.pressure.push(s.pressure);
                }
                if snap_steps.iter().any(|&(s, _)| s == step) && cfg.out_dir.is_some() {
                    tx.send((step, state.clone())).map_err(|e| e.to_string())?;
                }
                Ok(())
            });
            drop(tx);
            let written = writer.join().expect("snapshot writer thread");
            (run, written)
        });
        let run = result.0?;
        snapshot_files = result.1?;
        energy = run.energy;
    }

    Ok(BenchOutput {
        receivers: traces,
        energy,
        snapshot_files,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ricker_peak_and_zeros() {
        let (f0, t0) = (5.0, 0.3);
        assert_relative_eq!(ricker(t0, f0, t0), 1.0, epsilon = 1e-15);
        let w = std::f64::consts::PI * f0;
        let z = t0 + 1.0 / (2.0_f64.sqrt() * w);
        assert_relative_eq!(ricker(z, f0, t0), 0.0, epsilon = 1e-14);
        assert_relative_eq!(ricker(2.0 * t0 - z, f0, t0), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn ricker_matches_direct_evaluation() {
        // f0 = 5, t0 = 0.3 at t = 0.
        let a: f64 = std::f64::consts::PI * 5.0 * 0.3;
        let want = (1.0 - 2.0 * a * a) * (-a * a).exp();
        assert_relative_eq!(ricker(0.0, 5.0, 0.3), want, max_relative = 1e-15);
    }

    #[test]
    fn source_profile() {
        let s = SourceSpec {
            position: [0.0, 0.0],
            peak_frequency: 5.0,
            time_shift: 0.3,
            support_radius: 2.0,
        };
        // at |r| = support: zero; at |r| = support/2 along +x: 3/4.
        assert_eq!(spatial_source(2.0, 0.0, &s), [0.0, 0.0]);
        let v = spatial_source(1.0, 0.0, &s);
        assert_relative_eq!(v[0], 0.75, epsilon = 1e-15);
        assert_relative_eq!(v[1], 0.0, epsilon = 1e-15);
        assert_eq!(spatial_source(0.0, 0.0, &s), [0.0, 0.0]);
    }

    #[test]
    fn source_integral_vanishes_by_antisymmetry() {
        // Quadrature oracle over the support square.
        let s = SourceSpec {
            position: [0.0, 0.0],
            peak_frequency: 5.0,
            time_shift: 0.3,
            support_radius: 1.0,
        };
        let n = 400;
        let h = 2.0 * s.support_radius / n as f64;
        let mut ix = 0.0;
        let mut iy = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = -s.support_radius + (i as f64 + 0.5) * h;
                let y = -s.support_radius + (j as f64 + 0.5) * h;
                let v = spatial_source(x, y, &s);
                ix += v[0] * h * h;
                iy += v[1] * h * h;
            }
        }
        assert!(ix.abs() < 1e-12 && iy.abs() < 1e-12);
    }

    #[test]
    fn von_mises_values() {
        assert_relative_eq!(von_mises(&Sym2::new(3.0, 3.0, 0.0)), 0.0, epsilon = 1e-15);
        assert_relative_eq!(
            von_mises(&Sym2::new(1.0, -1.0, 0.0)),
            3.0_f64.sqrt(),
            max_relative = 1e-15
        );
        let s = Sym2::new(0.3, -1.2, 0.7);
        assert_relative_eq!(
            von_mises(&s.scale(2.0)),
            2.0 * von_mises(&s),
            max_relative = 1e-14
        );
    }
}
