//! Crank-Nicolson time integration of the condensed HDG system, discrete
//! initial data, and per-step energy monitoring.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fields::{ExactFields, VolumeForcing};
use crate::hdg::{BcSpec, DGState, HdgError, HdgOptions, HdgSystem, Spaces};
use crate::materials::MaterialParams;
use crate::mesh::{Mesh, Skeleton};

#[derive(Debug, Error)]
pub enum TransientError {
    #[error(transparent)]
    Hdg(#[from] HdgError),
    #[error("non-finite state detected at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },
    #[error("observer failed at step {step}: {msg}")]
    Observer { step: usize, msg: String },
}

/// Uniform partition of [0, T] into `steps` intervals; node(steps) == t_end
/// exactly.
#[derive(Debug, Clone, Copy)]
pub struct TimeGrid {
    pub t_end: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, steps: usize) -> Self {
        assert!(t_end > 0.0 && steps > 0);
        TimeGrid { t_end, steps }
    }

    /// Grid with step count ceil(t_end / dt_target).
    pub fn with_dt(t_end: f64, dt_target: f64) -> Self {
        let steps = (t_end / dt_target).ceil().max(1.0) as usize;
        TimeGrid { t_end, steps }
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    pub fn node(&self, n: usize) -> f64 {
        self.t_end * (n as f64 / self.steps as f64)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EnergySample {
    pub step: usize,
    pub t: f64,
    /// Squared H1 (density-weighted) norm of the velocities.
    pub velocity_sq: f64,
    /// Squared H2 (compliance/storage weighted) norm of (sigma, p).
    pub stress_pressure_sq: f64,
    /// Total energy (half the sum of the squared norms).
    pub total: f64,
}

#[derive(Debug, Clone, Default)]
pub struct EnergyRecord {
    pub samples: Vec<EnergySample>,
}

impl EnergyRecord {
    fn push(&mut self, step: usize, t: f64, h1: f64, h2: f64) {
        self.samples.push(EnergySample {
            step,
            t,
            velocity_sq: h1,
            stress_pressure_sq: h2,
            total: 0.5 * (h1 + h2),
        });
    }

    pub fn initial_total(&self) -> f64 {
        self.samples.first().map_or(0.0, |s| s.total)
    }

    pub fn max_total(&self) -> f64 {
        self.samples.iter().map(|s| s.total).fold(0.0, f64::max)
    }

    /// Largest step-to-step energy increase (0 for monotone decay).
    pub fn max_increase(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[1].total - w[0].total)
            .fold(0.0, f64::max)
    }
}

/// Everything needed to set up a transient solve on a fixed mesh.
pub struct Problem<'a> {
    pub mesh: &'a Mesh,
    pub skeleton: &'a Skeleton,
    pub spaces: Spaces,
    pub params: MaterialParams,
    pub bc: BcSpec,
    pub options: HdgOptions,
}

pub struct RunOutput {
    pub state: DGState,
    pub energy: EnergyRecord,
}

/// Projected initial data per the scheme's start-up rule: element
/// projections of (u, sigma, p) and face projections of the velocity traces.
pub fn initial_state(system: &HdgSystem, fields: &dyn ExactFields) -> DGState {
    system.initial_state(fields)
}

/// Integrate from the projected initial data of `initial`.
pub fn run<F>(
    problem: &Problem,
    forcing: &dyn VolumeForcing,
    initial: &dyn ExactFields,
    time: &TimeGrid,
    on_step: F,
) -> Result<RunOutput, TransientError>
where
    F: FnMut(usize, &DGState) -> Result<(), String>,
{
    let system = build_system(problem, time)?;
    let state0 = system.initial_state(initial);
    run_with_system(&system, forcing, state0, time, on_step)
}

/// Integrate from a caller-supplied state (its fixed trace coefficients are
/// reset to the boundary data at the start time).
pub fn run_from_state<F>(
    problem: &Problem,
    forcing: &dyn VolumeForcing,
    state0: DGState,
    time: &TimeGrid,
    on_step: F,
) -> Result<RunOutput, TransientError>
where
    F: FnMut(usize, &DGState) -> Result<(), String>,
{
    let system = build_system(problem, time)?;
    run_with_system(&system, forcing, state0, time, on_step)
}

pub fn build_system<'a>(
    problem: &Problem<'a>,
    time: &TimeGrid,
) -> Result<HdgSystem<'a>, TransientError> {
    Ok(HdgSystem::build(
        problem.mesh,
        problem.skeleton,
        problem.spaces,
        problem.params.clone(),
        problem.bc.clone(),
        time.dt(),
        problem.options,
    )?)
}

pub fn run_with_system<F>(
    system: &HdgSystem,
    forcing: &dyn VolumeForcing,
    mut state: DGState,
    time: &TimeGrid,
    mut on_step: F,
) -> Result<RunOutput, TransientError>
where
    F: FnMut(usize, &DGState) -> Result<(), String>,
{
    use crate::hdg::DofStatus;
    // Make the stored boundary data consistent with the start time.
    if system.dofs().n_fixed > 0 {
        let fixed = system.fixed_values(state.t);
        for (d, status) in system.dofs().status.iter().enumerate() {
            if let DofStatus::Fixed(i) = status {
                state.trace[d] = fixed[*i];
            }
        }
    }

    let mut energy = EnergyRecord::default();
    let (h1, h2) = system.energy(&state);
    energy.push(0, state.t, h1, h2);
    on_step(0, &state).map_err(|msg| TransientError::Observer { step: 0, msg })?;

    let t0 = state.t;
    let mut loads_prev = system.volume_loads(forcing, t0);
    for n in 0..time.steps {
        let t_next = t0 + time.t_end * ((n + 1) as f64 / time.steps as f64);
        let loads_next = system.volume_loads(forcing, t_next);
        state = system.cn_step(&state, &loads_prev, &loads_next, t_next)?;
        loads_prev = loads_next;

        let (h1, h2) = system.energy(&state);
        if !(h1.is_finite() && h2.is_finite()) {
            return Err(TransientError::NonFinite {
                step: n + 1,
                t: t_next,
            });
        }
        energy.push(n + 1, t_next, h1, h2);
        on_step(n + 1, &state).map_err(|msg| TransientError::Observer { step: n + 1, msg })?;
    }

    Ok(RunOutput { state, energy })
}

/// Random coefficients, useful for energy-dissipation property tests.
/// Fixed trace coefficients are left zero (homogeneous data).
pub fn random_state(
    mesh: &Mesh,
    skeleton: &Skeleton,
    spaces: Spaces,
    seed: u64,
    amplitude: f64,
) -> DGState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = DGState::zero(spaces, mesh.n_elements(), skeleton.n_faces());
    for x in &mut state.vol {
        for v in x.iter_mut() {
            *v = rng.gen_range(-amplitude..amplitude);
        }
    }
    for v in state.trace.iter_mut() {
        *v = rng.gen_range(-amplitude..amplitude);
    }
    state
}

/// Zero volume loads, one vector per element.
pub fn zero_loads(system: &HdgSystem) -> Vec<DVector<f64>> {
    vec![DVector::zeros(system.spaces().vol_dim()); system.mesh.n_elements()]
}
