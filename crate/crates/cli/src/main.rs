//! Command-line frontend: dispatches convergence studies, the energy test
//! and the wave benchmark, and writes CSV/VTK artifacts plus a
//! machine-readable summary.
//!
//! Exit codes: 0 success, 1 validation/configuration error, 2 numerical
//! failure (solver breakdown or non-finite state).

mod config;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use porohdg::fields::ZeroFields;
use porohdg::hdg::{BcSpec, HdgOptions, Spaces};
use porohdg::mesh::{build_skeleton, generate_structured, Rect};
use porohdg::transient::{self, Problem, TimeGrid, TransientError};
use porohdg::verification::{dt_study, h_study, p_study, StudyResult};
use porohdg::wavebench::{run_benchmark_with_params, BenchConfig, SourceSpec};

use config::{
    parse_list, parse_point, parse_points, resolve_material, validate_material_values, FileConfig,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl From<TransientError> for CliError {
    fn from(e: TransientError) -> Self {
        match &e {
            TransientError::NonFinite { .. } => CliError::Numerical(e.to_string()),
            TransientError::Hdg(h) => match h {
                porohdg::hdg::HdgError::Solver(_)
                | porohdg::hdg::HdgError::SingularLocal { .. } => CliError::Numerical(e.to_string()),
                _ => CliError::Validation(e.to_string()),
            },
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<porohdg::wavebench::WavebenchError> for CliError {
    fn from(e: porohdg::wavebench::WavebenchError) -> Self {
        match e {
            porohdg::wavebench::WavebenchError::Transient(t) => t.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("i/o error: {e}"))
    }
}

#[derive(Parser)]
#[command(name = "porohdg", version, about = "HDG solver for dynamic poroelasticity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Material preset: L1, L2 or coeffs.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// INI-style configuration file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV/VTK artifacts and the summary.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized runs.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Spatial convergence study on structured meshes n0 * 2^i.
    ConvergenceH {
        #[arg(long)]
        k: Option<usize>,
        /// Number of refinement levels.
        #[arg(long)]
        levels: Option<usize>,
        /// Coarsest subdivision count.
        #[arg(long)]
        n0: Option<usize>,
        #[arg(long)]
        t_end: Option<f64>,
        /// Coefficient c in the rule dt = c h^((k+2)/2).
        #[arg(long)]
        dt_coeff: Option<f64>,
    },
    /// Temporal convergence study at fixed space discretization.
    ConvergenceDt {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        t_end: Option<f64>,
        /// Comma-separated step counts, e.g. 16,32,64,128.
        #[arg(long)]
        steps: Option<String>,
    },
    /// Degree sweep at fixed mesh and time step.
    ConvergenceP {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k_min: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Zero-forcing dissipation check from random initial data.
    EnergyTest {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Poroelastic wave benchmark with Ricker source and absorbing edges.
    Wave {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        /// Fluid viscosity (Pa s); 0 for the inviscid case.
        #[arg(long)]
        eta: Option<f64>,
        /// Ricker peak frequency (Hz).
        #[arg(long)]
        f0: Option<f64>,
        /// Ricker time shift (s).
        #[arg(long)]
        t0: Option<f64>,
        /// Source position "x,y" (m).
        #[arg(long)]
        source: Option<String>,
        /// Receiver positions "x,y;x,y;..." (m).
        #[arg(long)]
        receivers: Option<String>,
        /// Snapshot times "t1,t2,..." (s).
        #[arg(long)]
        snapshots: Option<String>,
        /// Spatial source support radius (m); defaults to twice the cell size.
        #[arg(long)]
        support_radius: Option<f64>,
        /// Domain side length (m).
        #[arg(long)]
        domain: Option<f64>,
    },
}

struct Phases {
    entries: Vec<(String, f64)>,
    current: Option<(String, Instant)>,
}

impl Phases {
    fn new() -> Self {
        Phases {
            entries: Vec::new(),
            current: None,
        }
    }

    fn start(&mut self, name: &str) {
        self.finish();
        self.current = Some((name.to_string(), Instant::now()));
    }

    fn finish(&mut self) {
        if let Some((name, t0)) = self.current.take() {
            self.entries.push((name, t0.elapsed().as_secs_f64()));
        }
    }

    fn to_json(&self) -> serde_json::Value {
        json!(self
            .entries
            .iter()
            .map(|(n, s)| json!({"name": n, "seconds": s}))
            .collect::<Vec<_>>())
    }
}

/// Atomic write: temp file in the same directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

fn study_json(study: &StudyResult) -> serde_json::Value {
    let (mean_sp, mean_u) = study.mean_rates();
    json!({
        "rows": study.rows.iter().map(|r| json!({
            "level": r.level, "h": r.h, "dt": r.dt, "k": r.k,
            "err_sigma_p": r.err_sigma_p, "err_u": r.err_u,
            "rate_sigma_p": r.rate_sigma_p, "rate_u": r.rate_u,
        })).collect::<Vec<_>>(),
        "mean_rate_sigma_p": mean_sp,
        "mean_rate_u": mean_u,
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(p) = &cli.preset {
        cfg.set("material.preset", p.clone());
    }
    if let Some(s) = cli.seed {
        cfg.set("run.seed", s.to_string());
    }
    validate_material_values(&cfg)?;

    std::fs::create_dir_all(&cli.out)?;
    let mut phases = Phases::new();
    phases.start("setup");

    let command_name;
    let results;
    match &cli.command {
        Command::ConvergenceH {
            k,
            levels,
            n0,
            t_end,
            dt_coeff,
        } => {
            command_name = "convergence-h";
            cfg.set_if_absent("material.preset", "L1".into());
            let k = k.or(cfg.get_usize("discretization.k")?).unwrap_or(1);
            let levels = levels.or(cfg.get_usize("discretization.levels")?).unwrap_or(4);
            let n0 = n0.or(cfg.get_usize("discretization.n0")?).unwrap_or(4);
            let t_end = t_end.or(cfg.get_f64("time.t_end")?).unwrap_or(0.3);
            let dt_coeff = match dt_coeff {
                Some(c) => Some(*c),
                None => cfg.get_f64("discretization.dt_coeff")?,
            };
            if levels < 2 {
                return Err(CliError::Validation(
                    "`discretization.levels` must be >= 2".into(),
                ));
            }
            cfg.set("discretization.k", k.to_string());
            cfg.set("discretization.levels", levels.to_string());
            cfg.set("discretization.n0", n0.to_string());
            cfg.set("time.t_end", format!("{t_end}"));
            let params = resolve_material(&cfg)?;
            let ns: Vec<usize> = (0..levels).map(|i| n0 << i).collect();
            phases.start("study");
            let study = h_study(&params, k, &ns, t_end, dt_coeff)?;
            phases.start("output");
            let csv_path = cli.out.join(format!("convergence_h_k{k}.csv"));
            write_atomic(&csv_path, &study.to_csv_string())?;
            results = json!({
                "study": study_json(&study),
                "csv": csv_path.to_string_lossy(),
            });
        }
        Command::ConvergenceDt { n, k, t_end, steps } => {
            command_name = "convergence-dt";
            cfg.set_if_absent("material.preset", "L1".into());
            let n = n.or(cfg.get_usize("mesh.n")?).unwrap_or(8);
            let k = k.or(cfg.get_usize("discretization.k")?).unwrap_or(4);
            let t_end = t_end.or(cfg.get_f64("time.t_end")?).unwrap_or(1.0);
            let steps: Vec<usize> = match steps.as_deref().or(cfg.get("discretization.steps")) {
                Some(text) => parse_list(text, "steps")?
                    .into_iter()
                    .map(|v| v as usize)
                    .collect(),
                None => vec![16, 32, 64, 128],
            };
            cfg.set("mesh.n", n.to_string());
            cfg.set("discretization.k", k.to_string());
            cfg.set("time.t_end", format!("{t_end}"));
            let params = resolve_material(&cfg)?;
            phases.start("study");
            let study = dt_study(&params, n, k, &steps, t_end)?;
            phases.start("output");
            let csv_path = cli.out.join("convergence_dt.csv");
            write_atomic(&csv_path, &study.to_csv_string())?;
            results = json!({
                "study": study_json(&study),
                "csv": csv_path.to_string_lossy(),
            });
        }
        Command::ConvergenceP {
            n,
            k_min,
            k_max,
            dt,
            t_end,
        } => {
            command_name = "convergence-p";
            cfg.set_if_absent("material.preset", "L1".into());
            let n = n.or(cfg.get_usize("mesh.n")?).unwrap_or(4);
            let k_min = k_min.or(cfg.get_usize("discretization.k_min")?).unwrap_or(2);
            let k_max = k_max.or(cfg.get_usize("discretization.k_max")?).unwrap_or(5);
            let dt = dt.or(cfg.get_f64("discretization.dt")?).unwrap_or(1e-4);
            let t_end = t_end.or(cfg.get_f64("time.t_end")?).unwrap_or(0.3);
            if k_max < k_min {
                return Err(CliError::Validation("k_max must be >= k_min".into()));
            }
            cfg.set("mesh.n", n.to_string());
            let params = resolve_material(&cfg)?;
            let ks: Vec<usize> = (k_min..=k_max).collect();
            phases.start("study");
            let study = p_study(&params, n, &ks, dt, t_end)?;
            phases.start("output");
            let csv_path = cli.out.join("convergence_p.csv");
            write_atomic(&csv_path, &study.to_csv_string())?;
            let ratios: Vec<serde_json::Value> = study
                .rows
                .windows(2)
                .map(|w| {
                    json!({
                        "from_k": w[0].k, "to_k": w[1].k,
                        "ratio_sigma_p": w[1].err_sigma_p / w[0].err_sigma_p,
                        "ratio_u": w[1].err_u / w[0].err_u,
                    })
                })
                .collect();
            results = json!({
                "study": study_json(&study),
                "successive_ratios": ratios,
                "csv": csv_path.to_string_lossy(),
            });
        }
        Command::EnergyTest { n, k, steps, t_end } => {
            command_name = "energy-test";
            cfg.set_if_absent("material.preset", "L1".into());
            let n = n.or(cfg.get_usize("mesh.n")?).unwrap_or(4);
            let k = k.or(cfg.get_usize("discretization.k")?).unwrap_or(1);
            let steps = steps.or(cfg.get_usize("discretization.steps")?).unwrap_or(200);
            let t_end = t_end.or(cfg.get_f64("time.t_end")?).unwrap_or(1.0);
            let seed = cfg
                .get_usize("run.seed")
                .ok()
                .flatten()
                .map(|s| s as u64)
                .unwrap_or(0);
            cfg.set("mesh.n", n.to_string());
            cfg.set("discretization.k", k.to_string());
            let params = resolve_material(&cfg)?;
            phases.start("run");
            let mesh = generate_structured(n, Rect::unit_square());
            let skeleton = build_skeleton(&mesh);
            let spaces = Spaces::new(k);
            let bc = BcSpec::dirichlet([0, 1, 2, 3], Arc::new(ZeroFields));
            let problem = Problem {
                mesh: &mesh,
                skeleton: &skeleton,
                spaces,
                params,
                bc,
                options: HdgOptions::default(),
            };
            let state0 = transient::random_state(&mesh, &skeleton, spaces, seed, 1.0);
            let time = TimeGrid::new(t_end, steps);
            let out =
                transient::run_from_state(&problem, &ZeroFields, state0, &time, |_, _| Ok(()))?;
            phases.start("output");
            let mut csv = String::from("step,t,velocity_sq,stress_pressure_sq,total\n");
            for s in &out.energy.samples {
                csv.push_str(&format!(
                    "{},{:.9e},{:.9e},{:.9e},{:.9e}\n",
                    s.step, s.t, s.velocity_sq, s.stress_pressure_sq, s.total
                ));
            }
            let csv_path = cli.out.join("energy.csv");
            write_atomic(&csv_path, &csv)?;
            let e0 = out.energy.initial_total();
            let max_inc = out.energy.max_increase();
            results = json!({
                "initial_energy": e0,
                "final_energy": out.energy.samples.last().map(|s| s.total),
                "max_step_increase": max_inc,
                "dissipative": max_inc <= 1e-10 * e0,
                "csv": csv_path.to_string_lossy(),
            });
        }
        Command::Wave {
            n,
            k,
            dt,
            t_end,
            eta,
            f0,
            t0,
            source,
            receivers,
            snapshots,
            support_radius,
            domain,
        } => {
            command_name = "wave";
            cfg.set_if_absent("material.preset", "coeffs".into());
            if let Some(e) = eta {
                if *e < 0.0 {
                    return Err(CliError::Validation(format!(
                        "`material.eta` must be nonnegative, got {e}"
                    )));
                }
                cfg.set("material.eta", format!("{e}"));
            }
            let n = n.or(cfg.get_usize("mesh.n")?).unwrap_or(48);
            let k = k.or(cfg.get_usize("discretization.k")?).unwrap_or(3);
            let dt = dt.or(cfg.get_f64("discretization.dt")?).unwrap_or(0.005);
            let t_end = t_end.or(cfg.get_f64("time.t_end")?).unwrap_or(1.2);
            let side = domain.or(cfg.get_f64("wavebench.domain")?).unwrap_or(4800.0);
            let f0 = f0.or(cfg.get_f64("wavebench.f0")?).unwrap_or(5.0);
            let t0v = t0.or(cfg.get_f64("wavebench.t0")?).unwrap_or(0.3);
            let source_pos = match source.as_deref().or(cfg.get("wavebench.source")) {
                Some(text) => parse_point(text, "wavebench.source")?,
                None => [1600.0, 2900.0],
            };
            let receivers = match receivers.as_deref().or(cfg.get("wavebench.receivers")) {
                Some(text) => parse_points(text, "wavebench.receivers")?,
                None => vec![[2000.0, 2200.0]],
            };
            let snapshot_times = match snapshots.as_deref().or(cfg.get("wavebench.snapshots")) {
                Some(text) => parse_list(text, "wavebench.snapshots")?,
                None => Vec::new(),
            };
            let support = support_radius
                .or(cfg.get_f64("wavebench.support_radius")?)
                .unwrap_or(2.0 * side / n as f64);
            let params = resolve_material(&cfg)?;
            cfg.set("mesh.n", n.to_string());
            cfg.set("discretization.k", k.to_string());
            cfg.set("discretization.dt", format!("{dt}"));
            cfg.set("time.t_end", format!("{t_end}"));
            let bench = BenchConfig {
                domain: Rect::square(side),
                n,
                k,
                dt,
                t_end,
                eta: params.provenance.as_ref().map(|p| p.eta).unwrap_or(0.0),
                source: SourceSpec {
                    position: source_pos,
                    peak_frequency: f0,
                    time_shift: t0v,
                    support_radius: support,
                },
                receivers,
                snapshot_times,
                out_dir: Some(cli.out.clone()),
            };
            phases.start("run");
            let out = run_benchmark_with_params(&bench, params)?;
            phases.start("output");
            let mut receiver_files = Vec::new();
            for (i, trace) in out.receivers.iter().enumerate() {
                let path = cli.out.join(format!("receiver_{i}.csv"));
                write_atomic(&path, &trace.to_csv_string())?;
                receiver_files.push(path.to_string_lossy().to_string());
            }
            let mut energy_csv = String::from("step,t,velocity_sq,stress_pressure_sq,total\n");
            for s in &out.energy.samples {
                energy_csv.push_str(&format!(
                    "{},{:.9e},{:.9e},{:.9e},{:.9e}\n",
                    s.step, s.t, s.velocity_sq, s.stress_pressure_sq, s.total
                ));
            }
            let energy_path = cli.out.join("energy.csv");
            write_atomic(&energy_path, &energy_csv)?;
            results = json!({
                "receivers": receiver_files,
                "snapshots": out.snapshot_files.iter().map(|p| p.to_string_lossy()).collect::<Vec<_>>(),
                "energy_csv": energy_path.to_string_lossy(),
                "max_energy": out.energy.max_total(),
                "final_energy": out.energy.samples.last().map(|s| s.total),
                "wave_speeds": out.params.wave_speeds().ok().map(|w| json!({
                    "shear": w.shear, "fast": w.fast, "slow": w.slow,
                })),
            });
        }
    }
    phases.finish();

    let canonical = cfg.canonical();
    let mut hasher = DefaultHasher::new();
    canonical.hash(&mut hasher);
    command_name.hash(&mut hasher);
    let summary = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": command_name,
        "config_hash": format!("{:016x}", hasher.finish()),
        "config": cfg.entries(),
        "phases": phases.to_json(),
        "results": results,
    });
    write_atomic(
        &cli.out.join("summary.json"),
        &serde_json::to_string_pretty(&summary).expect("serializable summary"),
    )?;
    Ok(())
}

fn main() {
    // POROHDG_THREADS caps the worker count for element-parallel sections.
    if let Ok(threads) = std::env::var("POROHDG_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(1);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e @ CliError::Validation(_)) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
        Err(e @ CliError::Numerical(_)) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
