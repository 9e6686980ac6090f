//! `torq` command line: spectra, flux sweeps, qubit-parameter extraction,
//! disorder ensembles and toroidal-coupling estimates.

use clap::{Args, Parser, Subcommand};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use torq::config::{parse_config, config_hash, BackendChoice, ConfigFile};
use torq::disorder::{run_ensemble, DisorderSpec, EnsembleSummary, RealizationCurve};
use torq::error::TorqError;
use torq::hamiltonian::{build_charge_basis, build_flux_grid, ChargeBasisSpec, FluxGridSpec};
use torq::solve::solve_lowest;
use torq::sweep::{fmt_f64, run_sweep, write_csv, write_json, OutputKind, SweepConfig};
use torq::toroidal::{
    coupling_report, solenoid_coupling, solenoid_coupling_closed_form, solenoid_moment,
    torus_effective_volume, SolenoidGeometry,
};

#[derive(Parser)]
#[command(name = "torq", version, about = "Toroidal flux qubit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Strict JSON config path.
    #[arg(long)]
    config: PathBuf,
    /// Output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_parser = ["csv", "json"], default_value = "csv")]
    format: String,
    /// Worker pool size; never changes any output byte.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Backend override.
    #[arg(long, value_parser = ["charge", "grid", "both"])]
    backend: Option<String>,
    /// dotted-key=value config overrides.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest eigenvalues at the config's bias point.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Flux (or bias-current) sweep of energies and circulating currents.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Two-level parameter extraction (Delta, epsilon, I_p) from a sweep.
    Qubit {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Seeded fabrication-disorder ensemble over the config's sweep grid.
    Disorder {
        #[command(flatten)]
        common: CommonArgs,
        /// RNG seed; required, there is no silent nondeterminism.
        #[arg(long)]
        seed: u64,
    },
    /// Qubit-field toroidal coupling estimate in SI units.
    Coupling {
        /// Effective volume, m^3.
        #[arg(long)]
        v_eff: f64,
        /// Circulating current scale, A.
        #[arg(long)]
        current: f64,
        /// Field amplitude, V/m.
        #[arg(long)]
        field: f64,
        /// Field frequency, Hz.
        #[arg(long)]
        freq: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classical toroidal solenoid moment and field coupling.
    Solenoid {
        #[arg(long)]
        n_turns: u64,
        /// Current per turn, A.
        #[arg(long)]
        current: f64,
        /// Tube radius R, m.
        #[arg(long)]
        tube_radius: f64,
        /// Torus diameter D, m.
        #[arg(long)]
        torus_diameter: f64,
        /// Field amplitude, V/m (with --freq, gives the coupling energy).
        #[arg(long)]
        field: Option<f64>,
        /// Field frequency, Hz.
        #[arg(long)]
        freq: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    // single-threaded BLAS: parallelism belongs to the worker pool
    if std::env::var_os("OPENBLAS_NUM_THREADS").is_none() {
        // SAFETY: called before any BLAS use or thread spawn
        unsafe { std::env::set_var("OPENBLAS_NUM_THREADS", "1") };
    }
    env_logger::Builder::from_env(env_logger::Env::new().filter("TORQ_LOG")).init();

    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            match e {
                AppError::Io(_) => ExitCode::from(2),
                AppError::Domain(_) => ExitCode::from(1),
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum AppError {
    #[error("{0}")]
    Domain(#[from] TorqError),
    #[error("{0}")]
    Io(String),
}

fn io_err<E: std::fmt::Display>(path: &Path) -> impl FnOnce(E) -> AppError + '_ {
    move |e| AppError::Io(format!("{}: {e}", path.display()))
}

fn load_config(common: &CommonArgs) -> Result<ConfigFile, AppError> {
    let text = fs::read_to_string(&common.config).map_err(io_err(&common.config))?;
    Ok(parse_config(&text, &common.overrides)?)
}

fn backend_choice(common: &CommonArgs, cfg: &ConfigFile) -> BackendChoice {
    match common.backend.as_deref() {
        Some("charge") => BackendChoice::Charge,
        Some("grid") => BackendChoice::Grid,
        Some("both") => BackendChoice::Both,
        _ => cfg.sweep.as_ref().map_or(BackendChoice::Charge, |s| s.backend),
    }
}

fn sweep_config(cfg: &ConfigFile, common: &CommonArgs, force_outputs: Option<&[OutputKind]>) -> Result<SweepConfig, AppError> {
    let params = cfg.circuit_params()?;
    let section = cfg.sweep.as_ref().ok_or_else(|| {
        TorqError::InvalidConfig("config has no `sweep` section".into())
    })?;
    let mut outputs: std::collections::BTreeSet<OutputKind> = section
        .outputs
        .iter()
        .map(|s| OutputKind::parse(s))
        .collect::<Result<_, _>>()?;
    if let Some(extra) = force_outputs {
        outputs.extend(extra.iter().copied());
    }
    Ok(SweepConfig {
        params,
        grid: section.grid.values()?,
        backend: backend_choice(common, cfg),
        charge_spec: ChargeBasisSpec::new(section.n_max)?,
        flux_spec: FluxGridSpec::square(section.half_width, section.grid_points)?,
        k: section.k,
        outputs,
    })
}

fn write_output(out: &Option<PathBuf>, content: &[u8]) -> Result<(), AppError> {
    match out {
        Some(path) => fs::write(path, content).map_err(io_err(path)),
        None => std::io::stdout()
            .write_all(content)
            .map_err(|e| AppError::Io(format!("stdout: {e}"))),
    }
}

fn with_worker_pool<T: Send>(
    workers: usize,
    f: impl FnOnce() -> Result<T, AppError> + Send,
) -> Result<T, AppError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| AppError::Io(format!("worker pool: {e}")))?;
    pool.install(f)
}

fn run() -> Result<(), AppError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Spectrum { common } => {
            let cfg = load_config(&common)?;
            let params = cfg.circuit_params()?;
            let backend = backend_choice(&common, &cfg);
            let (n_max, grid_points, half_width, k) = cfg.sweep.as_ref().map_or(
                (10, 201, std::f64::consts::PI, 4),
                |s| (s.n_max, s.grid_points, s.half_width, s.k.max(2)),
            );
            let h = match backend {
                BackendChoice::Grid => {
                    build_flux_grid(&params, &FluxGridSpec::square(half_width, grid_points)?)?
                }
                _ => build_charge_basis(&params, &ChargeBasisSpec::new(n_max)?)?,
            };
            let sp = solve_lowest(&h, k)?;
            let doc = serde_json::json!({
                "bias": params.bias.value(),
                "bias_kind": params.bias.name(),
                "energies_EJ": sp.energies,
                "residuals": sp.residuals,
                "gap_EJ": if k >= 2 { Some(sp.energies[1] - sp.energies[0]) } else { None },
                "config_hash": config_hash(&cfg),
            });
            write_output(&common.out, format!("{doc:#}\n").as_bytes())
        }
        Command::Sweep { common } => {
            let cfg = load_config(&common)?;
            let sc = sweep_config(&cfg, &common, None)?;
            let hash = config_hash(&cfg);
            let result = with_worker_pool(common.workers, || Ok(run_sweep(&sc, &hash)?))?;
            let mut buf = Vec::new();
            if common.format == "json" {
                write_json(&result, &mut buf).map_err(|e| AppError::Io(e.to_string()))?;
            } else {
                write_csv(&result, &mut buf).map_err(|e| AppError::Io(e.to_string()))?;
            }
            write_output(&common.out, &buf)
        }
        Command::Qubit { common } => {
            let cfg = load_config(&common)?;
            let sc = sweep_config(
                &cfg,
                &common,
                Some(&[OutputKind::Energies, OutputKind::Currents, OutputKind::QubitParams]),
            )?;
            let hash = config_hash(&cfg);
            let result = with_worker_pool(common.workers, || Ok(run_sweep(&sc, &hash)?))?;
            let q = result.qubit_params.as_ref().expect("qubit output requested");
            let doc = serde_json::json!({
                "delta_EJ_per_hbar": q.delta,
                "f_degeneracy": q.f_degeneracy,
                "i_p_Ic": q.i_p,
                "i_plateau_Ic": q.i_plateau,
                "epsilon_of_f": q.epsilon_of_f,
                "metadata": result.metadata,
            });
            write_output(&common.out, format!("{doc:#}\n").as_bytes())
        }
        Command::Disorder { common, seed } => {
            let cfg = load_config(&common)?;
            let params = cfg.circuit_params()?;
            let section = cfg.disorder.as_ref().ok_or_else(|| {
                TorqError::InvalidConfig("config has no `disorder` section".into())
            })?;
            let sweep_section = cfg.sweep.as_ref().ok_or_else(|| {
                TorqError::InvalidConfig("config has no `sweep` section".into())
            })?;
            let d = DisorderSpec {
                fractional_spread: section.fractional_spread,
                n_realizations: section.n_realizations,
                distribution: section.distribution,
                seed,
            };
            let f_grid = sweep_section.grid.values()?;
            let basis = ChargeBasisSpec::new(sweep_section.n_max)?;
            let (summary, curves) = with_worker_pool(common.workers, || {
                Ok(run_ensemble(&params, &d, &f_grid, &basis)?)
            })?;
            emit_disorder(&common, &f_grid, &summary, &curves, &config_hash(&cfg))
        }
        Command::Coupling {
            v_eff,
            current,
            field,
            freq,
            out,
        } => {
            let report = coupling_report(v_eff, current, field, freq, false)?;
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            write_output(&out, format!("{text}\n").as_bytes())
        }
        Command::Solenoid {
            n_turns,
            current,
            tube_radius,
            torus_diameter,
            field,
            freq,
            out,
        } => {
            let g = SolenoidGeometry {
                n_turns,
                current,
                tube_radius,
                torus_diameter,
                axis: [0.0, 0.0, 1.0],
            };
            let m = solenoid_moment(&g)?;
            let coupling = match (field, freq) {
                (Some(e0), Some(nu)) => {
                    let de_dt = [0.0, 0.0, 2.0 * std::f64::consts::PI * nu * e0];
                    Some(serde_json::json!({
                        "de_dt_peak_V_per_m_s": de_dt[2],
                        "u_int_J": solenoid_coupling(&m, de_dt),
                        "u_int_closed_form_J": solenoid_coupling_closed_form(&g, de_dt),
                    }))
                }
                _ => None,
            };
            let doc = serde_json::json!({
                "j0": m.j0,
                "t_bar_magnitude": m.magnitude,
                "direction": m.direction,
                "v_eff_torus_m3": torus_effective_volume(torus_diameter, tube_radius),
                "coupling": coupling,
            });
            write_output(&out, format!("{doc:#}\n").as_bytes())
        }
    }
}

/// Raw curves as CSV (realization, f, E0_EJ, E1_EJ, I0_Ic, I1_Ic) plus a
/// JSON summary beside it (`<out>.summary.json`) when writing CSV to a
/// file; `--format json` writes the summary alone.
fn emit_disorder(
    common: &CommonArgs,
    f_grid: &[f64],
    summary: &EnsembleSummary,
    curves: &[RealizationCurve],
    hash: &str,
) -> Result<(), AppError> {
    let summary_doc = serde_json::json!({
        "summary": summary,
        "config_hash": hash,
        "tool_version": torq::sweep::TOOL_VERSION,
    });
    let summary_text = serde_json::to_string_pretty(&summary_doc).expect("summary serializes");

    if common.format == "json" {
        return write_output(&common.out, format!("{summary_text}\n").as_bytes());
    }

    let mut buf = Vec::new();
    writeln!(buf, "realization,f,E0_EJ,E1_EJ,I0_Ic,I1_Ic").map_err(|e| AppError::Io(e.to_string()))?;
    for c in curves {
        for (j, &f) in f_grid.iter().enumerate() {
            writeln!(
                buf,
                "{},{},{},{},{},{}",
                c.realization,
                fmt_f64(f),
                fmt_f64(c.e0[j]),
                fmt_f64(c.e1[j]),
                fmt_f64(c.i0[j]),
                fmt_f64(c.i1[j]),
            )
            .map_err(|e| AppError::Io(e.to_string()))?;
        }
    }
    write_output(&common.out, &buf)?;
    if let Some(path) = &common.out {
        let summary_path = path.with_extension("summary.json");
        fs::write(&summary_path, format!("{summary_text}\n")).map_err(io_err(&summary_path))?;
    }
    Ok(())
}
