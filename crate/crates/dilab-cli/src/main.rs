//! Command-line driver: run a study from a TOML config, sweep one axis for a
//! convergence fit, or inspect the registry.
//!
//! Exit codes: 0 success, 1 criteria failed, 2 config/schema error, 3
//! tail-mass breach (a partial report is still written), 4 other numerical
//! failure.

use clap::{Parser, Subcommand};
use dilab::config::{load_config, ExperimentConfig};
use dilab::error::DilabError;
use dilab::experiments::{registry, run_study};
use dilab::fitting::{fit_power_law, trend_flags};
use dilab::report::{write_meta, ExperimentReport, RunMeta};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "dilab",
    about = "Numerical laboratory for linear Schrödinger flows",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one study and write its report.
    Run {
        /// Path to the experiment TOML.
        config: PathBuf,
        /// Override a config value, e.g. --set grid.points=256. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory (defaults to the config's output.directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rerun a study along one refinement axis and fit the convergence order
    /// of its headline metric.
    Convergence {
        config: PathBuf,
        /// Refinement axis: N (grid points), dt (time step), T (window), eps
        /// (multiplier regularization).
        #[arg(long)]
        axis: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List every runnable study.
    ListExperiments,
    /// Parse and validate a config without running anything.
    Validate {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

fn main() -> ExitCode {
    let threads = init_thread_pool();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, set, out } => cmd_run(&config, &set, out.as_deref(), threads),
        Command::Convergence {
            config,
            axis,
            set,
            out,
        } => cmd_convergence(&config, &axis, &set, out.as_deref()),
        Command::ListExperiments => {
            for entry in registry() {
                println!("{:<18} {}", entry.name, entry.description);
            }
            0
        }
        Command::Validate { config, set } => match load_config(&config, &set) {
            Ok(cfg) => match dilab::experiments::lookup(&cfg.experiment) {
                Ok(_) => {
                    println!("ok: {} ({})", cfg.experiment, config.display());
                    0
                }
                Err(e) => fail(&e),
            },
            Err(e) => fail(&e),
        },
    };
    ExitCode::from(code)
}

/// DILAB_THREADS caps the rayon pool; unset means the rayon default.
fn init_thread_pool() -> usize {
    if let Ok(requested) = std::env::var("DILAB_THREADS") {
        if let Ok(n) = requested.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
    rayon::current_num_threads()
}

fn fail(e: &DilabError) -> u8 {
    eprintln!("error: {e}");
    match e {
        DilabError::Config(_) => 2,
        DilabError::TailMass { .. } => 3,
        _ => 4,
    }
}

fn cmd_run(config: &Path, overrides: &[String], out: Option<&Path>, threads: usize) -> u8 {
    let cfg = match load_config(config, overrides) {
        Ok(cfg) => cfg,
        Err(e) => return fail(&e),
    };
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    let started = Instant::now();
    match run_study(&cfg) {
        Ok(report) => {
            for line in report.summary_lines() {
                println!("{line}");
            }
            if let Err(e) = write_outputs(&report, &cfg, &dir, started.elapsed().as_secs_f64(), threads) {
                return fail(&e);
            }
            if report.passed {
                println!("PASS {}", report.experiment);
                0
            } else {
                println!("FAIL {}", report.experiment);
                1
            }
        }
        Err(e @ DilabError::TailMass { .. }) => {
            // The partial report records the abort reason so downstream
            // tooling sees a fresh verdict rather than a stale pass.
            let mut report = ExperimentReport::new(&cfg.experiment, cfg.echo());
            report.aborted = Some(e.to_string());
            report.finalize();
            let _ = write_outputs(&report, &cfg, &dir, started.elapsed().as_secs_f64(), threads);
            fail(&e)
        }
        Err(e) => fail(&e),
    }
}

fn write_outputs(
    report: &ExperimentReport,
    cfg: &ExperimentConfig,
    dir: &Path,
    wall_clock_seconds: f64,
    threads: usize,
) -> Result<(), DilabError> {
    if cfg.output.formats.iter().any(|f| f == "json") {
        let path = report.write_json(dir)?;
        println!("wrote {}", path.display());
    }
    if cfg.output.formats.iter().any(|f| f == "csv") {
        for path in report.write_csvs(dir)? {
            println!("wrote {}", path.display());
        }
    }
    write_meta(
        dir,
        &RunMeta {
            wall_clock_seconds,
            threads,
        },
    )?;
    Ok(())
}

struct SweepPoint {
    /// Step parameter the fit runs over (spacing, dt, 1/T, eps).
    x: f64,
    overrides: Vec<String>,
    label: String,
}

/// Build the per-point override sets for one axis out of the ladders the
/// config already declares, so a sweep never invents parameters the study
/// was not tuned for.
fn sweep_points(cfg: &ExperimentConfig, axis: &str) -> Result<Vec<SweepPoint>, DilabError> {
    let mut points = Vec::new();
    match axis {
        "N" => {
            let ladder = &cfg.sweep.n_ladder;
            if ladder.len() < 2 {
                return Err(DilabError::Config(
                    "axis N needs sweep.n_ladder with at least two resolutions".into(),
                ));
            }
            for (i, &p) in ladder.iter().enumerate() {
                let prev = if i == 0 { (p / 2).max(2) } else { ladder[i - 1] };
                points.push(SweepPoint {
                    x: 2.0 * cfg.grid.extent / p as f64,
                    overrides: vec![
                        format!("grid.points={p}"),
                        format!("sweep.n_ladder=[{prev}, {p}]"),
                    ],
                    label: format!("N={p}"),
                });
            }
        }
        "dt" => {
            // Halve whichever time discretization the config declares.
            if let Some(dt) = cfg.sweep.time_step {
                for k in 0..3u32 {
                    let v = dt / 2f64.powi(k as i32);
                    points.push(SweepPoint {
                        x: v,
                        overrides: vec![format!("sweep.time_step={v}")],
                        label: format!("dt={v}"),
                    });
                }
            } else if let Some(steps) = cfg.sweep.steps {
                let horizon = cfg.sweep.horizon()?;
                for k in 0..3u32 {
                    let s = steps * 2usize.pow(k);
                    points.push(SweepPoint {
                        x: horizon / s as f64,
                        overrides: vec![format!("sweep.steps={s}")],
                        label: format!("steps={s}"),
                    });
                }
            } else {
                return Err(DilabError::Config(
                    "axis dt needs sweep.time_step or sweep.steps".into(),
                ));
            }
        }
        "T" => {
            let ladder = cfg.sweep.ladder("t")?;
            // Prefixes of the declared ladder, never shorter than two rungs.
            for end in 2..=ladder.len() {
                let prefix = &ladder[..end];
                let t = prefix[end - 1];
                let rendered = prefix
                    .iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(", ");
                points.push(SweepPoint {
                    x: 1.0 / t,
                    overrides: vec![format!("sweep.t_ladder=[{rendered}]")],
                    label: format!("T={t}"),
                });
            }
        }
        "eps" => {
            let ladder = cfg.sweep.ladder("eps")?;
            for &eps in &ladder {
                points.push(SweepPoint {
                    x: eps,
                    overrides: vec![format!(
                        "sweep.eps_ladder=[{}, {}, {}]",
                        4.0 * eps,
                        2.0 * eps,
                        eps
                    )],
                    label: format!("eps={eps}"),
                });
            }
        }
        other => {
            return Err(DilabError::Config(format!(
                "unknown axis '{other}'; expected N, dt, T, or eps"
            )));
        }
    }
    Ok(points)
}

fn cmd_convergence(config: &Path, axis: &str, overrides: &[String], out: Option<&Path>) -> u8 {
    let base = match load_config(config, overrides) {
        Ok(cfg) => cfg,
        Err(e) => return fail(&e),
    };
    let points = match sweep_points(&base, axis) {
        Ok(p) => p,
        Err(e) => return fail(&e),
    };
    let mut xs = Vec::new();
    let mut metrics = Vec::new();
    for point in &points {
        let mut all = overrides.to_vec();
        all.extend(point.overrides.iter().cloned());
        let cfg = match load_config(config, &all) {
            Ok(cfg) => cfg,
            Err(e) => return fail(&e),
        };
        let report = match run_study(&cfg) {
            Ok(r) => r,
            Err(e) => return fail(&e),
        };
        let Some(&metric) = report.scalars.get("convergence_metric") else {
            return fail(&DilabError::Numerical(format!(
                "study '{}' reports no convergence_metric",
                report.experiment
            )));
        };
        println!("{:<12} x={:<12.6e} metric={:.6e}", point.label, point.x, metric);
        xs.push(point.x);
        metrics.push(metric);
    }
    let flags = trend_flags(&metrics, 1e-12);
    let fit = match fit_power_law(&xs, &metrics) {
        Ok(f) => Some(f),
        Err(_) => None,
    };
    match &fit {
        Some(f) => println!(
            "fitted order {:.3} (r^2 {:.4}); monotone_decreasing={} at_floor={}",
            f.exponent, f.r_squared, flags.monotone_decreasing, flags.at_floor
        ),
        None => println!(
            "order fit unavailable; monotone_decreasing={} at_floor={}",
            flags.monotone_decreasing, flags.at_floor
        ),
    }
    if let Some(dir) = out {
        let payload = serde_json::json!({
            "experiment": base.experiment,
            "axis": axis,
            "x": xs,
            "metric": metrics,
            "order": fit.as_ref().map(|f| f.exponent),
            "r_squared": fit.as_ref().map(|f| f.r_squared),
            "monotone_decreasing": flags.monotone_decreasing,
            "at_floor": flags.at_floor,
        });
        if let Err(e) = std::fs::create_dir_all(dir) {
            return fail(&DilabError::Io(e));
        }
        let path = dir.join("convergence.json");
        match serde_json::to_string_pretty(&payload) {
            Ok(text) => {
                if let Err(e) = std::fs::write(&path, text) {
                    return fail(&DilabError::Io(e));
                }
                println!("wrote {}", path.display());
            }
            Err(e) => {
                return fail(&DilabError::Numerical(format!("serialize convergence: {e}")));
            }
        }
    }
    0
}
