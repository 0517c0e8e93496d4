//! `spotkit` command line: run, resume and inspect surrogate-model-based
//! optimization experiments.

// `!(a < b)` is how NaN gets rejected along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod external;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use serde_json::json;
use spotkit::spot::{best, LogLevel};
use spotkit::state;
use spotkit::{AnalyticObjective, Builtin, Objective, RunState, SpotError};

use crate::config::ObjectiveSpec;
use crate::error::CliError;
use crate::external::ExternalObjective;

#[derive(Parser)]
#[command(name = "spotkit", version, about = "Sequential parameter optimization with a Kriging surrogate")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Start a new run from a TOML configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override a configuration value, e.g. `--set spot.seed=7`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Worker threads for parallel evaluation and model search.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Continue a saved run with additional budget.
    #[command(group(ArgGroup::new("budget").required(true).multiple(true).args(["add_evals", "add_time"])))]
    Resume {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        add_evals: Option<u64>,
        /// Seconds of wall-clock time for this session.
        #[arg(long)]
        add_time: Option<f64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Write a report derived from a saved run.
    Export {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, value_enum)]
        kind: ExportKind,
        /// First grid dimension (0-based).
        #[arg(long)]
        i: Option<usize>,
        /// Second grid dimension (0-based).
        #[arg(long)]
        j: Option<usize>,
        /// Grid points per axis.
        #[arg(long, default_value_t = 50)]
        res: usize,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in objective functions.
    ListFunctions,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportKind {
    Progress,
    Grid,
    Importance,
    DesignTable,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spotkit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Run {
            config,
            overrides,
            workers,
        } => cmd_run(&config, &overrides, workers),
        Cmd::Resume {
            state,
            add_evals,
            add_time,
            workers,
        } => cmd_resume(&state, add_evals, add_time, workers),
        Cmd::Export {
            state,
            kind,
            i,
            j,
            res,
            out,
        } => cmd_export(&state, kind, i, j, res, out.as_deref()),
        Cmd::ListFunctions => {
            print!("{}", list_functions());
            Ok(())
        }
    }
}

/// `SPOTKIT_LOG` takes precedence over the configured level. It accepts the
/// numeric levels of the configuration or an `env_logger` filter string.
fn init_logging(level: LogLevel) {
    let mut builder = env_logger::Builder::new();
    builder.filter_level(level.to_level_filter());
    if let Ok(spec) = std::env::var("SPOTKIT_LOG") {
        match spec.trim().parse::<u8>().ok().and_then(|n| LogLevel::try_from(n).ok()) {
            Some(l) => {
                builder.filter_level(l.to_level_filter());
            }
            None => {
                builder.parse_filters(&spec);
            }
        }
    }
    let _ = builder.try_init();
}

fn build_objective(spec: &ObjectiveSpec) -> Result<Box<dyn Objective>, CliError> {
    Ok(match spec {
        ObjectiveSpec::Builtin { name, fun_control } => {
            let b: Builtin = name.parse().map_err(|e: spotkit::ObjectiveError| CliError::Config(e.to_string()))?;
            Box::new(AnalyticObjective::new(b, fun_control.clone()))
        }
        ObjectiveSpec::External {
            command,
            args,
            timeout_s,
            workdir,
        } => Box::new(ExternalObjective::new(
            command.clone(),
            args.clone(),
            workdir.clone(),
            *timeout_s,
        )),
    })
}

#[cfg(feature = "parallel")]
fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match workers {
        Some(0) => Err(CliError::Config("--workers must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Other(e.to_string()))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match workers {
        Some(0) => Err(CliError::Config("--workers must be at least 1".into())),
        Some(n) if n > 1 => {
            log::warn!("built without the `parallel` feature; --workers {n} runs sequentially");
            Ok(f())
        }
        _ => Ok(f()),
    }
}

fn cmd_run(config_path: &Path, overrides: &[String], workers: Option<usize>) -> Result<(), CliError> {
    let cfg = config::load(config_path, overrides)?;
    init_logging(cfg.spot.log_level);
    std::fs::create_dir_all(&cfg.output_dir)?;
    let objective = build_objective(&cfg.objective)?;
    let context = json!({ "objective": cfg.objective });
    let state = RunState::new(cfg.spot, cfg.space)?;

    let log_path = cfg.output_dir.join(output::RUN_LOG);
    if log_path.exists() {
        std::fs::remove_file(&log_path)?;
    }
    execute(state, objective.as_ref(), &cfg.output_dir, &cfg.output_dir.join(output::STATE), context, workers)
}

fn load_state(path: &Path) -> Result<state::StateFile, CliError> {
    state::load(path).map_err(|e| match e {
        SpotError::Io(io) => CliError::Config(format!("cannot read {}: {io}", path.display())),
        other => other.into(),
    })
}

fn cmd_resume(
    state_path: &Path,
    add_evals: Option<u64>,
    add_time: Option<f64>,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let file = load_state(state_path)?;
    init_logging(file.state.config.log_level);
    let spec: ObjectiveSpec = serde_json::from_value(file.context["objective"].clone())
        .map_err(|e| CliError::Config(format!("state file has no usable objective description: {e}")))?;
    let objective = build_objective(&spec)?;
    let mut state = file.state;
    state.extend_budget(add_evals, add_time)?;
    let dir = state_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    execute(state, objective.as_ref(), &dir, state_path, file.context, workers)
}

/// Advance the run, then write the state and reports even when the run
/// stopped with an error, so a failed run can be inspected and resumed.
fn execute(
    mut state: RunState,
    objective: &dyn Objective,
    dir: &Path,
    state_path: &Path,
    context: serde_json::Value,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let mut run_log = output::RunLog::open(&dir.join(output::RUN_LOG))?;
    let outcome = with_workers(workers, || state.advance(objective, &mut run_log))?;
    let logged = run_log.finish();

    state::save(state_path, &state, context)?;
    output::write_atomic(&dir.join(output::PROGRESS), &output::progress_csv(&state))?;
    output::write_atomic(&dir.join(output::RESULTS), &output::results_json(&state)?)?;
    if let Some(m) = &state.model {
        output::write_atomic(&dir.join(output::MODEL), &(serde_json::to_string_pretty(&m.to_json())? + "\n"))?;
    }
    outcome?;
    logged?;

    match best(&state) {
        Ok(b) => {
            let x: Vec<String> = b.min.x_natural.iter().map(|v| v.to_string()).collect();
            println!(
                "best y = {} at x = [{}] after {} evaluations",
                b.y_min(),
                x.join(", "),
                state.success_count()
            );
            if let Some(m) = b.mean_min {
                println!("best mean y = {}", m.y);
            }
        }
        Err(_) => println!("no successful evaluations yet"),
    }
    println!("state written to {}", state_path.display());
    Ok(())
}

fn cmd_export(
    state_path: &Path,
    kind: ExportKind,
    i: Option<usize>,
    j: Option<usize>,
    res: usize,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let state = load_state(state_path)?.state;
    let text = match kind {
        ExportKind::Progress => output::progress_csv(&state),
        ExportKind::Importance => output::importance_json(&state)?,
        ExportKind::DesignTable => output::design_table_text(&state)?,
        ExportKind::Grid => {
            let (Some(i), Some(j)) = (i, j) else {
                return Err(CliError::Config("--kind grid needs --i and --j".into()));
            };
            output::grid(&state, i, j, res)?
        }
    };
    match out {
        Some(path) => output::write_atomic(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn list_functions() -> String {
    let mut s = String::new();
    for b in Builtin::ALL {
        let dim = b.dimension().map_or_else(|| "any".to_string(), |d| d.to_string());
        let formula = b.formula().unwrap_or("(formula unavailable)");
        s.push_str(&format!("{:<18} k={:<4} {formula}\n", b.name(), dim));
    }
    s
}
