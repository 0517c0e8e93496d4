use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use spotkit::param_space::{design_table, importance_stars};
use spotkit::spot::{best, grid_slice, importance, progress_series, EvalRecord, GridCell, RunObserver};
use spotkit::RunState;

use crate::error::CliError;

pub const RUN_LOG: &str = "run_log.jsonl";
pub const STATE: &str = "state.json";
pub const PROGRESS: &str = "progress.csv";
pub const RESULTS: &str = "results.json";
pub const MODEL: &str = "model.json";

/// Appends one JSON line per evaluation. Write errors are kept and reported
/// once the run returns.
pub struct RunLog {
    out: BufWriter<File>,
    error: Option<std::io::Error>,
}

impl RunLog {
    pub fn open(path: &Path) -> Result<Self, CliError> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            out: BufWriter::new(file),
            error: None,
        })
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        if let Some(e) = self.error.take() {
            return Err(e.into());
        }
        self.out.flush()?;
        Ok(())
    }
}

impl RunObserver for RunLog {
    fn on_evaluation(&mut self, record: &EvalRecord) {
        log::debug!(
            "eval {} ({:?}) y={:?} best={:?}",
            record.eval_index,
            record.phase,
            record.y,
            record.best_y
        );
        if self.error.is_some() {
            return;
        }
        let line = serde_json::to_string(record).map_err(std::io::Error::other);
        if let Err(e) = line.and_then(|l| writeln!(self.out, "{l}")) {
            self.error = Some(e);
        }
    }
}

pub fn progress_csv(state: &RunState) -> String {
    let mut s = String::from("evals,best_y\n");
    for p in progress_series(state) {
        s.push_str(&format!("{},{}\n", p.evals, p.best_y));
    }
    s
}

pub fn grid_csv(cells: &[GridCell]) -> String {
    let mut s = String::from("xi,xj,mean,std\n");
    for c in cells {
        s.push_str(&format!("{},{},{},{}\n", c.xi, c.xj, c.mean, c.std));
    }
    s
}

pub fn grid(state: &RunState, i: usize, j: usize, res: usize) -> Result<String, CliError> {
    Ok(grid_csv(&grid_slice(state, i, j, res, None)?))
}

#[derive(Serialize)]
struct ImportanceRow<'a> {
    name: &'a str,
    importance: f64,
    stars: &'static str,
}

pub fn importance_json(state: &RunState) -> Result<String, CliError> {
    let imp = importance(state)?;
    let rows: Vec<ImportanceRow> = state
        .space
        .names()
        .into_iter()
        .zip(imp)
        .map(|(name, importance)| ImportanceRow {
            name,
            importance,
            stars: importance_stars(importance),
        })
        .collect();
    Ok(serde_json::to_string_pretty(&rows)? + "\n")
}

/// The search space with the best point found and, once a model exists, the
/// importance columns.
pub fn design_table_text(state: &RunState) -> Result<String, CliError> {
    let tuned = best(state).ok().map(|b| b.min.x_coded);
    let imp = importance(state).ok();
    let table = design_table(&state.space, tuned.as_deref(), imp.as_deref()).map_err(spotkit::SpotError::from)?;
    Ok(if table.ends_with('\n') { table } else { table + "\n" })
}

pub fn results_json(state: &RunState) -> Result<String, CliError> {
    let b = best(state).ok();
    let v = json!({
        "best": b.as_ref().map(|b| &b.min),
        "best_mean": b.as_ref().and_then(|b| b.mean_min.as_ref()),
        "successful_evaluations": state.success_count(),
        "total_evaluations": state.counters.evaluations,
        "iterations": state.counters.iterations,
        "importance": importance(state).ok(),
        "model": state.model.as_ref().map(|m| m.to_json()),
    });
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

/// Write through a temporary file so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
