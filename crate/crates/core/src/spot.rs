//! The sequential optimization loop.
//!
//! A run evaluates a Latin hypercube design, then repeatedly fits a Kriging
//! surrogate to everything evaluated so far, minimizes an infill criterion on
//! it and evaluates the suggestions, optionally spending extra replications
//! chosen by OCBA. All state lives in [`RunState`], which can be saved and
//! advanced again later with a larger budget.
//!
//! Randomness is addressed by counters (see [`crate::rng`]): the design, each
//! surrogate fit, each infill search, each replacement point and each
//! objective evaluation get their own stream. Evaluations of one batch may
//! run in parallel; their results are recorded in job order.

use std::time::Instant;

use log::{debug, info, warn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ObjectiveError, SpotError};
use crate::kriging::{KrigingConfig, KrigingModel, Prediction};
use crate::objectives::Objective;
use crate::ocba::{self, OcbaInput};
use crate::par;
use crate::param_space::{NaturalValue, SearchSpace};
use crate::rng::{substream, RNG_ALGORITHM};
use crate::sampling::{lhd, random_point};
use crate::serde_util::{count_or_inf, f64_or_inf};
use crate::surrogate_opt::{suggest_new_x, OptimizerConfig};

pub use crate::surrogate_opt::InfillCriterion;

/// Initial-design evaluations allowed per requested design point.
pub const INIT_ATTEMPT_FACTOR: usize = 10;
/// The run aborts after this many failed evaluations in a row.
pub const MAX_CONSECUTIVE_FAILURES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum LogLevel {
    NotSet,
    Debug,
    Info,
    Warning,
    Error,
    #[default]
    Critical,
}

impl TryFrom<u8> for LogLevel {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        Ok(match v {
            0 => LogLevel::NotSet,
            10 => LogLevel::Debug,
            20 => LogLevel::Info,
            30 => LogLevel::Warning,
            40 => LogLevel::Error,
            50 => LogLevel::Critical,
            other => return Err(format!("log_level must be one of 0, 10, 20, 30, 40, 50; got {other}")),
        })
    }
}

impl From<LogLevel> for u8 {
    fn from(l: LogLevel) -> u8 {
        match l {
            LogLevel::NotSet => 0,
            LogLevel::Debug => 10,
            LogLevel::Info => 20,
            LogLevel::Warning => 30,
            LogLevel::Error => 40,
            LogLevel::Critical => 50,
        }
    }
}

impl LogLevel {
    pub fn to_level_filter(self) -> log::LevelFilter {
        match self {
            LogLevel::NotSet => log::LevelFilter::Trace,
            LogLevel::Debug => log::LevelFilter::Debug,
            LogLevel::Info => log::LevelFilter::Info,
            LogLevel::Warning => log::LevelFilter::Warn,
            LogLevel::Error | LogLevel::Critical => log::LevelFilter::Error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpotConfig {
    /// Successful evaluations to spend; `None` is unbounded.
    #[serde(with = "count_or_inf")]
    pub fun_evals: Option<u64>,
    /// Wall-clock budget of one [`RunState::advance`] call.
    #[serde(rename = "max_time", with = "f64_or_inf")]
    pub max_time_seconds: f64,
    pub noise: bool,
    pub tolerance_x: f64,
    pub infill_criterion: InfillCriterion,
    pub n_points: usize,
    pub fun_repeats: usize,
    pub ocba_delta: usize,
    pub seed: u64,
    pub init_size: usize,
    pub design_repeats: usize,
    pub surrogate: KrigingConfig,
    pub optimizer: OptimizerConfig,
    pub log_level: LogLevel,
}

impl Default for SpotConfig {
    fn default() -> Self {
        Self {
            fun_evals: Some(15),
            max_time_seconds: f64::INFINITY,
            noise: false,
            tolerance_x: 0.0,
            infill_criterion: InfillCriterion::Y,
            n_points: 1,
            fun_repeats: 1,
            ocba_delta: 0,
            seed: 123,
            init_size: 10,
            design_repeats: 1,
            surrogate: KrigingConfig::default(),
            optimizer: OptimizerConfig::default(),
            log_level: LogLevel::Critical,
        }
    }
}

impl SpotConfig {
    pub fn validate(&self, k: usize) -> Result<(), SpotError> {
        let bad = |m: &str| Err(SpotError::Config(m.to_string()));
        if self.max_time_seconds.is_nan() || self.max_time_seconds <= 0.0 {
            return bad("max_time must be positive");
        }
        let time_bounded = self.max_time_seconds.is_finite();
        match self.fun_evals {
            None if !time_bounded => return bad("one of fun_evals and max_time must be finite"),
            Some(0) if !time_bounded => return bad("fun_evals = 0 with unbounded max_time leaves no budget"),
            _ => {}
        }
        if !(self.tolerance_x >= 0.0) || !self.tolerance_x.is_finite() {
            return bad("tolerance_x must be a finite value ≥ 0");
        }
        if self.n_points == 0 || self.fun_repeats == 0 || self.init_size == 0 || self.design_repeats == 0 {
            return bad("n_points, fun_repeats, init_size and repeats must be at least 1");
        }
        if self.ocba_delta > 0 && !(self.noise && (self.fun_repeats >= 2 || self.design_repeats >= 2)) {
            return bad("ocba_delta > 0 requires noise = true and fun_repeats ≥ 2 or repeats ≥ 2");
        }
        self.surrogate.validate(k)?;
        self.optimizer.validate().map_err(SpotError::Config)?;
        Ok(())
    }

    fn surrogate_config(&self) -> KrigingConfig {
        KrigingConfig {
            noise: self.surrogate.noise || self.noise,
            ..self.surrogate.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Init,
    Infill,
    Ocba,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub x_coded: Vec<f64>,
    pub x_natural: Vec<NaturalValue>,
    /// Finite results only; failures are counted in `n_failed`.
    pub replicate_ys: Vec<f64>,
    pub n_success: usize,
    pub n_failed: usize,
    /// Phase that first evaluated this point.
    pub phase: Phase,
    /// The point is a uniform replacement, not an optimizer suggestion.
    pub replaced: bool,
}

impl ArchiveEntry {
    pub fn mean(&self) -> Option<f64> {
        (!self.replicate_ys.is_empty()).then(|| self.replicate_ys.iter().sum::<f64>() / self.replicate_ys.len() as f64)
    }

    pub fn min(&self) -> Option<f64> {
        self.replicate_ys.iter().copied().reduce(f64::min)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalArchive {
    entries: Vec<ArchiveEntry>,
    success_count: usize,
}

impl EvalArchive {
    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn success_count(&self) -> usize {
        self.success_count
    }

    pub fn find(&self, x_coded: &[f64]) -> Option<usize> {
        self.entries.iter().position(|e| e.x_coded == x_coded)
    }

    /// Add one evaluation result; replicates of a point share an entry.
    /// Returns the entry index.
    pub fn record(
        &mut self,
        x_coded: &[f64],
        x_natural: &[NaturalValue],
        y: f64,
        phase: Phase,
        replaced: bool,
    ) -> usize {
        let idx = match self.find(x_coded) {
            Some(i) => i,
            None => {
                self.entries.push(ArchiveEntry {
                    x_coded: x_coded.to_vec(),
                    x_natural: x_natural.to_vec(),
                    replicate_ys: Vec::new(),
                    n_success: 0,
                    n_failed: 0,
                    phase,
                    replaced,
                });
                self.entries.len() - 1
            }
        };
        let e = &mut self.entries[idx];
        if y.is_finite() {
            e.replicate_ys.push(y);
            e.n_success += 1;
            self.success_count += 1;
        } else {
            e.n_failed += 1;
        }
        idx
    }

    /// Every finite replicate as a training row.
    pub fn training_data(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        self.entries
            .iter()
            .flat_map(|e| e.replicate_ys.iter().map(move |y| (e.x_coded.clone(), *y)))
            .unzip()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.entries.iter().map(|e| e.x_coded.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressPoint {
    pub evals: usize,
    pub best_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestPoint {
    pub x_coded: Vec<f64>,
    pub x_natural: Vec<NaturalValue>,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Best {
    /// Smallest single result.
    pub min: BestPoint,
    /// Smallest per-point mean; reported for noisy runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_min: Option<BestPoint>,
}

impl Best {
    pub fn y_min(&self) -> f64 {
        self.min.y
    }

    pub fn y_mean_min(&self) -> Option<f64> {
        self.mean_min.as_ref().map(|b| b.y)
    }
}

/// Counters that address the random streams; together with the seed they
/// are the complete generator state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamCounters {
    pub algorithm: String,
    pub evaluations: u64,
    pub iterations: u64,
    pub replacements: u64,
}

impl Default for StreamCounters {
    fn default() -> Self {
        Self {
            algorithm: RNG_ALGORITHM.to_string(),
            evaluations: 0,
            iterations: 0,
            replacements: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitState {
    pub done: bool,
    /// Design points in evaluation order, including replacements for
    /// points whose every replicate failed.
    pub points: Vec<Vec<f64>>,
    pub replaced: Vec<bool>,
    /// Next (point, replicate) job, flattened.
    pub next_job: usize,
    pub succeeded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub config: SpotConfig,
    pub space: SearchSpace,
    pub archive: EvalArchive,
    pub model: Option<KrigingModel>,
    /// Successful-evaluation count the model was fitted at.
    pub model_trained_on: usize,
    pub progress: Vec<ProgressPoint>,
    pub counters: StreamCounters,
    pub best: Option<Best>,
    pub init: InitState,
    pub consecutive_failures: usize,
}

/// One evaluation as reported to a [`RunObserver`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRecord {
    pub iter: u64,
    pub phase: Phase,
    pub eval_index: u64,
    pub x_coded: Vec<f64>,
    pub x_natural: Vec<NaturalValue>,
    pub y: Option<f64>,
    pub success: bool,
    pub best_y: Option<f64>,
    pub elapsed_s: f64,
    pub replaced: bool,
}

pub trait RunObserver {
    fn on_evaluation(&mut self, record: &EvalRecord);
}

impl RunObserver for () {
    fn on_evaluation(&mut self, _record: &EvalRecord) {}
}

impl<F: FnMut(&EvalRecord)> RunObserver for F {
    fn on_evaluation(&mut self, record: &EvalRecord) {
        self(record)
    }
}

#[derive(Debug, Clone)]
struct Job {
    x: Vec<f64>,
    replaced: bool,
}

fn derive_seed(seed: u64, name: &str, index: u64) -> u64 {
    substream(seed, name, index).random()
}

/// Run a fresh experiment to completion.
pub fn run(config: SpotConfig, space: SearchSpace, objective: &dyn Objective) -> Result<RunState, SpotError> {
    let mut state = RunState::new(config, space)?;
    state.advance(objective, &mut ())?;
    Ok(state)
}

impl RunState {
    pub fn new(config: SpotConfig, space: SearchSpace) -> Result<Self, SpotError> {
        config.validate(space.dim())?;
        let (lower, upper) = space.bounds_vectors();
        let mut points = lhd(config.init_size, &lower, &upper, config.seed)?.points;
        for p in &mut points {
            space.repair(p);
        }
        let n = points.len();
        Ok(Self {
            config,
            space,
            archive: EvalArchive::default(),
            model: None,
            model_trained_on: 0,
            progress: Vec::new(),
            counters: StreamCounters::default(),
            best: None,
            init: InitState {
                done: false,
                points,
                replaced: vec![false; n],
                next_job: 0,
                succeeded: 0,
            },
            consecutive_failures: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.space.dim()
    }

    pub fn success_count(&self) -> usize {
        self.archive.success_count()
    }

    /// Raise the evaluation budget by `add_evals` and/or replace the time
    /// budget of the next session with `add_time` seconds. A time-only
    /// extension makes the evaluation budget unbounded.
    pub fn extend_budget(&mut self, add_evals: Option<u64>, add_time: Option<f64>) -> Result<(), SpotError> {
        if let Some(n) = add_evals {
            self.config.fun_evals = self.config.fun_evals.map(|f| f + n);
        }
        if let Some(t) = add_time {
            if !(t > 0.0) {
                return Err(SpotError::Config("additional time must be positive".into()));
            }
            self.config.max_time_seconds = t;
            if add_evals.is_none() {
                self.config.fun_evals = None;
            }
        }
        self.config.validate(self.k())
    }

    fn remaining_budget(&self) -> usize {
        match self.config.fun_evals {
            Some(n) => (n as usize).saturating_sub(self.success_count()),
            None => usize::MAX,
        }
    }

    fn out_of_time(&self, started: &Instant) -> bool {
        started.elapsed().as_secs_f64() >= self.config.max_time_seconds
    }

    /// Continue the run until the evaluation or time budget is spent.
    ///
    /// On error the state keeps every evaluation recorded so far.
    pub fn advance(&mut self, objective: &dyn Objective, observer: &mut dyn RunObserver) -> Result<(), SpotError> {
        self.config.validate(self.k())?;
        objective.check_dimension(self.k())?;
        let started = Instant::now();

        self.run_initial_design(objective, observer, &started)?;
        if self.init.done {
            self.run_iterations(objective, observer, &started)?;
        }
        if self.success_count() >= 2 {
            if let Err(e) = self.ensure_model() {
                warn!("final surrogate fit failed: {e}");
            }
        }
        Ok(())
    }

    fn run_initial_design(
        &mut self,
        objective: &dyn Objective,
        observer: &mut dyn RunObserver,
        started: &Instant,
    ) -> Result<(), SpotError> {
        let repeats = self.config.design_repeats;
        let cap = INIT_ATTEMPT_FACTOR * self.config.init_size;
        let (lower, upper) = self.space.bounds_vectors();
        while !self.init.done {
            let total_jobs = self.init.points.len() * repeats;
            if self.init.next_job >= total_jobs {
                let missing = self.config.init_size.saturating_sub(self.init.succeeded);
                let room = cap.saturating_sub(self.init.points.len());
                if missing == 0 || room == 0 {
                    let required = 3.max(self.k() + 1).min(self.config.init_size);
                    if self.init.succeeded < required {
                        return Err(ObjectiveError::InitialDesignFailed {
                            successes: self.init.succeeded,
                            attempts: self.init.points.len(),
                            required,
                        }
                        .into());
                    }
                    self.init.done = true;
                    info!("initial design done: {} points succeeded", self.init.succeeded);
                    break;
                }
                for _ in 0..missing.min(room) {
                    let mut rng = substream(self.config.seed, "replacement", self.counters.replacements);
                    self.counters.replacements += 1;
                    let mut p = random_point(&lower, &upper, &mut rng);
                    self.space.repair(&mut p);
                    self.init.points.push(p);
                    self.init.replaced.push(true);
                }
                continue;
            }
            if self.remaining_budget() == 0 || self.out_of_time(started) {
                return Ok(());
            }
            let end = total_jobs.min(self.init.next_job.saturating_add(self.remaining_budget()));
            let jobs: Vec<Job> = (self.init.next_job..end)
                .map(|j| Job {
                    x: self.init.points[j / repeats].clone(),
                    replaced: self.init.replaced[j / repeats],
                })
                .collect();
            let first = self.init.next_job;
            let results = self.evaluate_batch(&jobs, Phase::Init, objective, observer, started);
            let evaluated = match &results {
                Ok(n) => *n,
                Err((n, _)) => *n,
            };
            // a point is finished once its last replicate has been evaluated
            for j in first..first + evaluated {
                if j % repeats == repeats - 1 {
                    let x = &self.init.points[j / repeats];
                    let ok = self
                        .archive
                        .find(x)
                        .is_some_and(|i| self.archive.entries()[i].n_success > 0);
                    if ok {
                        self.init.succeeded += 1;
                    }
                }
            }
            self.init.next_job = first + evaluated;
            if let Err((_, e)) = results {
                return Err(e);
            }
        }
        Ok(())
    }

    fn run_iterations(
        &mut self,
        objective: &dyn Objective,
        observer: &mut dyn RunObserver,
        started: &Instant,
    ) -> Result<(), SpotError> {
        let (lower, upper) = self.space.bounds_vectors();
        loop {
            if self.remaining_budget() == 0 || self.out_of_time(started) {
                return Ok(());
            }
            self.ensure_model()?;
            let model = self.model.as_ref().expect("model fitted");
            let opt = self
                .config
                .optimizer
                .with_seed(derive_seed(self.config.seed, "optimizer", self.counters.iterations));
            let seed = self.config.seed;
            let mut replacements = self.counters.replacements;
            let suggestions = suggest_new_x(
                model,
                self.config.infill_criterion,
                &lower,
                &upper,
                self.config.n_points,
                self.config.tolerance_x,
                &self.archive.points(),
                &opt,
                &mut || {
                    let r = substream(seed, "replacement", replacements);
                    replacements += 1;
                    r
                },
            );
            self.counters.replacements = replacements;
            debug!("iteration {}: {} suggestions", self.counters.iterations + 1, suggestions.len());

            let jobs: Vec<Job> = suggestions
                .into_iter()
                .flat_map(|s| {
                    let mut x = s.x;
                    self.space.repair(&mut x);
                    std::iter::repeat_n(
                        Job {
                            x,
                            replaced: s.replaced,
                        },
                        self.config.fun_repeats,
                    )
                })
                .take(self.remaining_budget())
                .collect();
            self.evaluate_batch(&jobs, Phase::Infill, objective, observer, started)
                .map_err(|(_, e)| e)?;

            if self.config.ocba_delta > 0 && self.remaining_budget() > 0 && !self.out_of_time(started) {
                let jobs = self.ocba_jobs()?;
                self.evaluate_batch(&jobs, Phase::Ocba, objective, observer, started)
                    .map_err(|(_, e)| e)?;
            }
            self.counters.iterations += 1;
        }
    }

    fn ocba_jobs(&self) -> Result<Vec<Job>, SpotError> {
        let candidates: Vec<&ArchiveEntry> = self.archive.entries().iter().filter(|e| e.n_success > 0).collect();
        if candidates.len() < 2 {
            return Ok(Vec::new());
        }
        let (means, variances): (Vec<f64>, Vec<f64>) =
            candidates.iter().map(|e| ocba::mean_var(&e.replicate_ys)).unzip();
        let counts = candidates.iter().map(|e| e.n_success).collect();
        let extra = ocba::allocate(&OcbaInput {
            means,
            variances,
            counts,
            delta: self.config.ocba_delta,
        })?;
        Ok(candidates
            .iter()
            .zip(extra)
            .flat_map(|(e, n)| {
                std::iter::repeat_n(
                    Job {
                        x: e.x_coded.clone(),
                        replaced: e.replaced,
                    },
                    n,
                )
            })
            .take(self.remaining_budget())
            .collect())
    }

    /// Fit the surrogate unless the current model already covers every
    /// successful evaluation.
    pub fn ensure_model(&mut self) -> Result<(), SpotError> {
        let n = self.success_count();
        if self.model.is_some() && self.model_trained_on == n {
            return Ok(());
        }
        let (x, y) = self.archive.training_data();
        let cfg = self.config.surrogate_config();
        let mask = self.space.factor_mask();
        let fit = |name: &str| KrigingModel::fit(&x, &y, &cfg, Some(&mask), derive_seed(self.config.seed, name, n as u64));
        let model = match fit("surrogate") {
            Ok(m) => m,
            Err(first) => {
                warn!("surrogate fit failed ({first}), retrying");
                fit("surrogate-retry")?
            }
        };
        debug!(
            "surrogate on {n} points: theta={:?} Lambda={:?} negLnLike={}",
            model.theta(),
            model.lambda(),
            model.neg_ln_like()
        );
        self.model = Some(model);
        self.model_trained_on = n;
        Ok(())
    }

    /// Evaluate jobs (possibly concurrently) and record them in order.
    /// Returns how many were recorded; on error also the cause.
    fn evaluate_batch(
        &mut self,
        jobs: &[Job],
        phase: Phase,
        objective: &dyn Objective,
        observer: &mut dyn RunObserver,
        started: &Instant,
    ) -> Result<usize, (usize, SpotError)> {
        let naturals: Vec<Vec<NaturalValue>> = jobs
            .iter()
            .map(|j| self.space.to_natural(&j.x))
            .collect::<Result<_, _>>()
            .map_err(|e| (0, e.into()))?;
        let base = self.counters.evaluations;
        let results = par::map_range(jobs.len(), |i| objective.evaluate(&naturals[i], base + i as u64));
        let iter = self.counters.iterations + u64::from(phase != Phase::Init);

        for (i, result) in results.into_iter().enumerate() {
            let y = match result {
                Ok(y) => y,
                Err(e) => return Err((i, e.into())),
            };
            let job = &jobs[i];
            self.counters.evaluations += 1;
            let y = if y.is_finite() { y } else { f64::NAN };
            self.archive.record(&job.x, &naturals[i], y, phase, job.replaced);
            let success = y.is_finite();
            if success {
                self.consecutive_failures = 0;
                self.best = best(self).ok();
                let best_y = self.best.as_ref().map_or(y, Best::y_min);
                self.progress.push(ProgressPoint {
                    evals: self.success_count(),
                    best_y,
                });
            } else {
                self.consecutive_failures += 1;
            }
            observer.on_evaluation(&EvalRecord {
                iter,
                phase,
                eval_index: base + i as u64,
                x_coded: job.x.clone(),
                x_natural: naturals[i].clone(),
                y: success.then_some(y),
                success,
                best_y: self.best.as_ref().map(Best::y_min),
                elapsed_s: started.elapsed().as_secs_f64(),
                replaced: job.replaced,
            });
            if self.consecutive_failures >= MAX_CONSECUTIVE_FAILURES {
                return Err((i + 1, ObjectiveError::RepeatedFailure(self.consecutive_failures).into()));
            }
        }
        Ok(jobs.len())
    }
}

/// Best raw result, plus the best per-point mean when the run is noisy.
pub fn best(state: &RunState) -> Result<Best, SpotError> {
    let entries = state.archive.entries();
    let pick = |value: &dyn Fn(&ArchiveEntry) -> Option<f64>| {
        let mut found: Option<(usize, f64)> = None;
        for (i, e) in entries.iter().enumerate() {
            if let Some(v) = value(e) {
                if found.is_none_or(|(_, b)| v < b) {
                    found = Some((i, v));
                }
            }
        }
        found.map(|(i, y)| BestPoint {
            x_coded: entries[i].x_coded.clone(),
            x_natural: entries[i].x_natural.clone(),
            y,
        })
    };
    let min = pick(&ArchiveEntry::min).ok_or_else(|| SpotError::State("no successful evaluation yet".into()))?;
    let mean_min = if state.config.noise { pick(&ArchiveEntry::mean) } else { None };
    Ok(Best { min, mean_min })
}

/// Relative activity per dimension in percent: `100 * 10^theta_j / max`.
/// An isotropic model rates every dimension 100.
pub fn importance(state: &RunState) -> Result<Vec<f64>, SpotError> {
    let model = state
        .model
        .as_ref()
        .ok_or_else(|| SpotError::State("no surrogate model fitted".into()))?;
    let k = state.k();
    if model.theta().len() == 1 {
        return Ok(vec![100.0; k]);
    }
    let activity: Vec<f64> = model.theta().iter().map(|t| 10f64.powf(*t)).collect();
    let max = activity.iter().copied().fold(f64::MIN_POSITIVE, f64::max);
    Ok(activity.iter().map(|a| 100.0 * a / max).collect())
}

pub fn progress_series(state: &RunState) -> &[ProgressPoint] {
    &state.progress
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub xi: f64,
    pub xj: f64,
    pub mean: f64,
    pub std: f64,
}

/// Surrogate predictions on a `resolution x resolution` grid over dimensions
/// `i` and `j`; other coordinates are held at `fixed` (default: the best
/// point so far).
pub fn grid_slice(
    state: &RunState,
    i: usize,
    j: usize,
    resolution: usize,
    fixed: Option<&[f64]>,
) -> Result<Vec<GridCell>, SpotError> {
    let k = state.k();
    if i >= k || j >= k || i == j {
        return Err(SpotError::Argument(format!(
            "grid dimensions must be distinct and below {k}, got i={i}, j={j}"
        )));
    }
    if resolution == 0 {
        return Err(SpotError::Argument("grid resolution must be at least 1".into()));
    }
    let model = state
        .model
        .as_ref()
        .ok_or_else(|| SpotError::State("no surrogate model fitted".into()))?;
    let base: Vec<f64> = match fixed {
        Some(f) if f.len() == k => f.to_vec(),
        Some(f) => {
            return Err(SpotError::Argument(format!("fixed point has {} coordinates, need {k}", f.len())));
        }
        None => state
            .best
            .as_ref()
            .map_or_else(|| state.space.default_vector(), |b| b.min.x_coded.clone()),
    };
    let (lower, upper) = state.space.bounds_vectors();
    let axis = |d: usize| -> Vec<f64> {
        if resolution == 1 {
            return vec![lower[d]];
        }
        (0..resolution)
            .map(|s| lower[d] + (upper[d] - lower[d]) * s as f64 / (resolution - 1) as f64)
            .collect()
    };
    let (ai, aj) = (axis(i), axis(j));
    let points: Vec<Vec<f64>> = ai
        .iter()
        .flat_map(|&vi| {
            aj.iter().map({
                let base = &base;
                move |&vj| {
                    let mut p = base.clone();
                    p[i] = vi;
                    p[j] = vj;
                    p
                }
            })
        })
        .collect();
    let preds: Vec<Prediction> = model.predict_many(&points);
    Ok(points
        .iter()
        .zip(preds)
        .map(|(p, pr)| GridCell {
            xi: p[i],
            xj: p[j],
            mean: pr.mean,
            std: pr.std,
        })
        .collect())
}
