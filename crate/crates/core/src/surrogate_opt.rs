//! Box-constrained global search on cheap functions (the surrogate, or the
//! Kriging likelihood) and infill-point suggestion.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::kriging::KrigingModel;
use crate::par;
use crate::rng::{substream, StreamRng};
use crate::sampling::{lhd_with_rng, random_point};

/// Crossover probability of the rand/1/bin scheme.
pub const DE_CROSSOVER: f64 = 0.7;
/// Mutation factor is redrawn from this range every generation.
pub const DE_DITHER: (f64, f64) = (0.5, 1.0);
pub const MULTISTART_STARTS: usize = 16;
/// Coordinate search stops once every step is below this fraction of its span.
pub const COORDINATE_MIN_STEP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    DifferentialEvolution,
    MultistartLocal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    #[serde(rename = "optimizer")]
    pub kind: OptimizerKind,
    /// Generations for differential evolution; evaluations per start for
    /// the multistart search.
    pub max_iter: usize,
    /// Defaults to `10 * k`, capped at 100.
    pub population: Option<usize>,
    /// Set per search by the caller; not part of the configuration file.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::DifferentialEvolution,
            max_iter: 1000,
            population: None,
            seed: 123,
        }
    }
}

impl OptimizerConfig {
    pub fn population_for(&self, k: usize) -> usize {
        self.population.unwrap_or_else(|| (10 * k).min(100)).max(4)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_iter == 0 {
            return Err("optimizer max_iter must be at least 1".into());
        }
        if self.kind == OptimizerKind::DifferentialEvolution && matches!(self.population, Some(p) if p < 4) {
            return Err("differential evolution needs a population of at least 4".into());
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    /// Final population (or refined starts), best first.
    pub candidates: Vec<(Vec<f64>, f64)>,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    let mut v = v;
    if v < lo {
        v = 2.0 * lo - v;
    }
    if v > hi {
        v = 2.0 * hi - v;
    }
    v.clamp(lo, hi)
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

fn sorted_candidates(xs: Vec<Vec<f64>>, fs: Vec<f64>) -> Vec<(Vec<f64>, f64)> {
    let mut c: Vec<(Vec<f64>, f64)> = xs.into_iter().zip(fs).collect();
    c.sort_by(|a, b| a.1.total_cmp(&b.1));
    c
}

/// Minimize `f` over the box with the configured optimizer.
pub fn minimize<F>(f: F, lower: &[f64], upper: &[f64], config: &OptimizerConfig) -> OptimizeResult
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    match config.kind {
        OptimizerKind::DifferentialEvolution => differential_evolution(f, lower, upper, config),
        OptimizerKind::MultistartLocal => multistart_local(f, lower, upper, config),
    }
}

/// rand/1/bin differential evolution with a dithered mutation factor,
/// LHD initialization and reflection at the box boundary.
///
/// Trial vectors are generated sequentially from the seeded stream and only
/// their evaluation runs in parallel, so results do not depend on the
/// number of threads.
pub fn differential_evolution<F>(f: F, lower: &[f64], upper: &[f64], config: &OptimizerConfig) -> OptimizeResult
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let k = lower.len();
    let np = config.population_for(k);
    let mut rng = substream(config.seed, "differential-evolution", 0);
    let mut pop = lhd_with_rng(np, lower, upper, &mut rng).expect("population size is at least 4");
    let mut fit: Vec<f64> = par::map(&pop, |x| sanitize(f(x)));
    let mut evaluations = np;

    for _ in 0..config.max_iter {
        let scale = rng.random_range(DE_DITHER.0..DE_DITHER.1);
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let [r1, r2, r3] = distinct_others(&mut rng, np, i);
                let jrand = rng.random_range(0..k);
                (0..k)
                    .map(|j| {
                        if j == jrand || rng.random::<f64>() < DE_CROSSOVER {
                            let v = pop[r1][j] + scale * (pop[r2][j] - pop[r3][j]);
                            reflect(v, lower[j], upper[j])
                        } else {
                            pop[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_fit: Vec<f64> = par::map(&trials, |x| sanitize(f(x)));
        evaluations += np;
        for (i, (t, tf)) in trials.into_iter().zip(trial_fit).enumerate() {
            if tf <= fit[i] {
                pop[i] = t;
                fit[i] = tf;
            }
        }
        if converged(&pop, &fit, lower, upper) {
            break;
        }
    }

    let best = argmin(&fit);
    OptimizeResult {
        x: pop[best].clone(),
        f: fit[best],
        evaluations,
        candidates: sorted_candidates(pop, fit),
    }
}

fn distinct_others(rng: &mut StreamRng, np: usize, exclude: usize) -> [usize; 3] {
    let mut picked = [usize::MAX; 3];
    let mut n = 0;
    while n < 3 {
        let r = rng.random_range(0..np);
        if r != exclude && !picked[..n].contains(&r) {
            picked[n] = r;
            n += 1;
        }
    }
    picked
}

fn converged(pop: &[Vec<f64>], fit: &[f64], lower: &[f64], upper: &[f64]) -> bool {
    let (lo, hi) = fit
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !lo.is_finite() || !hi.is_finite() || hi - lo > 1e-14 * (1.0 + lo.abs()) {
        return false;
    }
    (0..lower.len()).all(|j| {
        let span = upper[j] - lower[j];
        let (a, b) = pop
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x[j]), b.max(x[j])));
        b - a <= 1e-12 * span.max(f64::MIN_POSITIVE)
    })
}

/// Bounded coordinate search: try `x_j ± step_j` per coordinate, keep the
/// first improvement, halve all steps when no coordinate improves.
pub fn coordinate_search<F>(f: &F, x0: &[f64], fx0: f64, lower: &[f64], upper: &[f64], max_evals: usize) -> (Vec<f64>, f64, usize)
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let k = x0.len();
    let spans: Vec<f64> = (0..k).map(|j| upper[j] - lower[j]).collect();
    let mut steps: Vec<f64> = spans.iter().map(|s| 0.25 * s).collect();
    let mut x = x0.to_vec();
    let mut fx = sanitize(fx0);
    let mut evals = 0;
    'outer: while evals < max_evals {
        let mut improved = false;
        for j in 0..k {
            if spans[j] <= 0.0 {
                continue;
            }
            for dir in [1.0, -1.0] {
                let v = (x[j] + dir * steps[j]).clamp(lower[j], upper[j]);
                if v == x[j] {
                    continue;
                }
                let old = x[j];
                x[j] = v;
                let fc = sanitize(f(&x));
                evals += 1;
                if fc < fx {
                    fx = fc;
                    improved = true;
                    break;
                }
                x[j] = old;
                if evals >= max_evals {
                    break 'outer;
                }
            }
        }
        if !improved {
            for s in &mut steps {
                *s *= 0.5;
            }
            let done = (0..k).all(|j| spans[j] <= 0.0 || steps[j] < COORDINATE_MIN_STEP * spans[j]);
            if done {
                break;
            }
        }
    }
    (x, fx, evals)
}

/// LHD starts, each refined by [`coordinate_search`] with `max_iter`
/// evaluations.
pub fn multistart_local<F>(f: F, lower: &[f64], upper: &[f64], config: &OptimizerConfig) -> OptimizeResult
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let mut rng = substream(config.seed, "multistart", 0);
    let starts = lhd_with_rng(MULTISTART_STARTS, lower, upper, &mut rng).expect("non-empty start design");
    let refined = par::map(&starts, |x0| {
        let f0 = f(x0);
        let (x, fx, evals) = coordinate_search(&f, x0, f0, lower, upper, config.max_iter);
        (x, fx, evals + 1)
    });
    let evaluations = refined.iter().map(|r| r.2).sum();
    let (xs, fs): (Vec<_>, Vec<_>) = refined.into_iter().map(|(x, fx, _)| (x, fx)).unzip();
    let best = argmin(&fs);
    OptimizeResult {
        x: xs[best].clone(),
        f: fs[best],
        evaluations,
        candidates: sorted_candidates(xs, fs),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InfillCriterion {
    /// Predicted mean.
    #[default]
    Y,
    /// Negative predicted standard deviation.
    S,
    /// Negative expected improvement.
    Ei,
}

impl TryFrom<String> for InfillCriterion {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        match s.as_str() {
            "y" => Ok(Self::Y),
            "s" => Ok(Self::S),
            "ei" => Ok(Self::Ei),
            "all" => Err("infill criterion \"all\" is not supported; use \"y\", \"s\" or \"ei\"".into()),
            other => Err(format!("unknown infill criterion {other:?}; use \"y\", \"s\" or \"ei\"")),
        }
    }
}

impl From<InfillCriterion> for String {
    fn from(c: InfillCriterion) -> Self {
        c.to_string()
    }
}

impl fmt::Display for InfillCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Y => "y",
            Self::S => "s",
            Self::Ei => "ei",
        })
    }
}

impl InfillCriterion {
    pub fn evaluate(self, model: &KrigingModel, x: &[f64]) -> f64 {
        let p = model.predict(x);
        match self {
            Self::Y => p.mean,
            Self::S => -p.std,
            Self::Ei => p.neg_ei,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suggestion {
    pub x: Vec<f64>,
    /// Drawn uniformly because the optimizer's candidate was too close to
    /// an evaluated point (or no separated candidate was left).
    pub replaced: bool,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Propose `n_points` new coded points by minimizing `criterion` on the
/// surrogate.
///
/// The best optimizer candidate comes first; further points are the next
/// best candidates separated by at least `tolerance_x` from those already
/// taken. With `tolerance_x > 0`, a candidate within `tolerance_x` of an
/// evaluated point is replaced by a uniform point from `replacement`.
#[allow(clippy::too_many_arguments)]
pub fn suggest_new_x(
    model: &KrigingModel,
    criterion: InfillCriterion,
    lower: &[f64],
    upper: &[f64],
    n_points: usize,
    tolerance_x: f64,
    archive: &[Vec<f64>],
    config: &OptimizerConfig,
    replacement: &mut dyn FnMut() -> StreamRng,
) -> Vec<Suggestion> {
    let result = minimize(|x| criterion.evaluate(model, x), lower, upper, config);

    let mut picked: Vec<Vec<f64>> = vec![result.x.clone()];
    for (x, _) in &result.candidates {
        if picked.len() >= n_points {
            break;
        }
        if picked.iter().all(|p| distance(p, x) >= tolerance_x) && !picked.contains(x) {
            picked.push(x.clone());
        }
    }
    // a converged population may not offer n_points distinct candidates
    for (x, _) in &result.candidates {
        if picked.len() >= n_points {
            break;
        }
        if tolerance_x == 0.0 {
            picked.push(x.clone());
        }
    }

    let mut out: Vec<Suggestion> = picked
        .into_iter()
        .take(n_points)
        .map(|x| {
            let too_close = tolerance_x > 0.0 && archive.iter().any(|a| distance(a, &x) <= tolerance_x);
            if too_close {
                Suggestion {
                    x: random_point(lower, upper, &mut replacement()),
                    replaced: true,
                }
            } else {
                Suggestion { x, replaced: false }
            }
        })
        .collect();
    while out.len() < n_points {
        out.push(Suggestion {
            x: random_point(lower, upper, &mut replacement()),
            replaced: true,
        });
    }
    out
}
