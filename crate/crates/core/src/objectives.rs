//! Analytic test objectives, additive Gaussian noise and random failures.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::ObjectiveError;
use crate::par;
use crate::param_space::NaturalValue;
use crate::rng::substream;

/// Something the optimization loop can evaluate.
///
/// `index` is the run-wide evaluation counter. Stochastic objectives derive
/// their randomness from it so that evaluation order and threading do not
/// change results. A failed evaluation returns `Ok(f64::NAN)`; `Err` aborts
/// the run.
pub trait Objective: Sync {
    fn name(&self) -> &str;

    fn evaluate(&self, x: &[NaturalValue], index: u64) -> Result<f64, ObjectiveError>;

    fn check_dimension(&self, _k: usize) -> Result<(), ObjectiveError> {
        Ok(())
    }
}

pub fn fun_sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn fun_branin(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let a = 1.0;
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let r = 6.0;
    let s = 10.0;
    let t = 1.0 / (8.0 * PI);
    a * (x2 - b * x1 * x1 + c * x1 - r).powi(2) + s * (1.0 - t) * x1.cos() + s
}

/// `1 / (1 + sum x_i^2)`.
pub fn fun_runge(x: &[f64]) -> f64 {
    1.0 / (1.0 + fun_sphere(x))
}

pub fn fun_cubed(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v * v).sum()
}

pub fn fun_forrester(x: &[f64]) -> f64 {
    let v = x[0];
    (6.0 * v - 2.0).powi(2) * (12.0 * v - 4.0).sin()
}

pub fn fun_xsin(x: &[f64]) -> f64 {
    x[0] * x[0].sin()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FunControl {
    /// Standard deviation of additive Gaussian noise.
    pub sigma: f64,
    pub seed: u64,
    /// Failure probability of `fun_random_error`.
    pub p_fail: f64,
}

impl Default for FunControl {
    fn default() -> Self {
        Self {
            sigma: 0.0,
            seed: 124,
            p_fail: 0.1,
        }
    }
}

impl FunControl {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(format!("sigma must be a finite value ≥ 0, got {}", self.sigma));
        }
        if !(0.0..=1.0).contains(&self.p_fail) {
            return Err(format!("p_fail must lie in [0, 1], got {}", self.p_fail));
        }
        Ok(())
    }

    /// Noise draw of evaluation `index`; zero when `sigma == 0`.
    pub fn noise(&self, index: u64) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        let z: f64 = substream(self.seed, "noise", index).sample(StandardNormal);
        self.sigma * z
    }
}

/// Wrap `f` with additive `N(0, sigma^2)` noise addressed by evaluation index.
pub fn with_noise<F>(f: F, ctrl: FunControl) -> impl Fn(&[f64], u64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    move |x, index| f(x) + ctrl.noise(index)
}

/// Fails (NaN) with probability `p_fail`; otherwise returns the sum of the
/// inputs.
pub fn fun_random_error(x: &[f64], ctrl: &FunControl, index: u64) -> f64 {
    let u: f64 = substream(ctrl.seed, "failure", index).random();
    if u < ctrl.p_fail {
        f64::NAN
    } else {
        x.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Sphere,
    Branin,
    Runge,
    Cubed,
    Forrester,
    Xsin,
    RandomError,
    SinCos,
    Wingwt,
    Linear,
    BraninFactor,
}

impl Builtin {
    pub const ALL: [Builtin; 11] = [
        Builtin::Sphere,
        Builtin::Branin,
        Builtin::Runge,
        Builtin::Cubed,
        Builtin::Forrester,
        Builtin::Xsin,
        Builtin::RandomError,
        Builtin::SinCos,
        Builtin::Wingwt,
        Builtin::Linear,
        Builtin::BraninFactor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Sphere => "fun_sphere",
            Builtin::Branin => "fun_branin",
            Builtin::Runge => "fun_runge",
            Builtin::Cubed => "fun_cubed",
            Builtin::Forrester => "fun_forrester",
            Builtin::Xsin => "fun_xsin",
            Builtin::RandomError => "fun_random_error",
            Builtin::SinCos => "fun_sin_cos",
            Builtin::Wingwt => "fun_wingwt",
            Builtin::Linear => "fun_linear",
            Builtin::BraninFactor => "fun_branin_factor",
        }
    }

    /// Required input dimension, `None` for any.
    pub fn dimension(self) -> Option<usize> {
        match self {
            Builtin::Branin => Some(2),
            Builtin::Forrester | Builtin::Xsin => Some(1),
            _ => None,
        }
    }

    /// Formula text, `None` when the function is registered without one.
    pub fn formula(self) -> Option<&'static str> {
        match self {
            Builtin::Sphere => Some("sum_i x_i^2"),
            Builtin::Branin => Some(
                "a (x2 - b x1^2 + c x1 - r)^2 + s (1 - t) cos(x1) + s; a=1, b=5.1/(4 pi^2), c=5/pi, r=6, s=10, t=1/(8 pi)",
            ),
            Builtin::Runge => Some("1 / (1 + sum_i x_i^2)"),
            Builtin::Cubed => Some("sum_i x_i^3"),
            Builtin::Forrester => Some("(6x - 2)^2 sin(12x - 4)"),
            Builtin::Xsin => Some("x sin(x)"),
            Builtin::RandomError => Some("sum_i x_i, or NaN with probability p_fail"),
            _ => None,
        }
    }

    pub fn is_available(self) -> bool {
        self.formula().is_some()
    }

    /// Noise-free value.
    pub fn value(self, x: &[f64]) -> Result<f64, ObjectiveError> {
        self.check_dimension(x.len())?;
        match self {
            Builtin::Sphere => Ok(fun_sphere(x)),
            Builtin::Branin => Ok(fun_branin(x)),
            Builtin::Runge => Ok(fun_runge(x)),
            Builtin::Cubed => Ok(fun_cubed(x)),
            Builtin::Forrester => Ok(fun_forrester(x)),
            Builtin::Xsin => Ok(fun_xsin(x)),
            Builtin::RandomError => Ok(x.iter().sum()),
            other => Err(ObjectiveError::FormulaUnavailable(other.name().into())),
        }
    }

    pub fn check_dimension(self, k: usize) -> Result<(), ObjectiveError> {
        if !self.is_available() {
            return Err(ObjectiveError::FormulaUnavailable(self.name().into()));
        }
        match self.dimension() {
            Some(d) if d != k => Err(ObjectiveError::Dimension {
                name: self.name().into(),
                expected: d,
                got: k,
            }),
            _ if k == 0 => Err(ObjectiveError::Dimension {
                name: self.name().into(),
                expected: 1,
                got: 0,
            }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = ObjectiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s || b.name().strip_prefix("fun_") == Some(s))
            .ok_or_else(|| ObjectiveError::Unknown(s.to_string()))
    }
}

/// A built-in function with its noise and failure settings.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticObjective {
    pub builtin: Builtin,
    pub control: FunControl,
}

impl AnalyticObjective {
    pub fn new(builtin: Builtin, control: FunControl) -> Self {
        Self { builtin, control }
    }

    pub fn eval_numeric(&self, x: &[f64], index: u64) -> Result<f64, ObjectiveError> {
        let base = match self.builtin {
            Builtin::RandomError => {
                self.builtin.check_dimension(x.len())?;
                fun_random_error(x, &self.control, index)
            }
            b => b.value(x)?,
        };
        Ok(base + self.control.noise(index))
    }

    /// Row-wise evaluation; row `i` uses evaluation index `first_index + i`.
    pub fn eval_rows(&self, rows: &[Vec<f64>], first_index: u64) -> Result<Vec<f64>, ObjectiveError> {
        par::map_range(rows.len(), |i| self.eval_numeric(&rows[i], first_index + i as u64))
            .into_iter()
            .collect()
    }
}

impl Objective for AnalyticObjective {
    fn name(&self) -> &str {
        self.builtin.name()
    }

    fn evaluate(&self, x: &[NaturalValue], index: u64) -> Result<f64, ObjectiveError> {
        let xs: Vec<f64> = x
            .iter()
            .map(|v| v.as_f64().ok_or_else(|| ObjectiveError::NonNumeric(self.name().into())))
            .collect::<Result<_, _>>()?;
        self.eval_numeric(&xs, index)
    }

    fn check_dimension(&self, k: usize) -> Result<(), ObjectiveError> {
        self.builtin.check_dimension(k)
    }
}
