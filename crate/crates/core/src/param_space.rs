//! Typed search spaces.
//!
//! Optimizers work on *coded* real vectors inside `[lower, upper]`. An
//! objective receives *natural* values: integer and factor codes are rounded,
//! transforms such as `2^code` are applied, and factor codes select a level
//! string.

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::SpaceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarType {
    #[serde(alias = "float")]
    Num,
    Int,
    Factor,
}

impl VarType {
    pub fn as_str(self) -> &'static str {
        match self {
            VarType::Num => "num",
            VarType::Int => "int",
            VarType::Factor => "factor",
        }
    }
}

impl fmt::Display for VarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Transform {
    /// Identity. On factor variables the code selects its level string,
    /// which is what `transform_none_to_None` denotes in tuned tables.
    #[default]
    #[serde(rename = "none", alias = "None", alias = "transform_none_to_None")]
    None,
    #[serde(rename = "transform_power_2_int", alias = "power_2_int")]
    Power2Int,
    #[serde(rename = "transform_power_10", alias = "power_10")]
    Power10,
}

impl Transform {
    pub fn label(self) -> &'static str {
        match self {
            Transform::None => "None",
            Transform::Power2Int => "transform_power_2_int",
            Transform::Power10 => "transform_power_10",
        }
    }
}

/// A value as the objective sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NaturalValue {
    Int(i64),
    Real(f64),
    Level(String),
}

impl NaturalValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            NaturalValue::Int(v) => Some(*v as f64),
            NaturalValue::Real(v) => Some(*v),
            NaturalValue::Level(_) => None,
        }
    }
}

impl fmt::Display for NaturalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NaturalValue::Int(v) => write!(f, "{v}"),
            NaturalValue::Real(v) => f.write_str(&format_real(*v)),
            NaturalValue::Level(s) => f.write_str(s),
        }
    }
}

/// Round half toward +inf.
pub fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub var_type: VarType,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub default: Option<f64>,
    #[serde(default)]
    pub transform: Transform,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
}

impl VariableSpec {
    pub fn num(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            var_type: VarType::Num,
            lower,
            upper,
            default: None,
            transform: Transform::None,
            levels: Vec::new(),
        }
    }

    pub fn int(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self {
            var_type: VarType::Int,
            ..Self::num(name, lower, upper)
        }
    }

    pub fn factor<S: Into<String>>(name: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        let levels: Vec<String> = levels.into_iter().map(Into::into).collect();
        let upper = levels.len().saturating_sub(1) as f64;
        Self {
            var_type: VarType::Factor,
            levels,
            ..Self::num(name, 0.0, upper)
        }
    }

    pub fn with_transform(mut self, transform: Transform) -> Self {
        self.transform = transform;
        self
    }

    pub fn with_default(mut self, default: f64) -> Self {
        self.default = Some(default);
        self
    }

    /// A variable with `lower == upper` is fixed at that value.
    pub fn is_active(&self) -> bool {
        self.lower < self.upper
    }

    /// Coded default; the lower bound when none is given.
    pub fn default_coded(&self) -> f64 {
        self.default.unwrap_or(self.lower)
    }

    pub fn validate(&self) -> Result<(), SpaceError> {
        let bad = |reason: String| SpaceError::InvalidVariable {
            name: self.name.clone(),
            reason,
        };
        if self.name.is_empty() {
            return Err(bad("name must not be empty".into()));
        }
        if !self.lower.is_finite() || !self.upper.is_finite() {
            return Err(bad("bounds must be finite".into()));
        }
        if self.lower > self.upper {
            return Err(bad(format!("lower {} exceeds upper {}", self.lower, self.upper)));
        }
        if let Some(d) = self.default {
            if !d.is_finite() {
                return Err(bad("default must be finite".into()));
            }
        }
        match self.var_type {
            VarType::Num => {}
            VarType::Int => {
                if self.lower.fract() != 0.0 || self.upper.fract() != 0.0 {
                    return Err(bad("int bounds must be integer-valued".into()));
                }
            }
            VarType::Factor => {
                if self.levels.is_empty() {
                    return Err(bad("factor needs at least one level".into()));
                }
                if self.lower.fract() != 0.0 || self.upper.fract() != 0.0 {
                    return Err(bad("factor bounds must be integer codes".into()));
                }
                let max_code = (self.levels.len() - 1) as f64;
                if self.lower < 0.0 || self.upper > max_code {
                    return Err(bad(format!("factor codes must lie in [0, {max_code}]")));
                }
            }
        }
        if self.var_type != VarType::Factor && !self.levels.is_empty() {
            return Err(bad("levels are only allowed on factor variables".into()));
        }
        Ok(())
    }

    /// Map a coded value to the natural value handed to the objective.
    pub fn transform_value(&self, coded: f64) -> Result<NaturalValue, SpaceError> {
        match self.var_type {
            VarType::Factor => {
                let code = round_half_up(coded);
                if code < 0.0 || code >= self.levels.len() as f64 || !code.is_finite() {
                    return Err(SpaceError::LevelOutOfRange {
                        name: self.name.clone(),
                        code: code as i64,
                        levels: self.levels.len(),
                    });
                }
                Ok(NaturalValue::Level(self.levels[code as usize].clone()))
            }
            VarType::Int => {
                let code = round_half_up(coded);
                Ok(match self.transform {
                    Transform::None => NaturalValue::Int(code as i64),
                    Transform::Power2Int => NaturalValue::Int(2f64.powf(code) as i64),
                    Transform::Power10 => NaturalValue::Real(10f64.powf(code)),
                })
            }
            VarType::Num => Ok(match self.transform {
                Transform::None => NaturalValue::Real(coded),
                Transform::Power2Int => NaturalValue::Int(2f64.powf(round_half_up(coded)) as i64),
                Transform::Power10 => NaturalValue::Real(10f64.powf(coded)),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<VariableSpec>", into = "Vec<VariableSpec>")]
pub struct SearchSpace {
    variables: Vec<VariableSpec>,
}

impl TryFrom<Vec<VariableSpec>> for SearchSpace {
    type Error = SpaceError;

    fn try_from(variables: Vec<VariableSpec>) -> Result<Self, Self::Error> {
        Self::new(variables)
    }
}

impl From<SearchSpace> for Vec<VariableSpec> {
    fn from(space: SearchSpace) -> Self {
        space.variables
    }
}

impl SearchSpace {
    pub fn new(variables: Vec<VariableSpec>) -> Result<Self, SpaceError> {
        if variables.is_empty() {
            return Err(SpaceError::Empty);
        }
        let mut seen = HashSet::new();
        for v in &variables {
            v.validate()?;
            if !seen.insert(v.name.as_str()) {
                return Err(SpaceError::DuplicateName(v.name.clone()));
            }
        }
        Ok(Self { variables })
    }

    /// Numeric box `[lower, upper]^k` named `x0, x1, ...`.
    pub fn numeric_box(lower: &[f64], upper: &[f64]) -> Result<Self, SpaceError> {
        if lower.len() != upper.len() {
            return Err(SpaceError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        Self::new(
            lower
                .iter()
                .zip(upper)
                .enumerate()
                .map(|(i, (&l, &u))| VariableSpec::num(format!("x{i}"), l, u))
                .collect(),
        )
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.variables.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn var_types(&self) -> Vec<VarType> {
        self.variables.iter().map(|v| v.var_type).collect()
    }

    pub fn factor_mask(&self) -> Vec<bool> {
        self.variables.iter().map(|v| v.var_type == VarType::Factor).collect()
    }

    pub fn bounds_vectors(&self) -> (Vec<f64>, Vec<f64>) {
        self.variables.iter().map(|v| (v.lower, v.upper)).unzip()
    }

    pub fn default_vector(&self) -> Vec<f64> {
        self.variables.iter().map(VariableSpec::default_coded).collect()
    }

    pub fn to_natural(&self, coded: &[f64]) -> Result<Vec<NaturalValue>, SpaceError> {
        if coded.len() != self.dim() {
            return Err(SpaceError::DimensionMismatch {
                expected: self.dim(),
                got: coded.len(),
            });
        }
        self.variables
            .iter()
            .zip(coded)
            .map(|(v, &c)| v.transform_value(c))
            .collect()
    }

    /// Snap integer and factor coordinates onto their integer codes.
    pub fn repair(&self, coded: &mut [f64]) {
        for (v, c) in self.variables.iter().zip(coded.iter_mut()) {
            if v.var_type != VarType::Num {
                *c = round_half_up(*c).clamp(v.lower, v.upper);
            }
        }
    }
}

/// Significance marker for an importance percentage.
pub fn importance_stars(importance: f64) -> &'static str {
    if importance > 95.0 {
        "***"
    } else if importance > 50.0 {
        "**"
    } else if importance > 1.0 {
        "*"
    } else if importance > 0.1 {
        "."
    } else {
        ""
    }
}

fn format_real(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

/// Pipe-delimited table of the space, optionally with tuned values and
/// importance columns.
pub fn design_table(
    space: &SearchSpace,
    tuned: Option<&[f64]>,
    importance: Option<&[f64]>,
) -> Result<String, SpaceError> {
    let k = space.dim();
    for got in [tuned.map(<[f64]>::len), importance.map(<[f64]>::len)].into_iter().flatten() {
        if got != k {
            return Err(SpaceError::DimensionMismatch { expected: k, got });
        }
    }

    let mut header = vec!["name", "type", "default", "lower", "upper"];
    if tuned.is_some() {
        header.push("tuned");
    }
    header.push("transform");
    if importance.is_some() {
        header.extend(["importance", "stars"]);
    }
    let numeric_col: Vec<bool> = header
        .iter()
        .map(|h| matches!(*h, "lower" | "upper" | "tuned" | "importance"))
        .collect();

    let mut rows: Vec<Vec<String>> = Vec::with_capacity(k);
    for (i, v) in space.variables().iter().enumerate() {
        let default = v
            .transform_value(v.default_coded())
            .map(|n| match (&n, v.var_type) {
                (NaturalValue::Real(x), _) => format_real(*x),
                _ => n.to_string(),
            })
            .unwrap_or_else(|_| format_real(v.default_coded()));
        let mut row = vec![
            v.name.clone(),
            v.var_type.to_string(),
            default,
            format_real(v.lower),
            format_real(v.upper),
        ];
        if let Some(t) = tuned {
            row.push(format_real(t[i]));
        }
        row.push(v.transform.label().to_string());
        if let Some(imp) = importance {
            row.push(format!("{:.2}", imp[i]));
            row.push(importance_stars(imp[i]).to_string());
        }
        rows.push(row);
    }

    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();

    let mut out = String::new();
    let line = |cells: &[String], out: &mut String| {
        out.push('|');
        for (c, cell) in cells.iter().enumerate() {
            let w = widths[c];
            if numeric_col[c] {
                let _ = write!(out, " {cell:>w$} |");
            } else {
                let _ = write!(out, " {cell:<w$} |");
            }
        }
        out.push('\n');
    };
    let header_cells: Vec<String> = header.iter().map(|h| h.to_string()).collect();
    line(&header_cells, &mut out);
    out.push('|');
    for w in &widths {
        out.push_str(&"-".repeat(w + 2));
        out.push('|');
    }
    out.push('\n');
    for row in &rows {
        line(row, &mut out);
    }
    Ok(out)
}
