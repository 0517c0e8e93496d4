//! TOML run configuration.
//!
//! ```toml
//! [spot]
//! fun_evals = 30
//! seed = 1
//!
//! [design_control]
//! init_size = 10
//!
//! [objective]
//! builtin = "fun_sphere"
//!
//! [[variables]]
//! name = "x1"
//! type = "num"
//! lower = -1.0
//! upper = 1.0
//! ```
//!
//! `--set section.key=value` overrides are applied to the parsed TOML before
//! it is validated; array entries are addressed by index
//! (`variables.0.upper=2`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spotkit::{Builtin, FunControl, KrigingConfig, OptimizerConfig, SearchSpace, SpotConfig, VariableSpec};
use toml::{Table, Value};

use crate::error::CliError;

const DEFAULT_TIMEOUT_S: f64 = 60.0;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    spot: Table,
    #[serde(default)]
    design_control: DesignControl,
    surrogate_control: Option<KrigingConfig>,
    optimizer_control: Option<OptimizerConfig>,
    #[serde(default)]
    fun_control: FunControl,
    objective: Option<ObjectiveSection>,
    #[serde(default)]
    variables: Vec<VariableSpec>,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignControl {
    init_size: Option<usize>,
    repeats: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectiveSection {
    builtin: Option<String>,
    command: Option<String>,
    #[serde(default)]
    args: Vec<String>,
    timeout: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<PathBuf>,
}

/// Where objective values come from. Stored in the state file so a resumed
/// run rebuilds the same objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    Builtin {
        name: String,
        fun_control: FunControl,
    },
    External {
        command: String,
        args: Vec<String>,
        timeout_s: f64,
        workdir: PathBuf,
    },
}

#[derive(Debug)]
pub struct RunConfig {
    pub spot: SpotConfig,
    pub space: SearchSpace,
    pub objective: ObjectiveSpec,
    pub output_dir: PathBuf,
}

pub fn load(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let base = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let base = base
        .canonicalize()
        .map_err(|e| CliError::Config(format!("cannot resolve {}: {e}", base.display())))?;
    parse(&text, &base, overrides)
}

/// Parse configuration text. Relative paths resolve against `base`.
pub fn parse(text: &str, base: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table: Table = text.parse().map_err(|e| CliError::Config(format!("{e}")))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let raw: RawConfig = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;

    let mut merged = raw.spot;
    if let Some(n) = raw.design_control.init_size {
        merged.insert("init_size".into(), Value::Integer(n as i64));
    }
    if let Some(n) = raw.design_control.repeats {
        merged.insert("design_repeats".into(), Value::Integer(n as i64));
    }
    let mut spot: SpotConfig = Value::Table(merged)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(format!("[spot]: {e}")))?;
    if let Some(s) = raw.surrogate_control {
        spot.surrogate = s;
    }
    if let Some(o) = raw.optimizer_control {
        spot.optimizer = o;
    }

    if raw.variables.is_empty() {
        return Err(CliError::Config("no [[variables]] defined".into()));
    }
    let space = SearchSpace::new(raw.variables).map_err(|e| CliError::Config(e.to_string()))?;
    spot.validate(space.dim())?;
    raw.fun_control.validate().map_err(CliError::Config)?;

    let objective = match raw.objective {
        None => return Err(CliError::Config("missing [objective] section".into())),
        Some(ObjectiveSection {
            builtin: Some(name),
            command: None,
            args,
            timeout: None,
        }) if args.is_empty() => {
            let b: Builtin = name.parse().map_err(|e: spotkit::ObjectiveError| CliError::Config(e.to_string()))?;
            if !b.is_available() {
                return Err(CliError::Config(format!("{} has no formula available", b.name())));
            }
            b.check_dimension(space.dim())
                .map_err(|e| CliError::Config(e.to_string()))?;
            ObjectiveSpec::Builtin {
                name: b.name().to_string(),
                fun_control: raw.fun_control,
            }
        }
        Some(ObjectiveSection {
            builtin: None,
            command: Some(command),
            args,
            timeout,
        }) => {
            let timeout_s = timeout.unwrap_or(DEFAULT_TIMEOUT_S);
            if !(timeout_s > 0.0) {
                return Err(CliError::Config(format!("objective timeout must be > 0, got {timeout_s}")));
            }
            ObjectiveSpec::External {
                command,
                args,
                timeout_s,
                workdir: base.to_path_buf(),
            }
        }
        Some(_) => {
            return Err(CliError::Config(
                "[objective] needs exactly one of `builtin` or `command` (args and timeout go with command)".into(),
            ))
        }
    };

    let dir = raw.output.dir.unwrap_or_else(|| PathBuf::from("spotkit_out"));
    let output_dir = if dir.is_absolute() { dir } else { base.join(dir) };

    Ok(RunConfig {
        spot,
        space,
        objective,
        output_dir,
    })
}

fn apply_override(table: &mut Table, spec: &str) -> Result<(), CliError> {
    let (key, raw_value) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not of the form key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad override key `{key}`")));
    }
    let mut root = Value::Table(std::mem::take(table));
    let result = set_path(&mut root, &path, parse_value(raw_value.trim()), key);
    if let Value::Table(t) = root {
        *table = t;
    }
    result
}

/// Missing table keys are created; array entries must already exist.
fn set_path(target: &mut Value, path: &[&str], value: Value, key: &str) -> Result<(), CliError> {
    let Some((head, rest)) = path.split_first() else {
        *target = value;
        return Ok(());
    };
    let next = match target {
        Value::Table(t) => t
            .entry(head.to_string())
            .or_insert_with(|| if rest.is_empty() { Value::Boolean(false) } else { Value::Table(Table::new()) }),
        Value::Array(items) => {
            let idx: usize = head
                .parse()
                .map_err(|_| CliError::Config(format!("`{key}`: expected an array index, got `{head}`")))?;
            items
                .get_mut(idx)
                .ok_or_else(|| CliError::Config(format!("`{key}`: index {idx} out of range")))?
        }
        _ => return Err(CliError::Config(format!("`{key}`: cannot descend into `{head}`"))),
    };
    set_path(next, rest, value, key)
}

/// Values parse as TOML (numbers, booleans, arrays, quoted strings); anything
/// else is taken as a bare string.
fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[spot]
fun_evals = 20
seed = 4

[design_control]
init_size = 6

[objective]
builtin = "sphere"

[[variables]]
name = "x1"
type = "num"
lower = -1.0
upper = 1.0
"#;

    fn parse_with(overrides: &[&str]) -> Result<RunConfig, CliError> {
        let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        parse(BASE, Path::new("/tmp"), &o)
    }

    #[test]
    fn sections_map_onto_the_config() {
        let c = parse_with(&[]).unwrap();
        assert_eq!(c.spot.fun_evals, Some(20));
        assert_eq!(c.spot.seed, 4);
        assert_eq!(c.spot.init_size, 6);
        assert_eq!(c.output_dir, Path::new("/tmp/spotkit_out"));
        assert!(matches!(c.objective, ObjectiveSpec::Builtin { ref name, .. } if name == "fun_sphere"));
    }

    #[test]
    fn overrides_reach_nested_and_array_keys() {
        let c = parse_with(&[
            "spot.seed=9",
            "spot.max_time=inf",
            "variables.0.upper=3",
            "surrogate_control.noise=true",
            "output.dir=/elsewhere",
        ])
        .unwrap();
        assert_eq!(c.spot.seed, 9);
        assert!(c.spot.max_time_seconds.is_infinite());
        assert_eq!(c.space.variables()[0].upper, 3.0);
        assert!(c.spot.surrogate.noise);
        assert_eq!(c.output_dir, Path::new("/elsewhere"));
    }

    #[test]
    fn bad_inputs_are_config_errors() {
        for o in [
            "spot.fun_evals=0",
            "spot.unknown_key=1",
            "objective.command=foo",
            "variables.3.upper=1",
            "objective.builtin=fun_wingwt",
            "objective.builtin=fun_branin",
            "noequals",
        ] {
            let err = parse_with(&[o]).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{o}: {err}");
        }
    }

    #[test]
    fn external_objective_gets_default_timeout() {
        let text = BASE.replace("builtin = \"sphere\"", "command = \"python3\"\nargs = [\"obj.py\"]");
        let c = parse(&text, Path::new("/w"), &[]).unwrap();
        assert_eq!(
            c.objective,
            ObjectiveSpec::External {
                command: "python3".into(),
                args: vec!["obj.py".into()],
                timeout_s: DEFAULT_TIMEOUT_S,
                workdir: "/w".into(),
            }
        );
    }
}
