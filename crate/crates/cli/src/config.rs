//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Every key may appear at most
//! once; `scenario` and `n` are required. Lists are comma separated.

use std::collections::HashMap;
use std::path::PathBuf;
use std::str::FromStr;

use sepsim_core::adversarial::AdversaryPolicy;
use sepsim_core::model::{BoundaryMode, Dimension, TargetModel};
use sepsim_core::montecarlo::{ExperimentSpec, Scenario};
use sepsim_core::scaling::GridRadiusForm;

use crate::error::Diagnostic;
use crate::output::Format;

/// Keys accepted in a run configuration.
pub const KEYS: &[&str] = &[
    "scenario",
    "n",
    "dimension",
    "radius",
    "sensors",
    "a",
    "radius_form",
    "theta",
    "c",
    "c_n",
    "f",
    "g",
    "alpha",
    "beta",
    "alpha1",
    "theta1",
    "theta2",
    "gamma",
    "eps",
    "policy",
    "policy_p",
    "occupancy",
    "d",
    "targets",
    "boundary",
    "trials",
    "seed",
    "sweep_axis",
    "sweep_values",
    "format",
    "out",
    "plot",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: ExperimentSpec,
    pub sweep: Option<Sweep>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

struct Entry<'a> {
    line: usize,
    value: &'a str,
}

fn parse_value<T: FromStr>(key: &str, e: &Entry<'_>) -> Result<T, Diagnostic> {
    e.value
        .parse()
        .map_err(|_| Diagnostic::at(e.line, format!("invalid value '{}' for '{key}'", e.value)))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Diagnostic> {
        let mut entries: HashMap<&str, Entry<'_>> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Diagnostic::at(line, format!("expected 'key = value', found '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Diagnostic::at(line, format!("unknown key '{key}'")));
            }
            if value.is_empty() {
                return Err(Diagnostic::at(line, format!("empty value for '{key}'")));
            }
            if let Some(prev) = entries.get(key) {
                return Err(Diagnostic::at(
                    line,
                    format!("duplicate key '{key}' (first set on line {})", prev.line),
                ));
            }
            entries.insert(key, Entry { line, value });
        }

        let require = |key: &str| {
            entries
                .get(key)
                .ok_or_else(|| Diagnostic::global(format!("missing required key '{key}'")))
        };
        let scenario_entry = require("scenario")?;
        let scenario = Scenario::from_str(scenario_entry.value)
            .map_err(|e| Diagnostic::at(scenario_entry.line, e.to_string()))?;
        let n: u64 = parse_value("n", require("n")?)?;
        let mut spec = ExperimentSpec::new(scenario, n);

        macro_rules! set {
            ($key:literal, $field:expr) => {
                if let Some(e) = entries.get($key) {
                    $field = parse_value($key, e)?;
                }
            };
            ($key:literal, opt $field:expr) => {
                if let Some(e) = entries.get($key) {
                    $field = Some(parse_value($key, e)?);
                }
            };
        }
        set!("radius", opt spec.radius);
        set!("sensors", opt spec.sensors);
        set!("a", opt spec.a);
        set!("theta", opt spec.theta);
        set!("c", spec.c);
        set!("c_n", opt spec.c_n);
        set!("f", spec.f);
        set!("g", spec.g);
        set!("alpha", spec.alpha);
        set!("beta", spec.beta);
        set!("alpha1", spec.alpha1);
        set!("theta1", spec.theta1);
        set!("theta2", spec.theta2);
        set!("gamma", spec.gamma);
        set!("eps", spec.eps);
        set!("occupancy", spec.occupancy);
        set!("d", opt spec.d);
        set!("trials", opt spec.trials);
        set!("seed", spec.master_seed);

        if let Some(e) = entries.get("dimension") {
            spec.dimension = match e.value {
                "1" => Dimension::One,
                "2" => Dimension::Two,
                other => return Err(Diagnostic::at(e.line, format!("dimension must be 1 or 2, got '{other}'"))),
            };
        }
        if let Some(e) = entries.get("radius_form") {
            spec.radius_form = parse_radius_form(e.value).map_err(|m| Diagnostic::at(e.line, m))?;
        }
        if let Some(e) = entries.get("targets") {
            spec.target_model = Some(parse_target_model(e.value).map_err(|m| Diagnostic::at(e.line, m))?);
        }
        if let Some(e) = entries.get("boundary") {
            spec.boundary = parse_boundary(e.value).map_err(|m| Diagnostic::at(e.line, m))?;
        }
        let policy_p = match entries.get("policy_p") {
            Some(e) => Some(parse_value::<f64>("policy_p", e)?),
            None => None,
        };
        if let Some(e) = entries.get("policy") {
            spec.policy = parse_policy(e.value, policy_p).map_err(|m| Diagnostic::at(e.line, m))?;
        } else if let Some(e) = entries.get("policy_p") {
            return Err(Diagnostic::at(e.line, "'policy_p' requires 'policy = random-bit'"));
        }

        let sweep = match (entries.get("sweep_axis"), entries.get("sweep_values")) {
            (None, None) => None,
            (Some(axis), Some(values)) => {
                if !ExperimentSpec::AXES.contains(&axis.value) {
                    return Err(Diagnostic::at(
                        axis.line,
                        format!("unknown sweep axis '{}', expected one of {}", axis.value, ExperimentSpec::AXES.join(", ")),
                    ));
                }
                Some(Sweep {
                    axis: axis.value.to_string(),
                    values: parse_list(values.value).map_err(|m| Diagnostic::at(values.line, m))?,
                })
            }
            (Some(_), None) => return Err(Diagnostic::global("missing required key 'sweep_values'")),
            (None, Some(_)) => return Err(Diagnostic::global("missing required key 'sweep_axis'")),
        };

        let format = match entries.get("format") {
            Some(e) => Some(Format::from_str(e.value).map_err(|m| Diagnostic::at(e.line, m))?),
            None => None,
        };
        Ok(RunConfig {
            spec,
            sweep,
            format,
            out: entries.get("out").map(|e| PathBuf::from(e.value)),
            plot: entries.get("plot").map(|e| PathBuf::from(e.value)),
        })
    }
}

pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("invalid number '{s}' in list")))
        .collect()
}

pub fn parse_radius_form(s: &str) -> Result<GridRadiusForm, String> {
    match s {
        "narrow" => Ok(GridRadiusForm::Narrow),
        "wide" => Ok(GridRadiusForm::Wide),
        _ => Err(format!("radius_form must be 'narrow' or 'wide', got '{s}'")),
    }
}

pub fn parse_target_model(s: &str) -> Result<TargetModel, String> {
    match s {
        "grid" => Ok(TargetModel::Grid),
        "uniform" => Ok(TargetModel::Uniform),
        "poisson" => Ok(TargetModel::Poisson),
        _ => Err(format!("targets must be grid, uniform or poisson, got '{s}'")),
    }
}

pub fn parse_boundary(s: &str) -> Result<BoundaryMode, String> {
    match s {
        "clip" => Ok(BoundaryMode::Clip),
        "torus" => Ok(BoundaryMode::Torus),
        _ => Err(format!("boundary must be 'clip' or 'torus', got '{s}'")),
    }
}

pub fn parse_policy(s: &str, p: Option<f64>) -> Result<AdversaryPolicy, String> {
    let policy = match s {
        "flip" => AdversaryPolicy::Flip,
        "random-bit" => AdversaryPolicy::RandomBit(p.unwrap_or(0.5)),
        "constant-one" => AdversaryPolicy::ConstantOne,
        "constant-zero" => AdversaryPolicy::ConstantZero,
        _ => return Err(format!("policy must be flip, random-bit, constant-one or constant-zero, got '{s}'")),
    };
    if p.is_some() && !matches!(policy, AdversaryPolicy::RandomBit(_)) {
        return Err("'policy_p' only applies to 'random-bit'".into());
    }
    Ok(policy)
}
