use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use sepsim_core::adversarial::{adversarial_full_m, adversarial_partial_m, chernoff_success_bound};
use sepsim_core::model::Dimension;
use sepsim_core::montecarlo::{self, threshold_markers, EstimateRow, ExperimentSpec, Scenario};
use sepsim_core::scaling::{self, GridParams, RandomParams, Sign};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::instance::{check, InstanceFile};
use crate::output::{render, Format};
use crate::plot::render_svg;

/// Options shared by every command. Flags override the config file.
#[derive(Debug, Clone, Default)]
pub struct Globals {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    /// Record measured wall time instead of 0, at the cost of byte-stable output.
    pub timing: bool,
    pub threads: Option<usize>,
}

/// Text to print plus where it should go.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub path: Option<PathBuf>,
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_config(path: &Path, globals: &Globals) -> CliResult<RunConfig> {
    let text = read_text(path)?;
    let mut cfg = RunConfig::parse(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    if let Some(seed) = globals.seed {
        cfg.spec.master_seed = seed;
    }
    if let Some(trials) = globals.trials {
        cfg.spec.trials = Some(trials);
    }
    Ok(cfg)
}

fn finish_rows(mut rows: Vec<EstimateRow>, cfg: &RunConfig, globals: &Globals) -> CliResult<Output> {
    if !globals.timing {
        for r in &mut rows {
            r.wall_time_ms = 0;
        }
    }
    let format = globals.format.or(cfg.format).unwrap_or_default();
    Ok(Output {
        text: render(&rows, format)?,
        path: globals.out.clone().or_else(|| cfg.out.clone()),
    })
}

pub fn cmd_estimate(config: &Path, globals: &Globals) -> CliResult<Output> {
    let cfg = load_config(config, globals)?;
    let row = montecarlo::estimate_with_threads(&cfg.spec, globals.threads)?;
    finish_rows(vec![row], &cfg, globals)
}

pub fn cmd_sweep(config: &Path, globals: &Globals) -> CliResult<Output> {
    let cfg = load_config(config, globals)?;
    let sweep = cfg.sweep.as_ref().ok_or_else(|| CliError::Parse {
        path: config.to_path_buf(),
        source: crate::error::Diagnostic::global("missing required key 'sweep_axis'"),
    })?;
    let rows = montecarlo::sweep_with_threads(&cfg.spec, &sweep.axis, &sweep.values, globals.threads)?;
    if let Some(plot) = globals.plot.as_ref().or(cfg.plot.as_ref()) {
        let markers = threshold_markers(&cfg.spec, &sweep.axis);
        write_text(plot, &render_svg(&rows, &markers)?)?;
    }
    finish_rows(rows, &cfg, globals)
}

pub fn cmd_check(instance: &Path, globals: &Globals) -> CliResult<Output> {
    let text = read_text(instance)?;
    let inst = InstanceFile::parse(&text).map_err(|source| CliError::Parse {
        path: instance.to_path_buf(),
        source,
    })?;
    let report = check(&inst)?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    Ok(Output {
        text,
        path: globals.out.clone(),
    })
}

/// One line of the `thresholds` table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub name: String,
    pub formula: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct Table(Vec<ThresholdRow>);

impl Table {
    fn push(&mut self, name: &str, formula: &str, value: sepsim_core::Result<f64>) {
        let (value, error) = match value {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        };
        self.0.push(ThresholdRow {
            name: name.into(),
            formula: formula.into(),
            value,
            error,
        });
    }
}

/// Every closed-form quantity that applies to the spec's scenario.
pub fn threshold_rows(spec: &ExperimentSpec) -> Vec<ThresholdRow> {
    let n = spec.n;
    let nf = n as f64;
    let two_d = spec.dimension == Dimension::Two;
    let a = spec.a.unwrap_or(if spec.scenario == Scenario::RandomPartial { 2.0 } else { 1.0 });
    let c = spec.c.abs();
    let c_n = spec.c_n.unwrap_or(nf.ln());
    let grid = GridParams { n, a, alpha: spec.alpha, beta: spec.beta, c };
    let random = RandomParams {
        n,
        alpha: spec.alpha,
        beta: spec.beta,
        alpha1: spec.alpha1,
        theta1: spec.theta1,
        theta2: spec.theta2,
        a,
    };
    let mut t = Table(Vec::new());
    match (spec.scenario, two_d) {
        (Scenario::GridFull, false) => {
            t.push("radius", "a/(2n)", grid.validate().map(|_| scaling::grid_radius(n, a, spec.radius_form)));
            t.push("m_upper", "(n/a)(ln(n/a) + c)", scaling::grid_full_m(&grid, Sign::Plus));
            t.push("m_lower", "(n/a)(ln(n/a) - c)", scaling::grid_full_m(&grid, Sign::Minus));
        }
        (Scenario::GridFull, true) => {
            t.push("radius", "1/(2 sqrt n)", Ok(scaling::grid_radius_2d(n)));
            t.push("m_upper", "(4n/pi)(ln(4n/pi) + c)", scaling::grid_full_m_2d(n, c, Sign::Plus));
            t.push("m_lower", "(4n/pi)(ln(4n/pi) - c)", scaling::grid_full_m_2d(n, c, Sign::Minus));
        }
        (Scenario::GridPartial, false) => {
            t.push("radius", "a/(2n)", grid.validate().map(|_| scaling::grid_radius(n, a, spec.radius_form)));
            t.push("m_sufficient", "(n/a) ln(1/((1-alpha)(1-beta)))", scaling::grid_partial_m_sufficient(&grid));
            t.push("m_necessary", "(n/a - 1) ln(1/(1-alpha beta))", scaling::grid_partial_m_necessary(&grid));
        }
        (Scenario::GridPartial, true) => {
            t.push("radius", "1/(2 sqrt n)", Ok(scaling::grid_radius_2d(n)));
            t.push(
                "m_sufficient",
                "(4n/pi) ln(1/((1-alpha)(1-beta)))",
                scaling::grid_partial_m_2d_sufficient(n, spec.alpha, spec.beta),
            );
            t.push(
                "m_necessary",
                "(4n/pi - 1) ln(1/(1-alpha beta))",
                scaling::grid_partial_m_2d_necessary(n, spec.alpha, spec.beta),
            );
        }
        (Scenario::RandomFull, false) => {
            t.push("radius", "1/(c_n n^2)", scaling::random_full_r(n, c_n));
            t.push("m_upper", "(n^2 c_n/2)(2 ln n + ln(c_n/2) + f)", scaling::random_full_m(n, c_n, spec.f.abs(), Sign::Plus));
            t.push("m_lower", "(n^2 c_n/2)(2 ln n + ln(c_n/2) - f)", scaling::random_full_m(n, c_n, spec.f.abs(), Sign::Minus));
        }
        (Scenario::RandomFull, true) => {
            t.push("radius", "sqrt(1/(pi n c_n))", scaling::random_full_r_2d(n, c_n));
            t.push("m_upper", "n c_n (ln(n c_n) + g)", scaling::random_full_m_2d(n, c_n, spec.g.abs(), Sign::Plus));
            t.push("m_lower", "n c_n (ln(n c_n) - g)", scaling::random_full_m_2d(n, c_n, spec.g.abs(), Sign::Minus));
        }
        (Scenario::RandomPartial, false) => {
            t.push("c1", "ln(1/(1-(1-alpha1)(1-beta)))", Ok(random.c1()));
            t.push("c2", "ln(1/(1-(1-alpha)(1-beta)))", Ok(random.c2()));
            t.push("c3", "ln(1/(alpha beta))", Ok(random.c3()));
            t.push("r_sufficient", "1/(2(n/c1 + 1))", scaling::random_partial_r_sufficient(n, spec.alpha1, spec.beta));
            t.push("r_necessary", "ln(1/(alpha1 beta))/(2n)", scaling::random_partial_r_necessary(n, spec.alpha1, spec.beta));
            t.push(
                "m_sufficient",
                "(n/(theta1 (a-1) c1)) ln(1 + 1/(c2 - a theta2 c1))",
                scaling::random_partial_m_sufficient(&random),
            );
            t.push(
                "m_necessary",
                "(n/(theta2 (a-1) c1) - 1) ln(1/(c3 - a theta1 c1))",
                scaling::random_partial_m_necessary(&random),
            );
        }
        (Scenario::RandomPartial, true) => {
            t.push("c1", "ln(1/(1-(1-alpha1)(1-beta)))", Ok(random.c1()));
            t.push(
                "r_sufficient",
                "pi r^2 = 1/(a^2((n-1)/c1 + 1))",
                scaling::random_partial_r_2d_sufficient(n, spec.alpha1, spec.beta, a),
            );
            t.push(
                "r_necessary",
                "pi r^2 = ln(1/(alpha1 beta))/(a^2 n)",
                scaling::random_partial_r_2d_necessary(n, spec.alpha1, spec.beta, a),
            );
            t.push(
                "m_sufficient",
                "(n/(theta1 (a-1)^2 c1)) ln(1 + 1/(c2 - a^2 theta2 c1))",
                scaling::random_partial_m_2d_sufficient(&random),
            );
            t.push(
                "m_necessary",
                "(n/(theta2 (a-1)^2 c1) - 1) ln(1/(c3 - a^2 theta1 c1))",
                scaling::random_partial_m_2d_necessary(&random),
            );
        }
        (Scenario::AdversarialFull | Scenario::AdversarialPartial, _) => {
            t.push("radius", "1/(2n)", Ok(0.5 / nf));
            let m = if spec.scenario == Scenario::AdversarialFull {
                let m = adversarial_full_m(n, spec.gamma, spec.eps);
                t.push("m", "((1+eps)/(1-2 sqrt(gamma(1-gamma)))) n ln n", m.clone());
                m
            } else {
                let m = adversarial_partial_m(n, spec.gamma, spec.eps, spec.alpha, spec.beta);
                t.push("m", "((1+eps)/(1-2 sqrt(gamma(1-gamma)))) n ln(1/((1-alpha)(1-beta)))", m.clone());
                m
            };
            let lambda = m.map(|m| m / nf);
            t.push("lambda", "m/n", lambda.clone());
            let bound = lambda.and_then(|l| chernoff_success_bound(spec.gamma, l));
            t.push("per_target_bound", "1 - exp(-(1-2 sqrt(gamma(1-gamma))) lambda)", bound.clone());
            t.push("all_targets_bound", "per_target_bound^n", bound.map(|b| b.powf(nf)));
        }
        (Scenario::MinSpacing, _) => {
            let d = spec.d.unwrap_or(1.0 / (nf * nf * nf.ln()));
            t.push("d", "1/(n^2 ln n) unless given", Ok(d));
            t.push("p_min_spacing", "(1 - (n-1) d)^n", Ok(scaling::min_spacing_prob(n, d)));
        }
        (Scenario::Coupon, _) => {
            let m = spec.sensors.unwrap_or_else(|| (nf * (nf.ln() + spec.c)).ceil());
            t.push("m", "ceil(n(ln n + c)) unless given", Ok(m));
            t.push(
                "p_exact",
                "sum_k (-1)^k C(n,k)(1-k/n)^m",
                Ok(scaling::coupon_all_collected_prob(n, m.max(0.0) as u64)),
            );
            t.push("p_limit", "exp(-exp(-c))", Ok(scaling::coupon_asymptotic(spec.c)));
        }
    }
    t.0
}

fn value_text(r: &ThresholdRow) -> String {
    match (&r.value, &r.error) {
        (Some(v), _) => v.to_string(),
        (None, Some(e)) => format!("error: {e}"),
        (None, None) => String::new(),
    }
}

/// Render the table (aligned text unless a format is given). The error, if
/// any, lists every row whose calculator rejected its parameters.
pub fn cmd_thresholds(spec: &ExperimentSpec, format: Option<Format>) -> CliResult<(String, Option<CliError>)> {
    let rows = threshold_rows(spec);
    let text = match format {
        Some(Format::Json) => {
            let mut s = serde_json::to_string_pretty(&rows)?;
            s.push('\n');
            s
        }
        Some(Format::Csv) => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            w.write_record(["name", "formula", "value"])?;
            for r in &rows {
                w.write_record([r.name.as_str(), r.formula.as_str(), value_text(r).as_str()])?;
            }
            String::from_utf8(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?).expect("csv output is UTF-8")
        }
        None => {
            let name_w = rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
            let formula_w = rows.iter().map(|r| r.formula.chars().count()).max().unwrap_or(7).max(7);
            let mut s = String::new();
            let _ = writeln!(s, "{:name_w$}  {:formula_w$}  value", "name", "formula");
            for r in &rows {
                let _ = writeln!(s, "{:name_w$}  {:formula_w$}  {}", r.name, r.formula, value_text(r));
            }
            s
        }
    };
    let mut failures: Vec<String> = Vec::new();
    for e in rows.iter().filter_map(|r| r.error.clone()) {
        if !failures.contains(&e) {
            failures.push(e);
        }
    }
    let err = (!failures.is_empty()).then(|| CliError::Usage(failures.join("; ")));
    Ok((text, err))
}
