//! Declarative Monte Carlo experiments.
//!
//! An [`ExperimentSpec`] names a scenario and its parameters. Anything left
//! unset is filled from the matching closed-form threshold when the spec is
//! resolved into an [`Experiment`]. Trial `k` draws all of its randomness from
//! `trial_rng(master_seed, k)`, so results do not depend on scheduling.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversarial::{
    adversarial_full_m, adversarial_partial_m, apply_policy, deploy_adversarial_field_with, majority_decode,
    margins, AdversaryModel, AdversaryPolicy, MajorityVerdicts,
};
use crate::error::{invalid, Result};
use crate::model::{
    sample_uniform_points_with, BoundaryMode, Dimension, Region, SensorField, TargetConfiguration,
    TargetLayout, TargetModel,
};
use crate::rng::{trial_rng, TrialRng};
use crate::scaling::{self, GridParams, GridRadiusForm, RandomParams, Sign};
use crate::separability::{coverage_map, spacings_of, SeparabilityReport};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;

/// Default trial counts: phase-transition runs and bound-validation runs.
pub const DEFAULT_TRIALS: u64 = 400;
pub const DEFAULT_BOUND_TRIALS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    GridFull,
    GridPartial,
    RandomFull,
    RandomPartial,
    AdversarialFull,
    AdversarialPartial,
    MinSpacing,
    Coupon,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::GridFull,
        Scenario::GridPartial,
        Scenario::RandomFull,
        Scenario::RandomPartial,
        Scenario::AdversarialFull,
        Scenario::AdversarialPartial,
        Scenario::MinSpacing,
        Scenario::Coupon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::GridFull => "grid-full",
            Scenario::GridPartial => "grid-partial",
            Scenario::RandomFull => "random-full",
            Scenario::RandomPartial => "random-partial",
            Scenario::AdversarialFull => "adversarial-full",
            Scenario::AdversarialPartial => "adversarial-partial",
            Scenario::MinSpacing => "min-spacing",
            Scenario::Coupon => "coupon",
        }
    }

    fn is_partial(self) -> bool {
        matches!(
            self,
            Scenario::GridPartial | Scenario::RandomPartial | Scenario::AdversarialPartial
        )
    }

    fn is_adversarial(self) -> bool {
        matches!(self, Scenario::AdversarialFull | Scenario::AdversarialPartial)
    }

    fn default_trials(self) -> u64 {
        match self {
            Scenario::MinSpacing | Scenario::Coupon => DEFAULT_BOUND_TRIALS,
            _ => DEFAULT_TRIALS,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Scenario::ALL.iter().map(|s| s.name()).collect();
                invalid(format!("unknown scenario '{s}', expected one of {}", names.join(", ")))
            })
    }
}

/// Everything needed to run a batch of trials.
///
/// `radius` and `sensors` left as `None` are taken from the scenario's
/// threshold formula. `sensors` is a count (rounded up) except in the
/// adversarial scenarios, where it is the Poisson intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub dimension: Dimension,
    pub n: u64,
    pub radius: Option<f64>,
    pub sensors: Option<f64>,
    /// Grid scale in `(0, 1]`, or the isolation factor `a > 1` in the
    /// random-partial scenario.
    pub a: Option<f64>,
    pub radius_form: GridRadiusForm,
    /// Random-partial radius `θ c1 / 2n`; defaults to `θ1`.
    pub theta: Option<f64>,
    /// Signed offset in `n (ln n + c)` style sensor counts.
    pub c: f64,
    /// Defaults to `ln n`.
    pub c_n: Option<f64>,
    /// Signed offsets for the random-full counts in one and two dimensions.
    pub f: f64,
    pub g: f64,
    pub alpha: f64,
    pub beta: f64,
    pub alpha1: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub gamma: f64,
    pub eps: f64,
    pub policy: AdversaryPolicy,
    /// Probability that each target location is occupied in adversarial trials.
    pub occupancy: f64,
    /// Spacing threshold; defaults to `1 / (n^2 ln n)`.
    pub d: Option<f64>,
    pub target_model: Option<TargetModel>,
    pub boundary: BoundaryMode,
    pub trials: Option<u64>,
    pub master_seed: u64,
}

impl ExperimentSpec {
    pub fn new(scenario: Scenario, n: u64) -> Self {
        ExperimentSpec {
            scenario,
            dimension: Dimension::One,
            n,
            radius: None,
            sensors: None,
            a: None,
            radius_form: GridRadiusForm::Narrow,
            theta: None,
            c: 0.0,
            c_n: None,
            f: 3.0,
            g: 3.0,
            alpha: 0.5,
            beta: 0.5,
            alpha1: 0.6,
            theta1: 0.4,
            theta2: 0.5,
            gamma: 0.2,
            eps: 0.5,
            policy: AdversaryPolicy::Flip,
            occupancy: 0.5,
            d: None,
            target_model: None,
            boundary: BoundaryMode::Clip,
            trials: None,
            master_seed: 0,
        }
    }

    pub fn trials(&self) -> u64 {
        self.trials.unwrap_or_else(|| self.scenario.default_trials())
    }

    fn a(&self) -> f64 {
        self.a.unwrap_or(match self.scenario {
            Scenario::RandomPartial => 2.0,
            _ => 1.0,
        })
    }

    fn c_n(&self) -> f64 {
        self.c_n.unwrap_or_else(|| (self.n as f64).ln())
    }

    fn random_params(&self) -> RandomParams {
        RandomParams {
            n: self.n,
            alpha: self.alpha,
            beta: self.beta,
            alpha1: self.alpha1,
            theta1: self.theta1,
            theta2: self.theta2,
            a: self.a(),
        }
    }

    fn grid_params(&self) -> GridParams {
        GridParams {
            n: self.n,
            a: self.a(),
            alpha: self.alpha,
            beta: self.beta,
            c: self.c.abs(),
        }
    }

    /// Numeric fields that can be swept.
    pub const AXES: [&'static str; 20] = [
        "n", "m", "lambda", "r", "a", "theta", "c", "c_n", "f", "g", "alpha", "beta", "alpha1", "theta1",
        "theta2", "gamma", "eps", "occupancy", "d", "trials",
    ];

    /// Set a numeric field by name. `lambda` sets the sensor intensity to `λ n`.
    pub fn set_axis(&mut self, axis: &str, value: f64) -> Result<()> {
        let whole = |v: f64| -> Result<u64> {
            if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
                Ok(v as u64)
            } else {
                Err(invalid(format!("{axis} must be a non-negative integer, got {value}")))
            }
        };
        match axis {
            "n" => self.n = whole(value)?,
            "m" => self.sensors = Some(value),
            "lambda" => self.sensors = Some(value * self.n as f64),
            "r" => self.radius = Some(value),
            "a" => self.a = Some(value),
            "theta" => self.theta = Some(value),
            "c" => self.c = value,
            "c_n" => self.c_n = Some(value),
            "f" => self.f = value,
            "g" => self.g = value,
            "alpha" => self.alpha = value,
            "beta" => self.beta = value,
            "alpha1" => self.alpha1 = value,
            "theta1" => self.theta1 = value,
            "theta2" => self.theta2 = value,
            "gamma" => self.gamma = value,
            "eps" => self.eps = value,
            "occupancy" => self.occupancy = value,
            "d" => self.d = Some(value),
            "trials" => self.trials = Some(whole(value)?),
            _ => {
                return Err(invalid(format!(
                    "unknown sweep axis '{axis}', expected one of {}",
                    Self::AXES.join(", ")
                )))
            }
        }
        Ok(())
    }
}

fn signed(offset: f64) -> (Sign, f64) {
    if offset < 0.0 {
        (Sign::Minus, -offset)
    } else {
        (Sign::Plus, offset)
    }
}

fn to_count(what: &str, m: f64) -> Result<usize> {
    if m >= 0.0 && m.is_finite() && m < 1e12 {
        Ok(m.ceil() as usize)
    } else {
        Err(invalid(format!("{what} must be a finite non-negative number, got {m}")))
    }
}

#[derive(Debug, Clone)]
enum Targets {
    Fixed(TargetLayout),
    Uniform(usize),
    Poisson(f64),
}

#[derive(Debug, Clone, Copy)]
enum Goal {
    Full,
    Partial(f64),
}

impl Goal {
    fn met(self, correct: usize, n: usize) -> bool {
        match self {
            Goal::Full => correct == n,
            Goal::Partial(alpha) => correct as f64 >= alpha * n as f64 - 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
enum Plan {
    Separability {
        targets: Targets,
        radius: f64,
        sensors: usize,
        goal: Goal,
    },
    Adversarial {
        layout: TargetLayout,
        radius: f64,
        intensity: f64,
        model: AdversaryModel,
        occupancy: f64,
        goal: Goal,
    },
    MinSpacing {
        n: usize,
        d: f64,
    },
    Coupon {
        n: usize,
        m: usize,
    },
}

/// A sampled target layout and sensor field.
#[derive(Debug, Clone)]
pub struct Instance<'a> {
    pub layout: Cow<'a, TargetLayout>,
    pub field: SensorField,
}

/// Everything observed in one adversarial trial.
#[derive(Debug, Clone)]
pub struct AdversarialOutcome {
    pub config: TargetConfiguration,
    pub verdicts: MajorityVerdicts,
    pub margins: Vec<i64>,
}

impl AdversarialOutcome {
    pub fn correct(&self) -> Vec<bool> {
        self.verdicts
            .verdicts
            .iter()
            .zip(self.config.occupied())
            .map(|(v, &occ)| v.is_correct(occ))
            .collect()
    }
}

/// A spec with every preset resolved and validated.
#[derive(Debug, Clone)]
pub struct Experiment {
    spec: ExperimentSpec,
    region: Region,
    plan: Plan,
}

impl Experiment {
    pub fn new(spec: &ExperimentSpec) -> Result<Self> {
        let region = Region::new(spec.dimension, spec.boundary);
        let plan = match spec.scenario {
            Scenario::GridFull | Scenario::GridPartial | Scenario::RandomFull | Scenario::RandomPartial => {
                resolve_separability(spec, region)?
            }
            Scenario::AdversarialFull | Scenario::AdversarialPartial => resolve_adversarial(spec, region)?,
            Scenario::MinSpacing => {
                if spec.dimension != Dimension::One {
                    return Err(invalid("min-spacing is defined in one dimension only"));
                }
                let nf = spec.n as f64;
                let d = spec.d.unwrap_or(1.0 / (nf * nf * nf.ln()));
                if !(d >= 0.0 && d.is_finite()) {
                    return Err(invalid(format!("spacing threshold d must be non-negative, got {d}")));
                }
                Plan::MinSpacing { n: spec.n as usize, d }
            }
            Scenario::Coupon => {
                if spec.n == 0 {
                    return Err(invalid("coupon scenario needs n >= 1"));
                }
                let nf = spec.n as f64;
                let m = match spec.sensors {
                    Some(m) => m,
                    None => nf * (nf.ln() + spec.c),
                };
                Plan::Coupon {
                    n: spec.n as usize,
                    m: to_count("draw count", m.max(0.0))?,
                }
            }
        };
        if spec.trials() == 0 {
            return Err(invalid("trials >= 1 required"));
        }
        Ok(Experiment {
            spec: spec.clone(),
            region,
            plan,
        })
    }

    pub fn spec(&self) -> &ExperimentSpec {
        &self.spec
    }

    pub fn region(&self) -> Region {
        self.region
    }

    /// Resolved sensing radius, if the scenario has one.
    pub fn radius(&self) -> Option<f64> {
        match &self.plan {
            Plan::Separability { radius, .. } | Plan::Adversarial { radius, .. } => Some(*radius),
            _ => None,
        }
    }

    /// Resolved sensor count, Poisson intensity or draw count.
    pub fn sensors(&self) -> Option<f64> {
        match &self.plan {
            Plan::Separability { sensors, .. } => Some(*sensors as f64),
            Plan::Adversarial { intensity, .. } => Some(*intensity),
            Plan::Coupon { m, .. } => Some(*m as f64),
            Plan::MinSpacing { .. } => None,
        }
    }

    /// Resolved spacing threshold of the min-spacing scenario.
    pub fn spacing_threshold(&self) -> Option<f64> {
        match self.plan {
            Plan::MinSpacing { d, .. } => Some(d),
            _ => None,
        }
    }

    /// Targets and sensors of trial `index` for the separability scenarios.
    pub fn instance(&self, index: u64) -> Result<Instance<'_>> {
        let Plan::Separability { targets, radius, sensors, .. } = &self.plan else {
            return Err(invalid(format!("{} has no sensor instance", self.spec.scenario)));
        };
        let mut rng = trial_rng(self.spec.master_seed, index);
        let layout = match targets {
            Targets::Fixed(l) => Cow::Borrowed(l),
            Targets::Uniform(n) => Cow::Owned(TargetLayout::uniform(*n, self.region, &mut rng)),
            Targets::Poisson(intensity) => Cow::Owned(TargetLayout::poisson(*intensity, self.region, &mut rng)?),
        };
        // Sensors are drawn one at a time, so the first m sensors of a trial
        // are shared by every larger m.
        let positions = sample_uniform_points_with(&mut rng, *sensors, self.region);
        Ok(Instance {
            layout,
            field: SensorField::new(positions, *radius)?,
        })
    }

    /// One adversarial trial with full detail.
    pub fn adversarial_trial(&self, index: u64) -> Result<AdversarialOutcome> {
        let Plan::Adversarial { layout, radius, intensity, model, occupancy, .. } = &self.plan else {
            return Err(invalid(format!("{} is not an adversarial scenario", self.spec.scenario)));
        };
        let mut rng = trial_rng(self.spec.master_seed, index);
        let field = deploy_adversarial_field_with(&mut rng, *intensity, self.region, *radius, model)?;
        let config = TargetConfiguration::random(layout.n(), *occupancy, &mut rng);
        let cmap = coverage_map(layout, &field);
        let truth = cmap.readings(config.occupied())?;
        let reports = apply_policy(&mut rng, &truth, field.adversary(), model.policy);
        Ok(AdversarialOutcome {
            verdicts: majority_decode(&reports, &cmap)?,
            margins: margins(&cmap, &field)?,
            config,
        })
    }

    /// Identifiability report of trial `index` for the separability scenarios.
    pub fn report(&self, index: u64) -> Result<SeparabilityReport> {
        let inst = self.instance(index)?;
        Ok(SeparabilityReport::from_coverage(&coverage_map(&inst.layout, &inst.field)))
    }

    pub fn run_trial(&self, index: u64) -> Result<bool> {
        match &self.plan {
            Plan::Separability { goal, .. } => {
                let report = self.report(index)?;
                Ok(match goal {
                    Goal::Full => report.fully_separable,
                    _ => goal.met(report.num_identifiable, report.n()),
                })
            }
            Plan::Adversarial { goal, .. } => {
                let outcome = self.adversarial_trial(index)?;
                let correct = outcome.correct().into_iter().filter(|&b| b).count();
                Ok(goal.met(correct, outcome.config.len()))
            }
            Plan::MinSpacing { n, d } => {
                let mut rng = trial_rng(self.spec.master_seed, index);
                let mut xs: Vec<f64> = (0..*n).map(|_| rng.random::<f64>()).collect();
                xs.sort_by(f64::total_cmp);
                let v = spacings_of(&xs)?;
                Ok(v.iter().skip(1).all(|&s| s > *d))
            }
            Plan::Coupon { n, m } => Ok(coupon_trial(&mut trial_rng(self.spec.master_seed, index), *n, *m)),
        }
    }

    /// Success count over `trials` trials, on the current rayon pool.
    pub fn count_successes(&self) -> Result<u64> {
        (0..self.spec.trials())
            .into_par_iter()
            .map(|k| self.run_trial(k).map(u64::from))
            .try_reduce(|| 0, |a, b| Ok(a + b))
    }
}

fn coupon_trial(rng: &mut TrialRng, n: usize, m: usize) -> bool {
    let mut seen = vec![false; n];
    let mut missing = n;
    for _ in 0..m {
        let k = rng.random_range(0..n);
        if !seen[k] {
            seen[k] = true;
            missing -= 1;
            if missing == 0 {
                return true;
            }
        }
    }
    missing == 0
}

fn resolve_separability(spec: &ExperimentSpec, region: Region) -> Result<Plan> {
    let n = spec.n;
    if n == 0 {
        return Err(invalid("n >= 1 required"));
    }
    let two_d = spec.dimension == Dimension::Two;
    let grid_like = matches!(spec.scenario, Scenario::GridFull | Scenario::GridPartial);
    let (sign, c) = signed(spec.c);

    let radius = match spec.radius {
        Some(r) => r,
        None => match (spec.scenario, two_d) {
            (Scenario::GridFull | Scenario::GridPartial, false) => {
                spec.grid_params().validate()?;
                scaling::grid_radius(n, spec.a(), spec.radius_form)
            }
            (Scenario::GridFull | Scenario::GridPartial, true) => scaling::grid_radius_2d(n),
            (Scenario::RandomFull, false) => scaling::random_full_r(n, spec.c_n())?,
            (Scenario::RandomFull, true) => scaling::random_full_r_2d(n, spec.c_n())?,
            (_, false) => {
                let theta = spec.theta.unwrap_or(spec.theta1);
                theta * spec.random_params().c1() / (2.0 * n as f64)
            }
            (_, true) => scaling::random_partial_r_2d_sufficient(n, spec.alpha1, spec.beta, spec.a())?,
        },
    };

    let sensors = match spec.sensors {
        Some(m) => m,
        None => match (spec.scenario, two_d) {
            (Scenario::GridFull, false) => scaling::grid_full_m(&spec.grid_params(), sign)?,
            (Scenario::GridFull, true) => scaling::grid_full_m_2d(n, c, sign)?,
            (Scenario::GridPartial, false) => scaling::grid_partial_m_sufficient(&spec.grid_params())?,
            (Scenario::GridPartial, true) => scaling::grid_partial_m_2d_sufficient(n, spec.alpha, spec.beta)?,
            (Scenario::RandomFull, false) => {
                let (s, f) = signed(spec.f);
                scaling::random_full_m(n, spec.c_n(), f, s)?
            }
            (Scenario::RandomFull, true) => {
                let (s, g) = signed(spec.g);
                scaling::random_full_m_2d(n, spec.c_n(), g, s)?
            }
            (_, false) => scaling::random_partial_m_sufficient(&spec.random_params())?,
            (_, true) => scaling::random_partial_m_2d_sufficient(&spec.random_params())?,
        },
    };

    let default_model = if grid_like { TargetModel::Grid } else { TargetModel::Uniform };
    let targets = match spec.target_model.unwrap_or(default_model) {
        TargetModel::Grid => Targets::Fixed(TargetLayout::grid(n as usize, region)?),
        TargetModel::Uniform => Targets::Uniform(n as usize),
        TargetModel::Poisson => Targets::Poisson(n as f64),
        TargetModel::Explicit => return Err(invalid("explicit targets are not available in experiments")),
    };
    Ok(Plan::Separability {
        targets,
        radius: check_radius(radius)?,
        sensors: to_count("sensor count", sensors)?,
        goal: goal_of(spec)?,
    })
}

fn resolve_adversarial(spec: &ExperimentSpec, region: Region) -> Result<Plan> {
    let n = spec.n;
    if n == 0 {
        return Err(invalid("n >= 1 required"));
    }
    let model = AdversaryModel::new(spec.gamma, spec.policy)?;
    let radius = match spec.radius {
        Some(r) => r,
        None if spec.dimension == Dimension::Two => scaling::grid_radius_2d(n),
        None => 0.5 / n as f64,
    };
    let intensity = match spec.sensors {
        Some(m) => m,
        None if spec.scenario == Scenario::AdversarialFull => adversarial_full_m(n, spec.gamma, spec.eps)?,
        None => adversarial_partial_m(n, spec.gamma, spec.eps, spec.alpha, spec.beta)?,
    };
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(invalid(format!("sensor intensity must be positive, got {intensity}")));
    }
    if !(0.0..=1.0).contains(&spec.occupancy) {
        return Err(invalid(format!("occupancy must lie in [0, 1], got {}", spec.occupancy)));
    }
    let layout = match spec.target_model.unwrap_or(TargetModel::Grid) {
        TargetModel::Grid => TargetLayout::grid(n as usize, region)?,
        other => {
            return Err(invalid(format!(
                "adversarial scenarios use grid targets, got {other:?}"
            )))
        }
    };
    Ok(Plan::Adversarial {
        layout,
        radius: check_radius(radius)?,
        intensity,
        model,
        occupancy: spec.occupancy,
        goal: goal_of(spec)?,
    })
}

fn check_radius(r: f64) -> Result<f64> {
    if r > 0.0 && r.is_finite() {
        Ok(r)
    } else {
        Err(invalid(format!("sensing radius must be positive, got {r}")))
    }
}

fn goal_of(spec: &ExperimentSpec) -> Result<Goal> {
    if !spec.scenario.is_partial() {
        return Ok(Goal::Full);
    }
    if spec.alpha > 0.0 && spec.alpha < 1.0 {
        Ok(Goal::Partial(spec.alpha))
    } else {
        Err(invalid(format!("0 < α < 1 required, got {}", spec.alpha)))
    }
}

/// Aggregated outcome of one batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    /// `name=value` of the swept parameter.
    pub param: String,
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub wall_time_ms: u64,
}

impl EstimateRow {
    pub fn new(param: impl Into<String>, successes: u64, trials: u64, wall_time_ms: u64) -> Result<Self> {
        if trials == 0 || successes > trials {
            return Err(invalid(format!("{successes} successes out of {trials} trials")));
        }
        let (ci_low, ci_high) = wilson_interval(successes, trials, Z95)?;
        Ok(EstimateRow {
            param: param.into(),
            successes,
            trials,
            estimate: successes as f64 / trials as f64,
            ci_low,
            ci_high,
            wall_time_ms,
        })
    }
}

/// Wilson score interval for a binomial proportion, clamped so that it
/// contains the point estimate and stays within `[0, 1]`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return Err(invalid(format!("{successes} successes out of {trials} trials")));
    }
    let t = trials as f64;
    let p = successes as f64 / t;
    let z2 = z * z;
    let denom = 1.0 + z2 / t;
    let center = (p + z2 / (2.0 * t)) / denom;
    let half = z / denom * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).clamp(0.0, p) };
    let hi = if successes == trials { 1.0 } else { (center + half).clamp(p, 1.0) };
    Ok((lo, hi))
}

/// Deterministic outcome of trial `index`.
pub fn run_trial(spec: &ExperimentSpec, index: u64) -> Result<bool> {
    Experiment::new(spec)?.run_trial(index)
}

/// Estimate using rayon's global pool.
pub fn estimate(spec: &ExperimentSpec) -> Result<EstimateRow> {
    estimate_with_threads(spec, None)
}

/// Estimate with at most `threads` worker threads; `None` uses rayon's
/// default pool. The result does not depend on the thread count.
pub fn estimate_with_threads(spec: &ExperimentSpec, threads: Option<usize>) -> Result<EstimateRow> {
    let label = format!("n={}", spec.n);
    estimate_labeled(spec, label, threads)
}

fn estimate_labeled(spec: &ExperimentSpec, param: String, threads: Option<usize>) -> Result<EstimateRow> {
    let experiment = Experiment::new(spec)?;
    let start = Instant::now();
    let successes = match threads {
        None => experiment.count_successes()?,
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| invalid(format!("cannot build thread pool: {e}")))?
            .install(|| experiment.count_successes())?,
    };
    let elapsed = start.elapsed().as_millis() as u64;
    EstimateRow::new(param, successes, spec.trials(), elapsed)
}

/// One row per value of `axis`. Every row reuses the spec's master seed.
pub fn sweep(spec: &ExperimentSpec, axis: &str, values: &[f64]) -> Result<Vec<EstimateRow>> {
    sweep_with_threads(spec, axis, values, None)
}

pub fn sweep_with_threads(
    spec: &ExperimentSpec,
    axis: &str,
    values: &[f64],
    threads: Option<usize>,
) -> Result<Vec<EstimateRow>> {
    // Reject a bad axis even when there is nothing to sweep.
    spec.clone().set_axis(axis, 0.0).or_else(|e| match e {
        crate::Error::InvalidArgument(ref msg) if msg.starts_with("unknown") => Err(e),
        _ => Ok(()),
    })?;
    values
        .iter()
        .map(|&v| {
            let mut point = spec.clone();
            point.set_axis(axis, v)?;
            estimate_labeled(&point, format!("{axis}={v}"), threads)
        })
        .collect()
}

/// A labelled reference value on a sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub label: String,
    pub value: f64,
}

/// Closed-form thresholds to overlay on a sweep of `axis`. Thresholds whose
/// parameters fall outside their domain are skipped.
pub fn threshold_markers(spec: &ExperimentSpec, axis: &str) -> Vec<Marker> {
    let n = spec.n;
    let two_d = spec.dimension == Dimension::Two;
    let mut out: Vec<(String, Result<f64>)> = Vec::new();
    let sensor_axis = matches!(axis, "m" | "lambda");
    if sensor_axis {
        match spec.scenario {
            Scenario::GridFull if two_d => out.push(("m*".into(), scaling::grid_full_m_2d(n, 0.0, Sign::Plus))),
            Scenario::GridFull => {
                let p = GridParams { c: 0.0, ..spec.grid_params() };
                out.push(("m*".into(), scaling::grid_full_m(&p, Sign::Plus)));
            }
            Scenario::GridPartial if two_d => {
                out.push(("sufficient".into(), scaling::grid_partial_m_2d_sufficient(n, spec.alpha, spec.beta)));
                out.push(("necessary".into(), scaling::grid_partial_m_2d_necessary(n, spec.alpha, spec.beta)));
            }
            Scenario::GridPartial => {
                out.push(("sufficient".into(), scaling::grid_partial_m_sufficient(&spec.grid_params())));
                out.push(("necessary".into(), scaling::grid_partial_m_necessary(&spec.grid_params())));
            }
            Scenario::RandomFull if two_d => {
                out.push(("m*".into(), scaling::random_full_m_2d(n, spec.c_n(), 0.0, Sign::Plus)))
            }
            Scenario::RandomFull => out.push(("m*".into(), scaling::random_full_m(n, spec.c_n(), 0.0, Sign::Plus))),
            Scenario::RandomPartial if two_d => {
                out.push(("sufficient".into(), scaling::random_partial_m_2d_sufficient(&spec.random_params())));
                out.push(("necessary".into(), scaling::random_partial_m_2d_necessary(&spec.random_params())));
            }
            Scenario::RandomPartial => {
                out.push(("sufficient".into(), scaling::random_partial_m_sufficient(&spec.random_params())));
                out.push(("necessary".into(), scaling::random_partial_m_necessary(&spec.random_params())));
            }
            Scenario::AdversarialFull => out.push(("m*".into(), adversarial_full_m(n, spec.gamma, spec.eps))),
            Scenario::AdversarialPartial => out.push((
                "m*".into(),
                adversarial_partial_m(n, spec.gamma, spec.eps, spec.alpha, spec.beta),
            )),
            Scenario::Coupon => {
                let nf = n as f64;
                out.push(("n ln n".into(), Ok(nf * nf.ln())));
            }
            Scenario::MinSpacing => {}
        }
    } else if axis == "d" && spec.scenario == Scenario::MinSpacing {
        let nf = n as f64;
        out.push(("1/(n² ln n)".into(), Ok(1.0 / (nf * nf * nf.ln()))));
    } else if axis == "c" && !spec.scenario.is_adversarial() {
        out.push(("c = 0".into(), Ok(0.0)));
    }
    out.into_iter()
        .filter_map(|(label, v)| {
            let v = v.ok()?;
            let value = if axis == "lambda" { v / n as f64 } else { v };
            value.is_finite().then_some(Marker { label, value })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::{coupon_all_collected_prob, min_spacing_prob};
    use crate::Error;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec(scenario: Scenario, n: u64) -> ExperimentSpec {
        ExperimentSpec { master_seed: 2024, ..ExperimentSpec::new(scenario, n) }
    }

    #[test]
    fn trivial_trials() {
        let no_sensors = ExperimentSpec { sensors: Some(0.0), ..spec(Scenario::GridFull, 2) };
        assert!(!run_trial(&no_sensors, 0).unwrap());

        let one = ExperimentSpec { sensors: Some(1.0), radius: Some(0.5), ..spec(Scenario::GridFull, 1) };
        assert!(run_trial(&one, 0).unwrap());
        let row = estimate(&ExperimentSpec { trials: Some(50), ..one }).unwrap();
        assert_eq!((row.successes, row.estimate, row.ci_high), (50, 1.0, 1.0));
    }

    #[test]
    fn trials_are_repeatable() {
        for sc in Scenario::ALL {
            let s = ExperimentSpec { trials: Some(20), ..spec(sc, 36) };
            let exp = Experiment::new(&s).unwrap();
            for k in 0..20 {
                assert_eq!(exp.run_trial(k).unwrap(), exp.run_trial(k).unwrap(), "{sc}");
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_counts() {
        for sc in [Scenario::GridFull, Scenario::RandomPartial, Scenario::AdversarialFull, Scenario::Coupon] {
            let s = ExperimentSpec { trials: Some(64), ..spec(sc, 50) };
            let a = estimate_with_threads(&s, Some(1)).unwrap();
            let b = estimate_with_threads(&s, Some(4)).unwrap();
            assert_eq!((a.successes, a.ci_low, a.ci_high), (b.successes, b.ci_low, b.ci_high), "{sc}");
        }
    }

    #[test]
    fn presets_resolve_to_thresholds() {
        let e = Experiment::new(&ExperimentSpec { c: 5.0, ..spec(Scenario::GridFull, 500) }).unwrap();
        assert_eq!(e.sensors(), Some(5608.0));
        assert_relative_eq!(e.radius().unwrap(), 0.001);

        let e = Experiment::new(&ExperimentSpec { c: -2.0, ..spec(Scenario::GridFull, 500) }).unwrap();
        assert_eq!(e.sensors(), Some(2108.0));

        let e = Experiment::new(&ExperimentSpec {
            dimension: Dimension::Two,
            c: 4.0,
            ..spec(Scenario::GridFull, 400)
        })
        .unwrap();
        assert_eq!(e.sensors(), Some(5212.0));
        assert_relative_eq!(e.radius().unwrap(), 0.025);

        let e = Experiment::new(&spec(Scenario::AdversarialFull, 300)).unwrap();
        assert_relative_eq!(e.sensors().unwrap(), 12_833.510_567_976_452, epsilon = 1e-7);
        assert_relative_eq!(e.radius().unwrap(), 1.0 / 600.0);

        let e = Experiment::new(&spec(Scenario::MinSpacing, 100)).unwrap();
        assert_relative_eq!(e.spacing_threshold().unwrap(), 1.0 / (1e4 * 100f64.ln()));
    }

    #[test]
    fn domain_errors_propagate() {
        let bad = ExperimentSpec { a: Some(1.2), ..spec(Scenario::RandomPartial, 1000) };
        assert!(matches!(Experiment::new(&bad), Err(Error::OutsideDomain { .. })));
        let bad_gamma = ExperimentSpec { gamma: 0.6, ..spec(Scenario::AdversarialFull, 10) };
        assert!(Experiment::new(&bad_gamma).unwrap_err().to_string().contains("0 < γ < 0.5"));
        assert!(Experiment::new(&ExperimentSpec { trials: Some(0), ..spec(Scenario::Coupon, 5) }).is_err());
        assert!(Experiment::new(&ExperimentSpec { dimension: Dimension::Two, ..spec(Scenario::MinSpacing, 5) })
            .is_err());
    }

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0, 10, Z95).unwrap();
        assert_eq!(lo, 0.0);
        assert_relative_eq!(hi, 0.277_532_799_862_889_2, epsilon = 1e-12);
        let (lo, hi) = wilson_interval(5, 10, Z95).unwrap();
        assert_relative_eq!(lo, 0.236_593_090_512_564, epsilon = 1e-12);
        assert_relative_eq!(hi, 0.763_406_909_487_436_1, epsilon = 1e-12);
        assert!(wilson_interval(3, 0, Z95).is_err());
    }

    #[test]
    fn closed_form_agreement() {
        let ms = spec(Scenario::MinSpacing, 100);
        let row = estimate(&ms).unwrap();
        let truth = min_spacing_prob(100, Experiment::new(&ms).unwrap().spacing_threshold().unwrap());
        assert!(row.ci_low <= truth && truth <= row.ci_high, "{row:?} vs {truth}");

        let cp = ExperimentSpec { c: 5.0, ..spec(Scenario::Coupon, 500) };
        let row = estimate(&cp).unwrap();
        let truth = coupon_all_collected_prob(500, 5608);
        assert!(row.ci_low <= truth && truth <= row.ci_high, "{row:?} vs {truth}");
    }

    /// Repeated meta-runs: the 95% interval covers the exact value in at
    /// least 90% of them.
    #[test]
    fn interval_coverage_of_closed_forms() {
        let runs = 200u64;
        let mut covered = 0;
        for (k, (sc, n, tweak)) in [
            (Scenario::MinSpacing, 20u64, ("d", 0.002)),
            (Scenario::Coupon, 10, ("m", 30.0)),
        ]
        .into_iter()
        .enumerate()
        {
            let mut base = ExperimentSpec { trials: Some(200), ..spec(sc, n) };
            base.set_axis(tweak.0, tweak.1).unwrap();
            let truth = match sc {
                Scenario::MinSpacing => min_spacing_prob(n, 0.002),
                _ => coupon_all_collected_prob(n, 30),
            };
            for r in 0..runs {
                let s = ExperimentSpec { master_seed: 1000 * k as u64 + r, ..base.clone() };
                let row = estimate(&s).unwrap();
                covered += u64::from(row.ci_low <= truth && truth <= row.ci_high);
            }
        }
        assert!(covered as f64 >= 0.9 * (2 * runs) as f64, "{covered}");
    }

    #[test]
    fn grid_full_sweep_rises_with_m() {
        let n = 500.0f64;
        let values = [-5.0, 0.0, 5.0].map(|c| (n * (n.ln() + c)).ceil());
        let rows = sweep(&ExperimentSpec { trials: Some(100), ..spec(Scenario::GridFull, 500) }, "m", &values).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].param, format!("m={}", values[0]));
        for w in rows.windows(2) {
            assert!(w[0].estimate <= w[1].estimate, "{rows:?}");
        }
        assert!(rows[0].estimate < 0.05 && rows[2].estimate > 0.9);
    }

    #[test]
    fn adversarial_sweep_falls_with_gamma() {
        let base = ExperimentSpec { trials: Some(200), sensors: Some(12.0 * 100.0), ..spec(Scenario::AdversarialFull, 100) };
        let rows = sweep(&base, "gamma", &[0.1, 0.2, 0.3, 0.4]).unwrap();
        for w in rows.windows(2) {
            let slack = (w[0].ci_high - w[0].ci_low) + (w[1].ci_high - w[1].ci_low);
            assert!(w[1].estimate <= w[0].estimate + slack, "{rows:?}");
        }
        assert!(rows[0].estimate > rows[3].estimate);
    }

    #[test]
    fn sweep_edge_cases() {
        let s = spec(Scenario::Coupon, 10);
        assert!(sweep(&s, "m", &[]).unwrap().is_empty());
        assert!(matches!(sweep(&s, "bogus", &[1.0]), Err(Error::InvalidArgument(_))));
        assert!(matches!(sweep(&s, "bogus", &[]), Err(Error::InvalidArgument(_))));
        assert!(sweep(&s, "n", &[2.5]).is_err());
    }

    #[test]
    fn markers_for_sensor_axis() {
        let m = threshold_markers(&spec(Scenario::GridFull, 500), "m");
        assert_eq!(m.len(), 1);
        assert_relative_eq!(m[0].value, 500.0 * 500f64.ln());
        let adv = threshold_markers(&spec(Scenario::AdversarialFull, 300), "lambda");
        assert_relative_eq!(adv[0].value, 12_833.510_567_976_452 / 300.0, epsilon = 1e-9);
        assert!(threshold_markers(&spec(Scenario::GridFull, 500), "occupancy").is_empty());
    }

    #[test]
    fn sensor_prefix_property() {
        let small = Experiment::new(&ExperimentSpec { sensors: Some(30.0), ..spec(Scenario::RandomFull, 20) }).unwrap();
        let big = Experiment::new(&ExperimentSpec { sensors: Some(60.0), ..spec(Scenario::RandomFull, 20) }).unwrap();
        for k in 0..10 {
            let a = small.instance(k).unwrap();
            let b = big.instance(k).unwrap();
            assert_eq!(a.layout.positions(), b.layout.positions());
            for p in a.field.positions() {
                assert!(b.field.positions().contains(p));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn wilson_contains_estimate(trials in 1u64..5000, frac in 0.0f64..=1.0) {
            let s = (frac * trials as f64).floor() as u64;
            let row = EstimateRow::new("x=1", s, trials, 0).unwrap();
            prop_assert!(0.0 <= row.ci_low && row.ci_low <= row.estimate);
            prop_assert!(row.estimate <= row.ci_high && row.ci_high <= 1.0);
        }
    }
}
