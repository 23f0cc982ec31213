//! Closed-form thresholds and probability bounds.
//!
//! All logarithms are natural. Sequences that diverge in the asymptotic
//! statements (`c_n`, `f_n`, `g_n`) are passed in as finite numbers. Sensor
//! counts are returned as reals; take the ceiling when an integer is needed.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};

/// Which side of a `± c` threshold to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn apply(self, base: f64, offset: f64) -> f64 {
        match self {
            Sign::Plus => base + offset,
            Sign::Minus => base - offset,
        }
    }
}

fn check_open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("0 < {name} < 1 required, got {v}")))
    }
}

fn check_non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} >= 0 required, got {v}")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} > 0 required, got {v}")))
    }
}

/// Bounds `exp(-m θ / (1 - θ)) < (1 - θ)^m < exp(-m θ)`.
pub fn exp_bounds(theta: f64, m: u64) -> Result<(f64, f64)> {
    check_open_unit("θ", theta)?;
    let m = m as f64;
    Ok(((-m * theta / (1.0 - theta)).exp(), (-m * theta).exp()))
}

/// `P(V_{n_1} > v_1, ..., V_{n_k} > v_k) = (1 - Σ v)^n` for any `k <= n` of the
/// `n` uniform spacings; zero once the sum exceeds 1.
pub fn spacing_tail(v: &[f64], n: u64) -> Result<f64> {
    if let Some(bad) = v.iter().find(|x| !(**x >= 0.0)) {
        return Err(invalid(format!("spacing thresholds must be non-negative, got {bad}")));
    }
    if v.len() as u64 > n {
        return Err(invalid(format!("{} spacings requested but only {n} exist", v.len())));
    }
    let total: f64 = v.iter().sum();
    if total > 1.0 {
        return Ok(0.0);
    }
    Ok(pow_u64(1.0 - total, n))
}

fn pow_u64(base: f64, exp: u64) -> f64 {
    if exp <= i32::MAX as u64 {
        base.powi(exp as i32)
    } else {
        base.powf(exp as f64)
    }
}

/// Probability that every one of the `n - 1` interior spacings of `n`
/// uniform points exceeds `d`: `(1 - (n - 1) d)^n`.
pub fn min_spacing_prob(n: u64, d: f64) -> f64 {
    if n < 2 || d <= 0.0 {
        return 1.0;
    }
    let span = (n - 1) as f64 * d;
    if span >= 1.0 {
        return 0.0;
    }
    pow_u64(1.0 - span, n)
}

/// Bounds on `P(S_n > α n)` for a sum of `n` i.i.d. Bernoulli(`p`) variables,
/// valid for every `n`: `(p - α) / (1 - α)` below, `p / α` above, both
/// clamped to `[0, 1]`.
pub fn bernoulli_partial_bounds(p: f64, alpha: f64) -> (f64, f64) {
    let lower = ((p - alpha) / (1.0 - alpha)).clamp(0.0, 1.0);
    let upper = (p / alpha).clamp(0.0, 1.0);
    (lower, upper)
}

/// Exact probability that `m` uniform draws from `n` coupons hit every coupon.
pub fn coupon_all_collected_prob(n: u64, m: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    coupon_all_collected_prob_cells(n, m, 1.0 / n as f64)
        .expect("cell mass 1/n is always admissible")
}

/// Limit of [`coupon_all_collected_prob`] when `m = n (ln n + c)`.
pub fn coupon_asymptotic(c: f64) -> f64 {
    (-(-c).exp()).exp()
}

/// Probability that each of `n` disjoint cells of mass `p` receives at least
/// one of `m` uniform draws. The remaining mass `1 - n p` hits no cell.
///
/// Evaluated by inclusion-exclusion
/// `Σ_k (-1)^k C(n, k) (1 - k p)^m` with log-domain terms and Neumaier
/// summation. When cancellation makes that sum unreliable the occupancy
/// recursion over the number of hit cells is used instead.
pub fn coupon_all_collected_prob_cells(n: u64, m: u64, p: f64) -> Result<f64> {
    if !(p > 0.0) || n as f64 * p > 1.0 + 1e-12 {
        return Err(invalid(format!("cell mass must satisfy 0 < p <= 1/n, got p = {p} for n = {n}")));
    }
    if n == 0 {
        return Ok(1.0);
    }
    if m < n {
        return Ok(0.0);
    }
    let (sum, abs_sum) = inclusion_exclusion(n, m, p);
    if abs_sum * f64::EPSILON * 8.0 <= 1e-12 {
        Ok(sum.clamp(0.0, 1.0))
    } else {
        Ok(occupancy_recursion(n, m, p))
    }
}

fn inclusion_exclusion(n: u64, m: u64, p: f64) -> (f64, f64) {
    let mut ln_fact = Vec::with_capacity(n as usize + 1);
    ln_fact.push(0.0f64);
    let mut acc = 0.0f64;
    for i in 1..=n {
        acc += (i as f64).ln();
        ln_fact.push(acc);
    }
    let mf = m as f64;
    let (mut sum, mut comp, mut abs_sum) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..=n {
        let rest = 1.0 - k as f64 * p;
        if rest <= 0.0 {
            break;
        }
        let ln_binom = ln_fact[n as usize] - ln_fact[k as usize] - ln_fact[(n - k) as usize];
        let mag = (ln_binom + mf * (-(k as f64) * p).ln_1p()).exp();
        let term = if k % 2 == 0 { mag } else { -mag };
        abs_sum += mag;
        // Neumaier compensated summation.
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    (sum + comp, abs_sum)
}

/// Markov chain on the number of distinct cells hit so far.
fn occupancy_recursion(n: u64, m: u64, p: f64) -> f64 {
    let n = n as usize;
    let miss = (1.0 - n as f64 * p).max(0.0);
    let mut prob = vec![0.0f64; n + 1];
    prob[0] = 1.0;
    for step in 0..m {
        let reach = (step as usize + 1).min(n);
        for j in (1..=reach).rev() {
            let stay = j as f64 * p + miss;
            let advance = (n - j + 1) as f64 * p;
            prob[j] = prob[j] * stay + prob[j - 1] * advance;
        }
        prob[0] *= miss;
    }
    prob[n].clamp(0.0, 1.0)
}

/// Parameters for the targets-on-grid thresholds. The radius is `a / 2n` or
/// `(2 - a) / 2n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    pub n: u64,
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
}

impl GridParams {
    pub fn new(n: u64, a: f64) -> Self {
        GridParams {
            n,
            a,
            alpha: 0.5,
            beta: 0.5,
            c: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n >= 1 required"));
        }
        if !(self.a > 0.0 && self.a <= 1.0) {
            return Err(invalid(format!("0 < a <= 1 required, got {}", self.a)));
        }
        check_open_unit("α", self.alpha)?;
        check_open_unit("β", self.beta)?;
        if !self.c.is_finite() {
            return Err(invalid("c must be finite"));
        }
        Ok(())
    }

    fn cells(&self) -> f64 {
        self.n as f64 / self.a
    }
}

/// Narrow `a / 2n` or wide `(2 - a) / 2n` grid radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridRadiusForm {
    #[default]
    Narrow,
    Wide,
}

pub fn grid_radius(n: u64, a: f64, form: GridRadiusForm) -> f64 {
    let two_n = 2.0 * n as f64;
    match form {
        GridRadiusForm::Narrow => a / two_n,
        GridRadiusForm::Wide => (2.0 - a) / two_n,
    }
}

/// Full separability on the grid: `(n/a)(ln(n/a) ± c)`.
pub fn grid_full_m(params: &GridParams, sign: Sign) -> Result<f64> {
    params.validate()?;
    let cells = params.cells();
    Ok(cells * sign.apply(cells.ln(), params.c))
}

/// `(n/a) ln(1 / ((1 - α)(1 - β)))` sensors guarantee `α n` identifiable
/// targets with probability above `β`.
pub fn grid_partial_m_sufficient(params: &GridParams) -> Result<f64> {
    params.validate()?;
    Ok(params.cells() * (1.0 / ((1.0 - params.alpha) * (1.0 - params.beta))).ln())
}

/// Below `(n/a - 1) ln(1 / (1 - α β))` sensors the partial goal fails.
pub fn grid_partial_m_necessary(params: &GridParams) -> Result<f64> {
    params.validate()?;
    Ok((params.cells() - 1.0) * (1.0 / (1.0 - params.alpha * params.beta)).ln())
}

/// Radius `1 / (c_n n^2)` needed for full separability of random targets.
pub fn random_full_r(n: u64, c_n: f64) -> Result<f64> {
    check_positive("c_n", c_n)?;
    let n = n as f64;
    Ok(1.0 / (c_n * n * n))
}

/// `(n^2 c_n / 2)(2 ln n + ln(c_n / 2) ± f_n)`, which equals
/// `(1/2r)(ln(1/2r) ± f_n)` at `r = 1/(c_n n^2)`.
pub fn random_full_m(n: u64, c_n: f64, f_n: f64, sign: Sign) -> Result<f64> {
    check_positive("c_n", c_n)?;
    check_non_negative("f_n", f_n)?;
    let nf = n as f64;
    let base = 2.0 * nf.ln() + (c_n / 2.0).ln();
    Ok(nf * nf * c_n / 2.0 * sign.apply(base, f_n))
}

fn c_level(x: f64, y: f64) -> f64 {
    (1.0 / (1.0 - (1.0 - x) * (1.0 - y))).ln()
}

/// `0.5 / (n / c1 + 1)`: at or below this radius at least `α1 n` targets are
/// farther than `r` from both neighbours with probability at least `β`.
pub fn random_partial_r_sufficient(n: u64, alpha1: f64, beta: f64) -> Result<f64> {
    check_open_unit("α1", alpha1)?;
    check_open_unit("β", beta)?;
    let c1 = c_level(alpha1, beta);
    Ok(0.5 / (n as f64 / c1 + 1.0))
}

/// `ln(1 / (α1 β)) / 2n`: above this radius the isolation goal fails.
pub fn random_partial_r_necessary(n: u64, alpha1: f64, beta: f64) -> Result<f64> {
    check_open_unit("α1", alpha1)?;
    check_open_unit("β", beta)?;
    Ok((1.0 / (alpha1 * beta)).ln() / (2.0 * n as f64))
}

/// Parameters for partial separability of random targets.
///
/// The radius is confined to `θ1 c1 / 2n <= r <= θ2 c1 / 2n`, and `a > 1`
/// scales the isolation distance `a r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomParams {
    pub n: u64,
    pub alpha: f64,
    pub beta: f64,
    pub alpha1: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub a: f64,
}

impl RandomParams {
    /// `ln(1 / (1 - (1 - α1)(1 - β)))`
    pub fn c1(&self) -> f64 {
        c_level(self.alpha1, self.beta)
    }

    /// `ln(1 / (1 - (1 - α)(1 - β)))`
    pub fn c2(&self) -> f64 {
        c_level(self.alpha, self.beta)
    }

    /// `ln(1 / (α β))`
    pub fn c3(&self) -> f64 {
        (1.0 / (self.alpha * self.beta)).ln()
    }

    /// Checks everything except the constraint on `a`, which differs
    /// between one and two dimensions.
    fn validate_common(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n >= 1 required"));
        }
        check_open_unit("α", self.alpha)?;
        check_open_unit("β", self.beta)?;
        check_open_unit("α1", self.alpha1)?;
        if self.alpha >= self.alpha1 {
            return Err(domain(format!(
                "α < α1 required, got α = {}, α1 = {}",
                self.alpha, self.alpha1
            )));
        }
        let cap = 1.0 / (1.0 + self.c1() / self.n as f64);
        if !(self.theta1 > 0.0 && self.theta1 <= self.theta2 && self.theta2 < cap) {
            return Err(domain(format!(
                "0 < θ1 <= θ2 < 1/(1 + c1/n) = {cap} required, got θ1 = {}, θ2 = {}",
                self.theta1, self.theta2
            )));
        }
        Ok(())
    }

    fn validate_1d(&self) -> Result<()> {
        self.validate_common()?;
        let floor = 1f64.max(self.c2() / (2.0 * self.theta1 * self.c1()));
        if !(self.a > floor && self.a.is_finite()) {
            return Err(domain(format!(
                "a > max(1, c2/(2·θ1·c1)) = {floor} required, got a = {}",
                self.a
            )));
        }
        Ok(())
    }

    fn validate_2d(&self) -> Result<()> {
        self.validate_common()?;
        let floor = 1f64.max(self.c2() / (2.0 * self.theta1 * self.c1()));
        if !(self.a > 0.0 && self.a * self.a > floor && self.a.is_finite()) {
            return Err(domain(format!(
                "a² > max(1, c2/(2·θ1·c1)) = {floor} required, got a = {}",
                self.a
            )));
        }
        Ok(())
    }
}

fn log_one_plus_inverse(denominator: f64, constraint: &str) -> Result<f64> {
    if denominator > 0.0 {
        Ok((1.0 + 1.0 / denominator).ln())
    } else {
        Err(domain(format!("{constraint} > 0 required, got {denominator}")))
    }
}

fn log_inverse_in_unit(x: f64, constraint: &str) -> Result<f64> {
    if x > 0.0 && x < 1.0 {
        Ok((1.0 / x).ln())
    } else {
        Err(domain(format!("0 < {constraint} < 1 required, got {x}")))
    }
}

/// Sufficient sensor count for partial separability of random targets:
/// `(n / (θ1 (a - 1) c1)) ln(1 + 1/(c2 - a θ2 c1))`.
///
/// The denominator carries a single factor `a θ2 c1`, which is what the
/// bound `2 a n r <= a θ2 c1` on the admissible radii yields. Together with
/// `a > c2 / (2 θ1 c1)` it is positive only when `θ2 < 2 θ1`.
pub fn random_partial_m_sufficient(params: &RandomParams) -> Result<f64> {
    params.validate_1d()?;
    let (c1, c2) = (params.c1(), params.c2());
    let log = log_one_plus_inverse(c2 - params.a * params.theta2 * c1, "c2 − a·θ2·c1")?;
    Ok(params.n as f64 / (params.theta1 * (params.a - 1.0) * c1) * log)
}

/// Variant of the sufficient count with denominator `c2 - 2 a θ2 c1`. Under `a > c2 / (2 θ1 c1)` and `θ1 <= θ2` that
/// denominator is never positive, so this always reports a domain error for
/// valid parameters; kept for auditing.
pub fn random_partial_m_sufficient_doubled(params: &RandomParams) -> Result<f64> {
    params.validate_1d()?;
    let (c1, c2) = (params.c1(), params.c2());
    let log = log_one_plus_inverse(c2 - 2.0 * params.a * params.theta2 * c1, "c2 − 2·a·θ2·c1")?;
    Ok(params.n as f64 / (params.theta1 * (params.a - 1.0) * c1) * log)
}

/// Below `(n / (θ2 (a - 1) c1) - 1) ln(1 / (c3 - a θ1 c1))` sensors partial
/// separability fails.
pub fn random_partial_m_necessary(params: &RandomParams) -> Result<f64> {
    params.validate_1d()?;
    let c1 = params.c1();
    let log = log_inverse_in_unit(params.c3() - params.a * params.theta1 * c1, "c3 − a·θ1·c1")?;
    Ok((params.n as f64 / (params.theta2 * (params.a - 1.0) * c1) - 1.0) * log)
}

/// Grid radius in the unit square, from `π r^2 = π / 4n`.
pub fn grid_radius_2d(n: u64) -> f64 {
    0.5 / (n as f64).sqrt()
}

fn cells_2d(n: u64) -> f64 {
    4.0 * n as f64 / PI
}

/// `(4n/π)(ln(4n/π) ± c)`.
pub fn grid_full_m_2d(n: u64, c: f64, sign: Sign) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n >= 1 required"));
    }
    let cells = cells_2d(n);
    Ok(cells * sign.apply(cells.ln(), c))
}

/// `(4n/π) ln(1 / ((1 - α)(1 - β)))`.
pub fn grid_partial_m_2d_sufficient(n: u64, alpha: f64, beta: f64) -> Result<f64> {
    check_open_unit("α", alpha)?;
    check_open_unit("β", beta)?;
    Ok(cells_2d(n) * (1.0 / ((1.0 - alpha) * (1.0 - beta))).ln())
}

/// `(4n/π - 1) ln(1 / (1 - α β))`.
pub fn grid_partial_m_2d_necessary(n: u64, alpha: f64, beta: f64) -> Result<f64> {
    check_open_unit("α", alpha)?;
    check_open_unit("β", beta)?;
    Ok((cells_2d(n) - 1.0) * (1.0 / (1.0 - alpha * beta)).ln())
}

/// Radius with `π r^2 = 1 / (n c_n)`.
pub fn random_full_r_2d(n: u64, c_n: f64) -> Result<f64> {
    check_positive("c_n", c_n)?;
    Ok((1.0 / (PI * n as f64 * c_n)).sqrt())
}

/// `n c_n (ln(n c_n) ± g_n)`.
pub fn random_full_m_2d(n: u64, c_n: f64, g_n: f64, sign: Sign) -> Result<f64> {
    check_positive("c_n", c_n)?;
    check_non_negative("g_n", g_n)?;
    let cells = n as f64 * c_n;
    Ok(cells * sign.apply(cells.ln(), g_n))
}

/// Largest radius with `π r^2 <= 1 / (a^2 ((n - 1)/c1 + 1))`.
pub fn random_partial_r_2d_sufficient(n: u64, alpha1: f64, beta: f64, a: f64) -> Result<f64> {
    check_open_unit("α1", alpha1)?;
    check_open_unit("β", beta)?;
    if !(a > 1.0) {
        return Err(domain(format!("a > 1 required, got {a}")));
    }
    let c1 = c_level(alpha1, beta);
    let area = 1.0 / (a * a * ((n as f64 - 1.0) / c1 + 1.0));
    Ok((area / PI).sqrt())
}

/// Radius with `π r^2 = ln(1 / (α1 β)) / (a^2 n)`; larger radii fail.
pub fn random_partial_r_2d_necessary(n: u64, alpha1: f64, beta: f64, a: f64) -> Result<f64> {
    check_open_unit("α1", alpha1)?;
    check_open_unit("β", beta)?;
    if !(a > 1.0) {
        return Err(domain(format!("a > 1 required, got {a}")));
    }
    let area = (1.0 / (alpha1 * beta)).ln() / (a * a * n as f64);
    Ok((area / PI).sqrt())
}

/// `(n / (θ1 (a - 1)^2 c1)) ln(1 + 1/(c2 - a^2 θ2 c1))`.
pub fn random_partial_m_2d_sufficient(params: &RandomParams) -> Result<f64> {
    params.validate_2d()?;
    let (c1, c2) = (params.c1(), params.c2());
    let a = params.a;
    let log = log_one_plus_inverse(c2 - a * a * params.theta2 * c1, "c2 − a²·θ2·c1")?;
    Ok(params.n as f64 / (params.theta1 * (a - 1.0).powi(2) * c1) * log)
}

/// `(n / (θ2 (a - 1)^2 c1) - 1) ln(1 / (c3 - a^2 θ1 c1))`.
pub fn random_partial_m_2d_necessary(params: &RandomParams) -> Result<f64> {
    params.validate_2d()?;
    let c1 = params.c1();
    let a = params.a;
    let log = log_inverse_in_unit(params.c3() - a * a * params.theta1 * c1, "c3 − a²·θ1·c1")?;
    Ok((params.n as f64 / (params.theta2 * (a - 1.0).powi(2) * c1) - 1.0) * log)
}
