//! Poisson sensor fields with adversarial sensors and majority decoding.
//!
//! Each sensor is independently adversarial with probability `γ`. Adversaries
//! are oblivious: what they report depends only on their own true reading.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{
    check_lengths, observation_vector, poisson_count, sample_uniform_points_with, Region,
    SensorField, TargetConfiguration, TargetLayout,
};
use crate::rng::rng_from_seed;
use crate::separability::{CoverageMap, Verdict};

/// What an adversarial sensor reports given its true reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum AdversaryPolicy {
    /// Report the negation of the true reading.
    #[default]
    Flip,
    /// Report an independent Bernoulli(p) bit.
    RandomBit(f64),
    ConstantOne,
    ConstantZero,
}

impl AdversaryPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AdversaryPolicy::RandomBit(p) if !(0.0..=1.0).contains(&p) => {
                Err(invalid(format!("RandomBit probability must lie in [0, 1], got {p}")))
            }
            _ => Ok(()),
        }
    }

    pub fn report<R: Rng + ?Sized>(&self, truth: bool, rng: &mut R) -> bool {
        match *self {
            AdversaryPolicy::Flip => !truth,
            AdversaryPolicy::RandomBit(p) => rng.random_bool(p),
            AdversaryPolicy::ConstantOne => true,
            AdversaryPolicy::ConstantZero => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdversaryModel {
    pub gamma: f64,
    pub policy: AdversaryPolicy,
}

impl AdversaryModel {
    pub fn new(gamma: f64, policy: AdversaryPolicy) -> Result<Self> {
        check_gamma(gamma)?;
        policy.validate()?;
        Ok(AdversaryModel { gamma, policy })
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 0.5 {
        Ok(())
    } else {
        Err(invalid(format!("0 < γ < 0.5 required, got γ = {gamma}")))
    }
}

/// Poisson(`intensity`) sensors placed uniformly, each marked adversarial
/// with probability `γ`.
pub fn deploy_adversarial_field(
    intensity: f64,
    region: Region,
    radius: f64,
    model: &AdversaryModel,
    seed: u64,
) -> Result<SensorField> {
    deploy_adversarial_field_with(&mut rng_from_seed(seed), intensity, region, radius, model)
}

pub fn deploy_adversarial_field_with<R: Rng + ?Sized>(
    rng: &mut R,
    intensity: f64,
    region: Region,
    radius: f64,
    model: &AdversaryModel,
) -> Result<SensorField> {
    check_gamma(model.gamma)?;
    model.policy.validate()?;
    if !(intensity > 0.0) {
        return Err(invalid(format!("intensity must be positive, got {intensity}")));
    }
    let count = poisson_count(rng, intensity * region.measure())?;
    let positions = sample_uniform_points_with(rng, count, region);
    let flags = (0..count).map(|_| rng.random_bool(model.gamma)).collect();
    SensorField::with_adversaries(positions, radius, flags)
}

/// Readings as reported: honest sensors tell the truth, adversaries apply
/// `policy` to theirs.
pub fn reported_observations(
    field: &SensorField,
    layout: &TargetLayout,
    config: &TargetConfiguration,
    policy: AdversaryPolicy,
    seed: u64,
) -> Result<Vec<bool>> {
    reported_observations_with(&mut rng_from_seed(seed), field, layout, config, policy)
}

pub fn reported_observations_with<R: Rng + ?Sized>(
    rng: &mut R,
    field: &SensorField,
    layout: &TargetLayout,
    config: &TargetConfiguration,
    policy: AdversaryPolicy,
) -> Result<Vec<bool>> {
    policy.validate()?;
    check_lengths(layout, config)?;
    let truth = observation_vector(field, layout, config)?;
    Ok(apply_policy(rng, &truth, field.adversary(), policy))
}

/// Replace the readings of flagged sensors according to `policy`.
pub fn apply_policy<R: Rng + ?Sized>(
    rng: &mut R,
    truth: &[bool],
    adversary: &[bool],
    policy: AdversaryPolicy,
) -> Vec<bool> {
    truth
        .iter()
        .zip(adversary)
        .map(|(&bit, &bad)| if bad { policy.report(bit, rng) } else { bit })
        .collect()
}

/// Majority verdicts with the vote tallies of each target's unique coverers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityVerdicts {
    pub verdicts: Vec<Verdict>,
    pub ones: Vec<usize>,
    pub zeros: Vec<usize>,
}

impl MajorityVerdicts {
    pub fn all_correct(&self, config: &TargetConfiguration) -> bool {
        self.verdicts
            .iter()
            .zip(config.occupied())
            .all(|(v, &occ)| v.is_correct(occ))
    }
}

/// Strict-majority vote over each target's unique coverers. Ties and targets
/// without unique coverers are [`Verdict::Unknown`].
pub fn majority_decode(reports: &[bool], cmap: &CoverageMap) -> Result<MajorityVerdicts> {
    if reports.len() != cmap.num_sensors() {
        return Err(invalid(format!(
            "{} reports for {} sensors",
            reports.len(),
            cmap.num_sensors()
        )));
    }
    let n = cmap.num_targets();
    let mut out = MajorityVerdicts {
        verdicts: Vec::with_capacity(n),
        ones: Vec::with_capacity(n),
        zeros: Vec::with_capacity(n),
    };
    for sensors in cmap.per_target_unique_sensors() {
        let ones = sensors.iter().filter(|&&s| reports[s]).count();
        let zeros = sensors.len() - ones;
        out.verdicts.push(match ones.cmp(&zeros) {
            std::cmp::Ordering::Greater => Verdict::Occupied,
            std::cmp::Ordering::Less => Verdict::Empty,
            std::cmp::Ordering::Equal => Verdict::Unknown,
        });
        out.ones.push(ones);
        out.zeros.push(zeros);
    }
    Ok(out)
}

/// `Q_i = G_i - A_i`: honest minus adversarial unique coverers of each target.
pub fn margins(cmap: &CoverageMap, field: &SensorField) -> Result<Vec<i64>> {
    if field.len() != cmap.num_sensors() {
        return Err(invalid(format!(
            "field has {} sensors, coverage map {}",
            field.len(),
            cmap.num_sensors()
        )));
    }
    Ok(cmap
        .per_target_unique_sensors()
        .iter()
        .map(|sensors| {
            sensors
                .iter()
                .map(|&s| if field.is_adversary(s) { -1 } else { 1 })
                .sum()
        })
        .collect())
}

/// `1 - 2 √(γ (1 - γ))`
fn chernoff_rate(gamma: f64) -> f64 {
    1.0 - 2.0 * (gamma * (1.0 - gamma)).sqrt()
}

/// Lower bound `1 - exp(-(1 - 2√(γ(1-γ))) λ)` on the probability that a target
/// with Poisson(`λ`) unique coverers has more honest than adversarial ones.
pub fn chernoff_success_bound(gamma: f64, lambda: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(lambda > 0.0) {
        return Err(invalid(format!("λ > 0 required, got {lambda}")));
    }
    Ok(-(-chernoff_rate(gamma) * lambda).exp_m1())
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("ε > 0 required, got {eps}")))
    }
}

/// Intensity `((1 + ε) / (1 - 2√(γ(1-γ)))) n ln n` for correct majority
/// decoding of all `n` grid targets at radius `1/2n`.
pub fn adversarial_full_m(n: u64, gamma: f64, eps: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_eps(eps)?;
    let nf = n as f64;
    Ok((1.0 + eps) / chernoff_rate(gamma) * nf * nf.ln())
}

/// Intensity `((1 + ε) / (1 - 2√(γ(1-γ)))) n ln(1/((1-α)(1-β)))` for the
/// partial goal.
pub fn adversarial_partial_m(n: u64, gamma: f64, eps: f64, alpha: f64, beta: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_eps(eps)?;
    for (name, v) in [("α", alpha), ("β", beta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(invalid(format!("0 < {name} < 1 required, got {v}")));
        }
    }
    let log = (1.0 / ((1.0 - alpha) * (1.0 - beta))).ln();
    Ok((1.0 + eps) / chernoff_rate(gamma) * n as f64 * log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Point, TargetModel};
    use crate::rng::trial_rng;
    use crate::separability::{coverage_map, decode_truthful};
    use crate::Error;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid(n: usize) -> TargetLayout {
        TargetLayout::grid(n, Region::interval()).unwrap()
    }

    #[test]
    fn gamma_validation() {
        for g in [0.0, 0.5, 0.7, -0.1, f64::NAN] {
            let err = AdversaryModel::new(g, AdversaryPolicy::Flip).unwrap_err();
            assert!(err.to_string().contains("0 < γ < 0.5"), "{err}");
        }
        assert!(AdversaryModel::new(0.2, AdversaryPolicy::RandomBit(1.5)).is_err());
        let bad = AdversaryModel { gamma: 0.7, policy: AdversaryPolicy::Flip };
        assert!(deploy_adversarial_field(10.0, Region::interval(), 0.1, &bad, 1).is_err());
    }

    #[test]
    fn thinning_statistics() {
        let model = AdversaryModel::new(0.2, AdversaryPolicy::Flip).unwrap();
        let trials = 10_000u64;
        let (mut total, mut bad, mut good_sum) = (0usize, 0usize, 0.0f64);
        for t in 0..trials {
            let field = deploy_adversarial_field_with(&mut trial_rng(7, t), 100.0, Region::interval(), 0.01, &model)
                .unwrap();
            let a = field.adversary().iter().filter(|&&b| b).count();
            total += field.len();
            bad += a;
            good_sum += (field.len() - a) as f64;
        }
        let frac = bad as f64 / total as f64;
        assert!((frac - 0.2).abs() < 0.015, "{frac}");
        // Honest count is Poisson(80); its sample mean has standard deviation √(80/trials).
        let mean = good_sum / trials as f64;
        let sd = (80.0 / trials as f64).sqrt();
        assert!((mean - 80.0).abs() < 4.0 * sd, "{mean}");
    }

    #[test]
    fn flip_all_adversarial_on_empty_reports_ones() {
        let layout = grid(4);
        let pos: Vec<Point> = [0.1, 0.4, 0.6, 0.9].map(Point::on_line).to_vec();
        let field = SensorField::with_adversaries(pos, 0.2, vec![true; 4]).unwrap();
        let reports =
            reported_observations(&field, &layout, &TargetConfiguration::empty(4), AdversaryPolicy::Flip, 3).unwrap();
        assert_eq!(reports, vec![true; 4]);

        let zero = reported_observations(
            &field,
            &layout,
            &TargetConfiguration::full(4),
            AdversaryPolicy::ConstantZero,
            3,
        )
        .unwrap();
        assert_eq!(zero, vec![false; 4]);
    }

    #[test]
    fn honest_field_reports_truth() {
        let layout = grid(6);
        let field = SensorField::new(
            [0.05, 0.3, 0.31, 0.77, 0.99].map(Point::on_line).to_vec(),
            0.1,
        )
        .unwrap();
        let config = TargetConfiguration::from_mask(6, 0b101101);
        for policy in [AdversaryPolicy::Flip, AdversaryPolicy::RandomBit(0.3), AdversaryPolicy::ConstantOne] {
            assert_eq!(
                reported_observations(&field, &layout, &config, policy, 11).unwrap(),
                observation_vector(&field, &layout, &config).unwrap()
            );
        }
    }

    #[test]
    fn random_bit_ignores_configuration() {
        let layout = grid(5);
        let pos: Vec<Point> = (0..200).map(|i| Point::on_line((i as f64 + 0.5) / 200.0)).collect();
        let field = SensorField::with_adversaries(pos, 0.05, vec![true; 200]).unwrap();
        let policy = AdversaryPolicy::RandomBit(0.5);
        let (mut ones, mut count) = (0usize, 0usize);
        for t in 0..200u64 {
            let config = if t % 2 == 0 { TargetConfiguration::empty(5) } else { TargetConfiguration::full(5) };
            let r = reported_observations_with(&mut trial_rng(5, t), &field, &layout, &config, policy).unwrap();
            ones += r.iter().filter(|&&b| b).count();
            count += r.len();
        }
        let p = ones as f64 / count as f64;
        let se = (0.25 / count as f64).sqrt();
        assert!((p - 0.5).abs() < 4.0 * se, "{p}");
    }

    #[test]
    fn majority_examples() {
        // Three sensors each covering only target 0, one covering nothing.
        let layout = TargetLayout::from_positions(
            Region::interval(),
            vec![Point::on_line(0.2), Point::on_line(0.8)],
            TargetModel::Explicit,
        )
        .unwrap();
        let field = SensorField::new([0.15, 0.2, 0.25, 0.5].map(Point::on_line).to_vec(), 0.1).unwrap();
        let cmap = coverage_map(&layout, &field);
        let mv = majority_decode(&[true, true, false, true], &cmap).unwrap();
        assert_eq!(mv.verdicts, vec![Verdict::Occupied, Verdict::Unknown]);
        assert_eq!((mv.ones[0], mv.zeros[0]), (2, 1));

        let field2 = SensorField::new([0.15, 0.25].map(Point::on_line).to_vec(), 0.1).unwrap();
        let cmap2 = coverage_map(&layout, &field2);
        let tie = majority_decode(&[true, false], &cmap2).unwrap();
        assert_eq!(tie.verdicts[0], Verdict::Unknown);
        assert!(matches!(majority_decode(&[true], &cmap2), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn chernoff_values() {
        assert_relative_eq!(chernoff_success_bound(0.25, 20.0).unwrap(), 0.931_402_001_722_974_4, epsilon = 1e-12);
        assert!(chernoff_success_bound(0.5 - 1e-12, 20.0).unwrap() < 1e-4);
        let lambda = adversarial_full_m(300, 0.2, 0.5).unwrap() / 300.0;
        assert_relative_eq!(chernoff_success_bound(0.2, lambda).unwrap(), 0.999_807_549_910_270_1, epsilon = 1e-12);
        assert!(chernoff_success_bound(0.2, 0.0).is_err());
    }

    #[test]
    fn intensity_formulas() {
        assert_relative_eq!(adversarial_full_m(300, 0.2, 0.5).unwrap(), 12_833.510_567_976_452, epsilon = 1e-7);
        assert_relative_eq!(
            adversarial_partial_m(300, 0.2, 0.5, 0.9, 0.9).unwrap(),
            10_361.632_918_473_206,
            epsilon = 1e-7
        );
        let limit = adversarial_full_m(1000, 1e-12, 1e-12).unwrap();
        assert_relative_eq!(limit, 1000.0 * 1000f64.ln(), max_relative = 1e-5);
        assert!(adversarial_full_m(300, 0.2, 0.0).is_err());
        assert!(adversarial_partial_m(300, 0.2, 0.5, 1.0, 0.9).is_err());
    }

    /// Pooled P(Q_i > 0) over many grid targets stays above the Chernoff bound.
    #[test]
    fn monte_carlo_respects_chernoff_bound() {
        let (n, gamma, lambda) = (10usize, 0.25, 20.0);
        let layout = grid(n);
        let r = 0.5 / n as f64;
        let model = AdversaryModel::new(gamma, AdversaryPolicy::Flip).unwrap();
        let trials = 10_000u64;
        let mut wins = 0usize;
        for t in 0..trials {
            let field = deploy_adversarial_field_with(
                &mut trial_rng(99, t),
                lambda * n as f64,
                Region::interval(),
                r,
                &model,
            )
            .unwrap();
            let cmap = coverage_map(&layout, &field);
            wins += margins(&cmap, &field).unwrap().iter().filter(|&&q| q > 0).count();
        }
        let p = wins as f64 / (trials as usize * n) as f64;
        assert!(p >= chernoff_success_bound(gamma, lambda).unwrap(), "{p}");
    }

    fn instance_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<(f64, bool)>, f64, u64)> {
        (
            prop::collection::vec(0.0f64..1.0, 1..8),
            prop::collection::vec((0.0f64..1.0, any::<bool>()), 0..25),
            0.01f64..0.3,
            any::<u64>(),
        )
    }

    proptest! {
        #[test]
        fn flip_verdict_correct_iff_positive_margin((mut ts, sensors, r, mask) in instance_strategy()) {
            ts.sort_by(f64::total_cmp);
            let n = ts.len();
            let layout = TargetLayout::from_positions(
                Region::interval(),
                ts.into_iter().map(Point::on_line).collect(),
                TargetModel::Explicit,
            ).unwrap();
            let (pos, flags): (Vec<Point>, Vec<bool>) =
                sensors.into_iter().map(|(x, b)| (Point::on_line(x), b)).unzip();
            let field = SensorField::with_adversaries(pos, r, flags).unwrap();
            let config = TargetConfiguration::from_mask(n, mask);
            let reports = reported_observations(&field, &layout, &config, AdversaryPolicy::Flip, mask).unwrap();
            let cmap = coverage_map(&layout, &field);
            let mv = majority_decode(&reports, &cmap).unwrap();
            let q = margins(&cmap, &field).unwrap();
            for i in 0..n {
                prop_assert_eq!(mv.verdicts[i].is_correct(config.is_occupied(i)), q[i] > 0);
            }
        }

        #[test]
        fn honest_majority_matches_truthful_decoder((mut ts, sensors, r, mask) in instance_strategy()) {
            ts.sort_by(f64::total_cmp);
            let n = ts.len();
            let layout = TargetLayout::from_positions(
                Region::interval(),
                ts.into_iter().map(Point::on_line).collect(),
                TargetModel::Explicit,
            ).unwrap();
            let pos = sensors.into_iter().map(|(x, _)| Point::on_line(x)).collect();
            let field = SensorField::new(pos, r).unwrap();
            let config = TargetConfiguration::from_mask(n, mask);
            let obs = observation_vector(&field, &layout, &config).unwrap();
            let cmap = coverage_map(&layout, &field);
            let mv = majority_decode(&obs, &cmap).unwrap();
            let truthful = decode_truthful(&obs, &cmap).unwrap();
            prop_assert_eq!(mv.verdicts, truthful.verdicts);
        }
    }
}
