//! Regions, target layouts, sensor deployments and the ideal binary sensing rule.
//!
//! A sensor at `x` with radius `r` reads 1 iff some occupied target lies in the
//! open ball of radius `r` around `x`. Targets exactly at distance `r` are not
//! sensed.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dimension {
    One,
    Two,
}

impl Dimension {
    pub fn from_u8(d: u8) -> Result<Self> {
        match d {
            1 => Ok(Dimension::One),
            2 => Ok(Dimension::Two),
            other => Err(invalid(format!("dimension must be 1 or 2, got {other}"))),
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Dimension::One => 1,
            Dimension::Two => 2,
        }
    }
}

/// Edge handling for the unit square. Ignored in one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Sensing discs are cut off by the square's edges.
    #[default]
    Clip,
    /// Opposite edges are identified, so there are no edge effects.
    Torus,
}

/// The unit interval `[0, 1]` or the unit square `[0, 1]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region {
    pub dimension: Dimension,
    pub boundary: BoundaryMode,
}

impl Region {
    pub const fn interval() -> Self {
        Region {
            dimension: Dimension::One,
            boundary: BoundaryMode::Clip,
        }
    }

    pub const fn square() -> Self {
        Region {
            dimension: Dimension::Two,
            boundary: BoundaryMode::Clip,
        }
    }

    pub const fn torus() -> Self {
        Region {
            dimension: Dimension::Two,
            boundary: BoundaryMode::Torus,
        }
    }

    pub fn new(dimension: Dimension, boundary: BoundaryMode) -> Self {
        Region {
            dimension,
            boundary,
        }
    }

    /// Length or area of the region. Always 1.
    pub fn measure(&self) -> f64 {
        1.0
    }

    pub fn contains(&self, p: Point) -> bool {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        match self.dimension {
            Dimension::One => unit(p.x),
            Dimension::Two => unit(p.x) && unit(p.y),
        }
    }

    /// Distance under the region's metric.
    pub fn distance(&self, a: Point, b: Point) -> f64 {
        match self.dimension {
            Dimension::One => (a.x - b.x).abs(),
            Dimension::Two => {
                let (dx, dy) = self.offsets(a, b);
                dx.hypot(dy)
            }
        }
    }

    /// Whether `target` lies strictly inside the sensing ball of radius `radius`
    /// centred at `sensor`.
    ///
    /// In one dimension the test is `sensor - r < target < sensor + r`, so that
    /// boundary ties given in decimal (e.g. sensor 0.5, radius 0.1, target 0.6)
    /// resolve as exact ties. In two dimensions it compares squared distances.
    #[inline]
    pub fn covers(&self, sensor: Point, radius: f64, target: Point) -> bool {
        match self.dimension {
            Dimension::One => sensor.x - radius < target.x && target.x < sensor.x + radius,
            Dimension::Two => {
                let (dx, dy) = self.offsets(sensor, target);
                dx * dx + dy * dy < radius * radius
            }
        }
    }

    #[inline]
    fn offsets(&self, a: Point, b: Point) -> (f64, f64) {
        let dx = (a.x - b.x).abs();
        let dy = (a.y - b.y).abs();
        match self.boundary {
            BoundaryMode::Clip => (dx, dy),
            BoundaryMode::Torus => (dx.min(1.0 - dx), dy.min(1.0 - dy)),
        }
    }

    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self.dimension {
            Dimension::One => Point::on_line(rng.random::<f64>()),
            Dimension::Two => {
                let x = rng.random::<f64>();
                let y = rng.random::<f64>();
                Point::new(x, y)
            }
        }
    }
}

/// A point in the region; `y` is zero in one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub const fn on_line(x: f64) -> Self {
        Point { x, y: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetModel {
    Grid,
    Uniform,
    Poisson,
    /// Positions supplied by the caller.
    Explicit,
}

/// The `n` candidate target locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetLayout {
    region: Region,
    positions: Vec<Point>,
    model: TargetModel,
}

impl TargetLayout {
    /// Grid layout: `(2i - 1) / 2n` in one dimension, cell midpoints of the
    /// `sqrt(n) x sqrt(n)` tessellation in two.
    pub fn grid(n: usize, region: Region) -> Result<Self> {
        if n == 0 {
            return Err(invalid("grid layout needs n >= 1"));
        }
        let positions = match region.dimension {
            Dimension::One => {
                let denom = 2.0 * n as f64;
                (1..=n)
                    .map(|i| Point::on_line((2 * i - 1) as f64 / denom))
                    .collect()
            }
            Dimension::Two => {
                let side = perfect_square_root(n).ok_or_else(|| {
                    invalid(format!("2D grid needs n to be a perfect square, got {n}"))
                })?;
                let denom = 2.0 * side as f64;
                let mid = |i: usize| (2 * i + 1) as f64 / denom;
                let mut pts = Vec::with_capacity(n);
                for i in 0..side {
                    for j in 0..side {
                        pts.push(Point::new(mid(i), mid(j)));
                    }
                }
                pts
            }
        };
        Ok(TargetLayout {
            region,
            positions,
            model: TargetModel::Grid,
        })
    }

    /// `n` i.i.d. uniform locations.
    pub fn uniform<R: Rng + ?Sized>(n: usize, region: Region, rng: &mut R) -> Self {
        TargetLayout {
            region,
            positions: sample_uniform_points_with(rng, n, region),
            model: TargetModel::Uniform,
        }
    }

    /// Locations from a homogeneous Poisson process of the given intensity.
    pub fn poisson<R: Rng + ?Sized>(intensity: f64, region: Region, rng: &mut R) -> Result<Self> {
        Ok(TargetLayout {
            region,
            positions: sample_poisson_points_with(rng, intensity, region)?,
            model: TargetModel::Poisson,
        })
    }

    /// Caller-supplied positions. One-dimensional input must already be sorted.
    pub fn from_positions(region: Region, positions: Vec<Point>, model: TargetModel) -> Result<Self> {
        if let Some(p) = positions.iter().find(|p| !region.contains(**p)) {
            return Err(invalid(format!(
                "target ({}, {}) lies outside the region",
                p.x, p.y
            )));
        }
        if region.dimension == Dimension::One && positions.windows(2).any(|w| w[0].x > w[1].x) {
            return Err(invalid("1D target positions must be sorted ascending"));
        }
        Ok(TargetLayout {
            region,
            positions,
            model,
        })
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn model(&self) -> TargetModel {
        self.model
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

fn perfect_square_root(n: usize) -> Option<usize> {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    (r * r == n).then_some(r)
}

/// Which target locations hold a target.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TargetConfiguration {
    occupied: Vec<bool>,
}

impl TargetConfiguration {
    pub fn new(occupied: Vec<bool>) -> Self {
        TargetConfiguration { occupied }
    }

    pub fn empty(n: usize) -> Self {
        TargetConfiguration {
            occupied: vec![false; n],
        }
    }

    pub fn full(n: usize) -> Self {
        TargetConfiguration {
            occupied: vec![true; n],
        }
    }

    /// Bit `i` of `mask` is target `i`. `n` must be at most 64.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        assert!(n <= 64, "mask configurations support at most 64 targets");
        TargetConfiguration {
            occupied: (0..n).map(|i| mask >> i & 1 == 1).collect(),
        }
    }

    /// Each target occupied independently with probability `p`.
    pub fn random<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Self {
        TargetConfiguration {
            occupied: (0..n).map(|_| rng.random_bool(p)).collect(),
        }
    }

    pub fn occupied(&self) -> &[bool] {
        &self.occupied
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn is_occupied(&self, i: usize) -> bool {
        self.occupied[i]
    }
}

/// Deployed sensors with a common sensing radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorField {
    positions: Vec<Point>,
    radius: f64,
    adversary: Vec<bool>,
}

impl SensorField {
    /// All sensors honest.
    pub fn new(positions: Vec<Point>, radius: f64) -> Result<Self> {
        let n = positions.len();
        Self::with_adversaries(positions, radius, vec![false; n])
    }

    pub fn with_adversaries(positions: Vec<Point>, radius: f64, adversary: Vec<bool>) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("sensing radius must be positive, got {radius}")));
        }
        if adversary.len() != positions.len() {
            return Err(invalid(format!(
                "{} adversary flags for {} sensors",
                adversary.len(),
                positions.len()
            )));
        }
        Ok(SensorField {
            positions,
            radius,
            adversary,
        })
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn adversary(&self) -> &[bool] {
        &self.adversary
    }

    pub fn is_adversary(&self, s: usize) -> bool {
        self.adversary[s]
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Copy with a new sensor appended.
    pub fn with_sensor(&self, p: Point, adversary: bool) -> Self {
        let mut out = self.clone();
        out.positions.push(p);
        out.adversary.push(adversary);
        out
    }

    /// Copy with sensor `s` removed.
    pub fn without_sensor(&self, s: usize) -> Self {
        let mut out = self.clone();
        out.positions.remove(s);
        out.adversary.remove(s);
        out
    }
}

/// `count` independent uniform points, sorted ascending in one dimension.
pub fn sample_uniform_points(count: usize, region: Region, seed: u64) -> Vec<Point> {
    sample_uniform_points_with(&mut rng_from_seed(seed), count, region)
}

pub fn sample_uniform_points_with<R: Rng + ?Sized>(rng: &mut R, count: usize, region: Region) -> Vec<Point> {
    let mut pts: Vec<Point> = (0..count).map(|_| region.random_point(rng)).collect();
    if region.dimension == Dimension::One {
        pts.sort_by(|a, b| a.x.total_cmp(&b.x));
    }
    pts
}

/// Homogeneous Poisson process: Poisson(intensity * |region|) points, uniform
/// given their number.
pub fn sample_poisson_points(intensity: f64, region: Region, seed: u64) -> Result<Vec<Point>> {
    sample_poisson_points_with(&mut rng_from_seed(seed), intensity, region)
}

pub fn sample_poisson_points_with<R: Rng + ?Sized>(
    rng: &mut R,
    intensity: f64,
    region: Region,
) -> Result<Vec<Point>> {
    let count = poisson_count(rng, intensity * region.measure())?;
    Ok(sample_uniform_points_with(rng, count, region))
}

pub(crate) fn poisson_count<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> Result<usize> {
    let dist = Poisson::new(mean)
        .map_err(|_| invalid(format!("Poisson intensity must be positive and finite, got {mean}")))?;
    Ok(dist.sample(rng) as usize)
}

/// Reading of a truthful sensor at `sensor`.
pub fn sense(
    sensor: Point,
    radius: f64,
    layout: &TargetLayout,
    config: &TargetConfiguration,
) -> Result<bool> {
    check_lengths(layout, config)?;
    let region = layout.region();
    Ok(layout
        .positions()
        .iter()
        .zip(config.occupied())
        .any(|(t, &occ)| occ && region.covers(sensor, radius, *t)))
}

/// Truthful readings of every sensor in the field. Adversary flags are ignored.
pub fn observation_vector(
    field: &SensorField,
    layout: &TargetLayout,
    config: &TargetConfiguration,
) -> Result<Vec<bool>> {
    check_lengths(layout, config)?;
    field
        .positions()
        .iter()
        .map(|&p| sense(p, field.radius(), layout, config))
        .collect()
}

pub(crate) fn check_lengths(layout: &TargetLayout, config: &TargetConfiguration) -> Result<()> {
    if layout.n() != config.len() {
        return Err(invalid(format!(
            "configuration has {} flags but the layout has {} targets",
            config.len(),
            layout.n()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn xs(layout: &TargetLayout) -> Vec<f64> {
        layout.positions().iter().map(|p| p.x).collect()
    }

    #[test]
    fn grid_1d_positions() {
        assert_eq!(xs(&TargetLayout::grid(1, Region::interval()).unwrap()), vec![0.5]);
        assert_eq!(
            xs(&TargetLayout::grid(4, Region::interval()).unwrap()),
            vec![0.125, 0.375, 0.625, 0.875]
        );
    }

    #[test]
    fn grid_2d_midpoints() {
        let g = TargetLayout::grid(4, Region::square()).unwrap();
        let pts: Vec<(f64, f64)> = g.positions().iter().map(|p| (p.x, p.y)).collect();
        assert_eq!(pts, vec![(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)]);
    }

    #[test]
    fn grid_2d_rejects_non_square() {
        assert!(matches!(
            TargetLayout::grid(5, Region::square()),
            Err(crate::Error::InvalidArgument(_))
        ));
        assert!(TargetLayout::grid(0, Region::interval()).is_err());
    }

    #[test]
    fn grid_spacing_is_one_over_n() {
        for n in [1usize, 2, 7, 100, 1000] {
            let g = TargetLayout::grid(n, Region::interval()).unwrap();
            let x = xs(&g);
            assert!((x[0] - 1.0 / (2.0 * n as f64)).abs() < 1e-15);
            for w in x.windows(2) {
                assert!((w[1] - w[0] - 1.0 / n as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_sampling_empty_and_golden() {
        assert!(sample_uniform_points(0, Region::interval(), 1).is_empty());
        let pts = sample_uniform_points(3, Region::interval(), 42);
        let got: Vec<f64> = pts.iter().map(|p| p.x).collect();
        assert_eq!(got, GOLDEN_UNIFORM_SEED_42.to_vec());
    }

    // Frozen output of ChaCha8Rng::seed_from_u64(42), sorted.
    const GOLDEN_UNIFORM_SEED_42: [f64; 3] = [0.4275164028565197, 0.6818961923066714, 0.950275407672484];

    #[test]
    fn uniform_sampling_mean() {
        for region in [Region::interval(), Region::square()] {
            let pts = sample_uniform_points(10_000, region, 7);
            let mx = pts.iter().map(|p| p.x).sum::<f64>() / 1e4;
            assert!((mx - 0.5).abs() < 0.02, "{mx}");
            if region.dimension == Dimension::Two {
                let my = pts.iter().map(|p| p.y).sum::<f64>() / 1e4;
                assert!((my - 0.5).abs() < 0.02, "{my}");
            }
        }
    }

    #[test]
    fn poisson_count_moments() {
        let mut rng = rng_from_seed(99);
        let trials = 100_000;
        let counts: Vec<f64> = (0..trials)
            .map(|_| sample_poisson_points_with(&mut rng, 5.0, Region::interval()).unwrap().len() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / trials as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        assert!((mean - 5.0).abs() < 0.07, "mean {mean}");
        assert!((var - 5.0).abs() < 0.3, "var {var}");
    }

    #[test]
    fn poisson_points_sorted_in_1d() {
        let pts = sample_poisson_points(50.0, Region::interval(), 3).unwrap();
        assert!(pts.windows(2).all(|w| w[0].x <= w[1].x));
        assert!(sample_poisson_points(0.0, Region::interval(), 3).is_err());
    }

    fn one(x: f64) -> TargetLayout {
        TargetLayout::from_positions(Region::interval(), vec![Point::on_line(x)], TargetModel::Explicit).unwrap()
    }

    #[test]
    fn sensing_rule_examples() {
        let occ = TargetConfiguration::full(1);
        let emp = TargetConfiguration::empty(1);
        let s = Point::on_line(0.5);
        assert!(sense(s, 0.1, &one(0.55), &occ).unwrap());
        assert!(!sense(s, 0.1, &one(0.6), &occ).unwrap());
        assert!(!sense(s, 0.1, &one(0.4), &occ).unwrap());
        assert!(!sense(s, 0.1, &one(0.55), &emp).unwrap());
        // A sensor on top of a target senses it.
        assert!(sense(Point::on_line(0.55), 0.1, &one(0.55), &occ).unwrap());
    }

    #[test]
    fn sensing_rule_2d_boundary_and_torus() {
        let t = TargetLayout::from_positions(Region::square(), vec![Point::new(0.5, 0.75)], TargetModel::Explicit)
            .unwrap();
        let occ = TargetConfiguration::full(1);
        assert!(!sense(Point::new(0.5, 0.5), 0.25, &t, &occ).unwrap());
        assert!(sense(Point::new(0.5, 0.5), 0.2500001, &t, &occ).unwrap());

        let edge = |region| {
            TargetLayout::from_positions(region, vec![Point::new(0.02, 0.5)], TargetModel::Explicit).unwrap()
        };
        let s = Point::new(0.98, 0.5);
        assert!(!sense(s, 0.05, &edge(Region::square()), &occ).unwrap());
        assert!(sense(s, 0.05, &edge(Region::torus()), &occ).unwrap());
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let g = TargetLayout::grid(3, Region::interval()).unwrap();
        let c = TargetConfiguration::empty(2);
        assert!(sense(Point::on_line(0.1), 0.1, &g, &c).is_err());
        let f = SensorField::new(vec![], 0.1).unwrap();
        assert!(observation_vector(&f, &g, &c).is_err());
    }

    #[test]
    fn field_validation() {
        assert!(SensorField::new(vec![], 0.0).is_err());
        assert!(SensorField::new(vec![], f64::NAN).is_err());
        assert!(SensorField::with_adversaries(vec![Point::on_line(0.2)], 0.1, vec![]).is_err());
    }

    #[test]
    fn observation_vector_edge_cases() {
        let g = TargetLayout::grid(3, Region::interval()).unwrap();
        let c = TargetConfiguration::full(3);
        let empty = SensorField::new(vec![], 0.1).unwrap();
        assert!(observation_vector(&empty, &g, &c).unwrap().is_empty());
        let single = SensorField::new(vec![Point::on_line(0.2)], 0.1).unwrap();
        assert_eq!(
            observation_vector(&single, &g, &c).unwrap(),
            vec![sense(Point::on_line(0.2), 0.1, &g, &c).unwrap()]
        );
    }

    #[test]
    fn unsorted_explicit_layout_rejected() {
        let pts = vec![Point::on_line(0.4), Point::on_line(0.1)];
        assert!(TargetLayout::from_positions(Region::interval(), pts, TargetModel::Explicit).is_err());
        let out = vec![Point::on_line(1.5)];
        assert!(TargetLayout::from_positions(Region::interval(), out, TargetModel::Explicit).is_err());
    }

    fn brute_readings(field: &SensorField, layout: &TargetLayout, cfg: &TargetConfiguration) -> Vec<bool> {
        let mut out = Vec::new();
        for s in field.positions() {
            let mut hit = false;
            for (t, &o) in layout.positions().iter().zip(cfg.occupied()) {
                if o && (s.x - t.x).abs() < field.radius() {
                    hit = true;
                }
            }
            out.push(hit);
        }
        out
    }

    proptest! {
        #[test]
        fn observation_vector_matches_per_sensor_oracle(
            seed in any::<u64>(), n in 0usize..12, m in 0usize..12, r in 0.001f64..0.4, mask in any::<u64>()
        ) {
            let mut rng = rng_from_seed(seed);
            let layout = TargetLayout::uniform(n, Region::interval(), &mut rng);
            let field = SensorField::new(sample_uniform_points_with(&mut rng, m, Region::interval()), r).unwrap();
            let cfg = TargetConfiguration::from_mask(n, mask);
            let obs = observation_vector(&field, &layout, &cfg).unwrap();
            prop_assert_eq!(obs.len(), m);
            prop_assert_eq!(obs, brute_readings(&field, &layout, &cfg));
        }

        #[test]
        fn larger_radius_never_clears_a_reading(
            seed in any::<u64>(), n in 1usize..10, r in 0.001f64..0.3, extra in 0.0f64..0.3, mask in any::<u64>(),
            two_d in any::<bool>()
        ) {
            let region = if two_d { Region::square() } else { Region::interval() };
            let mut rng = rng_from_seed(seed);
            let layout = TargetLayout::uniform(n, region, &mut rng);
            let sensors = sample_uniform_points_with(&mut rng, 8, region);
            let cfg = TargetConfiguration::from_mask(n, mask);
            let small = observation_vector(&SensorField::new(sensors.clone(), r).unwrap(), &layout, &cfg).unwrap();
            let big = observation_vector(&SensorField::new(sensors, r + extra).unwrap(), &layout, &cfg).unwrap();
            for (a, b) in small.iter().zip(&big) {
                prop_assert!(!a || *b);
            }
        }

        #[test]
        fn empty_configuration_reads_all_zero(seed in any::<u64>(), n in 0usize..20, r in 0.001f64..1.0) {
            let mut rng = rng_from_seed(seed);
            let layout = TargetLayout::uniform(n, Region::square(), &mut rng);
            let field = SensorField::new(sample_uniform_points_with(&mut rng, 10, Region::square()), r).unwrap();
            let obs = observation_vector(&field, &layout, &TargetConfiguration::empty(n)).unwrap();
            prop_assert!(obs.iter().all(|b| !b));
        }
    }
}
