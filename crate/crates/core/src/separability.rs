//! Unique coverage, identifiability and decoding from truthful readings.
//!
//! Target `i` is identifiable when some sensor covers `i` and no other target.
//! A layout is fully separable when every target is identifiable, which is
//! equivalent to all `2^n` configurations producing distinct readings;
//! [`brute_force_distinguishable`] checks the latter directly.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{Dimension, Point, SensorField, TargetLayout};

/// Per-sensor coverage sets and per-target unique coverers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageMap {
    per_sensor_targets: Vec<Vec<usize>>,
    per_target_unique_sensors: Vec<Vec<usize>>,
}

impl CoverageMap {
    fn from_sensor_sets(n: usize, per_sensor_targets: Vec<Vec<usize>>) -> Self {
        let mut per_target_unique_sensors = vec![Vec::new(); n];
        for (s, set) in per_sensor_targets.iter().enumerate() {
            if let [only] = set.as_slice() {
                per_target_unique_sensors[*only].push(s);
            }
        }
        CoverageMap {
            per_sensor_targets,
            per_target_unique_sensors,
        }
    }

    /// Target indices (ascending) strictly within each sensor's radius.
    pub fn per_sensor_targets(&self) -> &[Vec<usize>] {
        &self.per_sensor_targets
    }

    /// Sensors covering each target and nothing else.
    pub fn per_target_unique_sensors(&self) -> &[Vec<usize>] {
        &self.per_target_unique_sensors
    }

    pub fn num_sensors(&self) -> usize {
        self.per_sensor_targets.len()
    }

    pub fn num_targets(&self) -> usize {
        self.per_target_unique_sensors.len()
    }

    pub fn unique_counts(&self) -> Vec<usize> {
        self.per_target_unique_sensors.iter().map(Vec::len).collect()
    }

    /// Truthful readings implied by this coverage and an occupancy vector.
    pub fn readings(&self, occupied: &[bool]) -> Result<Vec<bool>> {
        if occupied.len() != self.num_targets() {
            return Err(invalid(format!(
                "configuration has {} flags but coverage has {} targets",
                occupied.len(),
                self.num_targets()
            )));
        }
        Ok(self
            .per_sensor_targets
            .iter()
            .map(|set| set.iter().any(|&t| occupied[t]))
            .collect())
    }
}

/// Below this many sensor-target pairs the brute-force scan is used.
const INDEX_THRESHOLD: usize = 4096;

/// Exact open-ball coverage. Uses the neighbourhood index for large inputs;
/// the result is identical to [`coverage_map_brute`].
pub fn coverage_map(layout: &TargetLayout, field: &SensorField) -> CoverageMap {
    if layout.n().saturating_mul(field.len()) <= INDEX_THRESHOLD {
        coverage_map_brute(layout, field)
    } else {
        coverage_map_indexed(layout, field)
    }
}

/// O(sensors x targets) scan.
pub fn coverage_map_brute(layout: &TargetLayout, field: &SensorField) -> CoverageMap {
    let region = layout.region();
    let r = field.radius();
    let sets = field
        .positions()
        .iter()
        .map(|&s| {
            layout
                .positions()
                .iter()
                .enumerate()
                .filter(|(_, &t)| region.covers(s, r, t))
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    CoverageMap::from_sensor_sets(layout.n(), sets)
}

/// Coverage through a sorted (1D) or bucketed (2D) target index.
pub fn coverage_map_indexed(layout: &TargetLayout, field: &SensorField) -> CoverageMap {
    let sets = match layout.region().dimension {
        Dimension::One => index_1d(layout, field),
        Dimension::Two => BucketIndex::new(layout, field.radius()).query_all(layout, field),
    };
    CoverageMap::from_sensor_sets(layout.n(), sets)
}

fn index_1d(layout: &TargetLayout, field: &SensorField) -> Vec<Vec<usize>> {
    let xs: Vec<f64> = layout.positions().iter().map(|p| p.x).collect();
    let r = field.radius();
    field
        .positions()
        .iter()
        .map(|s| {
            // Same predicate as Region::covers, evaluated on the sorted axis.
            let lo = xs.partition_point(|&t| t <= s.x - r);
            let hi = xs.partition_point(|&t| t < s.x + r);
            (lo..hi.max(lo)).collect()
        })
        .collect()
}

/// Uniform bucket grid over the unit square with cells no smaller than the radius.
struct BucketIndex {
    side: usize,
    buckets: Vec<Vec<usize>>,
}

impl BucketIndex {
    fn new(layout: &TargetLayout, radius: f64) -> Self {
        let by_radius = (1.0 / radius).floor().max(1.0);
        let by_count = (2.0 * (layout.n() as f64).sqrt()).ceil().max(1.0);
        let side = by_radius.min(by_count).min(4096.0) as usize;
        let mut buckets = vec![Vec::new(); side * side];
        for (i, p) in layout.positions().iter().enumerate() {
            let (cx, cy) = Self::cell(side, *p);
            buckets[cx * side + cy].push(i);
        }
        BucketIndex { side, buckets }
    }

    fn cell(side: usize, p: Point) -> (usize, usize) {
        let c = |v: f64| ((v * side as f64) as usize).min(side - 1);
        (c(p.x), c(p.y))
    }

    fn query_all(&self, layout: &TargetLayout, field: &SensorField) -> Vec<Vec<usize>> {
        let region = layout.region();
        let torus = region.boundary == crate::model::BoundaryMode::Torus;
        let r = field.radius();
        let side = self.side as isize;
        let targets = layout.positions();
        let mut cells: Vec<usize> = Vec::with_capacity(9);
        field
            .positions()
            .iter()
            .map(|&s| {
                let (cx, cy) = Self::cell(self.side, s);
                cells.clear();
                for dx in -1isize..=1 {
                    for dy in -1isize..=1 {
                        let (mut x, mut y) = (cx as isize + dx, cy as isize + dy);
                        if torus {
                            x = x.rem_euclid(side);
                            y = y.rem_euclid(side);
                        } else if x < 0 || y < 0 || x >= side || y >= side {
                            continue;
                        }
                        let idx = (x * side + y) as usize;
                        if !cells.contains(&idx) {
                            cells.push(idx);
                        }
                    }
                }
                let mut hits: Vec<usize> = cells
                    .iter()
                    .flat_map(|&c| self.buckets[c].iter().copied())
                    .filter(|&t| region.covers(s, r, targets[t]))
                    .collect();
                hits.sort_unstable();
                hits
            })
            .collect()
    }
}

/// Identifiability summary of one instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    pub identifiable: Vec<bool>,
    pub unique_count: Vec<usize>,
    pub num_identifiable: usize,
    pub fully_separable: bool,
}

impl SeparabilityReport {
    pub fn from_coverage(cmap: &CoverageMap) -> Self {
        let unique_count = cmap.unique_counts();
        let identifiable: Vec<bool> = unique_count.iter().map(|&c| c >= 1).collect();
        let num_identifiable = identifiable.iter().filter(|&&b| b).count();
        SeparabilityReport {
            fully_separable: num_identifiable == unique_count.len(),
            identifiable,
            unique_count,
            num_identifiable,
        }
    }

    pub fn n(&self) -> usize {
        self.identifiable.len()
    }
}

pub fn analyze(layout: &TargetLayout, field: &SensorField) -> SeparabilityReport {
    SeparabilityReport::from_coverage(&coverage_map(layout, field))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Occupied,
    Empty,
    Unknown,
}

impl Verdict {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Verdict::Occupied
        } else {
            Verdict::Empty
        }
    }

    /// Whether the verdict is a definite answer equal to `occupied`.
    pub fn is_correct(self, occupied: bool) -> bool {
        self == Verdict::from_bit(occupied)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedConfiguration {
    pub verdicts: Vec<Verdict>,
}

/// Decode identifiable targets from truthful readings; everything else is
/// [`Verdict::Unknown`].
pub fn decode_truthful(observations: &[bool], cmap: &CoverageMap) -> Result<DecodedConfiguration> {
    if observations.len() != cmap.num_sensors() {
        return Err(invalid(format!(
            "{} readings for {} sensors",
            observations.len(),
            cmap.num_sensors()
        )));
    }
    let verdicts = cmap
        .per_target_unique_sensors()
        .iter()
        .enumerate()
        .map(|(i, sensors)| {
            let Some((&first, rest)) = sensors.split_first() else {
                return Ok(Verdict::Unknown);
            };
            let bit = observations[first];
            if let Some(&other) = rest.iter().find(|&&s| observations[s] != bit) {
                return Err(Error::Integrity(format!(
                    "unique coverers {first} and {other} of target {i} disagree"
                )));
            }
            Ok(Verdict::from_bit(bit))
        })
        .collect::<Result<_>>()?;
    Ok(DecodedConfiguration { verdicts })
}

/// Gaps `V_1 = T_1`, `V_i = T_i - T_{i-1}` of a sorted sequence.
pub fn spacings_of(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("spacings need positions sorted ascending"));
    }
    let mut prev = 0.0;
    Ok(xs
        .iter()
        .map(|&x| {
            let v = x - prev;
            prev = x;
            v
        })
        .collect())
}

/// Spacings of a one-dimensional layout.
pub fn spacings(layout: &TargetLayout) -> Result<Vec<f64>> {
    if layout.region().dimension != Dimension::One {
        return Err(invalid("spacings are defined for 1D layouts only"));
    }
    let xs: Vec<f64> = layout.positions().iter().map(|p| p.x).collect();
    spacings_of(&xs)
}

/// `W_i = V_i + V_{i+1}` for interior targets `2 <= i <= n - 1`.
pub fn adjacent_sums(v: &[f64]) -> Vec<f64> {
    if v.len() < 3 {
        return Vec::new();
    }
    v[1..].windows(2).map(|w| w[0] + w[1]).collect()
}

/// Largest target count [`brute_force_distinguishable`] will enumerate.
pub const MAX_BRUTE_FORCE_TARGETS: usize = 16;

/// Whether all `2^n` configurations yield pairwise distinct truthful readings.
pub fn brute_force_distinguishable(layout: &TargetLayout, field: &SensorField) -> Result<bool> {
    let n = layout.n();
    if n > MAX_BRUTE_FORCE_TARGETS {
        return Err(Error::Capacity {
            what: "target count",
            actual: n,
            limit: MAX_BRUTE_FORCE_TARGETS,
        });
    }
    let region = layout.region();
    let r = field.radius();
    // Sensors with equal coverage masks always agree, and empty masks always read 0.
    let mut masks: Vec<u32> = field
        .positions()
        .iter()
        .map(|&s| {
            layout
                .positions()
                .iter()
                .enumerate()
                .filter(|(_, &t)| region.covers(s, r, t))
                .fold(0u32, |m, (i, _)| m | 1 << i)
        })
        .filter(|&m| m != 0)
        .collect();
    masks.sort_unstable();
    masks.dedup();

    let words = masks.len().div_ceil(64).max(1);
    let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(1 << n);
    for config in 0u32..(1u32 << n) {
        let mut obs = vec![0u64; words];
        for (j, &m) in masks.iter().enumerate() {
            if config & m != 0 {
                obs[j / 64] |= 1 << (j % 64);
            }
        }
        if !seen.insert(obs) {
            return Ok(false);
        }
    }
    Ok(true)
}
