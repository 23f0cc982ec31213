//! Instance files for `check`.
//!
//! ```text
//! radius = 0.1
//! boundary = clip        # optional: clip | torus
//! [targets]
//! 0.2
//! 0.7
//! [sensors]
//! 0.25
//! ```
//!
//! Each point is one line of one or two coordinates separated by whitespace
//! or a comma; every point in a file must have the same number.

use serde::{Deserialize, Serialize};

use sepsim_core::model::{BoundaryMode, Dimension, Point, Region, SensorField, TargetLayout, TargetModel};
use sepsim_core::separability::analyze;

use crate::config::parse_boundary;
use crate::error::Diagnostic;

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    pub radius: f64,
    pub region: Region,
    pub targets: Vec<Point>,
    pub sensors: Vec<Point>,
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Header,
    Targets,
    Sensors,
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self, Diagnostic> {
        let mut radius = None;
        let mut boundary = BoundaryMode::Clip;
        let mut section = Section::Header;
        let mut seen = (false, false);
        let mut dim: Option<usize> = None;
        let (mut targets, mut sensors) = (Vec::new(), Vec::new());

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            match content {
                "[targets]" | "[sensors]" => {
                    let (sec, flag) = if content == "[targets]" {
                        (Section::Targets, &mut seen.0)
                    } else {
                        (Section::Sensors, &mut seen.1)
                    };
                    if *flag {
                        return Err(Diagnostic::at(line, format!("duplicate section {content}")));
                    }
                    *flag = true;
                    section = sec;
                    continue;
                }
                _ if content.starts_with('[') => {
                    return Err(Diagnostic::at(line, format!("unknown section {content}")));
                }
                _ => {}
            }
            if let Some((key, value)) = content.split_once('=') {
                let (key, value) = (key.trim(), value.trim());
                match key {
                    "radius" if radius.is_some() => {
                        return Err(Diagnostic::at(line, "duplicate key 'radius'"));
                    }
                    "radius" => {
                        let r: f64 = value
                            .parse()
                            .map_err(|_| Diagnostic::at(line, format!("invalid radius '{value}'")))?;
                        if !(r > 0.0 && r.is_finite()) {
                            return Err(Diagnostic::at(line, format!("radius must be positive, got {value}")));
                        }
                        radius = Some(r);
                    }
                    "boundary" => boundary = parse_boundary(value).map_err(|m| Diagnostic::at(line, m))?,
                    _ => return Err(Diagnostic::at(line, format!("unknown key '{key}'"))),
                }
                continue;
            }
            let coords: Vec<f64> = content
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|_| Diagnostic::at(line, format!("invalid coordinate '{s}'"))))
                .collect::<Result<_, _>>()?;
            if !matches!(coords.len(), 1 | 2) {
                return Err(Diagnostic::at(line, format!("expected 1 or 2 coordinates, found {}", coords.len())));
            }
            match dim {
                None => dim = Some(coords.len()),
                Some(d) if d != coords.len() => {
                    return Err(Diagnostic::at(
                        line,
                        format!("point has {} coordinates, earlier points have {d}", coords.len()),
                    ))
                }
                _ => {}
            }
            let p = Point::new(coords[0], coords.get(1).copied().unwrap_or(0.0));
            match section {
                Section::Header => return Err(Diagnostic::at(line, "point outside [targets] or [sensors]")),
                Section::Targets => targets.push(p),
                Section::Sensors => sensors.push(p),
            }
        }

        let radius = radius.ok_or_else(|| Diagnostic::global("missing required key 'radius'"))?;
        if !seen.0 {
            return Err(Diagnostic::global("missing section [targets]"));
        }
        let dimension = if dim == Some(2) { Dimension::Two } else { Dimension::One };
        let region = Region::new(dimension, boundary);
        if let Some(p) = targets.iter().chain(&sensors).find(|p| !region.contains(**p)) {
            return Err(Diagnostic::global(format!("point ({}, {}) lies outside the unit region", p.x, p.y)));
        }
        Ok(InstanceFile {
            radius,
            region,
            targets,
            sensors,
        })
    }
}

/// Identifiability of an instance, with targets in file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub n: usize,
    pub sensors: usize,
    pub radius: f64,
    pub identifiable: Vec<bool>,
    pub unique_count: Vec<usize>,
    pub num_identifiable: usize,
    pub fully_separable: bool,
}

pub fn check(instance: &InstanceFile) -> Result<CheckReport, sepsim_core::Error> {
    // One-dimensional layouts must be sorted; remember where each target came from.
    let mut order: Vec<usize> = (0..instance.targets.len()).collect();
    if instance.region.dimension == Dimension::One {
        order.sort_by(|&i, &j| instance.targets[i].x.total_cmp(&instance.targets[j].x));
    }
    let sorted = order.iter().map(|&i| instance.targets[i]).collect();
    let layout = TargetLayout::from_positions(instance.region, sorted, TargetModel::Explicit)?;
    let field = SensorField::new(instance.sensors.clone(), instance.radius)?;
    let report = analyze(&layout, &field);

    let n = order.len();
    let mut identifiable = vec![false; n];
    let mut unique_count = vec![0; n];
    for (k, &orig) in order.iter().enumerate() {
        identifiable[orig] = report.identifiable[k];
        unique_count[orig] = report.unique_count[k];
    }
    Ok(CheckReport {
        n,
        sensors: field.len(),
        radius: instance.radius,
        identifiable,
        unique_count,
        num_identifiable: report.num_identifiable,
        fully_separable: report.fully_separable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_style_instance() {
        // T_c is covered alone by two sensors; T_a and T_b are never separated.
        let text = "radius = 0.1\n[targets]\n0.7   # T_c\n0.2   # T_a\n0.25  # T_b\n\
                    [sensors]\n0.45\n0.22\n0.65\n0.75\n";
        let inst = InstanceFile::parse(text).unwrap();
        let rep = check(&inst).unwrap();
        assert_eq!(rep.identifiable, vec![true, false, false]);
        assert_eq!(rep.unique_count, vec![2, 0, 0]);
        assert!(!rep.fully_separable);
    }

    #[test]
    fn empty_sensor_list_is_not_separable() {
        let inst = InstanceFile::parse("radius = 0.2\n[targets]\n0.5\n[sensors]\n").unwrap();
        let rep = check(&inst).unwrap();
        assert!(!rep.fully_separable);
        assert_eq!(rep.num_identifiable, 0);
    }

    #[test]
    fn two_point_grid_well_placed() {
        let inst = InstanceFile::parse("radius = 0.25\n[targets]\n0.25\n0.75\n[sensors]\n0.2\n0.8\n").unwrap();
        assert!(check(&inst).unwrap().fully_separable);
    }

    #[test]
    fn two_dimensional_points() {
        let inst =
            InstanceFile::parse("radius = 0.1\nboundary = torus\n[targets]\n0.05, 0.5\n[sensors]\n0.98 0.5\n").unwrap();
        assert_eq!(inst.region.dimension, Dimension::Two);
        assert!(check(&inst).unwrap().fully_separable);
    }

    #[test]
    fn malformed_files() {
        let cases = [
            ("[targets]\n0.5\n", None),
            ("radius = 0.1\n0.5\n", Some(2)),
            ("radius = 0.1\n[targets]\n0.5 0.2 0.1\n", Some(3)),
            ("radius = 0.1\n[targets]\n0.5\n0.2 0.3\n", Some(4)),
            ("radius = x\n[targets]\n", Some(1)),
            ("radius = 0.1\n[stuff]\n", Some(2)),
            ("radius = 0.1\n[targets]\nabc\n", Some(3)),
            ("radius = 0.1\ncolour = red\n", Some(2)),
        ];
        for (text, line) in cases {
            let err = InstanceFile::parse(text).unwrap_err();
            assert_eq!(err.line, line, "{text:?}: {err}");
        }
        assert!(InstanceFile::parse("radius = 0.1\n[targets]\n1.5\n").is_err());
    }
}
