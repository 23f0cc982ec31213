//! CSV and JSON serialization of estimate rows.
//!
//! Floats use the shortest representation that parses back to the same
//! value; lines end in `\n`.

use std::str::FromStr;

use sepsim_core::montecarlo::EstimateRow;

use crate::error::CliResult;

pub const CSV_HEADER: &str = "param,successes,trials,estimate,ci_low,ci_high,wall_time_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("format must be 'csv' or 'json', got '{s}'")),
        }
    }
}

pub fn to_csv(rows: &[EstimateRow]) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(','))?;
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn from_csv(text: &str) -> CliResult<Vec<EstimateRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn to_json(rows: &[EstimateRow]) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(rows)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> CliResult<Vec<EstimateRow>> {
    Ok(serde_json::from_str(text)?)
}

pub fn render(rows: &[EstimateRow], format: Format) -> CliResult<String> {
    match format {
        Format::Csv => to_csv(rows),
        Format::Json => to_json(rows),
    }
}

pub fn parse(text: &str, format: Format) -> CliResult<Vec<EstimateRow>> {
    match format {
        Format::Csv => from_csv(text),
        Format::Json => from_json(text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(param: &str, s: u64, t: u64) -> EstimateRow {
        EstimateRow::new(param, s, t, 12).unwrap()
    }

    #[test]
    fn csv_layout() {
        let text = to_csv(&[row("m=5608", 399, 400), row("m=2108", 0, 400)]).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert!(lines.next().unwrap().starts_with("m=5608,399,400,0.9975,"));
        assert!(lines.next().unwrap().starts_with("m=2108,0,400,0.0,0.0,"));
        assert!(text.ends_with('\n') && !text.contains('\r'));
        assert_eq!(to_csv(&[]).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn json_field_names() {
        let text = to_json(&[row("gamma=0.1", 3, 4)]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let keys: Vec<_> = v[0].as_object().unwrap().keys().cloned().collect();
        let mut want: Vec<_> = CSV_HEADER.split(',').map(String::from).collect();
        want.sort();
        let mut keys = keys;
        keys.sort();
        assert_eq!(keys, want);
    }

    #[test]
    fn params_with_commas_are_quoted() {
        let rows = vec![row("x=1,2", 1, 2)];
        assert_eq!(from_csv(&to_csv(&rows).unwrap()).unwrap(), rows);
    }

    proptest! {
        #[test]
        fn round_trip(specs in prop::collection::vec((1u64..100_000, 0.0f64..=1.0, -1e6f64..1e6), 0..20)) {
            let rows: Vec<EstimateRow> = specs
                .iter()
                .map(|&(t, frac, v)| row(&format!("m={v}"), (frac * t as f64) as u64, t))
                .collect();
            prop_assert_eq!(&from_csv(&to_csv(&rows).unwrap()).unwrap(), &rows);
            prop_assert_eq!(&from_json(&to_json(&rows).unwrap()).unwrap(), &rows);
        }
    }
}
