//! Loader for the shipped coefficient tables.
//!
//! Each table is a CSV with one row per variable level and an estimate/SE
//! column pair per segment. `omitted` marks the base level; a blank cell
//! means the variable does not apply to that segment.

use std::path::Path;

use crate::coefficients::{CoefficientEntry, CoefficientSet};
use crate::domain::{MarketCondition, Segment, ServiceType};
use crate::error::{Error, Result};

pub const TABLE_HEADER: [&str; 10] = [
    "variable",
    "level",
    "asset_soft",
    "se",
    "asset_tight",
    "se",
    "nonasset_soft",
    "se",
    "nonasset_tight",
    "se",
];

/// Shipped tables as `(file name, contents)`.
pub const PUBLISHED_TABLES: [(&str, &str); 6] = [
    ("srd.csv", include_str!("../../data/published/srd.csv")),
    ("travel_days.csv", include_str!("../../data/published/travel_days.csv")),
    ("consistency.csv", include_str!("../../data/published/consistency.csv")),
    ("surge.csv", include_str!("../../data/published/surge.csv")),
    ("fleet_size.csv", include_str!("../../data/published/fleet_size.csv")),
    ("shipper_effects.csv", include_str!("../../data/published/shipper_effects.csv")),
];

/// Column label of a segment in the tables.
pub fn table_column(segment: Segment) -> &'static str {
    match (segment.carrier_type, segment.market) {
        (ServiceType::Asset, MarketCondition::Soft) => "asset_soft",
        (ServiceType::Asset, MarketCondition::Tight) => "asset_tight",
        (ServiceType::NonAsset, MarketCondition::Soft) => "nonasset_soft",
        (ServiceType::NonAsset, MarketCondition::Tight) => "nonasset_tight",
    }
}

fn coefficient_name(variable: &str, level: &str) -> String {
    if level.is_empty() {
        variable.to_string()
    } else {
        format!("{variable}:{level}")
    }
}

/// Parses one table for one segment, appending its entries.
fn parse_table(file: &str, text: &str, segment: Segment, out: &mut Vec<CoefficientEntry>) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col = table_column(segment);
    let Some(idx) = header.iter().position(|h| h == col) else {
        return Err(Error::schema(file, 1, col, format!("missing segment column `{col}`")));
    };
    if header != TABLE_HEADER {
        return Err(Error::schema(
            file,
            1,
            "header",
            format!("expected `{}`", TABLE_HEADER.join(",")),
        ));
    }
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let name = coefficient_name(rec.get(0).unwrap_or(""), rec.get(1).unwrap_or(""));
        let est = rec.get(idx).unwrap_or("").trim();
        let se = rec.get(idx + 1).unwrap_or("").trim();
        let parse = |cell: &str, column: &str| -> Result<f64> {
            cell.parse::<f64>()
                .map_err(|_| Error::schema(file, line, column, format!("cannot parse `{cell}`")))
        };
        match est {
            "" => continue,
            "omitted" => {
                if !se.is_empty() {
                    return Err(Error::schema(file, line, "se", "omitted level carries a standard error"));
                }
                out.push(CoefficientEntry { name, estimate: 0.0, se: None });
            }
            _ => {
                let estimate = parse(est, col)?;
                let se = parse(se, "se")?;
                out.push(CoefficientEntry { name, estimate, se: Some(se) });
            }
        }
    }
    Ok(())
}

/// Coefficient set of `segment` from the given tables. Omitted base levels
/// are registered with estimate 0 and no standard error.
pub fn load_published_model(tables: &[(&str, &str)], segment: Segment) -> Result<CoefficientSet> {
    let mut entries = Vec::new();
    for (file, text) in tables {
        parse_table(file, text, segment, &mut entries)?;
    }
    // const first, as in a fitted design
    entries.sort_by_key(|e| e.name != "const");
    Ok(CoefficientSet::published(segment.label(), entries))
}

/// Coefficient set from the tables shipped with the crate.
pub fn builtin_published_model(segment: Segment) -> CoefficientSet {
    load_published_model(&PUBLISHED_TABLES, segment).expect("shipped tables are valid")
}

/// Coefficient set from table files in `dir`, using the shipped file names.
pub fn load_published_dir(dir: &Path, segment: Segment) -> Result<CoefficientSet> {
    let mut texts = Vec::new();
    for (name, _) in PUBLISHED_TABLES {
        let path = dir.join(name);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        texts.push((path.display().to_string(), text));
    }
    let refs: Vec<(&str, &str)> = texts.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    load_published_model(&refs, segment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::fmt_f64;

    fn seg(s: &str) -> Segment {
        s.parse().unwrap()
    }

    #[test]
    fn reads_documented_cells() {
        let asoft = builtin_published_model(seg("asset_soft"));
        let c = asoft.entry("const").unwrap();
        assert_eq!((c.estimate, c.se), (2.0032, Some(0.882)));
        assert_eq!(asoft.coefficients[0].name, "const");

        let ntight = builtin_published_model(seg("non_asset_tight"));
        let w = ntight.entry("surge:within_mean").unwrap();
        assert_eq!((w.estimate, w.se), (0.2668, Some(0.146)));

        let base = asoft.entry("srd:[0,5)").unwrap();
        assert_eq!((base.estimate, base.se), (0.0, None));
        assert!(!asoft.is_significant("srd:[0,5)", 0.1));

        assert!(asoft.entry("log_fleet_size").is_some());
        assert!(ntight.entry("log_fleet_size").is_none());
    }

    #[test]
    fn every_segment_has_the_full_level_set() {
        for s in Segment::ALL {
            let m = builtin_published_model(s);
            let fleet = usize::from(s.carrier_type == ServiceType::Asset);
            // const + 22 srd + 5 travel + 4 cadence + 9 volatility + 4 surge + shipper size + 5 verticals
            assert_eq!(m.coefficients.len(), 1 + 22 + 5 + 4 + 9 + 4 + 1 + 5 + fleet, "{s}");
        }
    }

    #[test]
    fn values_round_trip_through_serialization() {
        for (_, text) in PUBLISHED_TABLES {
            for line in text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("variable")) {
                for cell in line.rsplit(',').take(8) {
                    if let Ok(v) = cell.parse::<f64>() {
                        assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
                    }
                }
            }
        }
        for s in Segment::ALL {
            let m = builtin_published_model(s);
            let json = serde_json::to_string(&m).unwrap();
            let back: CoefficientSet = serde_json::from_str(&json).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn missing_segment_column_is_a_schema_error() {
        let text = "variable,level,asset_soft,se\nconst,,1.0,0.5\n";
        match load_published_model(&[("bad.csv", text)], seg("asset_tight")) {
            Err(Error::Schema { file, column, .. }) => {
                assert_eq!(file, "bad.csv");
                assert_eq!(column, "asset_tight");
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn unparseable_cell_names_its_line() {
        let text = format!("{}\nconst,,abc,0.5,1,1,1,1,1,1\n", TABLE_HEADER.join(","));
        match load_published_model(&[("bad.csv", &text)], seg("asset_soft")) {
            Err(Error::Schema { line, column, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(column, "asset_soft");
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }
}
