//! Per-segment stickiness curves and price-for-PAR tables as plot data.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSet;
use crate::domain::{MarketCondition, Segment};
use crate::error::{Error, Result};
use crate::features::{Cadence, Level, SurgeClass, TravelDays, VolatilityBin};
use crate::io::{self, CsvSchema};

use super::curve::{acceptance_curve, CurveOptions, StickinessCurve};
use super::price::{price_for_target_par, InversionMethod, PriceQuery, Saturation};

pub const CURVE_SCHEMA: CsvSchema = CsvSchema {
    name: "stickiness_curve",
    version: 1,
    columns: &["segment", "bin", "srd", "probability", "fitted"],
};

pub const PRICE_SCHEMA: CsvSchema = CsvSchema {
    name: "price_for_par",
    version: 1,
    columns: &["segment", "variable", "level", "srd_star", "contract_price", "saturated"],
};

/// Primary acceptance rates pinned to the base SRD bin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anchors {
    pub soft: f64,
    pub tight: f64,
}

impl Default for Anchors {
    fn default() -> Self {
        Anchors { soft: 0.819, tight: 0.685 }
    }
}

impl Anchors {
    pub fn for_market(&self, market: MarketCondition) -> f64 {
        match market {
            MarketCondition::Soft => self.soft,
            MarketCondition::Tight => self.tight,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub anchors: Anchors,
    pub spot_price: f64,
    pub target: f64,
    pub curve: CurveOptions,
    pub method: InversionMethod,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            anchors: Anchors::default(),
            spot_price: 1000.0,
            target: 0.90,
            curve: CurveOptions::default(),
            method: InversionMethod::Line,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceRow {
    pub segment: Segment,
    pub variable: String,
    pub level: String,
    pub srd_star: f64,
    pub contract_price: f64,
    pub saturated: Option<Saturation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub segment: Segment,
    pub anchor: f64,
    /// `None` when no SRD bin is significant.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub n_points: usize,
    pub plot_range: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub options: ReportOptions,
    pub curves: Vec<StickinessCurve>,
    pub summaries: Vec<CurveSummary>,
    pub prices: Vec<PriceRow>,
}

impl SegmentReport {
    pub fn price(&self, segment: Segment, variable: &str, level: &str) -> Option<&PriceRow> {
        self.prices
            .iter()
            .find(|r| r.segment == segment && r.variable == variable && r.level == level)
    }

    pub fn slope(&self, segment: Segment) -> Option<f64> {
        self.summaries.iter().find(|s| s.segment == segment).and_then(|s| s.slope)
    }
}

fn levels<L: Level>(skip: &[L]) -> Vec<(String, String, Option<String>)> {
    L::all()
        .iter()
        .filter(|l| !skip.contains(l))
        .map(|l| {
            let name = (*l != L::BASE).then(|| l.coefficient_name());
            (L::VARIABLE.to_string(), l.label().to_string(), name)
        })
        .collect()
}

/// Levels priced in the report: (variable, level label, coefficient name or
/// `None` for the base level).
pub fn report_levels() -> Vec<(String, String, Option<String>)> {
    let mut v = levels::<Cadence>(&[Cadence::P0]);
    v.extend(levels::<VolatilityBin>(&[]));
    v.extend(levels::<SurgeClass>(&[]));
    v.extend(levels::<TravelDays>(&[]));
    v
}

/// Curves and price tables for every segment in `models`.
pub fn segment_report(models: &BTreeMap<Segment, CoefficientSet>, options: &ReportOptions) -> Result<SegmentReport> {
    let mut curves = Vec::new();
    let mut summaries = Vec::new();
    let mut prices = Vec::new();
    for (&segment, model) in models {
        let anchor = options.anchors.for_market(segment.market);
        match acceptance_curve(model, segment, anchor, &options.curve) {
            Ok(c) => {
                summaries.push(CurveSummary {
                    segment,
                    anchor,
                    slope: Some(c.slope),
                    intercept: Some(c.intercept),
                    n_points: c.points.len(),
                    plot_range: Some(c.plot_range),
                });
                curves.push(c);
            }
            Err(Error::DegenerateCurve(_)) => summaries.push(CurveSummary {
                segment,
                anchor,
                slope: None,
                intercept: None,
                n_points: 1,
                plot_range: None,
            }),
            Err(e) => return Err(e),
        }
        let query = PriceQuery {
            spot_price: options.spot_price,
            target: options.target,
            anchor,
            method: options.method,
        };
        for (variable, level, name) in report_levels() {
            let overrides: Vec<String> = name.into_iter().collect();
            let r = price_for_target_par(model, segment, &overrides, &query, &options.curve)?;
            prices.push(PriceRow {
                segment,
                variable,
                level,
                srd_star: r.srd_star,
                contract_price: r.contract_price,
                saturated: r.saturated,
            });
        }
    }
    Ok(SegmentReport { options: *options, curves, summaries, prices })
}

fn saturation_label(s: Option<Saturation>) -> &'static str {
    match s {
        None => "",
        Some(Saturation::Low) => "low",
        Some(Saturation::High) => "high",
    }
}

/// File names written by [`write_report`].
pub const REPORT_FILES: [&str; 6] = [
    "curves.csv",
    "price_cadence.csv",
    "price_volatility.csv",
    "price_surge.csv",
    "price_travel_days.csv",
    "summary.json",
];

#[derive(Serialize)]
struct Summary<'a> {
    schema: &'static str,
    config_hash: &'a str,
    options: &'a ReportOptions,
    segments: &'a [CurveSummary],
    saturated: Vec<&'a PriceRow>,
}

/// Writes curve points, one price table per variable, and a JSON summary.
pub fn write_report(dir: &Path, report: &SegmentReport, config_hash: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    io::write_csv(
        &dir.join("curves.csv"),
        &CURVE_SCHEMA,
        config_hash,
        report.curves.iter().flat_map(|c| {
            c.points.iter().map(move |p| {
                vec![
                    c.segment.label(),
                    p.bin.clone(),
                    io::fmt_f64(p.srd),
                    io::fmt_f64(p.probability),
                    io::fmt_f64(c.evaluate(p.srd)),
                ]
            })
        }),
    )?;
    for variable in ["cadence", "volatility", "surge", "travel_days"] {
        io::write_csv(
            &dir.join(format!("price_{variable}.csv")),
            &PRICE_SCHEMA,
            config_hash,
            report.prices.iter().filter(|r| r.variable == variable).map(|r| {
                vec![
                    r.segment.label(),
                    r.variable.clone(),
                    r.level.clone(),
                    io::fmt_f64(r.srd_star),
                    io::fmt_f64(r.contract_price),
                    saturation_label(r.saturated).to_string(),
                ]
            }),
        )?;
    }
    let summary = Summary {
        schema: "stickiness_summary/1",
        config_hash,
        options: &report.options,
        segments: &report.summaries,
        saturated: report.prices.iter().filter(|r| r.saturated.is_some()).collect(),
    };
    io::write_json(&dir.join("summary.json"), &summary)
}
