//! Dummy encoding of feature rows for one segment's acceptance model.
//!
//! Levels observed too rarely, or without both outcomes, cannot be estimated
//! and would stall the fit; rows carrying such levels are dropped, repeating
//! until every remaining level is supported.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;

use crate::coefficients::CoefficientSet;
use crate::domain::{Region, Vertical, DEFAULT_BASE_DEST, DEFAULT_BASE_ORIGIN};
use crate::error::{Error, Result};
use crate::gee::DesignMatrix;

use super::bins::{Cadence, Level, SrdBin, SurgeClass, TravelDays, VolatilityBin};
use super::rows::FeatureRow;

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderOptions {
    /// Minimum rows per level, bases included.
    pub min_level_count: usize,
    /// Drop levels whose rows all share one outcome.
    pub require_both_outcomes: bool,
    /// Fold the 0% cadence level into 25%, which has a coefficient.
    pub merge_cadence_zero: bool,
    /// Include origin and destination region dummies.
    pub region_effects: bool,
    pub base_origin: Region,
    pub base_dest: Region,
}

impl Default for EncoderOptions {
    fn default() -> Self {
        EncoderOptions {
            min_level_count: 10,
            require_both_outcomes: true,
            merge_cadence_zero: true,
            region_effects: true,
            base_origin: Region::new(DEFAULT_BASE_ORIGIN),
            base_dest: Region::new(DEFAULT_BASE_DEST),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EncodedDesign {
    pub design: DesignMatrix,
    /// Load id of each design row.
    pub load_ids: Vec<u64>,
    pub dropped_rows: usize,
    /// Levels whose rows were dropped, as coefficient names.
    pub pruned_levels: Vec<String>,
    /// Base level actually used per variable.
    pub bases: BTreeMap<String, String>,
}

struct Variable {
    name: &'static str,
    /// Levels in column order.
    order: Vec<String>,
    base: String,
}

fn level_names<L: Level>() -> Vec<String> {
    L::all().iter().map(|l| l.coefficient_name()).collect()
}

fn fixed<L: Level>() -> Variable {
    Variable { name: L::VARIABLE, order: level_names::<L>(), base: L::BASE.coefficient_name() }
}

fn row_levels(r: &FeatureRow, opts: &EncoderOptions) -> Vec<String> {
    let cadence = if opts.merge_cadence_zero && r.cadence == Cadence::P0 {
        Cadence::P25
    } else {
        r.cadence
    };
    let mut v = vec![
        r.srd.coefficient_name(),
        r.travel_days.coefficient_name(),
        cadence.coefficient_name(),
        r.volatility.coefficient_name(),
        r.surge.coefficient_name(),
        r.vertical.coefficient_name(),
    ];
    if opts.region_effects {
        v.push(format!("origin:{}", r.origin));
        v.push(format!("dest:{}", r.destination));
    }
    v
}

/// Encodes rows as a design matrix clustered by carrier.
pub fn encode_design(rows: &[FeatureRow], opts: &EncoderOptions) -> Result<EncodedDesign> {
    let mut vars = vec![
        fixed::<SrdBin>(),
        fixed::<TravelDays>(),
        fixed::<Cadence>(),
        fixed::<VolatilityBin>(),
        fixed::<SurgeClass>(),
        fixed::<Vertical>(),
    ];
    if opts.region_effects {
        let origins: BTreeSet<String> = rows.iter().map(|r| format!("origin:{}", r.origin)).collect();
        let dests: BTreeSet<String> = rows.iter().map(|r| format!("dest:{}", r.destination)).collect();
        vars.push(Variable {
            name: "origin",
            order: origins.into_iter().collect(),
            base: format!("origin:{}", opts.base_origin),
        });
        vars.push(Variable {
            name: "dest",
            order: dests.into_iter().collect(),
            base: format!("dest:{}", opts.base_dest),
        });
    }

    let levels: Vec<Vec<String>> = rows.iter().map(|r| row_levels(r, opts)).collect();
    let mut active: Vec<usize> = (0..rows.len()).collect();
    let mut pruned = BTreeSet::new();
    loop {
        let mut stats: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for &i in &active {
            for name in &levels[i] {
                let e = stats.entry(name.as_str()).or_insert((0, 0));
                e.0 += 1;
                e.1 += rows[i].outcome as usize;
            }
        }
        // Bases obey the same rules; a sparse base is replaced below.
        let failing: BTreeSet<String> = stats
            .iter()
            .filter(|(_, &(count, ones))| {
                count < opts.min_level_count
                    || (opts.require_both_outcomes && (ones == 0 || ones == count))
            })
            .map(|(name, _)| name.to_string())
            .collect();
        if failing.is_empty() {
            break;
        }
        active.retain(|&i| !levels[i].iter().any(|l| failing.contains(l)));
        pruned.extend(failing);
    }
    if active.is_empty() {
        return Err(Error::InsufficientData("no rows left after pruning sparse levels".into()));
    }

    // Levels present among the kept rows, with a fallback base if the
    // canonical one vanished.
    let mut bases = BTreeMap::new();
    let mut columns: Vec<String> = vec!["const".into()];
    let mut col_of: BTreeMap<String, usize> = BTreeMap::new();
    let mut continuous: Vec<&'static str> = Vec::new();
    let fleet: Vec<Option<f64>> = active.iter().map(|&i| rows[i].log_fleet_size).collect();
    let with_fleet = fleet.iter().filter(|f| f.is_some()).count();
    if with_fleet == fleet.len() {
        continuous.push("log_fleet_size");
    } else if with_fleet > 0 {
        return Err(Error::domain(
            "rows mix asset and non-asset carriers; encode one carrier type at a time",
        ));
    }
    continuous.push("log_shipper_volume");

    for (vi, var) in vars.iter().enumerate() {
        if var.name == Vertical::VARIABLE {
            for c in &continuous {
                columns.push(c.to_string());
            }
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for &i in &active {
            *counts.entry(levels[i][vi].as_str()).or_insert(0) += 1;
        }
        let base = if counts.contains_key(var.base.as_str()) {
            var.base.clone()
        } else {
            let promoted = var
                .order
                .iter()
                .filter(|l| counts.contains_key(l.as_str()))
                .max_by_key(|l| (counts[l.as_str()], std::cmp::Reverse((*l).clone())))
                .expect("kept rows carry a level")
                .clone();
            log::info!("base level {} absent or pruned; using {promoted} as the {} base", var.base, var.name);
            promoted
        };
        for level in &var.order {
            if *level != base && counts.contains_key(level.as_str()) {
                col_of.insert(level.clone(), columns.len());
                columns.push(level.clone());
            }
        }
        bases.insert(var.name.to_string(), base);
    }
    let n = active.len();
    let p = columns.len();
    let mut x = DMatrix::<f64>::zeros(n, p);
    let fleet_col = columns.iter().position(|c| c == "log_fleet_size");
    let volume_col = columns.iter().position(|c| c == "log_shipper_volume").expect("always present");
    for (r, &i) in active.iter().enumerate() {
        x[(r, 0)] = 1.0;
        for l in &levels[i] {
            if let Some(&j) = col_of.get(l) {
                x[(r, j)] = 1.0;
            }
        }
        if let Some(j) = fleet_col {
            x[(r, j)] = rows[i].log_fleet_size.expect("checked above");
        }
        x[(r, volume_col)] = rows[i].log_shipper_volume;
    }
    let y: Vec<f64> = active.iter().map(|&i| rows[i].outcome as f64).collect();
    let clusters: Vec<String> = active.iter().map(|&i| rows[i].carrier_id.clone()).collect();
    Ok(EncodedDesign {
        design: DesignMatrix::new(columns, x, y, clusters)?,
        load_ids: active.iter().map(|&i| rows[i].load_id).collect(),
        dropped_rows: rows.len() - n,
        pruned_levels: pruned.into_iter().collect(),
        bases,
    })
}

/// Named design terms of one row: `const`, one dummy per categorical
/// level (bases included) and the continuous covariates.
pub fn design_terms(r: &FeatureRow, opts: &EncoderOptions) -> Vec<(String, f64)> {
    let mut terms = vec![("const".to_string(), 1.0)];
    terms.extend(row_levels(r, opts).into_iter().map(|l| (l, 1.0)));
    if let Some(f) = r.log_fleet_size {
        terms.push(("log_fleet_size".into(), f));
    }
    terms.push(("log_shipper_volume".into(), r.log_shipper_volume));
    terms
}

/// Linear predictor of a row under `set`; levels the set does not carry
/// (bases, pruned levels) contribute zero.
pub fn row_linear_predictor(set: &CoefficientSet, r: &FeatureRow, opts: &EncoderOptions) -> f64 {
    design_terms(r, opts)
        .iter()
        .map(|(name, v)| set.estimate_or_zero(name) * v)
        .sum()
}
