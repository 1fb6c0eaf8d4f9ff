//! Ground-truth acceptance model compiled to level-indexed arrays.

use std::collections::{BTreeMap, HashMap};

use crate::domain::{Region, Segment, Vertical};
use crate::error::{Error, Result};
use crate::features::bins::{Cadence, Level, SrdBin, SurgeClass, TravelDays, VolatilityBin};

/// Live explanatory variables of one offer.
#[derive(Clone, Copy, Debug)]
pub struct LiveRow<'a> {
    pub srd: SrdBin,
    pub travel_days: TravelDays,
    pub cadence: Cadence,
    pub volatility: VolatilityBin,
    pub surge: SurgeClass,
    pub vertical: Vertical,
    pub origin: &'a Region,
    pub destination: &'a Region,
    pub log_fleet_size: Option<f64>,
    pub log_shipper_volume: f64,
}

#[derive(Clone, Debug, Default)]
struct SegmentTruth {
    constant: f64,
    srd: Vec<f64>,
    travel_days: Vec<f64>,
    cadence: Vec<f64>,
    volatility: Vec<f64>,
    surge: Vec<f64>,
    vertical: Vec<f64>,
    origin: HashMap<Region, f64>,
    dest: HashMap<Region, f64>,
    log_fleet_size: f64,
    log_shipper_volume: f64,
}

fn index_of<L: Level>(l: L) -> usize {
    L::all().iter().position(|x| *x == l).expect("level is listed")
}

fn set_level<L: Level>(arr: &mut Vec<f64>, level: &str, value: f64) -> Result<()> {
    if arr.is_empty() {
        *arr = vec![0.0; L::all().len()];
    }
    let l = L::from_label(level)?;
    arr[index_of(l)] = value;
    Ok(())
}

fn get<L: Level>(arr: &[f64], l: L) -> f64 {
    if arr.is_empty() {
        0.0
    } else {
        arr[index_of(l)]
    }
}

impl SegmentTruth {
    fn compile(map: &BTreeMap<String, f64>) -> Result<Self> {
        let mut t = SegmentTruth::default();
        for (name, &v) in map {
            match name.split_once(':') {
                None => match name.as_str() {
                    "const" => t.constant = v,
                    "log_fleet_size" => t.log_fleet_size = v,
                    "log_shipper_volume" => t.log_shipper_volume = v,
                    other => return Err(Error::Config(format!("unknown truth coefficient `{other}`"))),
                },
                Some((var, level)) => match var {
                    "srd" => set_level::<SrdBin>(&mut t.srd, level, v)?,
                    "travel_days" => set_level::<TravelDays>(&mut t.travel_days, level, v)?,
                    "cadence" => set_level::<Cadence>(&mut t.cadence, level, v)?,
                    "volatility" => set_level::<VolatilityBin>(&mut t.volatility, level, v)?,
                    "surge" => set_level::<SurgeClass>(&mut t.surge, level, v)?,
                    "vertical" => set_level::<Vertical>(&mut t.vertical, level, v)?,
                    "origin" => {
                        t.origin.insert(Region::new(level), v);
                    }
                    "dest" => {
                        t.dest.insert(Region::new(level), v);
                    }
                    other => return Err(Error::Config(format!("unknown truth variable `{other}`"))),
                },
            }
        }
        Ok(t)
    }

    fn eta(&self, r: &LiveRow<'_>) -> f64 {
        self.constant
            + get(&self.srd, r.srd)
            + get(&self.travel_days, r.travel_days)
            + get(&self.cadence, r.cadence)
            + get(&self.volatility, r.volatility)
            + get(&self.surge, r.surge)
            + get(&self.vertical, r.vertical)
            + self.origin.get(r.origin).copied().unwrap_or(0.0)
            + self.dest.get(r.destination).copied().unwrap_or(0.0)
            + r.log_fleet_size.map_or(0.0, |f| f * self.log_fleet_size)
            + self.log_shipper_volume * r.log_shipper_volume
    }
}

/// Truth coefficients for all four segments.
#[derive(Clone, Debug)]
pub struct TruthModel {
    segments: BTreeMap<Segment, SegmentTruth>,
}

impl TruthModel {
    pub fn compile(segments: &BTreeMap<String, BTreeMap<String, f64>>) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (label, map) in segments {
            let seg: Segment = label.parse()?;
            out.insert(seg, SegmentTruth::compile(map)?);
        }
        Ok(TruthModel { segments: out })
    }

    /// Linear predictor of `row` in `segment`.
    pub fn eta(&self, segment: Segment, row: &LiveRow<'_>) -> Result<f64> {
        self.segments
            .get(&segment)
            .map(|t| t.eta(row))
            .ok_or_else(|| Error::Config(format!("no truth coefficients for {}", segment.label())))
    }
}
