//! Featurization of a tender corpus into acceptance-model rows.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;

use crate::domain::{
    CarrierProfile, IsoWeek, MarketCondition, Region, Segment, Segmentation,
    ServiceType, ShipperProfile, TenderRecord, Vertical,
};
use crate::error::{Error, Result};
use crate::io::{self, CsvSchema, CsvTable};
use crate::spot::SpotModel;

use super::bins::{Cadence, Level, SrdBin, SurgeClass, TravelDays, VolatilityBin};
use super::compute;

pub const FEATURE_ROWS_SCHEMA: CsvSchema = CsvSchema {
    name: "feature_rows",
    version: 1,
    columns: &[
        "load_id",
        "shipper_id",
        "carrier_id",
        "origin",
        "dest",
        "week",
        "srd_raw",
        "srd",
        "cadence",
        "volatility_raw",
        "volatility",
        "surge",
        "travel_days",
        "log_fleet_size",
        "log_shipper_volume",
        "vertical",
        "market",
        "carrier_type",
        "outcome",
    ],
};

/// Explanatory variables and outcome of one primary tender.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRow {
    pub load_id: u64,
    pub shipper_id: String,
    pub carrier_id: String,
    pub origin: Region,
    pub destination: Region,
    pub week: IsoWeek,
    pub srd_raw: f64,
    pub srd: SrdBin,
    pub cadence: Cadence,
    pub volatility_raw: f64,
    pub volatility: VolatilityBin,
    pub surge: SurgeClass,
    pub travel_days: TravelDays,
    /// Present for asset carriers only.
    pub log_fleet_size: Option<f64>,
    pub log_shipper_volume: f64,
    pub vertical: Vertical,
    pub market: MarketCondition,
    pub carrier_type: ServiceType,
    pub outcome: u8,
}

impl FeatureRow {
    pub fn segment(&self) -> Segment {
        Segment::new(self.carrier_type, self.market)
    }
}

/// Profiles and models needed to featurize tenders.
pub struct FeatureContext<'a> {
    pub spot: &'a SpotModel,
    pub carriers: &'a BTreeMap<String, CarrierProfile>,
    pub shippers: &'a BTreeMap<String, ShipperProfile>,
    pub segmentation: &'a Segmentation,
}

/// Weekly primary-tender counts of one (shipper, carrier, lane) triple.
struct History {
    counts: HashMap<i64, u32>,
}

impl History {
    fn window(&self, week: i64, back: i64) -> Vec<u32> {
        (week - back..week)
            .map(|w| self.counts.get(&w).copied().unwrap_or(0))
            .collect()
    }
}

type TripleKey = (String, String, String);

/// Builds one row per primary tender whose cadence, volatility and surge
/// windows are fully observed. Rows come back sorted by load id.
pub fn build_feature_rows(tenders: &[TenderRecord], ctx: &FeatureContext<'_>) -> Result<Vec<FeatureRow>> {
    for t in tenders {
        t.validate()?;
    }
    let primaries: Vec<&TenderRecord> = tenders.iter().filter(|t| t.is_primary()).collect();

    let mut missing = BTreeSet::new();
    for t in &primaries {
        if !ctx.carriers.contains_key(&t.carrier_id) {
            missing.insert(format!("carrier:{}", t.carrier_id));
        }
        if !ctx.shippers.contains_key(&t.shipper_id) {
            missing.insert(format!("shipper:{}", t.shipper_id));
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingProfiles(missing.into_iter().collect()));
    }
    let Some(data_start) = tenders.iter().map(|t| t.week.index()).min() else {
        return Ok(Vec::new());
    };

    // Fallback lane distance when the spot model never saw the lane.
    let mut lane_dist: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for t in tenders {
        let e = lane_dist.entry(t.lane.pair_key()).or_insert((0.0, 0));
        e.0 += t.lane.distance;
        e.1 += 1;
    }

    let mut groups: BTreeMap<TripleKey, Vec<&TenderRecord>> = BTreeMap::new();
    for t in &primaries {
        groups
            .entry((t.shipper_id.clone(), t.carrier_id.clone(), t.lane.pair_key()))
            .or_default()
            .push(t);
    }

    let per_group: Vec<Result<Vec<FeatureRow>>> = groups
        .into_par_iter()
        .map(|(_, mut loads)| {
            let mut counts = HashMap::new();
            for t in &loads {
                *counts.entry(t.week.index()).or_insert(0u32) += 1;
            }
            let history = History { counts };
            loads.sort_by(|a, b| {
                (a.week.index(), a.timestamp, a.load_id).cmp(&(b.week.index(), b.timestamp, b.load_id))
            });
            let mut rows = Vec::new();
            let mut rank = 0u32;
            let mut current_week = i64::MIN;
            for t in loads {
                let w = t.week.index();
                if w != current_week {
                    current_week = w;
                    rank = 0;
                }
                rank += 1;
                if w - 5 < data_start {
                    continue;
                }
                let recent = history.window(w, 4);
                let Some(cadence) = compute::cadence_level(&recent) else { continue };
                let Some(volatility_raw) = compute::compute_volatility(&history.window(w, 5)) else {
                    continue;
                };
                let Some(proxy) = compute::awarded_volume_proxy(&recent).filter(|p| *p > 0.0) else {
                    continue;
                };
                let distance = ctx
                    .spot
                    .lane_distance(&t.lane.origin, &t.lane.destination)
                    .unwrap_or_else(|| {
                        let (s, c) = lane_dist[&t.lane.pair_key()];
                        s / c as f64
                    });
                rows.push(feature_row(t, ctx, cadence, volatility_raw, compute::classify_surge(rank, proxy)?, distance)?);
            }
            Ok(rows)
        })
        .collect();

    let mut rows = Vec::new();
    for g in per_group {
        rows.extend(g?);
    }
    rows.sort_by_key(|r| r.load_id);
    Ok(rows)
}

fn feature_row(
    t: &TenderRecord,
    ctx: &FeatureContext<'_>,
    cadence: Cadence,
    volatility_raw: f64,
    surge: SurgeClass,
    spot_distance: f64,
) -> Result<FeatureRow> {
    let carrier = &ctx.carriers[&t.carrier_id];
    let shipper = &ctx.shippers[&t.shipper_id];
    let spot = ctx.spot.coefficients.predict(
        &t.lane.origin,
        &t.lane.destination,
        t.month(),
        t.year(),
        spot_distance,
    )?;
    let srd_raw = compute::compute_srd(t.contract_price, spot)?;
    Ok(FeatureRow {
        load_id: t.load_id,
        shipper_id: t.shipper_id.clone(),
        carrier_id: t.carrier_id.clone(),
        origin: t.lane.origin.clone(),
        destination: t.lane.destination.clone(),
        week: t.week,
        srd_raw,
        srd: SrdBin::of(srd_raw)?,
        cadence,
        volatility_raw,
        volatility: VolatilityBin::of(volatility_raw)?,
        surge,
        travel_days: compute::compute_travel_days(t.lane.distance)?,
        log_fleet_size: carrier.fleet_size.map(|n| (n as f64).ln()),
        log_shipper_volume: shipper.monthly_volume.ln(),
        vertical: shipper.vertical,
        market: ctx.segmentation.assign(t.week)?,
        carrier_type: carrier.service_type,
        outcome: u8::from(t.outcome.is_accepted()),
    })
}

fn to_record(r: &FeatureRow) -> Vec<String> {
    vec![
        r.load_id.to_string(),
        r.shipper_id.clone(),
        r.carrier_id.clone(),
        r.origin.to_string(),
        r.destination.to_string(),
        r.week.to_string(),
        io::fmt_f64(r.srd_raw),
        r.srd.label().to_string(),
        r.cadence.label().to_string(),
        io::fmt_f64(r.volatility_raw),
        r.volatility.label().to_string(),
        r.surge.label().to_string(),
        r.travel_days.label().to_string(),
        io::fmt_opt_f64(r.log_fleet_size),
        io::fmt_f64(r.log_shipper_volume),
        r.vertical.label().to_string(),
        r.market.label().to_string(),
        r.carrier_type.label().to_string(),
        r.outcome.to_string(),
    ]
}

pub fn write_feature_rows(path: &Path, rows: &[FeatureRow], config_hash: &str) -> Result<()> {
    io::write_csv(path, &FEATURE_ROWS_SCHEMA, config_hash, rows.iter().map(to_record))
}

pub fn read_feature_rows(path: &Path) -> Result<Vec<FeatureRow>> {
    let table = CsvTable::read(path, &FEATURE_ROWS_SCHEMA, true)?;
    table
        .rows()
        .map(|row| {
            let outcome: u8 = row.parse("outcome")?;
            if outcome > 1 {
                return Err(row.error("outcome", "outcome must be 0 or 1"));
            }
            Ok(FeatureRow {
                load_id: row.parse("load_id")?,
                shipper_id: row.get("shipper_id").to_string(),
                carrier_id: row.get("carrier_id").to_string(),
                origin: Region::new(row.get("origin")),
                destination: Region::new(row.get("dest")),
                week: row.parse_with("week", str::parse)?,
                srd_raw: row.parse("srd_raw")?,
                srd: row.parse_with("srd", SrdBin::from_label)?,
                cadence: row.parse_with("cadence", Cadence::from_label)?,
                volatility_raw: row.parse("volatility_raw")?,
                volatility: row.parse_with("volatility", VolatilityBin::from_label)?,
                surge: row.parse_with("surge", SurgeClass::from_label)?,
                travel_days: row.parse_with("travel_days", TravelDays::from_label)?,
                log_fleet_size: row.parse_opt("log_fleet_size")?,
                log_shipper_volume: row.parse("log_shipper_volume")?,
                vertical: row.parse_with("vertical", Vertical::from_label)?,
                market: row.parse_with("market", str::parse)?,
                carrier_type: row.parse_with("carrier_type", str::parse)?,
                outcome,
            })
        })
        .collect()
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Lane, Outcome};
    use crate::spot::{BaseCase, SpotCoefficients};
    use chrono::NaiveTime;

    fn spot() -> SpotModel {
        let base = BaseCase::default();
        SpotModel {
            schema: crate::spot::SPOT_MODEL_SCHEMA.into(),
            coefficients: SpotCoefficients {
                base_case: base.clone(),
                beta_base: 200.0,
                beta_dist: 1.0,
                beta_origin: BTreeMap::new(),
                beta_dest: BTreeMap::new(),
                beta_month: (2..=12).map(|m| (m, 0.0)).collect(),
                beta_year: [(2017, 0.0)].into_iter().collect(),
            },
            coefficient_names: vec![],
            robust_cov: vec![],
            lane_mean_distance: BTreeMap::new(),
            n_obs: 0,
            config_hash: None,
        }
    }

    fn profiles() -> (BTreeMap<String, CarrierProfile>, BTreeMap<String, ShipperProfile>) {
        let c = CarrierProfile::new("C1", ServiceType::Asset, Some(4)).unwrap();
        let s = ShipperProfile::new("S1", Vertical::Automotive, 120.0).unwrap();
        (
            [(c.carrier_id.clone(), c)].into_iter().collect(),
            [(s.shipper_id.clone(), s)].into_iter().collect(),
        )
    }

    fn tender(load_id: u64, week: IsoWeek, position: u32) -> TenderRecord {
        let base = BaseCase::default();
        TenderRecord {
            load_id,
            shipper_id: "S1".into(),
            carrier_id: "C1".into(),
            lane: Lane::new(base.origin, base.dest, 800.0).unwrap(),
            week,
            timestamp: week.monday().and_time(NaiveTime::from_hms_opt(8, 0, 0).unwrap())
                + chrono::Duration::minutes(load_id as i64),
            contract_price: 800.0,
            position,
            outcome: Outcome::Accepted,
            moved_price: None,
        }
    }

    fn corpus(weeks: &[u32], target_position: u32) -> Vec<TenderRecord> {
        let start: IsoWeek = "2016-W10".parse().unwrap();
        let mut out = Vec::new();
        let mut id = 0;
        for (i, &n) in weeks.iter().enumerate() {
            for _ in 0..n {
                id += 1;
                out.push(tender(id, start.offset(i as i64), 1));
            }
        }
        id += 1;
        out.push(tender(id, start.offset(weeks.len() as i64), target_position));
        out
    }

    #[test]
    fn single_primary_with_history_gives_one_row() {
        let (carriers, shippers) = profiles();
        let seg = Segmentation::default();
        let sp = spot();
        let ctx = FeatureContext { spot: &sp, carriers: &carriers, shippers: &shippers, segmentation: &seg };
        // five history weeks; only the final tender has a full window
        let tenders = corpus(&[2, 2, 2, 2, 2], 1);
        let rows = build_feature_rows(&tenders, &ctx).unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!(r.load_id, 11);
        assert_eq!(r.cadence, Cadence::P100);
        assert_eq!(r.volatility_raw, 0.0);
        assert_eq!(r.surge, SurgeClass::WithinMean);
        // spot = 200 + 800 = 1000 against contract 800
        assert_eq!(r.srd_raw, 25.0);
        assert_eq!(r.srd.label(), "[25,30)");
        assert_eq!(r.travel_days, TravelDays::Two);
        assert_eq!(r.log_fleet_size, Some(4f64.ln()));
        assert_eq!(r.market, MarketCondition::Soft);
    }

    #[test]
    fn backup_tenders_are_excluded() {
        let (carriers, shippers) = profiles();
        let seg = Segmentation::default();
        let sp = spot();
        let ctx = FeatureContext { spot: &sp, carriers: &carriers, shippers: &shippers, segmentation: &seg };
        let tenders = corpus(&[2, 2, 2, 2, 2], 2);
        assert!(build_feature_rows(&tenders, &ctx).unwrap().is_empty());
    }

    #[test]
    fn missing_profiles_are_listed() {
        let (carriers, _) = profiles();
        let shippers = BTreeMap::new();
        let seg = Segmentation::default();
        let sp = spot();
        let ctx = FeatureContext { spot: &sp, carriers: &carriers, shippers: &shippers, segmentation: &seg };
        match build_feature_rows(&corpus(&[1], 1), &ctx) {
            Err(Error::MissingProfiles(ids)) => assert_eq!(ids, vec!["shipper:S1"]),
            other => panic!("expected missing profiles, got {other:?}"),
        }
    }

    #[test]
    fn surge_ranks_follow_timestamps() {
        let (carriers, shippers) = profiles();
        let seg = Segmentation::default();
        let sp = spot();
        let ctx = FeatureContext { spot: &sp, carriers: &carriers, shippers: &shippers, segmentation: &seg };
        let start: IsoWeek = "2016-W10".parse().unwrap();
        let mut tenders = Vec::new();
        let mut id = 100;
        for w in 0..5 {
            for _ in 0..10 {
                id += 1;
                tenders.push(tender(id, start.offset(w), 1));
            }
        }
        for k in 0..13 {
            tenders.push(tender(1000 - k, start.offset(5), 1));
        }
        tenders.reverse();
        let rows = build_feature_rows(&tenders, &ctx).unwrap();
        assert_eq!(rows.len(), 13);
        // load 988 has the earliest timestamp in week 5 and rank 1
        let classes: Vec<SurgeClass> = rows.iter().map(|r| r.surge).collect();
        assert_eq!(classes[0], SurgeClass::WithinMean);
        assert_eq!(rows.iter().filter(|r| r.surge == SurgeClass::WithinMean).count(), 10);
        assert_eq!(rows.iter().filter(|r| r.surge == SurgeClass::MeanTo10).count(), 1);
        assert_eq!(rows.iter().filter(|r| r.surge == SurgeClass::Surge10To20).count(), 1);
        assert_eq!(rows.iter().filter(|r| r.surge == SurgeClass::SurgeOver20).count(), 1);
        assert_eq!(rows.last().unwrap().load_id, 1000);
        assert_eq!(rows.last().unwrap().surge, SurgeClass::SurgeOver20);
    }

    #[test]
    fn csv_round_trip() {
        let (carriers, shippers) = profiles();
        let seg = Segmentation::default();
        let sp = spot();
        let ctx = FeatureContext { spot: &sp, carriers: &carriers, shippers: &shippers, segmentation: &seg };
        let rows = build_feature_rows(&corpus(&[1, 3, 0, 2, 5, 4], 1), &ctx).unwrap();
        assert!(!rows.is_empty());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_feature_rows(&path, &rows, "h").unwrap();
        assert_eq!(read_feature_rows(&path).unwrap(), rows);
    }

    /// Brute-force rebuild: every quantity is recomputed by scanning the
    /// whole corpus for each tender.
    fn naive_rows(tenders: &[TenderRecord]) -> Vec<(u64, Cadence, f64, SurgeClass)> {
        let start = tenders.iter().map(|t| t.week.index()).min().unwrap();
        let same = |a: &TenderRecord, b: &TenderRecord| {
            a.is_primary()
                && a.shipper_id == b.shipper_id
                && a.carrier_id == b.carrier_id
                && a.lane.pair_key() == b.lane.pair_key()
        };
        let count = |t: &TenderRecord, w: i64| tenders.iter().filter(|u| same(u, t) && u.week.index() == w).count() as u32;
        let mut out = Vec::new();
        for t in tenders.iter().filter(|t| t.is_primary()) {
            let w = t.week.index();
            if w - 5 < start {
                continue;
            }
            let last4: Vec<u32> = (w - 4..w).map(|x| count(t, x)).collect();
            let last5: Vec<u32> = (w - 5..w).map(|x| count(t, x)).collect();
            let rank = tenders
                .iter()
                .filter(|u| same(u, t) && u.week.index() == w && (u.timestamp, u.load_id) <= (t.timestamp, t.load_id))
                .count() as u32;
            let (Some(c), Some(v), Some(p)) = (
                compute::cadence_level(&last4),
                compute::compute_volatility(&last5),
                compute::awarded_volume_proxy(&last4).filter(|p| *p > 0.0),
            ) else {
                continue;
            };
            out.push((t.load_id, c, v, compute::classify_surge(rank, p).unwrap()));
        }
        out.sort_by_key(|r| r.0);
        out
    }

    #[test]
    fn matches_brute_force_on_random_corpus() {
        use rand::{Rng, SeedableRng};
        let mut carriers = BTreeMap::new();
        let mut shippers = BTreeMap::new();
        for i in 1..=3 {
            let c = CarrierProfile::new(format!("C{i}"), ServiceType::Asset, Some(4)).unwrap();
            carriers.insert(c.carrier_id.clone(), c);
            let s = ShipperProfile::new(format!("S{i}"), Vertical::Automotive, 120.0).unwrap();
            shippers.insert(s.shipper_id.clone(), s);
        }
        let seg = Segmentation::default();
        let mut sp = spot();
        sp.coefficients.beta_dest.insert(Region::new("MIDWEST"), 15.0);
        let ctx = FeatureContext { spot: &sp, carriers: &carriers, shippers: &shippers, segmentation: &seg };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let start: IsoWeek = "2016-W10".parse().unwrap();
        let dests = [Region::new("SOUTH_CENTRAL"), Region::new("MIDWEST")];
        let tenders: Vec<TenderRecord> = (1..=1000u64)
            .map(|id| {
                let mut t = tender(id, start.offset(rng.gen_range(0..16)), if rng.gen_bool(0.8) { 1 } else { 2 });
                t.shipper_id = format!("S{}", rng.gen_range(1..=3));
                t.carrier_id = format!("C{}", rng.gen_range(1..=3));
                t.lane = Lane::new(t.lane.origin.clone(), dests[rng.gen_range(0..2)].clone(), 800.0).unwrap();
                t.timestamp += chrono::Duration::minutes(rng.gen_range(0..5000));
                t
            })
            .collect();
        let rows = build_feature_rows(&tenders, &ctx).unwrap();
        let fast: Vec<_> = rows.iter().map(|r| (r.load_id, r.cadence, r.volatility_raw, r.surge)).collect();
        let slow = naive_rows(&tenders);
        assert!(slow.len() > 100, "{}", slow.len());
        assert_eq!(fast, slow);
    }
}
