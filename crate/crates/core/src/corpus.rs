//! Tender corpus and carrier/shipper profile files.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDateTime;

use crate::domain::{
    CarrierProfile, IsoWeek, Lane, Outcome, RegionTaxonomy, ServiceType, ShipperProfile, TenderRecord,
};
use crate::error::{Error, Result};
use crate::io::{self, CsvSchema, CsvTable};

pub const TENDERS_SCHEMA: CsvSchema = CsvSchema {
    name: "tenders",
    version: 1,
    columns: &[
        "load_id",
        "shipper_id",
        "carrier_id",
        "origin",
        "dest",
        "distance",
        "week",
        "timestamp",
        "position",
        "contract_price",
        "outcome",
    ],
};

pub const CARRIERS_SCHEMA: CsvSchema = CsvSchema {
    name: "carriers",
    version: 1,
    columns: &["carrier_id", "service_type", "fleet_size"],
};

pub const SHIPPERS_SCHEMA: CsvSchema = CsvSchema {
    name: "shippers",
    version: 1,
    columns: &["shipper_id", "vertical", "monthly_volume"],
};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

fn tender_record(t: &TenderRecord) -> Vec<String> {
    vec![
        t.load_id.to_string(),
        t.shipper_id.clone(),
        t.carrier_id.clone(),
        t.lane.origin.to_string(),
        t.lane.destination.to_string(),
        io::fmt_f64(t.lane.distance),
        t.week.to_string(),
        t.timestamp.format(TIMESTAMP_FORMAT).to_string(),
        t.position.to_string(),
        io::fmt_f64(t.contract_price),
        t.outcome.label().to_string(),
    ]
}

pub fn write_tenders(path: &Path, tenders: &[TenderRecord], config_hash: &str) -> Result<()> {
    io::write_csv(path, &TENDERS_SCHEMA, config_hash, tenders.iter().map(tender_record))
}

/// Reads a tender corpus. Regions must belong to `taxonomy` and the week
/// column must be the ISO week of the timestamp.
pub fn read_tenders(path: &Path, taxonomy: &RegionTaxonomy) -> Result<Vec<TenderRecord>> {
    let table = CsvTable::read(path, &TENDERS_SCHEMA, false)?;
    let mut out = Vec::with_capacity(table.len());
    for row in table.rows() {
        let origin = row.parse_with("origin", |s| taxonomy.region(s))?;
        let dest = row.parse_with("dest", |s| taxonomy.region(s))?;
        let distance: f64 = row.parse("distance")?;
        let lane = Lane::new(origin, dest, distance).map_err(|e| row.error("distance", e.to_string()))?;
        let week: IsoWeek = row.parse_with("week", str::parse)?;
        let timestamp = row.parse_with("timestamp", |s| {
            NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT)
                .map_err(|e| Error::domain(format!("bad timestamp `{s}`: {e}")))
        })?;
        if IsoWeek::of_date(timestamp.date()) != week {
            return Err(row.error("week", format!("week {week} does not contain {timestamp}")));
        }
        let t = TenderRecord {
            load_id: row.parse("load_id")?,
            shipper_id: row.get("shipper_id").to_string(),
            carrier_id: row.get("carrier_id").to_string(),
            lane,
            week,
            timestamp,
            contract_price: row.parse("contract_price")?,
            position: row.parse("position")?,
            outcome: row.parse_with("outcome", str::parse::<Outcome>)?,
            moved_price: None,
        };
        t.validate().map_err(|e| row.error("-", e.to_string()))?;
        out.push(t);
    }
    Ok(out)
}

pub fn write_carriers(path: &Path, carriers: &[CarrierProfile], config_hash: &str) -> Result<()> {
    io::write_csv(
        path,
        &CARRIERS_SCHEMA,
        config_hash,
        carriers.iter().map(|c| {
            vec![
                c.carrier_id.clone(),
                c.service_type.label().to_string(),
                c.fleet_size.map(|n| n.to_string()).unwrap_or_default(),
            ]
        }),
    )
}

pub fn read_carriers(path: &Path) -> Result<BTreeMap<String, CarrierProfile>> {
    let table = CsvTable::read(path, &CARRIERS_SCHEMA, false)?;
    let mut out = BTreeMap::new();
    for row in table.rows() {
        let service: ServiceType = row.parse_with("service_type", str::parse)?;
        let fleet: Option<u32> = row.parse_opt("fleet_size")?;
        let c = CarrierProfile::new(row.get("carrier_id"), service, fleet)
            .map_err(|e| row.error("fleet_size", e.to_string()))?;
        if out.insert(c.carrier_id.clone(), c).is_some() {
            return Err(row.error("carrier_id", "duplicate carrier id"));
        }
    }
    Ok(out)
}

pub fn write_shippers(path: &Path, shippers: &[ShipperProfile], config_hash: &str) -> Result<()> {
    io::write_csv(
        path,
        &SHIPPERS_SCHEMA,
        config_hash,
        shippers.iter().map(|s| {
            vec![s.shipper_id.clone(), s.vertical.label().to_string(), io::fmt_f64(s.monthly_volume)]
        }),
    )
}

pub fn read_shippers(path: &Path) -> Result<BTreeMap<String, ShipperProfile>> {
    let table = CsvTable::read(path, &SHIPPERS_SCHEMA, false)?;
    let mut out = BTreeMap::new();
    for row in table.rows() {
        let s = ShipperProfile::new(
            row.get("shipper_id"),
            row.parse_with("vertical", str::parse)?,
            row.parse("monthly_volume")?,
        )
        .map_err(|e| row.error("monthly_volume", e.to_string()))?;
        if out.insert(s.shipper_id.clone(), s).is_some() {
            return Err(row.error("shipper_id", "duplicate shipper id"));
        }
    }
    Ok(out)
}
