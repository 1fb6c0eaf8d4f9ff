use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::calendar::{IsoWeek, MarketCondition};
use super::region::Lane;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceType {
    Asset,
    NonAsset,
}

impl ServiceType {
    pub const ALL: [ServiceType; 2] = [ServiceType::Asset, ServiceType::NonAsset];

    pub fn label(&self) -> &'static str {
        match self {
            ServiceType::Asset => "asset",
            ServiceType::NonAsset => "non_asset",
        }
    }
}

impl fmt::Display for ServiceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ServiceType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asset" => Ok(ServiceType::Asset),
            "non_asset" | "non-asset" | "nonasset" => Ok(ServiceType::NonAsset),
            other => Err(Error::UnknownLevel {
                variable: "service_type".into(),
                level: other.into(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarrierProfile {
    pub carrier_id: String,
    pub service_type: ServiceType,
    /// Tractor count; present iff the carrier is asset-based.
    pub fleet_size: Option<u32>,
}

impl CarrierProfile {
    pub fn new(
        carrier_id: impl Into<String>,
        service_type: ServiceType,
        fleet_size: Option<u32>,
    ) -> Result<Self> {
        let carrier_id = carrier_id.into();
        match (service_type, fleet_size) {
            (ServiceType::Asset, Some(n)) if n >= 1 => {}
            (ServiceType::NonAsset, None) => {}
            (ServiceType::Asset, _) => {
                return Err(Error::domain(format!(
                    "asset carrier {carrier_id} needs a fleet size >= 1"
                )))
            }
            (ServiceType::NonAsset, Some(_)) => {
                return Err(Error::domain(format!(
                    "non-asset carrier {carrier_id} cannot have a fleet size"
                )))
            }
        }
        Ok(CarrierProfile {
            carrier_id,
            service_type,
            fleet_size,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vertical {
    Automotive,
    FbCpg,
    PaperPackaging,
    Manufacturing,
    Other,
}

impl Vertical {
    pub const ALL: [Vertical; 5] = [
        Vertical::Automotive,
        Vertical::FbCpg,
        Vertical::PaperPackaging,
        Vertical::Manufacturing,
        Vertical::Other,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Vertical::Automotive => "automotive",
            Vertical::FbCpg => "fb_cpg",
            Vertical::PaperPackaging => "paper_packaging",
            Vertical::Manufacturing => "manufacturing",
            Vertical::Other => "other",
        }
    }
}

impl fmt::Display for Vertical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Vertical {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Vertical::ALL
            .into_iter()
            .find(|v| v.label() == s)
            .ok_or_else(|| Error::UnknownLevel {
                variable: "vertical".into(),
                level: s.into(),
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShipperProfile {
    pub shipper_id: String,
    pub vertical: Vertical,
    /// Total tendered loads per month across all lanes.
    pub monthly_volume: f64,
}

impl ShipperProfile {
    pub fn new(shipper_id: impl Into<String>, vertical: Vertical, monthly_volume: f64) -> Result<Self> {
        let shipper_id = shipper_id.into();
        if !(monthly_volume > 0.0) {
            return Err(Error::domain(format!(
                "shipper {shipper_id} monthly volume must be positive"
            )));
        }
        Ok(ShipperProfile {
            shipper_id,
            vertical,
            monthly_volume,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Accepted,
    Rejected,
}

impl Outcome {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Outcome::Accepted)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Accepted => "accepted",
            Outcome::Rejected => "rejected",
        }
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accepted" => Ok(Outcome::Accepted),
            "rejected" => Ok(Outcome::Rejected),
            other => Err(Error::UnknownLevel {
                variable: "outcome".into(),
                level: other.into(),
            }),
        }
    }
}

/// One offer of one load to one carrier.
#[derive(Clone, Debug, PartialEq)]
pub struct TenderRecord {
    pub load_id: u64,
    pub shipper_id: String,
    pub carrier_id: String,
    pub lane: Lane,
    pub week: IsoWeek,
    pub timestamp: NaiveDateTime,
    /// Linehaul price offered in USD.
    pub contract_price: f64,
    /// 1 = primary carrier, 2.. = backups in routing-guide order.
    pub position: u32,
    pub outcome: Outcome,
    pub moved_price: Option<f64>,
}

impl TenderRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.contract_price > 0.0) {
            return Err(Error::domain(format!(
                "load {} has non-positive contract price",
                self.load_id
            )));
        }
        if self.position < 1 {
            return Err(Error::domain(format!(
                "load {} has routing position 0",
                self.load_id
            )));
        }
        Ok(())
    }

    pub fn is_primary(&self) -> bool {
        self.position == 1
    }

    pub fn month(&self) -> u32 {
        self.timestamp.month()
    }

    pub fn year(&self) -> i32 {
        self.timestamp.year()
    }
}

/// Carrier type by market condition; each has its own acceptance model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub carrier_type: ServiceType,
    pub market: MarketCondition,
}

impl Segment {
    pub const ALL: [Segment; 4] = [
        Segment::new(ServiceType::Asset, MarketCondition::Soft),
        Segment::new(ServiceType::Asset, MarketCondition::Tight),
        Segment::new(ServiceType::NonAsset, MarketCondition::Soft),
        Segment::new(ServiceType::NonAsset, MarketCondition::Tight),
    ];

    pub const fn new(carrier_type: ServiceType, market: MarketCondition) -> Self {
        Segment {
            carrier_type,
            market,
        }
    }

    /// `asset_soft`, `non_asset_tight`, ...
    pub fn label(&self) -> String {
        format!("{}_{}", self.carrier_type.label(), self.market.label())
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.carrier_type.label(), self.market.label())
    }
}

impl FromStr for Segment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (carrier, market) = s.rsplit_once('_').ok_or_else(|| Error::UnknownLevel {
            variable: "segment".into(),
            level: s.into(),
        })?;
        Ok(Segment::new(carrier.parse()?, market.parse()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fleet_size_iff_asset() {
        assert!(CarrierProfile::new("C1", ServiceType::Asset, Some(3)).is_ok());
        assert!(CarrierProfile::new("C1", ServiceType::Asset, Some(0)).is_err());
        assert!(CarrierProfile::new("C1", ServiceType::Asset, None).is_err());
        assert!(CarrierProfile::new("C2", ServiceType::NonAsset, None).is_ok());
        assert!(CarrierProfile::new("C2", ServiceType::NonAsset, Some(4)).is_err());
    }

    #[test]
    fn segment_labels_round_trip() {
        for seg in Segment::ALL {
            assert_eq!(seg.label().parse::<Segment>().unwrap(), seg);
        }
        assert_eq!(Segment::ALL[3].label(), "non_asset_tight");
    }

    #[test]
    fn vertical_labels_round_trip() {
        for v in Vertical::ALL {
            assert_eq!(v.label().parse::<Vertical>().unwrap(), v);
        }
    }
}
