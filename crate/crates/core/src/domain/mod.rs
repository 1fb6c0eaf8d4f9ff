//! Shared domain types: regions and lanes, ISO calendar weeks and market
//! regimes, carrier and shipper profiles, and tender records.

mod calendar;
mod entities;
mod region;

pub use calendar::{assign_market_condition, IsoWeek, MarketCondition, RegimeSwitch, Segmentation};
pub use entities::{
    CarrierProfile, Outcome, Segment, ServiceType, ShipperProfile, TenderRecord, Vertical,
};
pub use region::{
    pair_key, Lane, Region, RegionTaxonomy, DEFAULT_BASE_DEST, DEFAULT_BASE_ORIGIN,
    MIN_LANE_DISTANCE,
};
