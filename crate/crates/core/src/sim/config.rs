use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{IsoWeek, MarketCondition, RegionTaxonomy, RegimeSwitch, Segment, Segmentation};
use crate::error::{Error, Result};
use crate::spot::{BaseCase, SpotCoefficients};
use crate::stickiness::builtin_published_model;

/// Shipper monthly volume at which the truth intercept equals the
/// published constant.
pub const TRUTH_REFERENCE_VOLUME: f64 = 200.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Range { min, max }
    }

    fn check(&self, what: &str, lo: f64, hi: f64) -> Result<()> {
        if !(self.min <= self.max && self.min >= lo && self.max <= hi) {
            return Err(Error::Config(format!(
                "{what} range [{}, {}] must be ordered and within [{lo}, {hi}]",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogNormal {
    pub mu: f64,
    pub sigma: f64,
}

/// Per-lane demand dials, drawn once per lane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandConfig {
    /// Mean loads in an active week, drawn log-uniformly.
    pub mean_weekly_volume: Range,
    /// Probability that a week has any load.
    pub cadence_probability: Range,
    /// Log-scale dispersion of active-week counts.
    pub volatility: Range,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpotProcessConfig {
    pub coefficients: SpotCoefficients,
    /// Log-normal sd of market transactions around the benchmark.
    pub noise_scale: f64,
    pub observations_per_lane_week: u32,
}

/// A scheduled regime change. From `switch_week` on, the benchmark is
/// `level * base + shift`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub switch_week: IsoWeek,
    pub market: MarketCondition,
    #[serde(default = "one")]
    pub level: f64,
    #[serde(default)]
    pub shift: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceTruth {
    /// Coefficients by segment label, keyed by coefficient name.
    pub segments: BTreeMap<String, BTreeMap<String, f64>>,
    /// Exchangeable within-carrier correlation.
    pub rho: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoutingConfig {
    pub backups: u32,
    /// Price of the last backup above the primary, in percent.
    pub escalation_pct: f64,
    /// Spot fill price above the benchmark, in percent.
    pub spot_premium_pct: f64,
}

impl Default for RoutingConfig {
    fn default() -> Self {
        RoutingConfig { backups: 3, escalation_pct: 18.0, spot_premium_pct: 35.0 }
    }
}

/// Premiums over the award price by live surge class, in percent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurgePremiums {
    pub within_mean: f64,
    pub mean_to_10: f64,
    pub surge_10_to_20: f64,
    pub surge_over_20: f64,
}

impl Default for SurgePremiums {
    fn default() -> Self {
        SurgePremiums { within_mean: 0.0, mean_to_10: 0.0, surge_10_to_20: 5.0, surge_over_20: 10.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PricingStrategy {
    /// Award price for the whole horizon.
    Fixed,
    /// Contract equals the current benchmark.
    SymmetricIndex,
    /// Contract follows the benchmark up and never comes down.
    AsymmetricIndex,
    TieredSurge { premiums: SurgePremiums },
}

impl PricingStrategy {
    pub fn label(&self) -> &'static str {
        match self {
            PricingStrategy::Fixed => "fixed",
            PricingStrategy::SymmetricIndex => "symmetric_index",
            PricingStrategy::AsymmetricIndex => "asymmetric_index",
            PricingStrategy::TieredSurge { .. } => "tiered_surge",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_shippers: u32,
    pub n_carriers: u32,
    pub n_lanes: u32,
    pub start_week: IsoWeek,
    pub horizon_weeks: u32,
    pub asset_share: f64,
    /// Log-scale tractor counts of asset carriers.
    pub fleet_size: LogNormal,
    pub lane_distance: Range,
    pub demand: DemandConfig,
    pub spot_process: SpotProcessConfig,
    pub regimes: Vec<Regime>,
    pub acceptance_truth: AcceptanceTruth,
    pub routing: RoutingConfig,
    /// Award contracts are `benchmark / (1 + s)`, `s ~ U(-spread, spread)`.
    pub award_spread: f64,
    pub pricing_strategy: PricingStrategy,
}

/// Truth coefficients from the shipped tables, intercept recentered so a
/// shipper of [`TRUTH_REFERENCE_VOLUME`] loads/month gets the table constant.
pub fn published_truth(rho: f64) -> AcceptanceTruth {
    let segments = Segment::ALL
        .iter()
        .map(|&s| {
            let set = builtin_published_model(s);
            let mut map: BTreeMap<String, f64> =
                set.coefficients.iter().map(|e| (e.name.clone(), e.estimate)).collect();
            let vol = map.get("log_shipper_volume").copied().unwrap_or(0.0);
            *map.entry("const".into()).or_insert(0.0) -= vol * TRUTH_REFERENCE_VOLUME.ln();
            (s.label(), map)
        })
        .collect();
    AcceptanceTruth { segments, rho }
}

/// Plausible spot coefficients over every region of `taxonomy` for the
/// years `first..=last`.
pub fn generated_spot_coefficients(seed: u64, taxonomy: &RegionTaxonomy, first: i32, last: i32) -> SpotCoefficients {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5f07_c0ef);
    let base = BaseCase::default();
    let mut effects = |skip: &crate::domain::Region, half: f64| {
        taxonomy
            .regions()
            .filter(|r| *r != skip)
            .map(|r| (r.clone(), rng.gen_range(-half..half)))
            .collect::<BTreeMap<_, _>>()
    };
    let beta_origin = effects(&base.origin, 150.0);
    let beta_dest = effects(&base.dest, 150.0);
    let beta_month = (2..=12).map(|m| (m, rng.gen_range(-60.0..60.0))).collect();
    let beta_year = (first..=last)
        .filter(|y| *y != base.year)
        .map(|y| (y, rng.gen_range(-80.0..80.0)))
        .collect();
    SpotCoefficients {
        base_case: base,
        beta_base: 300.0,
        beta_dist: 1.6,
        beta_origin,
        beta_dest,
        beta_month,
        beta_year,
    }
}

impl ScenarioConfig {
    pub const PRESETS: [&'static str; 3] = ["default", "tight_regime", "scale"];

    /// Recovery-grade world: 200 carriers with about 100 primary decisions
    /// each, soft then tight within 2016.
    pub fn default_scenario(seed: u64) -> Self {
        let start = IsoWeek::new(2016, 1).expect("valid week");
        ScenarioConfig {
            seed,
            n_shippers: 100,
            n_carriers: 200,
            n_lanes: 800,
            start_week: start,
            horizon_weeks: 52,
            asset_share: 0.6,
            fleet_size: LogNormal { mu: 1.0, sigma: 1.1 },
            lane_distance: Range::new(260.0, 2400.0),
            demand: DemandConfig {
                mean_weekly_volume: Range::new(0.4, 2.0),
                cadence_probability: Range::new(0.3, 0.9),
                volatility: Range::new(0.0, 1.4),
            },
            spot_process: SpotProcessConfig {
                coefficients: generated_spot_coefficients(seed, &RegionTaxonomy::default(), 2016, 2016),
                noise_scale: 0.08,
                observations_per_lane_week: 1,
            },
            regimes: vec![
                Regime { switch_week: start, market: MarketCondition::Soft, level: 1.0, shift: 0.0 },
                // 2016-W31 starts on 1 August, so the shift lines up with a month.
                Regime {
                    switch_week: IsoWeek::new(2016, 31).expect("valid week"),
                    market: MarketCondition::Tight,
                    level: 1.0,
                    shift: 120.0,
                },
            ],
            acceptance_truth: published_truth(0.1),
            routing: RoutingConfig::default(),
            award_spread: 0.55,
            pricing_strategy: PricingStrategy::Fixed,
        }
    }

    /// Contracts awarded near the soft-market benchmark, then a 30% spot
    /// jump leaves fixed prices stale.
    pub fn tight_regime(seed: u64) -> Self {
        let mut c = Self::default_scenario(seed);
        c.n_carriers = 100;
        c.n_shippers = 50;
        c.n_lanes = 200;
        c.horizon_weeks = 26;
        c.award_spread = 0.05;
        c.regimes = vec![
            Regime { switch_week: c.start_week, market: MarketCondition::Soft, level: 1.0, shift: 0.0 },
            Regime {
                switch_week: c.start_week.offset(4),
                market: MarketCondition::Tight,
                level: 1.3,
                shift: 0.0,
            },
        ];
        c
    }

    /// Roughly one million tenders.
    pub fn scale(seed: u64) -> Self {
        let mut c = Self::default_scenario(seed);
        c.n_carriers = 4000;
        c.n_shippers = 2000;
        c.n_lanes = 14000;
        c.demand.mean_weekly_volume = Range::new(0.6, 4.0);
        c.demand.cadence_probability = Range::new(0.5, 1.0);
        c
    }

    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        match name {
            "default" => Ok(Self::default_scenario(seed)),
            "tight_regime" => Ok(Self::tight_regime(seed)),
            "scale" => Ok(Self::scale(seed)),
            other => Err(Error::Config(format!(
                "unknown preset `{other}`; expected one of {}",
                Self::PRESETS.join(", ")
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.n_carriers < 2 {
            return cfg(format!("n_carriers = {} but a routing guide needs at least 2", self.n_carriers));
        }
        if self.n_shippers < 1 || self.n_lanes < 1 || self.horizon_weeks < 1 {
            return cfg("n_shippers, n_lanes and horizon_weeks must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.asset_share) {
            return cfg(format!("asset_share {} outside [0, 1]", self.asset_share));
        }
        if !(self.fleet_size.sigma >= 0.0) || !self.fleet_size.mu.is_finite() {
            return cfg("fleet_size needs finite mu and sigma >= 0".into());
        }
        self.lane_distance.check("lane_distance", crate::domain::MIN_LANE_DISTANCE + 1e-9, f64::INFINITY)?;
        let d = &self.demand;
        d.mean_weekly_volume.check("mean_weekly_volume", 1e-9, f64::INFINITY)?;
        d.cadence_probability.check("cadence_probability", 0.0, 1.0)?;
        d.volatility.check("volatility", 0.0, 10.0)?;
        let sp = &self.spot_process;
        if !(sp.noise_scale >= 0.0) {
            return cfg("spot noise_scale must be >= 0".into());
        }
        if self.regimes.is_empty() {
            return cfg("at least one regime is required".into());
        }
        if self.regimes[0].switch_week > self.start_week {
            return cfg("the first regime must start on or before start_week".into());
        }
        if self.regimes.windows(2).any(|w| w[0].switch_week >= w[1].switch_week) {
            return cfg("regime switch weeks must be strictly increasing".into());
        }
        if self.regimes.iter().any(|r| !(r.level > 0.0) || !r.shift.is_finite()) {
            return cfg("regime levels must be positive and shifts finite".into());
        }
        let t = &self.acceptance_truth;
        if !(0.0..1.0).contains(&t.rho) {
            return cfg(format!("acceptance rho {} outside [0, 1)", t.rho));
        }
        for s in Segment::ALL {
            if !t.segments.contains_key(&s.label()) {
                return cfg(format!("acceptance_truth has no coefficients for {}", s.label()));
            }
        }
        let r = &self.routing;
        if !(r.escalation_pct >= 0.0) || !(r.spot_premium_pct >= 0.0) {
            return cfg("escalation and spot premium must be >= 0".into());
        }
        if !(0.0..1.0).contains(&self.award_spread) {
            return cfg(format!("award_spread {} outside [0, 1)", self.award_spread));
        }
        if let PricingStrategy::TieredSurge { premiums: p } = self.pricing_strategy {
            if [p.within_mean, p.mean_to_10, p.surge_10_to_20, p.surge_over_20].iter().any(|x| !(*x > -100.0)) {
                return cfg("surge premiums must exceed -100%".into());
            }
        }
        Ok(())
    }

    /// Regime in force during `week`.
    pub fn regime(&self, week: IsoWeek) -> &Regime {
        let idx = self.regimes.partition_point(|r| r.switch_week <= week);
        &self.regimes[idx.max(1) - 1]
    }

    pub fn end_week(&self) -> IsoWeek {
        self.start_week.offset(self.horizon_weeks as i64 - 1)
    }

    /// Market segmentation matching the regime schedule over the horizon.
    pub fn segmentation(&self) -> Result<Segmentation> {
        let switches = self
            .regimes
            .iter()
            .map(|r| RegimeSwitch { switch_week: r.switch_week, new_label: r.market })
            .collect();
        Segmentation::new(switches, Some(self.end_week()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c: ScenarioConfig = crate::io::read_json(path)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hash of the canonical JSON form.
    pub fn hash(&self) -> String {
        crate::io::config_hash([self.to_json().as_bytes()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for name in ScenarioConfig::PRESETS {
            let c = ScenarioConfig::preset(name, 7).unwrap();
            c.validate().unwrap();
            let back: ScenarioConfig = serde_json::from_str(&c.to_json()).unwrap();
            assert_eq!(back, c);
            assert_eq!(back.hash(), c.hash());
        }
        assert!(ScenarioConfig::preset("nope", 1).is_err());
    }

    #[test]
    fn fewer_than_two_carriers_is_a_config_error() {
        let mut c = ScenarioConfig::default_scenario(1);
        c.n_carriers = 1;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn negative_premium_is_rejected() {
        let mut c = ScenarioConfig::default_scenario(1);
        c.routing.spot_premium_pct = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn truth_intercept_is_recentred_on_reference_volume() {
        let t = published_truth(0.1);
        let as_ = &t.segments["asset_soft"];
        let c = as_["const"] + as_["log_shipper_volume"] * TRUTH_REFERENCE_VOLUME.ln();
        assert!((c - 2.0032).abs() < 1e-12);
        assert!(t.segments["non_asset_soft"].get("log_fleet_size").is_none());
    }

    #[test]
    fn regime_lookup_and_segmentation_agree() {
        let c = ScenarioConfig::default_scenario(1);
        let seg = c.segmentation().unwrap();
        for k in 0..c.horizon_weeks as i64 {
            let w = c.start_week.offset(k);
            assert_eq!(seg.assign(w).unwrap(), c.regime(w).market);
        }
        assert!(seg.assign(c.end_week().offset(1)).is_err());
    }
}
