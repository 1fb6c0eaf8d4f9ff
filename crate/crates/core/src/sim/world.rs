use std::collections::BTreeMap;

use chrono::Datelike;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{
    pair_key, CarrierProfile, Lane, Region, RegionTaxonomy, ServiceType, ShipperProfile, Vertical,
};
use crate::error::Result;

use super::config::ScenarioConfig;

/// Stream tags for the independent generators.
pub(crate) mod stream {
    pub const WORLD: u64 = 0x3b1d_57a1;
    pub const DEMAND: u64 = 0x9e0c_44d2;
    pub const SPOT: u64 = 0x51a7_0b3e;
    pub const LATENT: u64 = 0x7f4a_e6c9;
    pub const ACCEPT: u64 = 0xc2b2_ae35;
}

/// One lane's routing guide and demand dials.
#[derive(Clone, Debug, PartialEq)]
pub struct LaneSpec {
    pub lane: Lane,
    pub shipper: usize,
    /// Carrier indices in guide order; the first is the primary.
    pub guide: Vec<usize>,
    /// Primary award price; backups sit above it.
    pub award_price: f64,
    pub mean_weekly_volume: f64,
    pub cadence_probability: f64,
    pub volatility: f64,
}

impl LaneSpec {
    pub fn primary(&self) -> usize {
        self.guide[0]
    }

    /// Guide prices when the primary is offered `primary_price`.
    pub fn guide_prices(&self, primary_price: f64, escalation_pct: f64) -> Vec<f64> {
        let backups = (self.guide.len() - 1).max(1) as f64;
        (0..self.guide.len())
            .map(|k| primary_price * (1.0 + escalation_pct / 100.0 * k as f64 / backups))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub taxonomy: RegionTaxonomy,
    pub carriers: Vec<CarrierProfile>,
    pub shippers: Vec<ShipperProfile>,
    pub lanes: Vec<LaneSpec>,
}

pub(crate) fn id(prefix: char, i: usize, n: usize) -> String {
    let width = n.to_string().len();
    format!("{prefix}{:0width$}", i + 1)
}

/// Tractor count drawn from the log-normal fleet distribution.
pub fn sample_fleet_size<R: Rng + ?Sized>(mu: f64, sigma: f64, rng: &mut R) -> u32 {
    let z: f64 = rng.sample(rand_distr::StandardNormal);
    (mu + sigma * z).exp().round().clamp(1.0, u32::MAX as f64) as u32
}

fn log_uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    if lo == hi {
        lo
    } else {
        (rng.gen_range(lo.ln()..hi.ln())).exp()
    }
}

fn uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// Benchmark spot price of a lane on a date under a regime.
pub(crate) fn benchmark(config: &ScenarioConfig, lane: &Lane, month: u32, year: i32, level: f64, shift: f64) -> Result<f64> {
    let base = config
        .spot_process
        .coefficients
        .predict(&lane.origin, &lane.destination, month, year, lane.distance)?;
    Ok(level * base + shift)
}

/// Builds carriers, shippers, lanes and routing guides. The first lane
/// always joins the spot base origin and destination so the benchmark
/// regression has its base levels.
pub fn generate_world(config: &ScenarioConfig) -> Result<World> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ stream::WORLD);
    let taxonomy = RegionTaxonomy::default();
    let regions: Vec<Region> = taxonomy.regions().cloned().collect();

    let nc = config.n_carriers as usize;
    let carriers = (0..nc)
        .map(|i| {
            let asset = rng.gen::<f64>() < config.asset_share;
            if asset {
                let fleet = sample_fleet_size(config.fleet_size.mu, config.fleet_size.sigma, &mut rng);
                CarrierProfile::new(id('C', i, nc), ServiceType::Asset, Some(fleet))
            } else {
                CarrierProfile::new(id('C', i, nc), ServiceType::NonAsset, None)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let ns = config.n_shippers as usize;
    let verticals: Vec<Vertical> = (0..ns).map(|_| *Vertical::ALL.choose(&mut rng).expect("nonempty")).collect();

    let d = &config.demand;
    let base = &config.spot_process.coefficients.base_case;
    let first = config.regime(config.start_week);
    let start = config.start_week.monday();
    let mut lanes = Vec::with_capacity(config.n_lanes as usize);
    // Lanes on one region pair share a distance, so the pair's benchmark is
    // well defined.
    let mut pair_distance: BTreeMap<String, f64> = BTreeMap::new();
    // Primaries are dealt evenly but shuffled, so a carrier's lanes span
    // several shippers and region pairs and lane effects stay separable
    // from the carrier's own latent propensity.
    let mut primaries: Vec<usize> = (0..config.n_lanes as usize).map(|i| i % nc).collect();
    primaries.shuffle(&mut rng);
    let guide_len = (config.routing.backups as usize + 1).min(nc).max(2);
    for (i, &primary) in primaries.iter().enumerate() {
        let (origin, destination) = if i == 0 {
            (base.origin.clone(), base.dest.clone())
        } else {
            (
                regions.choose(&mut rng).expect("nonempty").clone(),
                regions.choose(&mut rng).expect("nonempty").clone(),
            )
        };
        let drawn = uniform(config.lane_distance.min, config.lane_distance.max, &mut rng);
        let distance = *pair_distance.entry(pair_key(&origin, &destination)).or_insert(drawn);
        let lane = Lane::new(origin, destination, distance)?;
        let mut guide = vec![primary];
        while guide.len() < guide_len {
            let c = rng.gen_range(0..nc);
            if !guide.contains(&c) {
                guide.push(c);
            }
        }
        let reference = benchmark(config, &lane, start.month(), start.year(), first.level, first.shift)?;
        let s = uniform(-config.award_spread, config.award_spread, &mut rng);
        lanes.push(LaneSpec {
            lane,
            shipper: i % ns,
            guide,
            award_price: reference / (1.0 + s),
            mean_weekly_volume: log_uniform(d.mean_weekly_volume.min, d.mean_weekly_volume.max, &mut rng),
            cadence_probability: uniform(d.cadence_probability.min, d.cadence_probability.max, &mut rng),
            volatility: uniform(d.volatility.min, d.volatility.max, &mut rng),
        });
    }

    // Monthly volume is the expected tendered count over the shipper's lanes.
    let mut monthly = vec![0.0; ns];
    for l in &lanes {
        monthly[l.shipper] += l.cadence_probability * l.mean_weekly_volume.max(1.0) * 52.0 / 12.0;
    }
    let shippers = (0..ns)
        .map(|j| ShipperProfile::new(id('S', j, ns), verticals[j], monthly[j].max(0.1)))
        .collect::<Result<Vec<_>>>()?;

    Ok(World { taxonomy, carriers, shippers, lanes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_world() {
        let c = ScenarioConfig::default_scenario(11);
        assert_eq!(generate_world(&c).unwrap(), generate_world(&c).unwrap());
        let other = ScenarioConfig::default_scenario(12);
        assert_ne!(generate_world(&c).unwrap(), generate_world(&other).unwrap());
    }

    #[test]
    fn backups_are_priced_at_or_above_primary() {
        let c = ScenarioConfig::default_scenario(3);
        let w = generate_world(&c).unwrap();
        for l in &w.lanes {
            assert!(l.guide.len() >= 2);
            let prices = l.guide_prices(l.award_price, c.routing.escalation_pct);
            assert!(prices.windows(2).all(|p| p[1] >= p[0]));
            assert!(prices[1] >= prices[0]);
            let mut distinct = l.guide.clone();
            distinct.sort_unstable();
            distinct.dedup();
            assert_eq!(distinct.len(), l.guide.len());
        }
    }

    #[test]
    fn lanes_on_a_pair_share_distance() {
        let w = generate_world(&ScenarioConfig::default_scenario(4)).unwrap();
        let mut seen: BTreeMap<String, f64> = BTreeMap::new();
        for l in &w.lanes {
            let d = *seen.entry(l.lane.pair_key()).or_insert(l.lane.distance);
            assert_eq!(d, l.lane.distance);
        }
        assert!(seen.len() < w.lanes.len());
    }

    #[test]
    fn two_carriers_give_one_backup() {
        let mut c = ScenarioConfig::default_scenario(3);
        c.n_carriers = 2;
        let w = generate_world(&c).unwrap();
        assert!(w.lanes.iter().all(|l| l.guide.len() == 2 && l.guide[0] != l.guide[1]));
    }

    #[test]
    fn fleet_sizes_are_mostly_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sizes: Vec<u32> = (0..10_000).map(|_| sample_fleet_size(1.0, 1.1, &mut rng)).collect();
        let small = sizes.iter().filter(|&&n| n < 20).count() as f64 / sizes.len() as f64;
        assert!(small >= 0.90, "share below 20 = {small}");
        assert!(sizes.iter().all(|&n| n >= 1));
    }

    #[test]
    fn carriers_hold_lanes_of_several_shippers() {
        let c = ScenarioConfig::default_scenario(6);
        let w = generate_world(&c).unwrap();
        let mut per_carrier: BTreeMap<usize, (usize, std::collections::BTreeSet<usize>)> = BTreeMap::new();
        for l in &w.lanes {
            let e = per_carrier.entry(l.primary()).or_default();
            e.0 += 1;
            e.1.insert(l.shipper);
        }
        assert_eq!(per_carrier.len(), c.n_carriers as usize);
        let counts: Vec<usize> = per_carrier.values().map(|e| e.0).collect();
        assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        let mixed = per_carrier.values().filter(|e| e.1.len() > 1).count();
        assert!(mixed as f64 >= 0.9 * per_carrier.len() as f64);
    }

    #[test]
    fn first_lane_carries_the_spot_base_case() {
        let c = ScenarioConfig::default_scenario(3);
        let w = generate_world(&c).unwrap();
        let b = &c.spot_process.coefficients.base_case;
        assert_eq!(w.lanes[0].lane.origin, b.origin);
        assert_eq!(w.lanes[0].lane.destination, b.dest);
    }
}
