use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::coefficients::logistic;
use crate::domain::{pair_key, IsoWeek, Outcome, Segment, ServiceType, TenderRecord};
use crate::error::Result;
use crate::features::bins::{SrdBin, SurgeClass, VolatilityBin};
use crate::features::compute;
use crate::random::CorrelatedBinary;
use crate::spot::SpotObservation;

use super::config::{PricingStrategy, ScenarioConfig};
use super::truth::{LiveRow, TruthModel};
use super::world::{benchmark, generate_world, stream, World};

/// A load that exhausted its routing guide and moved on the spot market.
#[derive(Clone, Debug, PartialEq)]
pub struct SpotFill {
    pub load_id: u64,
    pub week: IsoWeek,
    pub benchmark: f64,
    pub price: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeeklyMetrics {
    pub week: IsoWeek,
    pub loads: u64,
    pub primary_accepts: u64,
    pub backup_accepts: u64,
    pub spot_fills: u64,
    /// Primary acceptance ratio; `None` in a week without loads.
    pub par: Option<f64>,
    /// Mean price paid per load.
    pub avg_price: Option<f64>,
    /// Total paid minus what every load would have cost at its primary
    /// award price.
    pub strategy_cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationLog {
    pub config: ScenarioConfig,
    pub world: World,
    /// Every offer of every load, ordered by load id then position.
    pub tenders: Vec<TenderRecord>,
    pub spot_fills: Vec<SpotFill>,
    /// Market spot transactions, the benchmark regression's input.
    pub spot_market: Vec<SpotObservation>,
    pub weekly: Vec<WeeklyMetrics>,
}

impl SimulationLog {
    /// Primary acceptance ratio over the horizon by carrier type of the
    /// primary carrier.
    pub fn par_by_carrier_type(&self) -> BTreeMap<ServiceType, f64> {
        let types: BTreeMap<&str, ServiceType> =
            self.world.carriers.iter().map(|c| (c.carrier_id.as_str(), c.service_type)).collect();
        let mut acc: BTreeMap<ServiceType, (u64, u64)> = BTreeMap::new();
        for t in self.tenders.iter().filter(|t| t.is_primary()) {
            let e = acc.entry(types[t.carrier_id.as_str()]).or_default();
            e.0 += u64::from(t.outcome.is_accepted());
            e.1 += 1;
        }
        acc.into_iter().map(|(k, (a, n))| (k, a as f64 / n as f64)).collect()
    }

    pub fn loads(&self) -> u64 {
        self.weekly.iter().map(|w| w.loads).sum()
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform on (0, 1) keyed by `(seed, tag, a, b)`, independent of draw order.
pub(crate) fn keyed_uniform(seed: u64, tag: u64, a: u64, b: u64) -> f64 {
    let h = mix(mix(mix(seed ^ tag) ^ a) ^ b.wrapping_mul(0x2545_f491_4f6c_dd1d));
    ((h >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

struct Load {
    id: u64,
    lane: usize,
    timestamp: NaiveDateTime,
}

/// History key mirroring the featurizer: (shipper, primary carrier, region pair).
type GroupKey = (usize, usize, String);

fn window(counts: &[u32], week: usize, back: usize) -> Vec<u32> {
    (0..back)
        .map(|k| {
            let w = week as i64 - back as i64 + k as i64;
            if w < 0 {
                0
            } else {
                counts[w as usize]
            }
        })
        .collect()
}

/// Runs the routing-guide waterfall week by week.
///
/// Demand, timestamps and market spot draws come from seeded streams that
/// do not depend on outcomes; acceptance uses uniforms keyed by load and
/// guide position, and one latent uniform per carrier, so changing the
/// pricing strategy keeps all other randomness fixed.
pub fn simulate(config: &ScenarioConfig) -> Result<SimulationLog> {
    let world = generate_world(config)?;
    let truth = TruthModel::compile(&config.acceptance_truth.segments)?;
    let latent = CorrelatedBinary::new(config.acceptance_truth.rho)?;
    let mut demand_rng = ChaCha8Rng::seed_from_u64(config.seed ^ stream::DEMAND);
    let mut spot_rng = ChaCha8Rng::seed_from_u64(config.seed ^ stream::SPOT);
    let carrier_w: Vec<f64> = (0..world.carriers.len())
        .map(|c| keyed_uniform(config.seed, stream::LATENT, c as u64, 0))
        .collect();
    let log_fleet: Vec<Option<f64>> =
        world.carriers.iter().map(|c| c.fleet_size.map(|n| (n as f64).ln())).collect();
    let log_volume: Vec<f64> = world.shippers.iter().map(|s| s.monthly_volume.ln()).collect();
    let travel: Vec<_> = world
        .lanes
        .iter()
        .map(|l| compute::compute_travel_days(l.lane.distance))
        .collect::<Result<_>>()?;

    let mut groups: BTreeMap<GroupKey, Vec<usize>> = BTreeMap::new();
    for (i, l) in world.lanes.iter().enumerate() {
        groups
            .entry((l.shipper, l.primary(), pair_key(&l.lane.origin, &l.lane.destination)))
            .or_default()
            .push(i);
    }
    let horizon = config.horizon_weeks as usize;
    let mut history: BTreeMap<GroupKey, Vec<u32>> =
        groups.keys().map(|k| (k.clone(), vec![0u32; horizon])).collect();
    let mut ratchet: Vec<f64> = world.lanes.iter().map(|l| l.award_price).collect();

    let escalation = config.routing.escalation_pct;
    let premium = 1.0 + config.routing.spot_premium_pct / 100.0;
    let sigma = config.spot_process.noise_scale;
    let week_seconds = 5 * 86_400;

    let mut tenders = Vec::new();
    let mut spot_fills = Vec::new();
    let mut spot_market = Vec::new();
    let mut weekly = Vec::with_capacity(horizon);
    let mut next_id = 1u64;

    for wi in 0..horizon {
        let week = config.start_week.offset(wi as i64);
        let regime = *config.regime(week);
        let monday = week.monday().and_hms_opt(0, 0, 0).expect("midnight");

        // Demand: a fixed pair of draws per lane-week plus one per load.
        let mut lane_loads: Vec<Vec<Load>> = Vec::with_capacity(world.lanes.len());
        for (li, l) in world.lanes.iter().enumerate() {
            let u: f64 = demand_rng.gen();
            let z: f64 = demand_rng.sample(StandardNormal);
            let n = if u < l.cadence_probability {
                let k = l.volatility;
                (l.mean_weekly_volume * (k * z - 0.5 * k * k).exp()).round().clamp(1.0, 10_000.0) as usize
            } else {
                0
            };
            let mut offsets: Vec<i64> = (0..n).map(|_| demand_rng.gen_range(0..week_seconds)).collect();
            offsets.sort_unstable();
            let loads = offsets
                .into_iter()
                .map(|s| {
                    let id = next_id;
                    next_id += 1;
                    Load { id, lane: li, timestamp: monday + Duration::seconds(s) }
                })
                .collect();
            lane_loads.push(loads);
        }

        // Market spot transactions.
        for l in &world.lanes {
            for _ in 0..config.spot_process.observations_per_lane_week {
                let s: i64 = spot_rng.gen_range(0..week_seconds);
                let z: f64 = spot_rng.sample(StandardNormal);
                let ts = monday + Duration::seconds(s);
                let b = benchmark(config, &l.lane, ts.month(), ts.year(), regime.level, regime.shift)?;
                spot_market.push(SpotObservation {
                    origin: l.lane.origin.clone(),
                    dest: l.lane.destination.clone(),
                    month: ts.month(),
                    year: ts.year(),
                    distance: l.lane.distance,
                    price: b * (sigma * z - 0.5 * sigma * sigma).exp(),
                });
            }
        }

        let mut m = WeeklyMetrics {
            week,
            loads: 0,
            primary_accepts: 0,
            backup_accepts: 0,
            spot_fills: 0,
            par: None,
            avg_price: None,
            strategy_cost: 0.0,
        };
        let mut paid_total = 0.0;
        let market = regime.market;

        for (key, lanes) in &groups {
            let mut loads: Vec<&Load> = lanes.iter().flat_map(|&li| lane_loads[li].iter()).collect();
            if loads.is_empty() {
                continue;
            }
            loads.sort_by_key(|ld| (ld.timestamp, ld.id));
            let counts = &history[key];
            let recent = window(counts, wi, 4);
            let cadence = compute::cadence_level(&recent).expect("four-week window");
            let volatility = compute::compute_volatility(&window(counts, wi, 5))
                .map(VolatilityBin::of)
                .transpose()?
                .unwrap_or(VolatilityBin::To50);
            let proxy = compute::awarded_volume_proxy(&recent).unwrap_or(0.0);

            for (rank0, ld) in loads.iter().enumerate() {
                let spec = &world.lanes[ld.lane];
                let surge = if proxy > 0.0 {
                    compute::classify_surge(rank0 as u32 + 1, proxy)?
                } else {
                    SurgeClass::MeanTo10
                };
                let bench = benchmark(
                    config,
                    &spec.lane,
                    ld.timestamp.month(),
                    ld.timestamp.year(),
                    regime.level,
                    regime.shift,
                )?;
                let primary_price = match config.pricing_strategy {
                    PricingStrategy::Fixed => spec.award_price,
                    PricingStrategy::SymmetricIndex => bench,
                    PricingStrategy::AsymmetricIndex => {
                        let r = &mut ratchet[ld.lane];
                        *r = r.max(bench);
                        *r
                    }
                    PricingStrategy::TieredSurge { premiums: p } => {
                        let pct = match surge {
                            SurgeClass::WithinMean => p.within_mean,
                            SurgeClass::MeanTo10 => p.mean_to_10,
                            SurgeClass::Surge10To20 => p.surge_10_to_20,
                            SurgeClass::SurgeOver20 => p.surge_over_20,
                        };
                        spec.award_price * (1.0 + pct / 100.0)
                    }
                };
                let prices = spec.guide_prices(primary_price, escalation);
                let shipper = spec.shipper;
                let mut offers = Vec::with_capacity(spec.guide.len());
                let mut moved = None;
                for (pos, (&carrier, &price)) in spec.guide.iter().zip(&prices).enumerate() {
                    let srd = compute::compute_srd(price, bench)?;
                    let row = LiveRow {
                        srd: SrdBin::of(srd)?,
                        travel_days: travel[ld.lane],
                        cadence,
                        volatility,
                        surge,
                        vertical: world.shippers[shipper].vertical,
                        origin: &spec.lane.origin,
                        destination: &spec.lane.destination,
                        log_fleet_size: log_fleet[carrier],
                        log_shipper_volume: log_volume[shipper],
                    };
                    let segment = Segment::new(world.carriers[carrier].service_type, market);
                    let mu = logistic(truth.eta(segment, &row)?);
                    let u = keyed_uniform(config.seed, stream::ACCEPT, ld.id, pos as u64 + 1);
                    let accepted = latent.outcome(mu, carrier_w[carrier], u);
                    offers.push((carrier, price, accepted));
                    if accepted {
                        moved = Some(price);
                        if pos == 0 {
                            m.primary_accepts += 1;
                        } else {
                            m.backup_accepts += 1;
                        }
                        break;
                    }
                }
                let paid = match moved {
                    Some(p) => p,
                    None => {
                        let price = bench * premium;
                        m.spot_fills += 1;
                        spot_fills.push(SpotFill { load_id: ld.id, week, benchmark: bench, price });
                        price
                    }
                };
                for (pos, (carrier, price, accepted)) in offers.into_iter().enumerate() {
                    tenders.push(TenderRecord {
                        load_id: ld.id,
                        shipper_id: world.shippers[shipper].shipper_id.clone(),
                        carrier_id: world.carriers[carrier].carrier_id.clone(),
                        lane: spec.lane.clone(),
                        week,
                        timestamp: ld.timestamp,
                        contract_price: price,
                        position: pos as u32 + 1,
                        outcome: if accepted { Outcome::Accepted } else { Outcome::Rejected },
                        moved_price: Some(paid),
                    });
                }
                m.loads += 1;
                paid_total += paid;
                m.strategy_cost += paid - spec.award_price;
            }
            history.get_mut(key).expect("known group")[wi] = loads.len() as u32;
        }
        if m.loads > 0 {
            m.par = Some(m.primary_accepts as f64 / m.loads as f64);
            m.avg_price = Some(paid_total / m.loads as f64);
        }
        weekly.push(m);
    }
    tenders.sort_by_key(|t| (t.load_id, t.position));
    log::info!(
        "simulated {} loads, {} tenders, {} spot fills",
        next_id - 1,
        tenders.len(),
        spot_fills.len()
    );
    Ok(SimulationLog { config: config.clone(), world, tenders, spot_fills, spot_market, weekly })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::config::PricingStrategy;

    fn small(seed: u64) -> ScenarioConfig {
        let mut c = ScenarioConfig::default_scenario(seed);
        c.n_carriers = 20;
        c.n_shippers = 10;
        c.n_lanes = 30;
        c.horizon_weeks = 12;
        c
    }

    fn set_const(c: &mut ScenarioConfig, value: f64) {
        for map in c.acceptance_truth.segments.values_mut() {
            map.clear();
            map.insert("const".into(), value);
        }
    }

    #[test]
    fn identical_config_gives_identical_log() {
        let c = small(9);
        assert_eq!(simulate(&c).unwrap(), simulate(&c).unwrap());
    }

    #[test]
    fn every_load_terminates_every_week() {
        let log = simulate(&small(2)).unwrap();
        for m in &log.weekly {
            assert_eq!(m.primary_accepts + m.backup_accepts + m.spot_fills, m.loads);
        }
        let loads: std::collections::BTreeSet<u64> = log.tenders.iter().map(|t| t.load_id).collect();
        assert_eq!(loads.len() as u64, log.loads());
        let accepted = log.tenders.iter().filter(|t| t.outcome.is_accepted()).count();
        assert_eq!(accepted + log.spot_fills.len(), loads.len());
        let primaries = log.tenders.iter().filter(|t| t.is_primary()).count();
        assert_eq!(primaries as u64, log.loads());
        for m in log.weekly.iter().filter(|m| m.loads > 0) {
            assert_eq!(m.par.unwrap(), m.primary_accepts as f64 / m.loads as f64);
        }
    }

    #[test]
    fn saturated_acceptance_never_reaches_backups() {
        let mut c = small(3);
        set_const(&mut c, 30.0);
        let log = simulate(&c).unwrap();
        assert!(log.tenders.iter().all(|t| t.is_primary() && t.outcome.is_accepted()));
        assert!(log.weekly.iter().filter_map(|m| m.par).all(|p| p == 1.0));
    }

    #[test]
    fn hopeless_acceptance_sends_every_load_to_spot() {
        let mut c = small(3);
        set_const(&mut c, -30.0);
        let log = simulate(&c).unwrap();
        assert_eq!(log.spot_fills.len() as u64, log.loads());
        assert!(log.tenders.iter().all(|t| !t.outcome.is_accepted()));
        for f in &log.spot_fills {
            assert!((f.price / f.benchmark - 1.35).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_index_puts_primary_srd_at_zero() {
        let mut c = small(4);
        c.pricing_strategy = PricingStrategy::SymmetricIndex;
        let log = simulate(&c).unwrap();
        for t in log.tenders.iter().filter(|t| t.is_primary()) {
            let regime = c.regime(t.week);
            let b = benchmark(&c, &t.lane, t.month(), t.year(), regime.level, regime.shift).unwrap();
            assert_eq!(t.contract_price, b);
            assert_eq!(SrdBin::of(compute::compute_srd(t.contract_price, b).unwrap()).unwrap().index(), 11);
        }
    }

    #[test]
    fn asymmetric_index_never_lowers_a_lane_price() {
        let mut c = small(5);
        c.pricing_strategy = PricingStrategy::AsymmetricIndex;
        let log = simulate(&c).unwrap();
        let mut last: BTreeMap<(String, String, String), f64> = BTreeMap::new();
        for t in log.tenders.iter().filter(|t| t.is_primary()) {
            let key = (t.shipper_id.clone(), t.carrier_id.clone(), t.lane.encode());
            let prev = last.insert(key, t.contract_price).unwrap_or(0.0);
            assert!(t.contract_price >= prev);
        }
    }

    #[test]
    fn backup_offers_cost_at_least_the_primary() {
        let log = simulate(&small(6)).unwrap();
        let mut primary = 0.0;
        for t in &log.tenders {
            if t.is_primary() {
                primary = t.contract_price;
            } else {
                assert!(t.contract_price >= primary);
            }
        }
    }

    #[test]
    fn strategies_share_demand() {
        let a = simulate(&small(7)).unwrap();
        let mut c = small(7);
        c.pricing_strategy = PricingStrategy::SymmetricIndex;
        let b = simulate(&c).unwrap();
        let loads = |l: &SimulationLog| l.weekly.iter().map(|m| m.loads).collect::<Vec<_>>();
        assert_eq!(loads(&a), loads(&b));
        assert_eq!(a.spot_market, b.spot_market);
    }

    #[test]
    fn keyed_uniforms_are_in_the_open_unit_interval() {
        let mut sum = 0.0;
        for i in 0..10_000u64 {
            let u = keyed_uniform(1, 2, i, 1);
            assert!(u > 0.0 && u < 1.0);
            sum += u;
        }
        assert!((sum / 10_000.0 - 0.5).abs() < 0.01);
        assert_ne!(keyed_uniform(1, 2, 3, 1), keyed_uniform(1, 2, 3, 2));
    }
}
