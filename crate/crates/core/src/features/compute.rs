//! Per-load feature arithmetic.

use crate::domain::MIN_LANE_DISTANCE;
use crate::error::{Error, Result};

use super::bins::{Cadence, SrdBin, SurgeClass, TravelDays, VolatilityBin};

/// Miles a driver covers in one day.
pub const MILES_PER_DAY: f64 = 400.0;

/// Spot rate differential in percent: how far the spot price sits above the
/// contract price.
pub fn compute_srd(contract_price: f64, spot_price: f64) -> Result<f64> {
    if !(contract_price > 0.0) {
        return Err(Error::domain(format!(
            "contract price {contract_price} must be positive"
        )));
    }
    Ok(100.0 * (spot_price - contract_price) / contract_price)
}

pub fn bin_srd(srd: f64) -> Result<SrdBin> {
    SrdBin::of(srd)
}

/// Share of the four preceding weeks with at least one tender, in steps of
/// 25. `None` when fewer than four weeks of history exist.
pub fn compute_cadence(history: &[u32]) -> Option<u32> {
    if history.len() != 4 {
        return None;
    }
    Some(25 * history.iter().filter(|&&c| c >= 1).count() as u32)
}

pub fn cadence_level(history: &[u32]) -> Option<Cadence> {
    compute_cadence(history).map(|p| Cadence::from_percent(p).expect("multiple of 25"))
}

fn positive_weeks(weekly_volumes: &[u32]) -> Option<Vec<f64>> {
    let positive: Vec<f64> = weekly_volumes
        .iter()
        .filter(|&&v| v > 0)
        .map(|&v| v as f64)
        .collect();
    (positive.len() >= 2).then_some(positive)
}

fn rms_change(positive: &[f64]) -> f64 {
    let ss: f64 = positive.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    (ss / (positive.len() - 1) as f64).sqrt()
}

/// Root-mean-square change between consecutive positive weeks, in loads.
/// Zero-volume weeks are skipped; `None` when fewer than two weeks carry
/// volume.
pub fn volatility_rms(weekly_volumes: &[u32]) -> Option<f64> {
    positive_weeks(weekly_volumes).map(|p| rms_change(&p))
}

/// [`volatility_rms`] as a percent of the mean positive weekly volume.
pub fn compute_volatility(weekly_volumes: &[u32]) -> Option<f64> {
    let positive = positive_weeks(weekly_volumes)?;
    let mean = positive.iter().sum::<f64>() / positive.len() as f64;
    Some(100.0 * rms_change(&positive) / mean)
}

pub fn volatility_level(weekly_volumes: &[u32]) -> Option<VolatilityBin> {
    compute_volatility(weekly_volumes).map(|v| VolatilityBin::of(v).expect("non-negative"))
}

/// Surge class of the `rank`-th load in a week against the awarded weekly
/// volume proxy. Upper edges are inclusive.
pub fn classify_surge(rank: u32, proxy: f64) -> Result<SurgeClass> {
    if !(proxy > 0.0) || !proxy.is_finite() {
        return Err(Error::domain(format!("awarded volume proxy {proxy} must be positive")));
    }
    if rank < 1 {
        return Err(Error::domain("load rank starts at 1"));
    }
    // compare 10*rank against 10x, 11x, 12x the proxy to keep edges exact
    let r10 = 10.0 * rank as f64;
    Ok(if r10 <= 10.0 * proxy {
        SurgeClass::WithinMean
    } else if r10 <= 11.0 * proxy {
        SurgeClass::MeanTo10
    } else if r10 <= 12.0 * proxy {
        SurgeClass::Surge10To20
    } else {
        SurgeClass::SurgeOver20
    })
}

/// Mean weekly tendered volume over the preceding four weeks.
pub fn awarded_volume_proxy(history: &[u32]) -> Option<f64> {
    if history.len() != 4 {
        return None;
    }
    Some(history.iter().map(|&c| c as f64).sum::<f64>() / 4.0)
}

pub fn compute_travel_days(distance: f64) -> Result<TravelDays> {
    if !(distance > MIN_LANE_DISTANCE) {
        return Err(Error::domain(format!(
            "distance {distance} is short haul (must exceed {MIN_LANE_DISTANCE} miles)"
        )));
    }
    Ok(match (distance / MILES_PER_DAY).ceil() as u64 {
        0 | 1 => TravelDays::One,
        2 => TravelDays::Two,
        3 => TravelDays::Three,
        4 => TravelDays::Four,
        _ => TravelDays::OverFour,
    })
}
