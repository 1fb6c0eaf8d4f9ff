//! Acceptance probability against the spot rate differential.
//!
//! The base SRD bin is pinned at an anchor acceptance rate. Every SRD bin whose
//! coefficient passes a Wald test is plotted at its midpoint with probability
//! `logistic(logit(anchor) + b_bin)`, and a least-squares line through those
//! points summarizes how fast acceptance falls as spot rises over contract.

use serde::{Deserialize, Serialize};

use crate::coefficients::{logistic, logit, CoefficientSet};
use crate::domain::{MarketCondition, Segment};
use crate::error::{Error, Result};
use crate::features::{Level, SrdBin};

/// Which plotted points the line is fit through.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveFitDomain {
    /// All significant bins plus the base bin.
    #[default]
    AllBins,
    /// Only bins on the market's side of zero (negative SRD for soft markets,
    /// positive for tight) plus the base bin.
    MarketHalf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveOptions {
    /// Wald significance level for plotted bins.
    pub alpha: f64,
    pub fit_domain: CurveFitDomain,
    /// Plotting position of the open tail bins.
    pub tail_midpoint: f64,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions { alpha: 0.1, fit_domain: CurveFitDomain::AllBins, tail_midpoint: 55.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub bin: String,
    pub srd: f64,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StickinessCurve {
    pub segment: Segment,
    /// Acceptance probability at the base SRD bin.
    pub anchor_probability: f64,
    pub points: Vec<CurvePoint>,
    /// Probability change per 100 percentage points of SRD.
    pub slope: f64,
    /// Fitted probability at SRD 0.
    pub intercept: f64,
    /// SRD range the curve describes for its market.
    pub plot_range: (f64, f64),
}

impl StickinessCurve {
    /// Fitted line at `srd` percent.
    pub fn evaluate(&self, srd: f64) -> f64 {
        self.intercept + self.slope * srd / 100.0
    }
}

pub(crate) fn bin_midpoint(bin: SrdBin, tail_midpoint: f64) -> f64 {
    if bin == SrdBin::LOW_TAIL {
        -tail_midpoint
    } else if bin == SrdBin::HIGH_TAIL {
        tail_midpoint
    } else {
        bin.midpoint()
    }
}

pub(crate) fn market_range(market: MarketCondition, tail_midpoint: f64) -> (f64, f64) {
    match market {
        MarketCondition::Soft => (-tail_midpoint, 0.0),
        MarketCondition::Tight => (0.0, tail_midpoint),
    }
}

/// Plotted points for a baseline linear predictor `eta0` at the base bin.
pub(crate) fn curve_points(
    model: &CoefficientSet,
    segment: Segment,
    eta0: f64,
    options: &CurveOptions,
) -> Vec<CurvePoint> {
    let mut points = Vec::new();
    for &bin in SrdBin::all() {
        let srd = bin_midpoint(bin, options.tail_midpoint);
        let beta = if bin == SrdBin::BASE {
            0.0
        } else {
            let name = bin.coefficient_name();
            if !model.is_significant(&name, options.alpha) {
                continue;
            }
            if options.fit_domain == CurveFitDomain::MarketHalf {
                let on_side = match segment.market {
                    MarketCondition::Soft => srd < 0.0,
                    MarketCondition::Tight => srd > 0.0,
                };
                if !on_side {
                    continue;
                }
            }
            model.estimate_or_zero(&name)
        };
        points.push(CurvePoint { bin: bin.label().to_string(), srd, probability: logistic(eta0 + beta) });
    }
    points
}

/// Ordinary least squares of probability on SRD/100: (intercept, slope).
pub(crate) fn fit_line(points: &[CurvePoint]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.srd / 100.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.probability).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.srd / 100.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return (my, 0.0);
    }
    let sxy: f64 = points
        .iter()
        .map(|p| (p.srd / 100.0 - mx) * (p.probability - my))
        .sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

pub(crate) fn check_probability(p: f64, what: &str) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} {p} must lie strictly between 0 and 1")))
    }
}

/// Stickiness curve of one segment anchored at `anchor_par`.
pub fn acceptance_curve(
    model: &CoefficientSet,
    segment: Segment,
    anchor_par: f64,
    options: &CurveOptions,
) -> Result<StickinessCurve> {
    check_probability(anchor_par, "anchor probability")?;
    let points = curve_points(model, segment, logit(anchor_par), options);
    if points.len() < 2 {
        return Err(Error::DegenerateCurve(segment.label()));
    }
    let (intercept, slope) = fit_line(&points);
    Ok(StickinessCurve {
        segment,
        anchor_probability: anchor_par,
        points,
        slope,
        intercept,
        plot_range: market_range(segment.market, options.tail_midpoint),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientEntry;
    use crate::stickiness::published::builtin_published_model;

    fn seg(s: &str) -> Segment {
        s.parse().unwrap()
    }

    #[test]
    fn zero_coefficients_give_a_degenerate_curve() {
        let model = CoefficientSet::published(
            "asset_soft",
            SrdBin::all()
                .iter()
                .map(|b| CoefficientEntry { name: b.coefficient_name(), estimate: 0.0, se: Some(0.1) })
                .collect(),
        );
        assert!(matches!(
            acceptance_curve(&model, seg("asset_soft"), 0.8, &CurveOptions::default()),
            Err(Error::DegenerateCurve(_))
        ));
    }

    #[test]
    fn flat_significant_bins_give_zero_slope() {
        // tiny equal effects in every bin: significant but flat
        let model = CoefficientSet::published(
            "asset_soft",
            SrdBin::all()
                .iter()
                .filter(|b| **b != SrdBin::BASE)
                .map(|b| CoefficientEntry { name: b.coefficient_name(), estimate: 1e-12, se: Some(1e-15) })
                .collect(),
        );
        let c = acceptance_curve(&model, seg("asset_soft"), 0.8, &CurveOptions::default()).unwrap();
        assert_eq!(c.points.len(), 22);
        assert!(c.slope.abs() < 1e-9);
        assert!((c.intercept - 0.8).abs() < 1e-9);
    }

    #[test]
    fn asset_soft_point_matches_hand_arithmetic() {
        let model = builtin_published_model(seg("asset_soft"));
        let c = acceptance_curve(&model, seg("asset_soft"), 0.819, &CurveOptions::default()).unwrap();
        let p = c.points.iter().find(|p| p.bin == "[-50,-45)").unwrap();
        let eta = (0.819f64 / 0.181).ln() + 0.6307;
        assert!((p.probability - 1.0 / (1.0 + (-eta).exp())).abs() < 1e-12);
        assert!((p.probability - 0.895).abs() < 5e-4);
        assert_eq!(p.srd, -47.5);
        let base = c.points.iter().find(|p| p.bin == "[0,5)").unwrap();
        assert_eq!((base.srd, base.probability), (2.5, 0.819));
        assert_eq!(c.plot_range, (-55.0, 0.0));
    }

    #[test]
    fn line_is_least_squares() {
        let pts: Vec<CurvePoint> = [(-10.0, 0.9), (0.0, 0.8), (10.0, 0.75)]
            .iter()
            .map(|&(srd, probability)| CurvePoint { bin: String::new(), srd, probability })
            .collect();
        let (a, b) = fit_line(&pts);
        // x = (-0.1, 0, 0.1): slope = sum(x y) / sum(x^2) = (-0.09 + 0.075) / 0.02
        assert!((b - (-0.75)).abs() < 1e-12);
        assert!((a - 2.45 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn market_half_domain_keeps_one_side() {
        let model = builtin_published_model(seg("asset_soft"));
        let opts = CurveOptions { fit_domain: CurveFitDomain::MarketHalf, ..CurveOptions::default() };
        let c = acceptance_curve(&model, seg("asset_soft"), 0.819, &opts).unwrap();
        assert!(c.points.iter().all(|p| p.srd < 0.0 || p.bin == "[0,5)"));
    }
}
