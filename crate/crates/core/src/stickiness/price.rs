//! Contract price needed to hold a target primary acceptance rate.

use serde::{Deserialize, Serialize};

use crate::coefficients::{logit, CoefficientSet};
use crate::domain::Segment;
use crate::error::{Error, Result};

use super::curve::{check_probability, curve_points, fit_line, CurveOptions};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionMethod {
    /// Invert the least-squares line through the plotted points.
    #[default]
    Line,
    /// Use the plotted points directly: the highest SRD whose probability
    /// still reaches the target.
    Step,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Saturation {
    /// Target needs an SRD below the lowest plotted bin.
    Low,
    /// Target is met even above the highest plotted bin.
    High,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceForPar {
    /// SRD (percent) at which the curve reaches the target.
    pub srd_star: f64,
    pub contract_price: f64,
    pub saturated: Option<Saturation>,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriceQuery {
    pub spot_price: f64,
    pub target: f64,
    pub anchor: f64,
    pub method: InversionMethod,
}

/// Contract price at which the segment curve, shifted by the listed level
/// dummies, reaches `query.target`. Levels whose coefficients fail the
/// Wald test at `options.alpha` are treated as the base level.
pub fn price_for_target_par(
    model: &CoefficientSet,
    segment: Segment,
    overrides: &[String],
    query: &PriceQuery,
    options: &CurveOptions,
) -> Result<PriceForPar> {
    check_probability(query.target, "target acceptance rate")?;
    check_probability(query.anchor, "anchor probability")?;
    if !(query.spot_price > 0.0) {
        return Err(Error::domain(format!("spot price {} must be positive", query.spot_price)));
    }
    let shift: f64 = overrides
        .iter()
        .filter(|name| model.is_significant(name, options.alpha))
        .map(|name| model.estimate_or_zero(name))
        .sum();
    let points = curve_points(model, segment, logit(query.anchor) + shift, options);
    let (intercept, slope) = fit_line(&points);
    let bound = options.tail_midpoint;

    let (srd_star, saturated) = match query.method {
        InversionMethod::Line => {
            if slope == 0.0 {
                if (intercept - query.target).abs() > 1e-12 {
                    return Err(Error::NoSolution(format!(
                        "{segment}: flat curve at {intercept:.4} never reaches {}",
                        query.target
                    )));
                }
                (0.0, None)
            } else {
                let srd = 100.0 * (query.target - intercept) / slope;
                if srd < -bound {
                    (-bound, Some(Saturation::Low))
                } else if srd > bound {
                    (bound, Some(Saturation::High))
                } else {
                    (srd, None)
                }
            }
        }
        InversionMethod::Step => {
            let best = points
                .iter()
                .filter(|p| p.probability >= query.target)
                .map(|p| p.srd)
                .fold(f64::NEG_INFINITY, f64::max);
            if best.is_finite() {
                (best, (best >= bound).then_some(Saturation::High))
            } else {
                (-bound, Some(Saturation::Low))
            }
        }
    };
    Ok(PriceForPar {
        srd_star,
        contract_price: query.spot_price / (1.0 + srd_star / 100.0),
        saturated,
        slope,
        intercept,
    })
}
