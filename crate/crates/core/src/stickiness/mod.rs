//! Stickiness curves, price-for-PAR inversion and hold-out validation.

pub mod curve;
pub mod price;
pub mod published;
pub mod report;
pub mod validation;

pub use curve::{acceptance_curve, CurveFitDomain, CurveOptions, CurvePoint, StickinessCurve};
pub use price::{price_for_target_par, InversionMethod, PriceForPar, PriceQuery, Saturation};
pub use published::{builtin_published_model, load_published_dir, load_published_model, PUBLISHED_TABLES};
pub use report::{segment_report, write_report, Anchors, ReportOptions, SegmentReport};
pub use validation::{brier_score, stratified_split, Split};
