//! Tender streams to acceptance-model rows.

pub mod bins;
pub mod compute;
pub mod design;
pub mod rows;

pub use bins::{Cadence, Level, SrdBin, SurgeClass, TravelDays, VolatilityBin};
pub use compute::{
    bin_srd, classify_surge, compute_cadence, compute_srd, compute_travel_days, compute_volatility, volatility_rms,
};
pub use design::{design_terms, encode_design, row_linear_predictor, EncodedDesign, EncoderOptions};
pub use rows::{build_feature_rows, read_feature_rows, write_feature_rows, FeatureContext, FeatureRow};
