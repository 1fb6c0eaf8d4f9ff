//! Coefficient sets on the log-odds scale, whether fitted or published.
//!
//! A fitted GEE model and a transcribed coefficient table serialize to the
//! same JSON document, so downstream analysis does not care where the
//! numbers came from.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::io;

pub const COEFFICIENT_SET_SCHEMA: &str = "coefficient_set/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Fitted,
    Published,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkingCorrelation {
    Independence,
    Exchangeable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub name: String,
    pub estimate: f64,
    /// Robust standard error; absent for omitted base levels.
    pub se: Option<f64>,
}

/// Estimation metadata carried by fitted sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    pub correlation: WorkingCorrelation,
    pub rho: f64,
    pub scale: f64,
    pub n_obs: usize,
    pub n_clusters: usize,
    pub converged: bool,
    pub iterations: usize,
    pub max_abs_score: f64,
    pub ridge: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub schema: String,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<String>,
    pub coefficients: Vec<CoefficientEntry>,
    /// Full sandwich covariance in `coefficients` order, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitMetadata>,
    /// Base level per categorical variable, as a coefficient name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bases: BTreeMap<String, String>,
    /// Hash of the inputs that produced the set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// Two-sided p-value of a Wald z statistic.
pub fn wald_p_value(estimate: f64, se: f64) -> f64 {
    if estimate == 0.0 {
        return 1.0;
    }
    if !(se > 0.0) {
        return if se == 0.0 { 0.0 } else { 1.0 };
    }
    let z = (estimate / se).abs();
    erfc(z / std::f64::consts::SQRT_2)
}

/// Two-sided Wald test at significance `level`.
pub fn is_significant(estimate: f64, se: Option<f64>, level: f64) -> bool {
    se.is_some_and(|se| wald_p_value(estimate, se) < level)
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

impl CoefficientSet {
    pub fn published(segment: impl Into<String>, coefficients: Vec<CoefficientEntry>) -> Self {
        CoefficientSet {
            schema: COEFFICIENT_SET_SCHEMA.into(),
            source: Source::Published,
            segment: Some(segment.into()),
            coefficients,
            covariance: None,
            fit: None,
            bases: BTreeMap::new(),
            config_hash: None,
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.coefficients.iter().map(|c| c.name.as_str())
    }

    pub fn entry(&self, name: &str) -> Option<&CoefficientEntry> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    /// Estimate for `name`; names absent from the set are omitted levels and
    /// contribute zero.
    pub fn estimate_or_zero(&self, name: &str) -> f64 {
        self.entry(name).map_or(0.0, |c| c.estimate)
    }

    pub fn wald_significance(&self, level: f64) -> BTreeMap<String, bool> {
        self.coefficients
            .iter()
            .map(|c| (c.name.clone(), is_significant(c.estimate, c.se, level)))
            .collect()
    }

    pub fn is_significant(&self, name: &str, level: f64) -> bool {
        self.entry(name)
            .is_some_and(|c| is_significant(c.estimate, c.se, level))
    }

    /// Linear predictor over named regressors; unknown names are an error so
    /// that typos do not silently become base levels.
    pub fn linear_predictor(&self, values: &BTreeMap<String, f64>) -> Result<f64> {
        let mut eta = 0.0;
        for (name, v) in values {
            let c = self.entry(name).ok_or_else(|| Error::UnknownLevel {
                variable: "coefficient".into(),
                level: name.clone(),
            })?;
            eta += c.estimate * v;
        }
        Ok(eta)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let set: CoefficientSet = io::read_json(path)?;
        if set.schema != COEFFICIENT_SET_SCHEMA {
            return Err(Error::schema(
                path.display().to_string(),
                1,
                "schema",
                format!("expected {COEFFICIENT_SET_SCHEMA}, found {}", set.schema),
            ));
        }
        Ok(set)
    }
}
