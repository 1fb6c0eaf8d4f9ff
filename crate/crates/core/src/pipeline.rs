//! File-to-file pipeline stages shared by the CLI and the integration tests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{logistic, CoefficientSet, WorkingCorrelation};
use crate::corpus;
use crate::domain::{RegionTaxonomy, Segment, Segmentation};
use crate::error::{Error, Result};
use crate::features::{
    build_feature_rows, encode_design, read_feature_rows, row_linear_predictor, write_feature_rows, EncoderOptions,
    FeatureContext, FeatureRow,
};
use crate::features::bins::{Cadence, Level, SrdBin, SurgeClass, TravelDays, VolatilityBin};
use crate::gee::{fit_gee_logit, GeeOptions};
use crate::io;
use crate::sim::config::AcceptanceTruth;
use crate::spot::{fit_spot_model, read_spot_observations, BaseCase, SpotModel};
use crate::stickiness::{brier_score, stratified_split};

/// Hash of the given input files plus an options string.
pub fn inputs_hash(paths: &[&Path], options: &str) -> Result<String> {
    let mut parts = Vec::with_capacity(paths.len() + 1);
    for p in paths {
        parts.push(io::read_bytes(p)?);
    }
    parts.push(options.as_bytes().to_vec());
    Ok(io::config_hash(parts.iter().map(Vec::as_slice)))
}

/// Fits the spot benchmark from an observation file and writes it as JSON.
pub fn benchmark_spot(observations: &Path, taxonomy: &RegionTaxonomy, base: &BaseCase, out: &Path) -> Result<SpotModel> {
    let obs = read_spot_observations(observations, taxonomy)?;
    let mut model = fit_spot_model(&obs, base)?;
    model.config_hash = Some(inputs_hash(&[observations], &format!("{base:?}"))?);
    model.save(out)?;
    Ok(model)
}

pub struct FeaturizeInputs<'a> {
    pub tenders: &'a Path,
    pub carriers: &'a Path,
    pub shippers: &'a Path,
    pub spot_model: &'a Path,
    pub segmentation: Option<&'a Path>,
    pub taxonomy: &'a RegionTaxonomy,
}

/// Reads a tender corpus and its profiles and writes feature rows.
pub fn featurize(inputs: &FeaturizeInputs<'_>, out: &Path) -> Result<Vec<FeatureRow>> {
    let tenders = corpus::read_tenders(inputs.tenders, inputs.taxonomy)?;
    let carriers = corpus::read_carriers(inputs.carriers)?;
    let shippers = corpus::read_shippers(inputs.shippers)?;
    let spot = SpotModel::load(inputs.spot_model)?;
    let segmentation = match inputs.segmentation {
        Some(p) => Segmentation::load(p)?,
        None => Segmentation::default(),
    };
    let ctx = FeatureContext { spot: &spot, carriers: &carriers, shippers: &shippers, segmentation: &segmentation };
    let rows = build_feature_rows(&tenders, &ctx)?;
    let mut paths = vec![inputs.tenders, inputs.carriers, inputs.shippers, inputs.spot_model];
    paths.extend(inputs.segmentation);
    let hash = inputs_hash(&paths, "featurize/1")?;
    write_feature_rows(out, &rows, &hash)?;
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    pub encoder: EncoderOptions,
    pub gee: GeeOptions,
    pub correlation: WorkingCorrelation,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            encoder: EncoderOptions::default(),
            gee: GeeOptions::default(),
            correlation: WorkingCorrelation::Exchangeable,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SegmentFit {
    pub set: CoefficientSet,
    pub dropped_rows: usize,
    pub pruned_levels: Vec<String>,
}

pub fn rows_by_segment(rows: &[FeatureRow]) -> BTreeMap<Segment, Vec<FeatureRow>> {
    let mut out: BTreeMap<Segment, Vec<FeatureRow>> = BTreeMap::new();
    for r in rows {
        out.entry(r.segment()).or_default().push(r.clone());
    }
    out
}

/// Fits one segment's rows.
pub fn fit_rows(rows: &[FeatureRow], segment: Segment, opts: &FitOptions) -> Result<SegmentFit> {
    let enc = encode_design(rows, &opts.encoder)?;
    let fit = fit_gee_logit(&enc.design, opts.correlation, &opts.gee)?;
    let mut set = fit.to_coefficient_set(Some(segment.label()));
    set.bases = enc.bases;
    Ok(SegmentFit { set, dropped_rows: enc.dropped_rows, pruned_levels: enc.pruned_levels })
}

/// One acceptance model per segment present in `rows`.
pub fn fit_segments(rows: &[FeatureRow], opts: &FitOptions) -> Result<BTreeMap<Segment, SegmentFit>> {
    let groups: Vec<(Segment, Vec<FeatureRow>)> = rows_by_segment(rows).into_iter().collect();
    let fits: Vec<Result<(Segment, SegmentFit)>> = groups
        .par_iter()
        .map(|(s, r)| {
            fit_rows(r, *s, opts)
                .map(|f| (*s, f))
                .map_err(|e| Error::InsufficientData(format!("segment {}: {e}", s.label())))
        })
        .collect();
    fits.into_iter().collect()
}

pub fn model_file(dir: &Path, segment: Segment) -> PathBuf {
    dir.join(format!("gee_{}.json", segment.label()))
}

/// Fits every segment of a feature-row file and writes one JSON per segment.
pub fn fit_files(features: &Path, out_dir: &Path, opts: &FitOptions) -> Result<BTreeMap<Segment, SegmentFit>> {
    let rows = read_feature_rows(features)?;
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!("{} has no feature rows", features.display())));
    }
    let fits = fit_segments(&rows, opts)?;
    let hash = inputs_hash(&[features], &format!("{opts:?}"))?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for (s, f) in &fits {
        let mut set = f.set.clone();
        set.config_hash = Some(hash.clone());
        set.save(&model_file(out_dir, *s))?;
    }
    Ok(fits)
}

/// Loads every `gee_<segment>.json` present in `dir`.
pub fn load_models(dir: &Path) -> Result<BTreeMap<Segment, CoefficientSet>> {
    let mut out = BTreeMap::new();
    for s in Segment::ALL {
        let p = model_file(dir, s);
        if p.exists() {
            out.insert(s, CoefficientSet::load(&p)?);
        }
    }
    if out.is_empty() {
        return Err(Error::InsufficientData(format!("no gee_<segment>.json models in {}", dir.display())));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentValidation {
    pub segment: Segment,
    pub n_train: usize,
    pub n_test: usize,
    pub train_rate: f64,
    pub test_rate: f64,
    pub train_brier: f64,
    pub test_brier: f64,
    /// Test Brier of predicting the training acceptance rate everywhere.
    pub baseline_brier: f64,
}

/// How `validate` predicts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Predictor {
    Fitted,
    Constant(f64),
}

fn predict(set: Option<&CoefficientSet>, rows: &[&FeatureRow], opts: &EncoderOptions, predictor: Predictor) -> Vec<f64> {
    match (predictor, set) {
        (Predictor::Constant(p), _) => vec![p; rows.len()],
        (Predictor::Fitted, Some(set)) => rows.iter().map(|r| logistic(row_linear_predictor(set, r, opts))).collect(),
        (Predictor::Fitted, None) => unreachable!("fitted predictor without a model"),
    }
}

/// Stratified hold-out per segment: fit on the training part, score both.
/// Test rows carrying a level pruned from training score it as zero.
pub fn validate_segments(
    rows: &[FeatureRow],
    test_fraction: f64,
    seed: u64,
    opts: &FitOptions,
    predictor: Predictor,
) -> Result<Vec<SegmentValidation>> {
    let mut out = Vec::new();
    for (segment, seg_rows) in rows_by_segment(rows) {
        let outcomes: Vec<bool> = seg_rows.iter().map(|r| r.outcome == 1).collect();
        let split = stratified_split(&outcomes, test_fraction, seed)?;
        let train: Vec<&FeatureRow> = split.train.iter().map(|&i| &seg_rows[i]).collect();
        let test: Vec<&FeatureRow> = split.test.iter().map(|&i| &seg_rows[i]).collect();
        let y = |v: &[&FeatureRow]| v.iter().map(|r| r.outcome).collect::<Vec<u8>>();
        let rate = |v: &[&FeatureRow]| v.iter().map(|r| r.outcome as f64).sum::<f64>() / v.len().max(1) as f64;
        let set = match predictor {
            Predictor::Fitted => {
                let owned: Vec<FeatureRow> = train.iter().map(|r| (*r).clone()).collect();
                Some(fit_rows(&owned, segment, opts)?.set)
            }
            Predictor::Constant(_) => None,
        };
        let train_rate = rate(&train);
        let train_brier = brier_score(&predict(set.as_ref(), &train, &opts.encoder, predictor), &y(&train))?;
        let test_brier = brier_score(&predict(set.as_ref(), &test, &opts.encoder, predictor), &y(&test))?;
        let baseline_brier = brier_score(&vec![train_rate; test.len()], &y(&test))?;
        out.push(SegmentValidation {
            segment,
            n_train: train.len(),
            n_test: test.len(),
            train_rate,
            test_rate: rate(&test),
            train_brier,
            test_brier,
            baseline_brier,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryEntry {
    pub segment: Segment,
    pub name: String,
    pub truth: f64,
    pub estimate: f64,
    pub se: f64,
    pub covered: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub entries: Vec<RecoveryEntry>,
    pub coverage: f64,
    /// Estimated working correlation per segment.
    pub rho: BTreeMap<String, f64>,
    pub rho_truth: f64,
}

fn canonical_bases() -> BTreeMap<&'static str, String> {
    [
        (SrdBin::VARIABLE, SrdBin::BASE.coefficient_name()),
        (TravelDays::VARIABLE, TravelDays::BASE.coefficient_name()),
        (Cadence::VARIABLE, Cadence::BASE.coefficient_name()),
        (VolatilityBin::VARIABLE, VolatilityBin::BASE.coefficient_name()),
        (SurgeClass::VARIABLE, SurgeClass::BASE.coefficient_name()),
        (crate::domain::Vertical::VARIABLE, crate::domain::Vertical::PaperPackaging.coefficient_name()),
    ]
    .into_iter()
    .collect()
}

/// Truth re-expressed against the bases the fit actually used.
fn truth_in_fit_basis(truth: &BTreeMap<String, f64>, bases: &BTreeMap<String, String>) -> BTreeMap<String, f64> {
    let t = |n: &str| truth.get(n).copied().unwrap_or(0.0);
    let canonical = canonical_bases();
    let mut shift: BTreeMap<String, f64> = BTreeMap::new();
    let mut constant = t("const");
    for (var, base) in bases {
        let canon = canonical.get(var.as_str()).cloned().unwrap_or_default();
        if *base != canon {
            let b = t(base);
            constant += b;
            shift.insert(var.clone(), b);
        }
    }
    let mut out = truth.clone();
    for var in shift.keys() {
        if let Some(canon) = canonical.get(var.as_str()) {
            out.entry(canon.clone()).or_insert(0.0);
        }
    }
    out.insert("const".into(), constant);
    for (var, b) in shift {
        let prefix = format!("{var}:");
        for (name, v) in out.iter_mut() {
            if name.starts_with(&prefix) {
                *v -= b;
            }
        }
    }
    out
}

/// Compares fitted coefficients with the generating truth: an estimate is
/// covered when it lies within `z` robust standard errors of the truth.
pub fn compare_to_truth(
    models: &BTreeMap<Segment, CoefficientSet>,
    truth: &AcceptanceTruth,
    z: f64,
) -> Result<RecoveryReport> {
    let mut entries = Vec::new();
    let mut rho = BTreeMap::new();
    for (segment, set) in models {
        let t = truth
            .segments
            .get(&segment.label())
            .ok_or_else(|| Error::Config(format!("truth has no segment {}", segment.label())))?;
        let t = truth_in_fit_basis(t, &set.bases);
        for c in &set.coefficients {
            let se = c.se.unwrap_or(f64::NAN);
            let tv = t.get(&c.name).copied().unwrap_or(0.0);
            entries.push(RecoveryEntry {
                segment: *segment,
                name: c.name.clone(),
                truth: tv,
                estimate: c.estimate,
                se,
                covered: (c.estimate - tv).abs() <= z * se,
            });
        }
        if let Some(fit) = &set.fit {
            rho.insert(segment.label(), fit.rho);
        }
    }
    let coverage = entries.iter().filter(|e| e.covered).count() as f64 / entries.len().max(1) as f64;
    Ok(RecoveryReport { entries, coverage, rho, rho_truth: truth.rho })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_is_rebased_when_the_fit_promotes_a_base() {
        let truth: BTreeMap<String, f64> = [
            ("const".to_string(), 1.0),
            ("srd:[5,10)".to_string(), 0.5),
            ("srd:[10,15)".to_string(), 0.2),
            ("surge:within_mean".to_string(), 0.3),
        ]
        .into_iter()
        .collect();
        let bases: BTreeMap<String, String> = [
            ("srd".to_string(), "srd:[5,10)".to_string()),
            ("surge".to_string(), "surge:mean_to_10".to_string()),
        ]
        .into_iter()
        .collect();
        let t = truth_in_fit_basis(&truth, &bases);
        assert_eq!(t["const"], 1.5);
        assert_eq!(t["srd:[5,10)"], 0.0);
        assert!((t["srd:[10,15)"] + 0.3).abs() < 1e-15);
        assert_eq!(t["surge:within_mean"], 0.3);
        // the old base now carries minus the promoted level's effect
        assert_eq!(t["srd:[0,5)"], -0.5);
        assert!(!t.contains_key("surge:mean_to_10"));
    }
}
