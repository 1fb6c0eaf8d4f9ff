use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus;
use crate::error::{Error, Result};
use crate::io::{self, CsvSchema};
use crate::spot::{self, SpotCoefficients};

use super::config::AcceptanceTruth;
use super::engine::SimulationLog;

pub const METRICS_SCHEMA: CsvSchema = CsvSchema {
    name: "sim_metrics",
    version: 1,
    columns: &["week", "par", "avg_price", "strategy_cost"],
};

/// Corpus file names written by [`emit_training_corpus`].
pub mod files {
    pub const TENDERS: &str = "tenders.csv";
    pub const SPOT_OBSERVATIONS: &str = "spot_observations.csv";
    pub const CARRIERS: &str = "carriers.csv";
    pub const SHIPPERS: &str = "shippers.csv";
    pub const SEGMENTATION: &str = "segmentation.json";
    pub const METRICS: &str = "metrics.csv";
    pub const TRUTH: &str = "truth.json";
    pub const SCENARIO: &str = "scenario.json";
}

/// Generating coefficients, kept next to the corpus for recovery checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub schema: String,
    pub config_hash: String,
    pub acceptance: AcceptanceTruth,
    pub spot: SpotCoefficients,
}

pub const GROUND_TRUTH_SCHEMA: &str = "ground_truth/1";

impl GroundTruth {
    pub fn load(path: &Path) -> Result<Self> {
        let t: GroundTruth = io::read_json(path)?;
        if t.schema != GROUND_TRUTH_SCHEMA {
            return Err(Error::schema(path.display().to_string(), 1, "schema", format!("expected {GROUND_TRUTH_SCHEMA}")));
        }
        Ok(t)
    }
}

pub fn write_metrics(path: &Path, log: &SimulationLog, config_hash: &str) -> Result<()> {
    io::write_csv(
        path,
        &METRICS_SCHEMA,
        config_hash,
        log.weekly.iter().map(|m| {
            vec![
                m.week.to_string(),
                io::fmt_opt_f64(m.par),
                io::fmt_opt_f64(m.avg_price),
                io::fmt_f64(m.strategy_cost),
            ]
        }),
    )
}

/// Writes the tender corpus, spot observations, profiles, segmentation,
/// weekly metrics and ground truth into `dir`.
pub fn emit_training_corpus(log: &SimulationLog, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let hash = log.config.hash();
    corpus::write_tenders(&dir.join(files::TENDERS), &log.tenders, &hash)?;
    spot::write_spot_observations(&dir.join(files::SPOT_OBSERVATIONS), &log.spot_market, &hash)?;
    corpus::write_carriers(&dir.join(files::CARRIERS), &log.world.carriers, &hash)?;
    corpus::write_shippers(&dir.join(files::SHIPPERS), &log.world.shippers, &hash)?;
    let seg = log.config.segmentation()?;
    let seg_path = dir.join(files::SEGMENTATION);
    std::fs::write(&seg_path, seg.to_json() + "\n").map_err(|e| Error::io(&seg_path, e))?;
    write_metrics(&dir.join(files::METRICS), log, &hash)?;
    io::write_json(
        &dir.join(files::TRUTH),
        &GroundTruth {
            schema: GROUND_TRUTH_SCHEMA.into(),
            config_hash: hash.clone(),
            acceptance: log.config.acceptance_truth.clone(),
            spot: log.config.spot_process.coefficients.clone(),
        },
    )?;
    let scenario = dir.join(files::SCENARIO);
    std::fs::write(&scenario, log.config.to_json() + "\n").map_err(|e| Error::io(&scenario, e))
}
