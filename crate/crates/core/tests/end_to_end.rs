//! simulate -> emit -> benchmark -> featurize -> fit, compared with the
//! generating coefficients.

use std::path::Path;
use std::time::Instant;

use tls_core::domain::RegionTaxonomy;
use tls_core::pipeline::{self, FeaturizeInputs, FitOptions};
use tls_core::sim::emit::files;
use tls_core::sim::{emit_training_corpus, simulate, GroundTruth, ScenarioConfig};
use tls_core::spot::BaseCase;

fn run(dir: &Path, config: &ScenarioConfig) -> pipeline::RecoveryReport {
    let log = simulate(config).unwrap();
    emit_training_corpus(&log, dir).unwrap();
    let tax = RegionTaxonomy::default();
    pipeline::benchmark_spot(&dir.join(files::SPOT_OBSERVATIONS), &tax, &BaseCase::default(), &dir.join("spot_model.json")).unwrap();
    let seg = dir.join(files::SEGMENTATION);
    let inputs = FeaturizeInputs {
        tenders: &dir.join(files::TENDERS),
        carriers: &dir.join(files::CARRIERS),
        shippers: &dir.join(files::SHIPPERS),
        spot_model: &dir.join("spot_model.json"),
        segmentation: Some(&seg),
        taxonomy: &tax,
    };
    let rows = pipeline::featurize(&inputs, &dir.join("features.csv")).unwrap();
    eprintln!("loads {} tenders {} rows {}", log.loads(), log.tenders.len(), rows.len());
    pipeline::fit_files(&dir.join("features.csv"), &dir.join("models"), &FitOptions::default()).unwrap();
    let models = pipeline::load_models(&dir.join("models")).unwrap();
    let truth = GroundTruth::load(&dir.join(files::TRUTH)).unwrap();
    pipeline::compare_to_truth(&models, &truth.acceptance, 3.0).unwrap()
}

#[test]
fn default_scenario_recovers_truth() {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let r = run(dir.path(), &ScenarioConfig::default_scenario(2024));
    eprintln!("elapsed {:?}", t.elapsed());
    for e in r.entries.iter().filter(|e| !e.covered) {
        eprintln!("miss {} {} truth {:.3} est {:.3} se {:.3}", e.segment, e.name, e.truth, e.estimate, e.se);
    }
    eprintln!("coverage {:.3} of {} rho {:?}", r.coverage, r.entries.len(), r.rho);
    assert!(r.coverage >= 0.95);
    for rho in r.rho.values() {
        assert!((rho - r.rho_truth).abs() <= 0.05);
    }
}
