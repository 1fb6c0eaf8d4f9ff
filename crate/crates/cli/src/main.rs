use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tls_core::coefficients::{CoefficientSet, WorkingCorrelation};
use tls_core::domain::{Region, RegionTaxonomy, Segment};
use tls_core::io;
use tls_core::pipeline::{self, FeaturizeInputs, FitOptions, Predictor};
use tls_core::sim::emit::files;
use tls_core::sim::{emit_training_corpus, simulate, PricingStrategy, ScenarioConfig};
use tls_core::spot::BaseCase;
use tls_core::stickiness::curve::{CurveFitDomain, CurveOptions};
use tls_core::stickiness::report::CurveSummary;
use tls_core::stickiness::{
    builtin_published_model, load_published_dir, segment_report, write_report, Anchors, InversionMethod,
    ReportOptions,
};
use tls_core::{Error, Result};

#[derive(Parser)]
#[command(name = "tls", version, about = "Truckload contract analytics pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a market scenario and write its tender corpus.
    Simulate(SimulateArgs),
    /// Fit the lane-month spot benchmark from spot observations.
    BenchmarkSpot(BenchmarkArgs),
    /// Turn a tender corpus into feature rows.
    Featurize(FeaturizeArgs),
    /// Fit one acceptance model per carrier type and market.
    Fit(FitArgs),
    /// Hold-out Brier scores per segment.
    Validate(ValidateArgs),
    /// Print stickiness slopes per segment.
    Stickiness(StickinessArgs),
    /// Write stickiness curves and price-for-PAR tables as plot data.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Fixed,
    SymmetricIndex,
    AsymmetricIndex,
    TieredSurge,
}

impl From<Strategy> for PricingStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Fixed => PricingStrategy::Fixed,
            Strategy::SymmetricIndex => PricingStrategy::SymmetricIndex,
            Strategy::AsymmetricIndex => PricingStrategy::AsymmetricIndex,
            Strategy::TieredSurge => PricingStrategy::TieredSurge { premiums: Default::default() },
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Named scenario: default, tight_regime or scale.
    #[arg(long, conflicts_with = "config", requires = "seed")]
    preset: Option<String>,
    /// Scenario JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed; required with --preset, overrides the file's seed with --config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scenario's pricing strategy.
    #[arg(long, value_enum)]
    strategy: Option<Strategy>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TaxonomyArg {
    /// Region taxonomy JSON; the built-in taxonomy otherwise.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
}

impl TaxonomyArg {
    fn load(&self) -> Result<RegionTaxonomy> {
        match &self.taxonomy {
            Some(p) => RegionTaxonomy::load(p),
            None => Ok(RegionTaxonomy::default()),
        }
    }
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    observations: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    base_origin: Option<String>,
    #[arg(long)]
    base_dest: Option<String>,
    #[arg(long)]
    base_month: Option<u32>,
    #[arg(long)]
    base_year: Option<i32>,
    #[command(flatten)]
    taxonomy: TaxonomyArg,
}

#[derive(Args)]
struct FeaturizeArgs {
    /// Directory holding tenders.csv, carriers.csv, shippers.csv and
    /// segmentation.json; individual flags override.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    tenders: Option<PathBuf>,
    #[arg(long)]
    carriers: Option<PathBuf>,
    #[arg(long)]
    shippers: Option<PathBuf>,
    #[arg(long)]
    segmentation: Option<PathBuf>,
    #[arg(long)]
    spot_model: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    taxonomy: TaxonomyArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Correlation {
    Exchangeable,
    Independence,
}

#[derive(Args)]
struct FitFlags {
    #[arg(long, value_enum, default_value = "exchangeable")]
    correlation: Correlation,
    /// Minimum rows per dummy level before it is pruned.
    #[arg(long, default_value_t = 10)]
    min_level_count: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
}

impl FitFlags {
    fn options(&self) -> FitOptions {
        let mut o = FitOptions::default();
        o.correlation = match self.correlation {
            Correlation::Exchangeable => WorkingCorrelation::Exchangeable,
            Correlation::Independence => WorkingCorrelation::Independence,
        };
        o.encoder.min_level_count = self.min_level_count;
        o.gee.tol = self.tol;
        o.gee.max_iter = self.max_iter;
        o
    }
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    features: PathBuf,
    /// Directory for gee_<segment>.json.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    flags: FitFlags,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Score a constant probability instead of the fitted model.
    #[arg(long)]
    constant: Option<f64>,
    /// Also write the scores as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    flags: FitFlags,
}

#[derive(Clone, Copy, ValueEnum)]
enum Inversion {
    Line,
    Step,
}

#[derive(Args)]
struct ModelSource {
    /// Directory of gee_<segment>.json models.
    #[arg(long, conflicts_with_all = ["published", "published_dir"])]
    models: Option<PathBuf>,
    /// Use the published coefficient tables shipped with the tool.
    #[arg(long)]
    published: bool,
    /// Directory of published-layout coefficient tables.
    #[arg(long, conflicts_with = "published")]
    published_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0.819)]
    anchor_soft: f64,
    #[arg(long, default_value_t = 0.685)]
    anchor_tight: f64,
    /// Spot price the contract prices are quoted against.
    #[arg(long, default_value_t = 1000.0)]
    spot: f64,
    #[arg(long, default_value_t = 0.90)]
    target_par: f64,
    /// Wald significance level for plotted SRD bins.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Fit the line only through the market's side of zero.
    #[arg(long)]
    market_half: bool,
    #[arg(long, default_value_t = 55.0)]
    tail_midpoint: f64,
    #[arg(long, value_enum, default_value = "line")]
    inversion: Inversion,
}

impl ModelSource {
    fn load(&self) -> Result<BTreeMap<Segment, CoefficientSet>> {
        if let Some(dir) = &self.models {
            return pipeline::load_models(dir);
        }
        if let Some(dir) = &self.published_dir {
            return Segment::ALL.iter().map(|&s| Ok((s, load_published_dir(dir, s)?))).collect();
        }
        if self.published {
            return Ok(Segment::ALL.iter().map(|&s| (s, builtin_published_model(s))).collect());
        }
        Err(Error::Config("one of --models, --published or --published-dir is required".into()))
    }

    fn options(&self) -> ReportOptions {
        ReportOptions {
            anchors: Anchors { soft: self.anchor_soft, tight: self.anchor_tight },
            spot_price: self.spot,
            target: self.target_par,
            curve: CurveOptions {
                alpha: self.alpha,
                fit_domain: if self.market_half { CurveFitDomain::MarketHalf } else { CurveFitDomain::AllBins },
                tail_midpoint: self.tail_midpoint,
            },
            method: match self.inversion {
                Inversion::Line => InversionMethod::Line,
                Inversion::Step => InversionMethod::Step,
            },
        }
    }

    /// Hash of the model files and options, for the report headers.
    fn hash(&self) -> Result<String> {
        let mut paths = Vec::new();
        if let Some(dir) = &self.models {
            paths.extend(Segment::ALL.iter().map(|&s| pipeline::model_file(dir, s)).filter(|p| p.exists()));
        }
        if let Some(dir) = &self.published_dir {
            paths.extend(tls_core::stickiness::PUBLISHED_TABLES.iter().map(|(n, _)| dir.join(n)));
        }
        let refs: Vec<&Path> = paths.iter().map(PathBuf::as_path).collect();
        pipeline::inputs_hash(&refs, &format!("{:?} published={}", self.options(), self.published))
    }
}

#[derive(Args)]
struct StickinessArgs {
    #[command(flatten)]
    source: ModelSource,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    source: ModelSource,
    #[arg(long)]
    out: PathBuf,
}

fn run_simulate(a: &SimulateArgs) -> Result<()> {
    let mut config = match (&a.preset, &a.config) {
        (Some(name), _) => ScenarioConfig::preset(name, a.seed.expect("clap requires --seed"))?,
        (None, Some(path)) => {
            let mut c = ScenarioConfig::load(path)?;
            if let Some(seed) = a.seed {
                c.seed = seed;
            }
            c
        }
        (None, None) => return Err(Error::Config("one of --preset or --config is required".into())),
    };
    if let Some(s) = a.strategy {
        config.pricing_strategy = s.into();
    }
    let log = simulate(&config)?;
    emit_training_corpus(&log, &a.out)?;
    // every load is tendered to its primary exactly once
    let primary: u64 = log.weekly.iter().map(|m| m.loads).sum();
    let accepted: u64 = log.weekly.iter().map(|m| m.primary_accepts).sum();
    println!(
        "{} loads, {} tenders, {} spot fills, PAR {:.4} -> {}",
        log.loads(),
        log.tenders.len(),
        log.spot_fills.len(),
        if primary > 0 { accepted as f64 / primary as f64 } else { f64::NAN },
        a.out.display()
    );
    Ok(())
}

fn run_benchmark(a: &BenchmarkArgs) -> Result<()> {
    let tax = a.taxonomy.load()?;
    let mut base = BaseCase::default();
    if let Some(o) = &a.base_origin {
        base.origin = Region::new(o);
    }
    if let Some(d) = &a.base_dest {
        base.dest = Region::new(d);
    }
    if let Some(m) = a.base_month {
        base.month = m;
    }
    if let Some(y) = a.base_year {
        base.year = y;
    }
    let model = pipeline::benchmark_spot(&a.observations, &tax, &base, &a.out)?;
    println!("{} coefficients -> {}", model.coefficient_names.len(), a.out.display());
    Ok(())
}

fn corpus_file(explicit: &Option<PathBuf>, corpus: &Option<PathBuf>, name: &str, flag: &str) -> Result<PathBuf> {
    match (explicit, corpus) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(dir)) => Ok(dir.join(name)),
        (None, None) => Err(Error::Config(format!("--{flag} or --corpus is required"))),
    }
}

fn run_featurize(a: &FeaturizeArgs) -> Result<()> {
    let tax = a.taxonomy.load()?;
    let tenders = corpus_file(&a.tenders, &a.corpus, files::TENDERS, "tenders")?;
    let carriers = corpus_file(&a.carriers, &a.corpus, files::CARRIERS, "carriers")?;
    let shippers = corpus_file(&a.shippers, &a.corpus, files::SHIPPERS, "shippers")?;
    let segmentation = a
        .segmentation
        .clone()
        .or_else(|| a.corpus.as_ref().map(|d| d.join(files::SEGMENTATION)).filter(|p| p.exists()));
    let inputs = FeaturizeInputs {
        tenders: &tenders,
        carriers: &carriers,
        shippers: &shippers,
        spot_model: &a.spot_model,
        segmentation: segmentation.as_deref(),
        taxonomy: &tax,
    };
    let rows = pipeline::featurize(&inputs, &a.out)?;
    println!("{} feature rows -> {}", rows.len(), a.out.display());
    Ok(())
}

fn run_fit(a: &FitArgs) -> Result<()> {
    let fits = pipeline::fit_files(&a.features, &a.out, &a.flags.options())?;
    for (s, f) in &fits {
        let meta = f.set.fit.as_ref();
        println!(
            "{:<16} n={:<7} clusters={:<5} rho={:.4} dropped={} -> {}",
            s.label(),
            meta.map_or(0, |m| m.n_obs),
            meta.map_or(0, |m| m.n_clusters),
            meta.map_or(0.0, |m| m.rho),
            f.dropped_rows,
            pipeline::model_file(&a.out, *s).display()
        );
    }
    Ok(())
}

fn run_validate(a: &ValidateArgs) -> Result<()> {
    let rows = tls_core::features::read_feature_rows(&a.features)?;
    let predictor = match a.constant {
        Some(p) if (0.0..=1.0).contains(&p) => Predictor::Constant(p),
        Some(p) => return Err(Error::Config(format!("--constant {p} is not a probability"))),
        None => Predictor::Fitted,
    };
    let scores = pipeline::validate_segments(&rows, a.test_fraction, a.seed, &a.flags.options(), predictor)?;
    println!("{:<16} {:>7} {:>7} {:>11} {:>11} {:>14}", "segment", "n_train", "n_test", "train_brier", "test_brier", "baseline_brier");
    for v in &scores {
        println!(
            "{:<16} {:>7} {:>7} {:>11.6} {:>11.6} {:>14.6}",
            v.segment.label(),
            v.n_train,
            v.n_test,
            v.train_brier,
            v.test_brier,
            v.baseline_brier
        );
    }
    if let Some(out) = &a.out {
        io::write_json(out, &scores)?;
    }
    Ok(())
}

fn run_stickiness(a: &StickinessArgs) -> Result<()> {
    let report = segment_report(&a.source.load()?, &a.source.options())?;
    let summaries: Vec<&CurveSummary> = report.summaries.iter().collect();
    println!("{}", serde_json::to_string_pretty(&summaries)?);
    Ok(())
}

fn run_report(a: &ReportArgs) -> Result<()> {
    let report = segment_report(&a.source.load()?, &a.source.options())?;
    write_report(&a.out, &report, &a.source.hash()?)?;
    for s in &report.summaries {
        match s.slope {
            Some(v) => println!("{:<16} slope {v:.4}", s.segment.label()),
            None => println!("{:<16} no significant SRD bins", s.segment.label()),
        }
    }
    println!("report -> {}", a.out.display());
    Ok(())
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    let body = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TLS_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim(), 2),
    };
    let result = match &cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::BenchmarkSpot(a) => run_benchmark(a),
        Command::Featurize(a) => run_featurize(a),
        Command::Fit(a) => run_fit(a),
        Command::Validate(a) => run_validate(a),
        Command::Stickiness(a) => run_stickiness(a),
        Command::Report(a) => run_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string(), 1),
    }
}
