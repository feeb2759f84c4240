//! Command-line front end.
//!
//! Every command resolves a [`RunConfig`] from an optional TOML file overlaid
//! with flags, works on either a dataset directory or a seeded synthetic
//! dataset, and writes its artifacts plus a `manifest.json` with checksums into
//! the output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::coverage::{fallback_embeddings, CoverageKind, EmbeddingTable};
use crate::datastore::{
    generate_synthetic, load_dataset, write_dataset, Dataset, DatasetPaths, SyntheticSpec,
};
use crate::evalsim::{
    evaluate_request, evaluate_run, format_table, EvalError, RunReport, Scorer, SimConfig,
};
use crate::profile::{build_all_profiles, build_global_stats, UserProfile};
use crate::scoring::{Model, ScoringConfig};
use crate::treebuild::{flatten_display_order, render_text, Aggregation, BuildConfig, TreeError};

pub const RUN_MANIFEST: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match &e {
            EvalError::InvalidConfig(_) => CliError::Config(e.to_string()),
            EvalError::Tree {
                source: TreeError::InvalidConfig(_),
                ..
            } => CliError::Config(e.to_string()),
            EvalError::Scoring { .. } | EvalError::Tree { .. } => CliError::Data(e.to_string()),
            EvalError::ThreadPool(_) => CliError::Internal(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Model1,
    Model2,
    /// Most-probable facets of the user's own ratings.
    Person,
    /// Most-probable facets over all users.
    Collab,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CoverageArg {
    Exact,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AggArg {
    Avg,
    Max,
}

impl From<AggArg> for Aggregation {
    fn from(a: AggArg) -> Self {
        match a {
            AggArg::Avg => Aggregation::Avg,
            AggArg::Max => Aggregation::Max,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "tfacet",
    version,
    about = "Personalized t-facet ranking and evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Default, Clone, Args)]
pub struct Opts {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dataset directory or its dataset.json.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Generate a synthetic dataset with this seed instead of loading one.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub model: Vec<ModelArg>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub coverage: Vec<CoverageArg>,
    /// Facet embeddings (`id<TAB>v1 v2 ...`); hashed label vectors otherwise.
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub agg: Vec<AggArg>,
    /// Children aggregated into a parent score.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub page1: Option<usize>,
    #[arg(long, global = true)]
    pub page2: Option<usize>,
    /// Success cut-off in the result list.
    #[arg(long = "top-n", global = true)]
    pub top_n: Option<usize>,
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Validate a dataset and write its canonical form.
    Ingest,
    /// Write a seeded synthetic dataset.
    Synth,
    /// Score candidate facets for every request.
    Score,
    /// Build ranked facet trees.
    BuildTree {
        /// Only this request.
        #[arg(long)]
        request: Option<String>,
    },
    /// Simulate users and report #Actions and F-Scan.
    Evaluate,
    /// Tabulate existing reports.
    Compare { reports: Vec<PathBuf> },
    /// Dump user profiles as JSON.
    ProfileDump,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Synth => "synth",
            Command::Score => "score",
            Command::BuildTree { .. } => "build-tree",
            Command::Evaluate => "evaluate",
            Command::Compare { .. } => "compare",
            Command::ProfileDump => "profile-dump",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSection {
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub spec: SyntheticSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringSection {
    pub models: Vec<ModelArg>,
    pub coverages: Vec<CoverageArg>,
    pub embeddings: Option<PathBuf>,
    /// Dimension of the hashed label vectors used without an embeddings file.
    pub embedding_dim: usize,
    pub background_n: usize,
    pub c: f64,
    pub epsilon: f64,
    /// Defaults to the dataset's rating scale.
    pub positive_min: Option<i64>,
}

impl Default for ScoringSection {
    fn default() -> Self {
        ScoringSection {
            models: vec![ModelArg::Model1],
            coverages: vec![CoverageArg::Cosine],
            embeddings: None,
            embedding_dim: 64,
            background_n: 1,
            c: 1.0,
            epsilon: 1e-9,
            positive_min: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildSection {
    pub aggregations: Vec<AggArg>,
    pub top_k_children: usize,
    pub page_size_level1: usize,
    pub page_size_level2: usize,
}

impl Default for BuildSection {
    fn default() -> Self {
        let b = BuildConfig::default();
        BuildSection {
            aggregations: vec![AggArg::Max],
            top_k_children: b.top_k_children,
            page_size_level1: b.page_size_level1,
            page_size_level2: b.page_size_level2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub success_top_n: usize,
    /// Defaults to the dataset manifest's value.
    pub relevant_min: Option<i64>,
    pub max_more_clicks: usize,
    /// Defaults to the taxonomy depth.
    pub max_click_depth: Option<usize>,
}

impl Default for SimSection {
    fn default() -> Self {
        let s = SimConfig::default();
        SimSection {
            success_top_n: s.success_top_n,
            relevant_min: None,
            max_more_clicks: s.max_more_clicks,
            max_click_depth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub jobs: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("tfacet-out"),
            jobs: 1,
        }
    }
}

/// Everything a command needs, after merging the config file and flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSection,
    pub synth: SynthSection,
    pub scoring: ScoringSection,
    pub build: BuildSection,
    pub sim: SimSection,
    pub output: OutputSection,
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

impl RunConfig {
    /// Parses a TOML config; relative paths are taken from `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut config: RunConfig = toml::from_str(text).map_err(config_err)?;
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = config.dataset.path.as_mut() {
            rebase(p);
        }
        if let Some(p) = config.scoring.embeddings.as_mut() {
            rebase(p);
        }
        Ok(config)
    }

    /// Loads `opts.config` (if any) and overlays the flags.
    pub fn resolve(opts: &Opts) -> Result<Self, CliError> {
        let mut config = match &opts.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                let base = path.parent().unwrap_or(Path::new("."));
                RunConfig::parse(&text, base)?
            }
            None => RunConfig::default(),
        };
        match (&opts.data, opts.seed) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "--data and --seed are mutually exclusive".into(),
                ))
            }
            (Some(data), None) => {
                config.dataset.path = Some(data.clone());
                config.synth.seed = None;
            }
            (None, Some(seed)) => {
                config.synth.seed = Some(seed);
                config.dataset.path = None;
            }
            (None, None) => {}
        }
        if !opts.model.is_empty() {
            config.scoring.models = opts.model.clone();
        }
        if !opts.coverage.is_empty() {
            config.scoring.coverages = opts.coverage.clone();
        }
        if let Some(e) = &opts.embeddings {
            config.scoring.embeddings = Some(e.clone());
        }
        if !opts.agg.is_empty() {
            config.build.aggregations = opts.agg.clone();
        }
        let set = |slot: &mut usize, v: Option<usize>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut config.build.top_k_children, opts.k);
        set(&mut config.build.page_size_level1, opts.page1);
        set(&mut config.build.page_size_level2, opts.page2);
        set(&mut config.sim.success_top_n, opts.top_n);
        set(&mut config.output.jobs, opts.jobs);
        if let Some(out) = &opts.out {
            config.output.dir = out.clone();
        }
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let s = &self.scoring;
        if s.models.is_empty() || s.coverages.is_empty() || self.build.aggregations.is_empty() {
            return Err(config_err(
                "model, coverage and aggregation lists must be non-empty",
            ));
        }
        if s.embedding_dim < 8 {
            return Err(config_err("embedding_dim must be >= 8"));
        }
        if self.output.jobs == 0 {
            return Err(config_err("jobs must be >= 1"));
        }
        Ok(())
    }

    fn build_config(&self, aggregation: AggArg) -> BuildConfig {
        BuildConfig {
            aggregation: aggregation.into(),
            top_k_children: self.build.top_k_children,
            page_size_level1: self.build.page_size_level1,
            page_size_level2: self.build.page_size_level2,
        }
    }

    fn sim_config(&self, dataset: &Dataset) -> SimConfig {
        SimConfig {
            success_top_n: self.sim.success_top_n,
            relevant_min: self.sim.relevant_min.unwrap_or(dataset.relevant_min()),
            max_more_clicks: self.sim.max_more_clicks,
            max_click_depth: self
                .sim
                .max_click_depth
                .unwrap_or(dataset.taxonomy().depth() as usize),
        }
    }

    fn positive_min(&self, dataset: &Dataset) -> i64 {
        self.scoring.positive_min.unwrap_or(dataset.positive_min())
    }

    /// SHA-256 of the canonical JSON form, ignoring the output location and job count.
    pub fn fingerprint(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputSection::default();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Loads or generates the dataset named by `config`.
pub fn obtain_dataset(config: &RunConfig) -> Result<Dataset, CliError> {
    match (&config.dataset.path, config.synth.seed) {
        (Some(_), Some(_)) => Err(config_err(
            "config names both a dataset path and a synthetic seed",
        )),
        (Some(path), None) => {
            let paths = DatasetPaths::from_manifest(path).map_err(data_err)?;
            load_dataset(&paths).map_err(data_err)
        }
        (None, Some(seed)) => generate_synthetic(seed, &config.synth.spec).map_err(config_err),
        (None, None) => Err(config_err("no dataset: pass --data or --seed")),
    }
}

fn coverage_kind(
    config: &RunConfig,
    dataset: &Dataset,
    kind: CoverageArg,
    cache: &mut Option<Arc<EmbeddingTable>>,
) -> Result<CoverageKind, CliError> {
    match kind {
        CoverageArg::Exact => Ok(CoverageKind::Exact),
        CoverageArg::Cosine => {
            if cache.is_none() {
                let table = match &config.scoring.embeddings {
                    Some(path) => EmbeddingTable::load(path).map_err(data_err)?,
                    None => fallback_embeddings(dataset.taxonomy(), config.scoring.embedding_dim)
                        .map_err(config_err)?,
                };
                *cache = Some(Arc::new(table));
            }
            Ok(CoverageKind::Cosine(Arc::clone(
                cache.as_ref().expect("just filled"),
            )))
        }
    }
}

/// The scorers named by the config, probabilistic models crossed with coverage
/// kinds, baselines once each, in a stable order.
pub fn scorers(config: &RunConfig, dataset: &Dataset) -> Result<Vec<Scorer>, CliError> {
    let positive_min = config.positive_min(dataset);
    let mut models = config.scoring.models.clone();
    models.sort();
    models.dedup();
    let mut coverages = config.scoring.coverages.clone();
    coverages.sort();
    coverages.dedup();
    let mut cache = None;
    let mut out = Vec::new();
    for m in models {
        match m {
            ModelArg::Model1 | ModelArg::Model2 => {
                for &cov in &coverages {
                    let model = if m == ModelArg::Model1 {
                        Model::Model1
                    } else {
                        Model::Model2
                    };
                    let coverage = coverage_kind(config, dataset, cov, &mut cache)?;
                    out.push(Scorer::Probabilistic(ScoringConfig {
                        model,
                        coverage,
                        background_n: config.scoring.background_n,
                        c: config.scoring.c,
                        epsilon: config.scoring.epsilon,
                        positive_min,
                    }));
                }
            }
            ModelArg::Person => out.push(Scorer::MostProbablePersonal { positive_min }),
            ModelArg::Collab => out.push(Scorer::MostProbableCollab { positive_min }),
        }
    }
    Ok(out)
}

fn aggregations(config: &RunConfig) -> Vec<AggArg> {
    let mut a = config.build.aggregations.clone();
    a.sort_by_key(|a| std::cmp::Reverse(*a));
    a.dedup();
    a
}

struct Output {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| data_err(format!("{}: {e}", dir.display())))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: impl AsRef<Path>, contents: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| data_err(format!("{}: {e}", parent.display())))?;
        }
        fs::write(&path, contents).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Writes `manifest.json` over everything written so far.
    fn finish(mut self, command: &str, config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
        let mut artifacts = BTreeMap::new();
        for path in &self.written {
            let bytes = fs::read(path).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
            let rel = path.strip_prefix(&self.dir).unwrap_or(path);
            let key = rel.to_string_lossy().replace('\\', "/");
            artifacts.insert(key, hex::encode(Sha256::digest(&bytes)));
        }
        let manifest = serde_json::json!({
            "command": command,
            "config_fingerprint": config.fingerprint(),
            "seed": config.synth.seed,
            "dataset": config.dataset.path.as_ref().map(|p| p.display().to_string()),
            "artifacts": artifacts,
        });
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        self.write(RUN_MANIFEST, text.as_bytes())?;
        Ok(self.written)
    }
}

fn json_line(value: &impl Serialize) -> String {
    serde_json::to_string(value).expect("value serializes") + "\n"
}

/// Runs one command; returns every file written.
pub fn run(command: &Command, config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Output::new(&config.output.dir)?;
    match command {
        Command::Compare { reports } => {
            if reports.is_empty() {
                return Err(config_err("compare needs at least one report"));
            }
            let mut loaded = Vec::new();
            for path in reports {
                let text = fs::read_to_string(path)
                    .map_err(|e| data_err(format!("{}: {e}", path.display())))?;
                let report: RunReport = serde_json::from_str(&text)
                    .map_err(|e| data_err(format!("{}: {e}", path.display())))?;
                loaded.push(report);
            }
            let table = format_table(&loaded);
            print!("{table}");
            out.write("table.txt", table.as_bytes())?;
            return out.finish(command.name(), config);
        }
        Command::Synth if config.synth.seed.is_none() => {
            return Err(config_err("synth needs --seed or [synth] seed"));
        }
        _ => {}
    }

    let dataset = obtain_dataset(config)?;
    match command {
        Command::Ingest | Command::Synth => {
            let written = write_dataset(&dataset, &out.dir).map_err(data_err)?;
            out.written.extend(written);
            let summary = serde_json::json!({
                "facets": dataset.taxonomy().len(),
                "leaves": dataset.taxonomy().leaves().len(),
                "venues": dataset.venues().count(),
                "users": dataset.users().len(),
                "ratings": dataset.ratings().len(),
                "requests": dataset.requests().len(),
                "judgments": dataset.judgments().len(),
            });
            eprintln!("{summary}");
        }
        Command::ProfileDump => {
            let profiles = build_all_profiles(&dataset, config.positive_min(&dataset));
            let list: Vec<&UserProfile> = profiles.values().collect();
            let text = serde_json::to_string_pretty(&list).expect("profiles serialize") + "\n";
            out.write("profiles.json", text.as_bytes())?;
        }
        Command::Score => {
            let positive_min = config.positive_min(&dataset);
            let profiles = build_all_profiles(&dataset, positive_min);
            let global = build_global_stats(&dataset, positive_min);
            let empty = empty_profile();
            for scorer in scorers(config, &dataset)? {
                let (model, coverage) = scorer_names(&scorer);
                let mut text = String::new();
                for request in dataset.requests() {
                    let profile = profiles.get(&request.user).unwrap_or(&empty);
                    let map = scorer
                        .score(&dataset, profile, &global, request)
                        .map_err(|e| data_err(format!("request {}: {e}", request.request_id)))?;
                    text.push_str(&json_line(&serde_json::json!({
                        "request_id": request.request_id,
                        "model": model,
                        "coverage": coverage,
                        "scores": map.scores,
                    })));
                }
                out.write(format!("scores-{}.jsonl", scorer.label()), text.as_bytes())?;
            }
        }
        Command::BuildTree { request } => {
            let requests: Vec<_> = match request {
                Some(id) => vec![dataset
                    .request(id)
                    .ok_or_else(|| data_err(format!("unknown request {id}")))?],
                None => dataset.requests().iter().collect(),
            };
            let positive_min = config.positive_min(&dataset);
            let profiles = build_all_profiles(&dataset, positive_min);
            let global = build_global_stats(&dataset, positive_min);
            let empty = empty_profile();
            let sim = config.sim_config(&dataset);
            for scorer in scorers(config, &dataset)? {
                for agg in aggregations(config) {
                    let build = config.build_config(agg);
                    let dir = format!("trees/{}-{}", scorer.label(), build.aggregation.name());
                    for request in &requests {
                        let profile = profiles.get(&request.user).unwrap_or(&empty);
                        let (_, tree, _) = evaluate_request(
                            &dataset, profile, &global, request, &scorer, &build, &sim,
                        )?;
                        let display = flatten_display_order(&tree);
                        out.write(
                            format!("{dir}/{}.txt", request.request_id),
                            render_text(&display).as_bytes(),
                        )?;
                        let json = serde_json::json!({
                            "request_id": request.request_id,
                            "tree": tree,
                            "display": display,
                        });
                        let text = serde_json::to_string_pretty(&json).expect("tree serializes");
                        out.write(
                            format!("{dir}/{}.json", request.request_id),
                            (text + "\n").as_bytes(),
                        )?;
                    }
                }
            }
        }
        Command::Evaluate => {
            let sim = config.sim_config(&dataset);
            let mut reports = Vec::new();
            for scorer in scorers(config, &dataset)? {
                for agg in aggregations(config) {
                    let build = config.build_config(agg);
                    let report = evaluate_run(&dataset, &scorer, &build, &sim, config.output.jobs)?;
                    out.write(
                        format!("report-{}-{}.json", report.method, report.aggregation),
                        report.to_json().as_bytes(),
                    )?;
                    reports.push(report);
                }
            }
            let table = format_table(&reports);
            print!("{table}");
            out.write("table.txt", table.as_bytes())?;
        }
        Command::Compare { .. } => unreachable!("handled above"),
    }
    out.finish(command.name(), config)
}

fn empty_profile() -> UserProfile {
    UserProfile {
        user: String::new(),
        total_rated: 0,
        positive_count: BTreeMap::new(),
    }
}

fn scorer_names(scorer: &Scorer) -> (String, Option<&'static str>) {
    match scorer {
        Scorer::Probabilistic(c) => (c.model.name().to_owned(), Some(c.coverage.name())),
        other => (other.label(), None),
    }
}

/// Parses `args`, runs the command and maps failures to exit codes
/// (2 config, 3 data, 1 internal).
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = RunConfig::resolve(&cli.opts).and_then(|config| run(&cli.command, &config));
    match result {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("tfacet: {e}");
            e.exit_code()
        }
    }
}
