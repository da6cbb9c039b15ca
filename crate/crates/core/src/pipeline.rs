//! CLI stages. Each reads its inputs from the output directory, writes its
//! artifacts there, and records itself in `manifest.json`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Track};
use crate::corpus::{
    parse_corpus, parse_embeddings, parse_frequency_list, validate_dataset, write_corpus, CorpusRecord, CoverageReport,
    DroppedRow, EmbeddingTable, FrequencyLexicon, ParseOptions,
};
use crate::error::{Error, Result};
use crate::features::{assemble_feature_table, AssemblyOptions, AssemblyReport, FeatureTable, VowelSet, RESPONSE};
use crate::ml::{run_baseline, run_optimized, save_model, ClassifyOutcome, ModelFamily};
use crate::report;
use crate::semrel::annotate_corpus;
use crate::stats::{
    build_design, compare_models, fit_gam, fit_lmm_reml, parse_formula, partial_effects, AicComparison,
    CorrelationMatrix, GamFit, LambdaChoice, LmmFit,
};
use crate::synth::{self, PlantedSign, SynthParams};

pub const MANIFEST: &str = "manifest.json";
pub const DATASET: &str = "dataset.tsv";
pub const FEATURES: &str = "features.tsv";
pub const REGRESS_JSON: &str = "regress.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEntry {
    pub seconds: f64,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub stages: BTreeMap<String, StageEntry>,
}

impl Manifest {
    pub fn read(out_dir: &Path) -> Result<Manifest> {
        let path = out_dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Every artifact declared by any stage, in stage order.
    pub fn artifacts(&self) -> Vec<String> {
        self.stages.values().flat_map(|s| s.artifacts.iter().cloned()).collect()
    }
}

/// Provenance block carried by every JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub tool_version: String,
    pub seed: u64,
    pub config_hash: String,
    pub rows: usize,
}

impl ReportMeta {
    fn new(cfg: &RunConfig, rows: usize) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
            config_hash: cfg.hash(),
            rows,
        }
    }
}

/// What a stage produced.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOutput {
    pub artifacts: Vec<String>,
    pub rows: usize,
}

struct Sink {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl Sink {
    fn write(&mut self, rel: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.artifacts.push(rel.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text)
    }

    fn finish(self, rows: usize) -> StageOutput {
        StageOutput {
            artifacts: self.artifacts,
            rows,
        }
    }
}

fn stage(
    cfg: &RunConfig,
    name: &'static str,
    body: impl FnOnce(&mut Sink) -> Result<usize>,
) -> Result<StageOutput> {
    let dir = cfg.out_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e).in_stage(name))?;
    let started = Instant::now();
    let mut sink = Sink {
        dir: dir.clone(),
        artifacts: vec![],
    };
    let rows = body(&mut sink).map_err(|e| e.in_stage(name))?;
    let out = sink.finish(rows);
    for a in &out.artifacts {
        if !dir.join(a).is_file() {
            return Err(Error::InvalidInput(format!("declared artifact {a} was not written")).in_stage(name));
        }
    }
    let hash = cfg.hash();
    let mut manifest = match Manifest::read(&dir) {
        Ok(m) if m.config_hash == hash => m,
        _ => Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: hash,
            seed: cfg.seed,
            stages: BTreeMap::new(),
        },
    };
    manifest.stages.insert(
        name.to_string(),
        StageEntry {
            seconds: started.elapsed().as_secs_f64(),
            artifacts: out.artifacts.clone(),
            rows,
        },
    );
    let path = dir.join(MANIFEST);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::from(e).in_stage(name))? + "\n";
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e).in_stage(name))?;
    Ok(out)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn require(dir: &Path, rel: &str, producer: &str) -> Result<PathBuf> {
    let p = dir.join(rel);
    if p.is_file() {
        Ok(p)
    } else {
        Err(Error::Config(format!("{rel} not found in the output directory; run `{producer}` first")))
    }
}

fn load_lexicon(cfg: &RunConfig) -> Result<FrequencyLexicon> {
    let p = cfg.lexicon_path()?;
    parse_frequency_list(open(&p)?)
}

fn load_embeddings(cfg: &RunConfig) -> Result<EmbeddingTable> {
    let p = cfg.embeddings_path()?;
    parse_embeddings(open(&p)?, None)
}

fn load_dataset(cfg: &RunConfig) -> Result<Vec<CorpusRecord>> {
    let p = require(&cfg.out_dir(), DATASET, "ingest")?;
    Ok(parse_corpus(open(&p)?, &ParseOptions::default())?.records)
}

/// Reads the feature table written by [`cmd_features`].
pub fn load_features(cfg: &RunConfig) -> Result<FeatureTable> {
    let p = require(&cfg.out_dir(), FEATURES, "features")?;
    FeatureTable::read_tsv(open(&p)?)
}

/// Writes the synthetic corpus, its lexicon and embeddings, the planted
/// ground truth, and a ready-to-run config into `dir`.
pub fn cmd_synth(dir: &Path, params: &SynthParams) -> Result<Vec<String>> {
    #[derive(Serialize)]
    struct Truth<'a> {
        params: &'a SynthParams,
        tokens: usize,
        planted: &'a [PlantedSign],
        partial: &'a [PlantedSign],
    }
    let corpus = synth::generate(params);
    let mut sink = Sink {
        dir: dir.to_path_buf(),
        artifacts: vec![],
    };
    let mut buf = Vec::new();
    corpus.write_corpus(&mut buf).map_err(|e| Error::io(dir.join("corpus.tsv"), e))?;
    sink.write("corpus.tsv", &buf)?;
    buf.clear();
    corpus.write_lexicon(&mut buf).map_err(|e| Error::io(dir.join("lexicon.tsv"), e))?;
    sink.write("lexicon.tsv", &buf)?;
    buf.clear();
    corpus.write_embeddings(&mut buf).map_err(|e| Error::io(dir.join("embeddings.txt"), e))?;
    sink.write("embeddings.txt", &buf)?;
    sink.json(
        "truth.json",
        &Truth {
            params,
            tokens: corpus.records.len(),
            planted: &corpus.planted,
            partial: &corpus.partial,
        },
    )?;
    let mut cfg = RunConfig {
        seed: params.seed,
        ..RunConfig::default()
    };
    cfg.inputs.corpus = Some("corpus.tsv".into());
    cfg.inputs.lexicon = Some("lexicon.tsv".into());
    cfg.inputs.embeddings = Some("embeddings.txt".into());
    sink.write("lexdur.toml", cfg.to_toml()?)?;
    Ok(sink.artifacts)
}

#[derive(Serialize)]
struct IngestReport<'a> {
    meta: ReportMeta,
    coverage: &'a CoverageReport,
    markers: usize,
    dropped: &'a [DroppedRow],
}

/// Parses the raw corpus export into the canonical dataset and reports
/// lexicon and embedding coverage.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<StageOutput> {
    let corpus_path = cfg.corpus_path()?;
    let lex = load_lexicon(cfg)?;
    let emb = load_embeddings(cfg)?;
    stage(cfg, "ingest", |sink| {
        let mut opts = ParseOptions {
            columns: cfg.inputs.columns.clone(),
            ..ParseOptions::default()
        };
        if let Some(m) = &cfg.inputs.marker_chars {
            opts.marker_chars = m.clone();
        }
        let parsed = parse_corpus(open(&corpus_path)?, &opts).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{}: {message}", corpus_path.display()),
            },
            e => e,
        })?;
        let coverage = validate_dataset(&parsed.records, &lex, &emb)?;
        let mut buf = Vec::new();
        write_corpus(&mut buf, &parsed.records).map_err(|e| Error::io(DATASET, e))?;
        sink.write(DATASET, buf)?;
        sink.json(
            "coverage.json",
            &IngestReport {
                meta: ReportMeta::new(cfg, parsed.records.len()),
                coverage: &coverage,
                markers: parsed.markers,
                dropped: &parsed.dropped,
            },
        )?;
        Ok(parsed.records.len())
    })
}

#[derive(Serialize)]
struct FeaturesReport<'a> {
    meta: ReportMeta,
    features: &'a [String],
    assembly: &'a AssemblyReport,
}

/// Derives the feature table (with duration-class labels) from the dataset.
pub fn cmd_features(cfg: &RunConfig) -> Result<StageOutput> {
    let features = cfg.features.features()?;
    let lex = load_lexicon(cfg)?;
    let emb = load_embeddings(cfg)?;
    stage(cfg, "features", |sink| {
        let records = load_dataset(cfg)?;
        let relevance = annotate_corpus(&records, &emb, &cfg.features.window_options());
        let opts = AssemblyOptions {
            features: features.clone(),
            bins: (cfg.features.bins > 0).then_some(cfg.features.bins),
            vowels: cfg.features.vowels.as_ref().map_or_else(VowelSet::default, |v| VowelSet::new(v.iter().cloned())),
        };
        let (table, report) = assemble_feature_table(&records, &lex, &relevance, &opts)?;
        let mut buf = Vec::new();
        table.write_tsv(&mut buf).map_err(|e| Error::io(FEATURES, e))?;
        sink.write(FEATURES, buf)?;
        let names: Vec<String> = features.iter().map(|f| f.name().to_string()).collect();
        sink.json(
            "features.json",
            &FeaturesReport {
                meta: ReportMeta::new(cfg, table.n_rows),
                features: &names,
                assembly: &report,
            },
        )?;
        Ok(table.n_rows)
    })
}

/// Writes per-token semantic relevance scores and their status.
pub fn cmd_annotate(cfg: &RunConfig) -> Result<StageOutput> {
    let emb = load_embeddings(cfg)?;
    stage(cfg, "annotate", |sink| {
        let records = load_dataset(cfg)?;
        let series = annotate_corpus(&records, &emb, &cfg.features.window_options());
        let mut text = String::from("token_index\tscore\tstatus\n");
        for ((r, s), st) in records.iter().zip(&series.scores).zip(&series.status) {
            text.push_str(&format!("{}\t{}\t{}\n", r.token_index, s, st.as_str()));
        }
        sink.write("relevance.tsv", text)?;
        Ok(records.len())
    })
}

#[derive(Serialize)]
struct ClassifyReport<'a> {
    meta: ReportMeta,
    features: &'a [String],
    outcome: &'a ClassifyOutcome,
}

/// Classification overrides given on the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClassifyArgs {
    pub family: Option<ModelFamily>,
    pub optimize: Option<bool>,
}

/// Runs the baseline classifier and, when enabled, the optimized pipeline.
pub fn cmd_classify(cfg: &RunConfig, args: ClassifyArgs) -> Result<StageOutput> {
    let mut settings = cfg.classify.pipeline.clone();
    settings.seed = cfg.seed;
    if let Some(f) = args.family {
        settings.family = f;
    }
    let optimize = args.optimize.unwrap_or(cfg.classify.optimize);
    stage(cfg, "classify", |sink| {
        let table = load_features(cfg)?;
        let labels = table
            .label
            .clone()
            .ok_or_else(|| Error::InvalidInput("feature table has no duration-class labels (features.bins = 0)".into()))?;
        let names: Vec<String> = table.numeric.iter().map(|c| c.name.clone()).collect();
        let x = table.matrix(&names)?;
        let mut runs = vec![("baseline", run_baseline(&x, &labels, &names, &settings)?)];
        if optimize {
            runs.push(("optimized", run_optimized(&x, &labels, &names, &settings)?));
        }
        for (tag, outcome) in &runs {
            sink.json(
                &format!("classify_{tag}.json"),
                &ClassifyReport {
                    meta: ReportMeta::new(cfg, table.n_rows),
                    features: &names,
                    outcome,
                },
            )?;
            let text = format!(
                "{tag} {} (seed {}, rows {}, train {}, test {})\n\n{}",
                outcome.family,
                cfg.seed,
                table.n_rows,
                outcome.train_rows,
                outcome.test_rows,
                outcome.report.render()
            );
            sink.write(&format!("classify_{tag}.txt"), text)?;
        }
        if cfg.classify.save_model {
            if let Some(model) = runs.last().and_then(|(_, o)| o.model.as_ref()) {
                let path = sink.dir.join("model.json");
                save_model(model, &path)?;
                sink.artifacts.push("model.json".into());
            }
        }
        Ok(table.n_rows)
    })
}

/// A fitted regression model as stored in `regress.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FittedModel {
    Lmm(LmmFit),
    Gam(GamFit),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub name: String,
    pub source: String,
    pub fit: FittedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressReport {
    pub meta: ReportMeta,
    pub models: Vec<NamedFit>,
    /// Mixed-model and additive-model rankings are kept apart.
    pub lmm_comparison: Option<AicComparison>,
    pub gam_comparison: Option<AicComparison>,
}

/// Splits `name = wrapper(...)` into a name and whether the wrapper or the
/// terms call for the additive model.
fn model_head(text: &str, index: usize) -> (String, bool) {
    let t = text.trim();
    let (name, rest) = match t.split_once('=') {
        Some((n, r)) if !n.contains('~') && n.trim().chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.') => {
            (n.trim().to_string(), r.trim_start())
        }
        _ => (format!("m{}", index + 1), t),
    };
    let additive = ["bam(", "gam(", "gamm("].iter().any(|w| rest.starts_with(w));
    (name, additive)
}

/// Fits every formula (in parallel, results in input order) and ranks
/// each model family by AIC.
pub fn cmd_regress(cfg: &RunConfig, formulas: &[String]) -> Result<StageOutput> {
    let formulas: Vec<String> = if formulas.is_empty() {
        cfg.regress.formulas.clone()
    } else {
        formulas.to_vec()
    };
    if formulas.is_empty() {
        return Err(Error::Config("no regression formulas given".into()).in_stage("regress"));
    }
    let parsed = formulas
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let (name, additive) = model_head(text, i);
            let f = parse_formula(text)?;
            Ok((name, additive || !f.smooth.is_empty(), f))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("regress"))?;
    stage(cfg, "regress", |sink| {
        let table = load_features(cfg)?;
        let fits = parsed
            .par_iter()
            .map(|(name, additive, f)| {
                let design = build_design(f, &table)?;
                let fit = if *additive {
                    FittedModel::Gam(fit_gam(&design, &LambdaChoice::Auto)?)
                } else {
                    FittedModel::Lmm(fit_lmm_reml(&design)?)
                };
                Ok(NamedFit {
                    name: name.clone(),
                    source: f.to_string(),
                    fit,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let (mut lmm, mut gam) = (vec![], vec![]);
        let mut text = format!("seed {}  rows {}  config {}\n\n", cfg.seed, table.n_rows, cfg.hash());
        for m in &fits {
            match &m.fit {
                FittedModel::Lmm(fit) => {
                    lmm.push(fit.summary(&m.name));
                    text.push_str(&report::render_lmm(&m.name, fit));
                }
                FittedModel::Gam(fit) => {
                    gam.push(fit.summary(&m.name));
                    text.push_str(&report::render_gam(&m.name, fit));
                }
            }
            text.push('\n');
        }
        let lmm_comparison = (!lmm.is_empty()).then(|| compare_models(&lmm)).transpose()?;
        let gam_comparison = (!gam.is_empty()).then(|| compare_models(&gam)).transpose()?;
        for (title, c) in [("mixed models", &lmm_comparison), ("additive models", &gam_comparison)] {
            if let Some(c) = c {
                text.push_str(&format!("AIC comparison, {title}\n{}\n", c.render()));
            }
        }
        sink.json(
            REGRESS_JSON,
            &RegressReport {
                meta: ReportMeta::new(cfg, table.n_rows),
                models: fits,
                lmm_comparison,
                gam_comparison,
            },
        )?;
        sink.write("regress.txt", text)?;
        Ok(table.n_rows)
    })
}

#[derive(Serialize)]
struct CorrelateReport<'a> {
    meta: ReportMeta,
    matrix: &'a CorrelationMatrix,
}

/// Pearson matrix over the response and the numeric features.
pub fn cmd_correlate(cfg: &RunConfig) -> Result<StageOutput> {
    stage(cfg, "correlate", |sink| {
        let table = load_features(cfg)?;
        let names: Vec<String> = match &cfg.correlate.columns {
            Some(c) => c.clone(),
            None => std::iter::once(RESPONSE.to_string())
                .chain(table.numeric.iter().map(|c| c.name.clone()))
                .collect(),
        };
        let columns = names
            .iter()
            .map(|n| {
                table
                    .numeric(n)
                    .map(|v| (n.clone(), v.to_vec()))
                    .ok_or_else(|| Error::UnknownFeature(n.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        let m = crate::stats::pearson_matrix(&columns)?;
        sink.write("correlation.tsv", m.to_tsv())?;
        sink.write("correlation.svg", report::correlation_heatmap_svg(&m))?;
        sink.json(
            "correlation.json",
            &CorrelateReport {
                meta: ReportMeta::new(cfg, table.n_rows),
                matrix: &m,
            },
        )?;
        Ok(table.n_rows)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialPlot {
    pub model: String,
    pub covariate: String,
    pub file: String,
    /// Sign of the fitted curve's end-to-end change.
    pub slope_sign: i8,
}

/// One SVG per smooth term of every additive model in `regress.json`.
pub fn cmd_plot_partials(cfg: &RunConfig, grid_size: Option<usize>) -> Result<StageOutput> {
    let grid = grid_size.unwrap_or(cfg.regress.grid_size);
    stage(cfg, "plot-partials", |sink| {
        let path = require(&sink.dir, REGRESS_JSON, "regress")?;
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let reg: RegressReport = serde_json::from_str(&text)?;
        let table = load_features(cfg)?;
        let mut plots = Vec::new();
        for m in &reg.models {
            let FittedModel::Gam(fit) = &m.fit else { continue };
            for s in &fit.smooths {
                let pe = partial_effects(fit, &s.variable, grid)?;
                let observed = table.numeric(&s.variable).unwrap_or(&[]);
                let file = format!("partials/{}_{}.svg", m.name, s.variable);
                sink.write(&file, report::partial_effect_svg(&pe, observed, fit.formula.split('~').next().unwrap_or(RESPONSE).trim()))?;
                plots.push(PartialPlot {
                    model: m.name.clone(),
                    covariate: s.variable.clone(),
                    file,
                    slope_sign: pe.slope_sign,
                });
            }
        }
        if plots.is_empty() {
            return Err(Error::InvalidInput("no fitted model has smooth terms to plot".into()));
        }
        #[derive(Serialize)]
        struct Sidecar<'a> {
            meta: ReportMeta,
            grid_size: usize,
            plots: &'a [PartialPlot],
        }
        sink.json(
            "partials.json",
            &Sidecar {
                meta: ReportMeta::new(cfg, table.n_rows),
                grid_size: grid,
                plots: &plots,
            },
        )?;
        Ok(plots.len())
    })
}

/// Every stage of the selected tracks, in order.
pub fn run(cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    cmd_ingest(cfg)?;
    cmd_features(cfg)?;
    cmd_annotate(cfg)?;
    if cfg.tracks.contains(&Track::Ml) {
        cmd_classify(cfg, ClassifyArgs::default())?;
    }
    if cfg.tracks.contains(&Track::Stats) {
        cmd_correlate(cfg)?;
        cmd_regress(cfg, &[])?;
        let has_smooths = cfg
            .regress
            .formulas
            .iter()
            .any(|f| parse_formula(f).map(|f| !f.smooth.is_empty()).unwrap_or(false));
        if has_smooths {
            cmd_plot_partials(cfg, None)?;
        }
    }
    Manifest::read(&cfg.out_dir())
}
