//! End-to-end orchestration: ingest, flag, score, aggregate, analyze,
//! render. Also the on-disk layout of a run directory.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analytics::{analyze, Analytics, AnalyticsError};
use crate::config::Config;
use crate::error::ConfigError;
use crate::hca::{flag_corpus, flags_csv, HcaFlagSet};
use crate::indicators::{
    aggregate_disciplines, build_scoreboards, scoreboard_csv, DisciplineTable, Scoreboards,
};
use crate::ingest::{corpus_summary, parse_corpus, Corpus, IngestError, InputFiles, InputTexts};
use crate::model::CostError;
use crate::reporting::{render, Format, RenderError, RenderManifest, ReportBundle};
use crate::scoring::{
    detect_by_field, score_researchers, scores_csv, ResearcherScore, TsDetection,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Ingest,
    Hca,
    Scoring,
    Indicators,
    Analytics,
    Reporting,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("stage serializes");
        f.write_str(s.as_str().unwrap_or("unknown"))
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage config: {0}")]
    Config(#[from] ConfigError),
    #[error("stage ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("stage scoring: {0}")]
    Scoring(#[from] CostError),
    #[error("stage analytics: {0}")]
    Analytics(#[from] AnalyticsError),
    #[error("stage reporting: {0}")]
    Render(#[from] RenderError),
    #[error("stage {stage}: cannot write {path}: {source}")]
    Io {
        stage: Stage,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("stage reporting: cached bundle {path} is unreadable: {message}")]
    Cache { path: PathBuf, message: String },
}

impl PipelineError {
    pub fn stage(&self) -> Stage {
        match self {
            PipelineError::Config(_) => Stage::Config,
            PipelineError::Ingest(_) => Stage::Ingest,
            PipelineError::Scoring(_) => Stage::Scoring,
            PipelineError::Analytics(_) => Stage::Analytics,
            PipelineError::Render(_) | PipelineError::Cache { .. } => Stage::Reporting,
            PipelineError::Io { stage, .. } => *stage,
        }
    }
}

/// Every intermediate result of one run.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub corpus: Corpus,
    pub cell_count: usize,
    pub flags: Vec<HcaFlagSet>,
    pub scores: Vec<ResearcherScore>,
    pub detections: BTreeMap<String, Vec<TsDetection>>,
    pub scoreboards: Scoreboards,
    pub disciplines: DisciplineTable,
    pub analytics: Analytics,
    pub bundle: ReportBundle,
}

impl PipelineOutput {
    pub fn counts(&self) -> StageCounts {
        StageCounts {
            researchers: self.corpus.researchers.len(),
            publications: self.corpus.publications.len(),
            baseline_publications: self.corpus.baseline.len(),
            authorships: self.corpus.authorships.len(),
            citation_cells: self.cell_count,
            hca: self
                .flags
                .iter()
                .map(|f| {
                    let n = f
                        .flagged
                        .iter()
                        .filter(|id| self.corpus.publications.contains_key(*id))
                        .count();
                    (f.p.label(), n)
                })
                .collect(),
            top_scientists: self
                .flags
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let n = self
                        .scoreboards
                        .fields
                        .iter()
                        .map(|b| b.per_p[i].ts_count)
                        .sum();
                    (f.p.label(), n)
                })
                .collect(),
            fields: self.scoreboards.fields.len(),
            disciplines: self.disciplines.rows.len(),
        }
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = self.corpus.report.warnings();
        w.extend(self.scoreboards.notes.iter().cloned());
        for f in &self.scoreboards.fields {
            let flags = f.fallback_flags();
            if !flags.is_empty() {
                w.push(format!("field {} rescaled via fallback: {flags}", f.sds));
            }
        }
        w.extend(self.analytics.average_rank.note.iter().cloned());
        if !self.analytics.quadrants.conflicting.is_empty() {
            w.push(format!(
                "{} field(s) strong at one percentile and weak at another, left out of both unions",
                self.analytics.quadrants.conflicting.len()
            ));
        }
        w
    }
}

/// Runs every stage on an already-validated corpus.
pub fn run_on_corpus(corpus: Corpus, config: &Config) -> Result<PipelineOutput, PipelineError> {
    let analysis = &config.analysis;
    let (cells, flags) = flag_corpus(&corpus, &analysis.hca_percentiles);
    let scores = score_researchers(&corpus, &flags, &config.cost)?;
    let detections = detect_by_field(
        &scores,
        &analysis.hca_percentiles,
        analysis.ts_fence_multiplier,
    );
    let scoreboards = build_scoreboards(&corpus, &scores, &detections, &config.cost, analysis);
    let disciplines = aggregate_disciplines(&scoreboards, &corpus);
    let analytics = analyze(&scoreboards, analysis.top_k)?;
    let bundle = ReportBundle {
        percentiles: analysis.hca_percentiles.clone(),
        summary: corpus_summary(&corpus, &flags),
        disciplines: disciplines.clone(),
        fields: scoreboards.clone(),
        analytics: analytics.clone(),
    };
    Ok(PipelineOutput {
        corpus,
        cell_count: cells.len(),
        flags,
        scores,
        detections,
        scoreboards,
        disciplines,
        analytics,
        bundle,
    })
}

pub fn run_on_texts(
    texts: InputTexts<'_>,
    config: &Config,
) -> Result<PipelineOutput, PipelineError> {
    config.validate()?;
    let corpus = parse_corpus(texts, &config.analysis)?;
    run_on_corpus(corpus, config)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub researchers: usize,
    pub publications: usize,
    pub baseline_publications: usize,
    pub authorships: usize,
    pub citation_cells: usize,
    /// Highly cited roster publications per percentile label.
    pub hca: BTreeMap<String, usize>,
    pub top_scientists: BTreeMap<String, usize>,
    pub fields: usize,
    pub disciplines: usize,
}

/// Provenance record for a run directory. Contains no timestamps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config_hash: String,
    /// SHA-256 of each input file by table name.
    pub input_digests: BTreeMap<String, String>,
    pub counts: StageCounts,
    pub warnings: Vec<String>,
    /// SHA-256 of each written file, keyed by path relative to the run
    /// directory.
    pub output_digests: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub const BUNDLE_FILE: &str = "bundle.json";
pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";
pub const REPORT_DIR: &str = "reports";

fn write_file(
    dir: &Path,
    name: &str,
    body: &[u8],
    digests: &mut BTreeMap<String, String>,
) -> Result<(), PipelineError> {
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|source| PipelineError::Io {
        stage: Stage::Reporting,
        path,
        source,
    })?;
    digests.insert(name.to_string(), sha256_hex(body));
    Ok(())
}

fn pretty_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn digest_reports(
    out_dir: &Path,
    manifest: &RenderManifest,
    digests: &mut BTreeMap<String, String>,
) -> Result<(), PipelineError> {
    let names = manifest
        .entries
        .iter()
        .map(|e| e.path.as_str())
        .chain(["manifest.json"]);
    for name in names {
        let path = out_dir.join(REPORT_DIR).join(name);
        let bytes = std::fs::read(&path).map_err(|source| PipelineError::Io {
            stage: Stage::Reporting,
            path,
            source,
        })?;
        digests.insert(format!("{REPORT_DIR}/{name}"), sha256_hex(&bytes));
    }
    Ok(())
}

/// Full run from a loaded config: reads the inputs, computes everything
/// and writes the run directory.
///
/// Layout of `out_dir`:
/// `reports/*.{csv,json,md}`, `reports/manifest.json`, `scoreboard.csv`,
/// `hca_flags.csv`, `researcher_scores.csv`, `analytics.json`,
/// `validation.json`, `bundle.json` and `run_manifest.json`.
pub fn run_to_dir(
    config: &Config,
    out_dir: &Path,
    formats: &[Format],
) -> Result<(PipelineOutput, RunManifest), PipelineError> {
    config.validate()?;
    let files = InputFiles::read(&config.inputs)?;
    let output = run_on_texts(files.texts(), config)?;

    std::fs::create_dir_all(out_dir).map_err(|source| PipelineError::Io {
        stage: Stage::Reporting,
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut outputs = BTreeMap::new();
    let render_manifest = render(&output.bundle, formats, &out_dir.join(REPORT_DIR))?;
    digest_reports(out_dir, &render_manifest, &mut outputs)?;
    let percentiles = &config.analysis.hca_percentiles;
    write_file(
        out_dir,
        "scoreboard.csv",
        scoreboard_csv(&output.scoreboards).as_bytes(),
        &mut outputs,
    )?;
    write_file(
        out_dir,
        "hca_flags.csv",
        flags_csv(&output.flags).as_bytes(),
        &mut outputs,
    )?;
    write_file(
        out_dir,
        "researcher_scores.csv",
        scores_csv(&output.scores, percentiles, &output.detections).as_bytes(),
        &mut outputs,
    )?;
    write_file(
        out_dir,
        "analytics.json",
        &pretty_json(&output.analytics),
        &mut outputs,
    )?;
    write_file(
        out_dir,
        "validation.json",
        &pretty_json(&output.corpus.report),
        &mut outputs,
    )?;
    write_file(
        out_dir,
        BUNDLE_FILE,
        &pretty_json(&output.bundle),
        &mut outputs,
    )?;

    let input_digests = [
        ("taxonomy", &files.taxonomy),
        ("researchers", &files.researchers),
        ("publications", &files.publications),
        ("authorships", &files.authorships),
    ]
    .into_iter()
    .map(|(name, bytes)| (name.to_string(), sha256_hex(bytes)))
    .collect();
    let manifest = RunManifest {
        version: VERSION.to_string(),
        config_hash: config.digest(),
        input_digests,
        counts: output.counts(),
        warnings: output.warnings(),
        output_digests: outputs,
    };
    let mut unused = BTreeMap::new();
    write_file(
        out_dir,
        RUN_MANIFEST_FILE,
        &pretty_json(&manifest),
        &mut unused,
    )?;
    Ok((output, manifest))
}

/// Re-renders the report tables from the bundle cached by a previous run.
pub fn rerender(
    run_dir: &Path,
    formats: &[Format],
    report_dir: &Path,
) -> Result<RenderManifest, PipelineError> {
    let path = run_dir.join(BUNDLE_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::Cache {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let bundle: ReportBundle = serde_json::from_str(&text).map_err(|e| PipelineError::Cache {
        path: path.clone(),
        message: e.to_string(),
    })?;
    Ok(render(&bundle, formats, report_dir)?)
}
