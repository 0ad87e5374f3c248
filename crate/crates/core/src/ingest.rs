//! Loading and validating the four input tables into a [`Corpus`].
//!
//! Parsing never stops at the first problem: every malformed row, duplicate
//! key and dangling reference is collected and returned together. Entities
//! that are valid but out of scope (short tenures, out-of-window articles)
//! are dropped and recorded in the [`ValidationReport`] instead.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use csv::StringRecord;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::InputPaths;
use crate::hca::HcaFlagSet;
use crate::model::{AnalysisConfig, Rank, ResearcherRecord, Taxonomy};

pub const TAXONOMY_COLUMNS: [&str; 4] = ["sds_code", "sds_name", "uda_code", "uda_name"];
pub const RESEARCHER_COLUMNS: [&str; 4] = ["researcher_id", "sds_code", "year", "rank"];
pub const PUBLICATION_COLUMNS: [&str; 5] = [
    "pub_id",
    "year",
    "citations",
    "author_count",
    "subject_categories",
];
pub const AUTHORSHIP_COLUMNS: [&str; 2] = ["pub_id", "researcher_id"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub pub_id: String,
    pub year: i32,
    /// Citations counted at the census date.
    pub citations: u64,
    /// All authors, including those not on the roster.
    pub author_count: u32,
    pub subject_categories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AuthorshipLink {
    pub pub_id: String,
    pub researcher_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFile {
    Taxonomy,
    Researchers,
    Publications,
    Authorships,
}

impl fmt::Display for InputFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputFile::Taxonomy => "taxonomy.csv",
            InputFile::Researchers => "researchers.csv",
            InputFile::Publications => "publications.csv",
            InputFile::Authorships => "authorships.csv",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum IssueKind {
    Malformed { message: String },
    DuplicateKey { key: String },
    DanglingReference { key: String, target: InputFile },
    EmptyCategories { pub_id: String },
    Inconsistent { message: String },
}

/// One validation error, located by file and 1-based line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub file: InputFile,
    pub line: Option<u64>,
    #[serde(flatten)]
    pub kind: IssueKind,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: ", self.file, line)?,
            None => write!(f, "{}: ", self.file)?,
        }
        match &self.kind {
            IssueKind::Malformed { message } => write!(f, "malformed row: {message}"),
            IssueKind::DuplicateKey { key } => write!(f, "duplicate key `{key}`"),
            IssueKind::DanglingReference { key, target } => {
                write!(f, "dangling reference: `{key}` not found in {target}")
            }
            IssueKind::EmptyCategories { pub_id } => {
                write!(f, "publication `{pub_id}` has no subject categories")
            }
            IssueKind::Inconsistent { message } => write!(f, "inconsistent record: {message}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{} validation error(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<ValidationIssue>),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entity {
    Researcher,
    ResearcherYear,
    Publication,
    Authorship,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    BelowMinYears {
        active: usize,
        required: usize,
    },
    OutsideWindow {
        year: i32,
    },
    ResearcherDropped,
    PublicationDropped,
    /// No roster author left; the article still counts in citation cells.
    NoRosterAuthorRetainedAsBaseline,
    NoRosterAuthorExcluded,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DroppedEntity {
    pub entity: Entity,
    pub id: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityCounts {
    pub parsed: usize,
    pub kept: usize,
    pub dropped: usize,
}

/// Bookkeeping for everything parsed but not kept.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub researchers: EntityCounts,
    pub researcher_years: EntityCounts,
    pub publications: EntityCounts,
    pub authorships: EntityCounts,
    /// Publications without roster authors kept for citation baselines.
    pub baseline_publications: usize,
    pub dropped: Vec<DroppedEntity>,
}

impl ValidationReport {
    pub fn drop_count(&self, entity: Entity) -> usize {
        self.dropped.iter().filter(|d| d.entity == entity).count()
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut by_reason: BTreeMap<(Entity, &'static str), usize> = BTreeMap::new();
        for d in &self.dropped {
            let reason = match d.reason {
                DropReason::BelowMinYears { .. } => "below minimum active years",
                DropReason::OutsideWindow { .. } => "outside analysis window",
                DropReason::ResearcherDropped => "researcher dropped",
                DropReason::PublicationDropped => "publication dropped",
                DropReason::NoRosterAuthorRetainedAsBaseline => {
                    "no roster author (kept as citation baseline)"
                }
                DropReason::NoRosterAuthorExcluded => "no roster author",
            };
            *by_reason.entry((d.entity, reason)).or_default() += 1;
        }
        for ((entity, reason), n) in by_reason {
            let entity = match entity {
                Entity::Researcher => "researcher",
                Entity::ResearcherYear => "researcher-year",
                Entity::Publication => "publication",
                Entity::Authorship => "authorship",
            };
            out.push(format!("dropped {n} {entity}(s): {reason}"));
        }
        out
    }
}

/// Validated, immutable input for the rest of the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub taxonomy: Taxonomy,
    pub researchers: BTreeMap<String, ResearcherRecord>,
    /// Publications with at least one kept roster author.
    pub publications: BTreeMap<String, PublicationRecord>,
    /// Publications that only enter citation cells.
    pub baseline: BTreeMap<String, PublicationRecord>,
    /// Sorted by (pub_id, researcher_id).
    pub authorships: Vec<AuthorshipLink>,
    pub config: AnalysisConfig,
    pub report: ValidationReport,
}

impl Corpus {
    /// Every publication that participates in citation cells.
    pub fn cell_publications(&self) -> impl Iterator<Item = &PublicationRecord> {
        self.publications.values().chain(self.baseline.values())
    }

    /// Roster authors of each scored publication.
    pub fn authors_by_publication(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut map: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for link in &self.authorships {
            map.entry(&link.pub_id)
                .or_default()
                .push(&link.researcher_id);
        }
        map
    }

    /// Scored publications of each researcher.
    pub fn publications_by_researcher(&self) -> BTreeMap<&str, Vec<&PublicationRecord>> {
        let mut map: BTreeMap<&str, Vec<&PublicationRecord>> = BTreeMap::new();
        for link in &self.authorships {
            if let Some(p) = self.publications.get(&link.pub_id) {
                map.entry(&link.researcher_id).or_default().push(p);
            }
        }
        map
    }
}

/// Raw bytes of the four tables.
#[derive(Debug, Clone, Copy)]
pub struct InputTexts<'a> {
    pub taxonomy: &'a [u8],
    pub researchers: &'a [u8],
    pub publications: &'a [u8],
    pub authorships: &'a [u8],
}

/// Owned file contents, kept around so callers can digest exactly what was
/// parsed.
#[derive(Debug, Clone)]
pub struct InputFiles {
    pub paths: InputPaths,
    pub taxonomy: Vec<u8>,
    pub researchers: Vec<u8>,
    pub publications: Vec<u8>,
    pub authorships: Vec<u8>,
}

impl InputFiles {
    pub fn read(paths: &InputPaths) -> Result<Self, IngestError> {
        let read = |p: &Path| {
            std::fs::read(p).map_err(|source| IngestError::Io {
                path: p.to_path_buf(),
                source,
            })
        };
        Ok(Self {
            paths: paths.clone(),
            taxonomy: read(&paths.taxonomy)?,
            researchers: read(&paths.researchers)?,
            publications: read(&paths.publications)?,
            authorships: read(&paths.authorships)?,
        })
    }

    pub fn texts(&self) -> InputTexts<'_> {
        InputTexts {
            taxonomy: &self.taxonomy,
            researchers: &self.researchers,
            publications: &self.publications,
            authorships: &self.authorships,
        }
    }
}

pub fn load_corpus(paths: &InputPaths, config: &AnalysisConfig) -> Result<Corpus, IngestError> {
    let files = InputFiles::read(paths)?;
    parse_corpus(files.texts(), config)
}

struct Table {
    file: InputFile,
    rows: Vec<(u64, StringRecord)>,
    columns: Vec<usize>,
}

impl Table {
    fn get<'r>(&self, record: &'r StringRecord, col: usize) -> &'r str {
        record.get(self.columns[col]).unwrap_or("").trim()
    }
}

fn read_table(
    file: InputFile,
    bytes: &[u8],
    expected: &[&str],
    issues: &mut Vec<ValidationIssue>,
) -> Option<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);
    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(e) => {
            issues.push(ValidationIssue {
                file,
                line: Some(1),
                kind: IssueKind::Malformed {
                    message: e.to_string(),
                },
            });
            return None;
        }
    };
    let mut columns = Vec::with_capacity(expected.len());
    for name in expected {
        match headers
            .iter()
            .position(|h| h.trim().trim_start_matches('\u{feff}') == *name)
        {
            Some(i) => columns.push(i),
            None => {
                issues.push(ValidationIssue {
                    file,
                    line: Some(1),
                    kind: IssueKind::Malformed {
                        message: format!("missing column `{name}`"),
                    },
                });
            }
        }
    }
    if columns.len() != expected.len() {
        return None;
    }
    let mut rows = Vec::new();
    for result in reader.records() {
        match result {
            Ok(record) => {
                let line = record.position().map(|p| p.line()).unwrap_or(0);
                if record.len() != headers.len() {
                    issues.push(ValidationIssue {
                        file,
                        line: Some(line),
                        kind: IssueKind::Malformed {
                            message: format!(
                                "expected {} fields, found {}",
                                headers.len(),
                                record.len()
                            ),
                        },
                    });
                    continue;
                }
                rows.push((line, record));
            }
            Err(e) => issues.push(ValidationIssue {
                file,
                line: e.position().map(|p| p.line()),
                kind: IssueKind::Malformed {
                    message: e.to_string(),
                },
            }),
        }
    }
    Some(Table {
        file,
        rows,
        columns,
    })
}

fn malformed(file: InputFile, line: u64, message: String) -> ValidationIssue {
    ValidationIssue {
        file,
        line: Some(line),
        kind: IssueKind::Malformed { message },
    }
}

fn non_empty(
    table: &Table,
    line: u64,
    value: &str,
    column: &str,
    issues: &mut Vec<ValidationIssue>,
) -> bool {
    if value.is_empty() {
        issues.push(malformed(table.file, line, format!("empty `{column}`")));
        false
    } else {
        true
    }
}

fn parse_taxonomy(table: &Table, issues: &mut Vec<ValidationIssue>) -> Taxonomy {
    let mut taxonomy = Taxonomy::new();
    for (line, rec) in &table.rows {
        let (sds, sds_name, uda, uda_name) = (
            table.get(rec, 0),
            table.get(rec, 1),
            table.get(rec, 2),
            table.get(rec, 3),
        );
        if !non_empty(table, *line, sds, "sds_code", issues)
            || !non_empty(table, *line, uda, "uda_code", issues)
        {
            continue;
        }
        if let Err(message) = taxonomy.add_uda(uda, uda_name) {
            issues.push(ValidationIssue {
                file: table.file,
                line: Some(*line),
                kind: IssueKind::Inconsistent { message },
            });
            continue;
        }
        if taxonomy.sds(sds).is_some() {
            issues.push(ValidationIssue {
                file: table.file,
                line: Some(*line),
                kind: IssueKind::DuplicateKey {
                    key: sds.to_string(),
                },
            });
            continue;
        }
        taxonomy
            .add_sds(sds, sds_name, uda)
            .expect("discipline registered above");
    }
    taxonomy
}

fn parse_researchers(
    table: &Table,
    taxonomy: &Taxonomy,
    issues: &mut Vec<ValidationIssue>,
) -> BTreeMap<String, (u64, ResearcherRecord)> {
    let mut out: BTreeMap<String, (u64, ResearcherRecord)> = BTreeMap::new();
    for (line, rec) in &table.rows {
        let line = *line;
        let (id, sds, year, rank) = (
            table.get(rec, 0),
            table.get(rec, 1),
            table.get(rec, 2),
            table.get(rec, 3),
        );
        if !non_empty(table, line, id, "researcher_id", issues) {
            continue;
        }
        let year: i32 = match year.parse() {
            Ok(y) => y,
            Err(_) => {
                issues.push(malformed(table.file, line, format!("bad year `{year}`")));
                continue;
            }
        };
        let rank: Rank = match rank.parse() {
            Ok(r) => r,
            Err(message) => {
                issues.push(malformed(table.file, line, message));
                continue;
            }
        };
        if taxonomy.sds(sds).is_none() {
            issues.push(ValidationIssue {
                file: table.file,
                line: Some(line),
                kind: IssueKind::DanglingReference {
                    key: sds.to_string(),
                    target: InputFile::Taxonomy,
                },
            });
            continue;
        }
        let (_, entry) = out.entry(id.to_string()).or_insert_with(|| {
            (
                line,
                ResearcherRecord {
                    researcher_id: id.to_string(),
                    sds: sds.to_string(),
                    rank_by_year: BTreeMap::new(),
                },
            )
        });
        if entry.sds != sds {
            issues.push(ValidationIssue {
                file: table.file,
                line: Some(line),
                kind: IssueKind::Inconsistent {
                    message: format!(
                        "researcher `{id}` listed in fields `{}` and `{sds}`",
                        entry.sds
                    ),
                },
            });
            continue;
        }
        if entry.rank_by_year.insert(year, rank).is_some() {
            issues.push(ValidationIssue {
                file: table.file,
                line: Some(line),
                kind: IssueKind::DuplicateKey {
                    key: format!("{id}/{year}"),
                },
            });
        }
    }
    out
}

fn parse_publications(
    table: &Table,
    issues: &mut Vec<ValidationIssue>,
) -> BTreeMap<String, (u64, PublicationRecord)> {
    let mut out = BTreeMap::new();
    for (line, rec) in &table.rows {
        let line = *line;
        let id = table.get(rec, 0);
        if !non_empty(table, line, id, "pub_id", issues) {
            continue;
        }
        let year = table.get(rec, 1);
        let citations = table.get(rec, 2);
        let author_count = table.get(rec, 3);
        let mut ok = true;
        let year: Option<i32> = year.parse().ok();
        if year.is_none() {
            issues.push(malformed(table.file, line, format!("bad year for `{id}`")));
            ok = false;
        }
        let citations: Option<u64> = citations.parse().ok();
        if citations.is_none() {
            issues.push(malformed(
                table.file,
                line,
                format!("citations for `{id}` must be a non-negative integer"),
            ));
            ok = false;
        }
        let author_count: Option<u32> = author_count.parse().ok().filter(|&n: &u32| n >= 1);
        if author_count.is_none() {
            issues.push(malformed(
                table.file,
                line,
                format!("author_count for `{id}` must be a positive integer"),
            ));
            ok = false;
        }
        let categories: Vec<String> = table
            .get(rec, 4)
            .split(';')
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .map(str::to_string)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if categories.is_empty() {
            issues.push(ValidationIssue {
                file: table.file,
                line: Some(line),
                kind: IssueKind::EmptyCategories {
                    pub_id: id.to_string(),
                },
            });
            ok = false;
        }
        if out.contains_key(id) {
            issues.push(ValidationIssue {
                file: table.file,
                line: Some(line),
                kind: IssueKind::DuplicateKey {
                    key: id.to_string(),
                },
            });
            continue;
        }
        if !ok {
            continue;
        }
        out.insert(
            id.to_string(),
            (
                line,
                PublicationRecord {
                    pub_id: id.to_string(),
                    year: year.unwrap(),
                    citations: citations.unwrap(),
                    author_count: author_count.unwrap(),
                    subject_categories: categories,
                },
            ),
        );
    }
    out
}

fn parse_authorships(
    table: &Table,
    researchers: &BTreeMap<String, (u64, ResearcherRecord)>,
    publications: &BTreeMap<String, (u64, PublicationRecord)>,
    issues: &mut Vec<ValidationIssue>,
) -> BTreeSet<AuthorshipLink> {
    let mut out = BTreeSet::new();
    for (line, rec) in &table.rows {
        let line = *line;
        let (pub_id, rid) = (table.get(rec, 0), table.get(rec, 1));
        if !non_empty(table, line, pub_id, "pub_id", issues)
            || !non_empty(table, line, rid, "researcher_id", issues)
        {
            continue;
        }
        let mut ok = true;
        if !publications.contains_key(pub_id) {
            issues.push(ValidationIssue {
                file: table.file,
                line: Some(line),
                kind: IssueKind::DanglingReference {
                    key: pub_id.to_string(),
                    target: InputFile::Publications,
                },
            });
            ok = false;
        }
        if !researchers.contains_key(rid) {
            issues.push(ValidationIssue {
                file: table.file,
                line: Some(line),
                kind: IssueKind::DanglingReference {
                    key: rid.to_string(),
                    target: InputFile::Researchers,
                },
            });
            ok = false;
        }
        let link = AuthorshipLink {
            pub_id: pub_id.to_string(),
            researcher_id: rid.to_string(),
        };
        if out.contains(&link) {
            issues.push(ValidationIssue {
                file: table.file,
                line: Some(line),
                kind: IssueKind::DuplicateKey {
                    key: format!("{pub_id}/{rid}"),
                },
            });
            continue;
        }
        if ok {
            out.insert(link);
        }
    }
    out
}

/// Parses and validates the four tables, then applies the scope filters.
pub fn parse_corpus(texts: InputTexts<'_>, config: &AnalysisConfig) -> Result<Corpus, IngestError> {
    let mut issues = Vec::new();
    let tax_table = read_table(
        InputFile::Taxonomy,
        texts.taxonomy,
        &TAXONOMY_COLUMNS,
        &mut issues,
    );
    let res_table = read_table(
        InputFile::Researchers,
        texts.researchers,
        &RESEARCHER_COLUMNS,
        &mut issues,
    );
    let pub_table = read_table(
        InputFile::Publications,
        texts.publications,
        &PUBLICATION_COLUMNS,
        &mut issues,
    );
    let auth_table = read_table(
        InputFile::Authorships,
        texts.authorships,
        &AUTHORSHIP_COLUMNS,
        &mut issues,
    );

    let taxonomy = tax_table
        .as_ref()
        .map(|t| parse_taxonomy(t, &mut issues))
        .unwrap_or_default();
    let researchers = res_table
        .as_ref()
        .map(|t| parse_researchers(t, &taxonomy, &mut issues))
        .unwrap_or_default();
    let publications = pub_table
        .as_ref()
        .map(|t| parse_publications(t, &mut issues))
        .unwrap_or_default();
    let links = auth_table
        .as_ref()
        .map(|t| parse_authorships(t, &researchers, &publications, &mut issues))
        .unwrap_or_default();

    // A publication cannot have more roster authors than authors.
    let mut roster_authors: BTreeMap<&str, u32> = BTreeMap::new();
    for link in &links {
        *roster_authors.entry(&link.pub_id).or_default() += 1;
    }
    for (pub_id, n) in &roster_authors {
        let (line, p) = &publications[*pub_id];
        if *n > p.author_count {
            issues.push(ValidationIssue {
                file: InputFile::Publications,
                line: Some(*line),
                kind: IssueKind::Inconsistent {
                    message: format!(
                        "`{pub_id}` has author_count {} but {n} roster authorships",
                        p.author_count
                    ),
                },
            });
        }
    }

    if !issues.is_empty() {
        issues.sort_by_key(|i| (i.file, i.line));
        return Err(IngestError::Invalid(issues));
    }

    Ok(apply_scope(
        taxonomy,
        researchers,
        publications,
        links,
        config,
    ))
}

fn apply_scope(
    taxonomy: Taxonomy,
    researchers: BTreeMap<String, (u64, ResearcherRecord)>,
    publications: BTreeMap<String, (u64, PublicationRecord)>,
    links: BTreeSet<AuthorshipLink>,
    config: &AnalysisConfig,
) -> Corpus {
    let mut report = ValidationReport::default();

    let mut kept_researchers = BTreeMap::new();
    report.researchers.parsed = researchers.len();
    for (id, (_, mut r)) in researchers {
        report.researcher_years.parsed += r.rank_by_year.len();
        let outside: Vec<i32> = r
            .rank_by_year
            .keys()
            .copied()
            .filter(|y| !config.contains_year(*y))
            .collect();
        for year in outside {
            r.rank_by_year.remove(&year);
            report.researcher_years.dropped += 1;
            report.dropped.push(DroppedEntity {
                entity: Entity::ResearcherYear,
                id: format!("{id}/{year}"),
                reason: DropReason::OutsideWindow { year },
            });
        }
        if r.years_active() < config.min_years || r.rank_by_year.is_empty() {
            report.dropped.push(DroppedEntity {
                entity: Entity::Researcher,
                id: id.clone(),
                reason: DropReason::BelowMinYears {
                    active: r.years_active(),
                    required: config.min_years,
                },
            });
            for year in r.rank_by_year.keys() {
                report.researcher_years.dropped += 1;
                report.dropped.push(DroppedEntity {
                    entity: Entity::ResearcherYear,
                    id: format!("{id}/{year}"),
                    reason: DropReason::ResearcherDropped,
                });
            }
            continue;
        }
        report.researcher_years.kept += r.years_active();
        kept_researchers.insert(id, r);
    }
    report.researchers.kept = kept_researchers.len();
    report.researchers.dropped = report.researchers.parsed - report.researchers.kept;

    report.publications.parsed = publications.len();
    let mut in_window = BTreeMap::new();
    for (id, (_, p)) in publications {
        if config.contains_year(p.year) {
            in_window.insert(id, p);
        } else {
            report.dropped.push(DroppedEntity {
                entity: Entity::Publication,
                id,
                reason: DropReason::OutsideWindow { year: p.year },
            });
        }
    }

    report.authorships.parsed = links.len();
    let mut kept_links = Vec::new();
    for link in links {
        let reason = if !in_window.contains_key(&link.pub_id) {
            Some(DropReason::PublicationDropped)
        } else if !kept_researchers.contains_key(&link.researcher_id) {
            Some(DropReason::ResearcherDropped)
        } else {
            None
        };
        match reason {
            Some(reason) => report.dropped.push(DroppedEntity {
                entity: Entity::Authorship,
                id: format!("{}/{}", link.pub_id, link.researcher_id),
                reason,
            }),
            None => kept_links.push(link),
        }
    }
    report.authorships.kept = kept_links.len();
    report.authorships.dropped = report.authorships.parsed - report.authorships.kept;

    let linked: BTreeSet<&str> = kept_links.iter().map(|l| l.pub_id.as_str()).collect();
    let mut scored = BTreeMap::new();
    let mut baseline = BTreeMap::new();
    for (id, p) in in_window {
        if linked.contains(id.as_str()) {
            scored.insert(id, p);
            continue;
        }
        let reason = if config.roster_only_baseline {
            DropReason::NoRosterAuthorExcluded
        } else {
            DropReason::NoRosterAuthorRetainedAsBaseline
        };
        report.dropped.push(DroppedEntity {
            entity: Entity::Publication,
            id: id.clone(),
            reason,
        });
        if !config.roster_only_baseline {
            baseline.insert(id, p);
        }
    }
    report.publications.kept = scored.len();
    report.publications.dropped = report.publications.parsed - report.publications.kept;
    report.baseline_publications = baseline.len();
    report.dropped.sort();

    for (entity, counts) in [
        ("researchers", report.researchers),
        ("publications", report.publications),
        ("authorships", report.authorships),
    ] {
        if counts.dropped > 0 {
            log::info!(
                "{entity}: kept {} of {}, dropped {}",
                counts.kept,
                counts.parsed,
                counts.dropped
            );
        }
    }
    if report.baseline_publications > 0 {
        log::info!(
            "{} publications retained as citation baseline",
            report.baseline_publications
        );
    }

    Corpus {
        taxonomy,
        researchers: kept_researchers,
        publications: scored,
        baseline,
        authorships: kept_links,
        config: config.clone(),
        report,
    }
}

/// One discipline row of the dataset summary. `hca_counts` and
/// `hca_shares` are aligned with the configured percentiles; shares are
/// percentages of `publications`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub uda: String,
    pub uda_name: String,
    pub sds_count: usize,
    pub professors: usize,
    pub publications: usize,
    pub hca_counts: Vec<usize>,
    pub hca_shares: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub percentiles: Vec<crate::model::Percentile>,
    pub rows: Vec<SummaryRow>,
    /// Distinct counts over the whole roster. An article co-authored from
    /// several disciplines appears once here but in every discipline row.
    pub overall: Option<SummaryRow>,
}

fn share(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

/// Per-discipline dataset summary: fields, professors, publications and
/// highly cited articles at each percentile.
pub fn corpus_summary(corpus: &Corpus, flags: &[HcaFlagSet]) -> SummaryTable {
    let percentiles = flags.iter().map(|f| f.p).collect();
    let mut sds_by_uda: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut profs_by_uda: BTreeMap<&str, usize> = BTreeMap::new();
    for r in corpus.researchers.values() {
        let uda = corpus.taxonomy.uda_of(&r.sds).expect("validated field");
        sds_by_uda.entry(uda).or_default().insert(&r.sds);
        *profs_by_uda.entry(uda).or_default() += 1;
    }
    let mut pubs_by_uda: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for link in &corpus.authorships {
        let r = &corpus.researchers[&link.researcher_id];
        let uda = corpus.taxonomy.uda_of(&r.sds).expect("validated field");
        pubs_by_uda.entry(uda).or_default().insert(&link.pub_id);
    }

    let row = |uda: &str, name: &str, sds_count: usize, profs: usize, pubs: &BTreeSet<&str>| {
        let hca_counts: Vec<usize> = flags
            .iter()
            .map(|f| pubs.iter().filter(|p| f.flagged.contains(**p)).count())
            .collect();
        let hca_shares = hca_counts.iter().map(|&c| share(c, pubs.len())).collect();
        SummaryRow {
            uda: uda.to_string(),
            uda_name: name.to_string(),
            sds_count,
            professors: profs,
            publications: pubs.len(),
            hca_counts,
            hca_shares,
        }
    };

    let empty = BTreeSet::new();
    let mut rows = Vec::new();
    for (uda, sds) in &sds_by_uda {
        let name = corpus.taxonomy.uda_name(uda).unwrap_or_default();
        let pubs = pubs_by_uda.get(uda).unwrap_or(&empty);
        rows.push(row(uda, name, sds.len(), profs_by_uda[uda], pubs));
    }

    let overall = if rows.is_empty() {
        None
    } else {
        let all: BTreeSet<&str> = corpus.publications.keys().map(String::as_str).collect();
        let sds_total = sds_by_uda.values().map(BTreeSet::len).sum();
        Some(row(
            "ALL",
            "Total",
            sds_total,
            corpus.researchers.len(),
            &all,
        ))
    };
    SummaryTable {
        percentiles,
        rows,
        overall,
    }
}
