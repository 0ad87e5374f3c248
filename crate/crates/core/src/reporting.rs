//! Report tables rendered as CSV, JSON and Markdown.
//!
//! All rounding happens here: indicator values to two decimals, shares to
//! one, costs and counts to integers. Output is a pure function of the
//! bundle, so identical inputs produce identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{Analytics, IndicatorId};
use crate::indicators::{DisciplineScoreboard, DisciplineTable, Scoreboards};
use crate::ingest::{SummaryRow, SummaryTable};
use crate::model::{Percentile, Rank};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("unknown report format `{0}` (expected csv, json or markdown)")]
    UnknownFormat(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Markdown,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Csv, Format::Json, Format::Markdown];

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Markdown => "md",
        }
    }
}

impl FromStr for Format {
    type Err = RenderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(RenderError::UnknownFormat(other.to_string())),
        }
    }
}

/// Everything the report layer needs, at full precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub percentiles: Vec<Percentile>,
    pub summary: SummaryTable,
    pub disciplines: DisciplineTable,
    pub fields: Scoreboards,
    pub analytics: Analytics,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Fixed(f64, usize),
    Null,
}

impl Cell {
    fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    fn count(n: usize) -> Self {
        Cell::Int(n as i64)
    }

    fn fss(v: f64) -> Self {
        Cell::Fixed(v, 2)
    }

    fn pct(v: f64) -> Self {
        Cell::Fixed(v, 1)
    }

    fn euro(v: f64) -> Self {
        Cell::Fixed(v, 0)
    }

    fn formatted(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(n) => n.to_string(),
            Cell::Fixed(v, d) => {
                let s = format!("{v:.d$}", d = *d);
                // "-0.00" reads as a sign error
                if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
                    s[1..].to_string()
                } else {
                    s
                }
            }
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Text(s) => serde_json::Value::String(s.clone()),
            Cell::Int(n) => serde_json::Value::from(*n),
            Cell::Fixed(..) => {
                let v: f64 = self.formatted().parse().expect("formatted float");
                serde_json::Value::from(v)
            }
            Cell::Null => serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &'static str, title: impl Into<String>, columns: Vec<String>) -> Self {
        Self {
            name,
            title: title.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::formatted))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<serde_json::Value>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(Cell::json).collect())
            .collect();
        let doc = serde_json::json!({
            "name": self.name,
            "title": self.title,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("json value");
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        writeln!(s, "### {}\n", self.title).unwrap();
        writeln!(s, "| {} |", self.columns.join(" | ")).unwrap();
        writeln!(s, "|{}", " --- |".repeat(self.columns.len())).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Null => "n/a".to_string(),
                    other => other.formatted().replace('|', "\\|"),
                })
                .collect();
            writeln!(s, "| {} |", cells.join(" | ")).unwrap();
        }
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
            Format::Markdown => self.to_markdown(),
        }
    }
}

fn summary_cells(row: &SummaryRow) -> Vec<Cell> {
    let mut cells = vec![
        Cell::text(&row.uda),
        Cell::text(&row.uda_name),
        Cell::count(row.sds_count),
        Cell::count(row.professors),
        Cell::count(row.publications),
    ];
    for (n, share) in row.hca_counts.iter().zip(&row.hca_shares) {
        cells.push(Cell::count(*n));
        cells.push(Cell::pct(*share));
    }
    cells
}

/// Dataset per discipline.
pub fn summary_table(s: &SummaryTable) -> Table {
    let mut cols: Vec<String> = ["uda", "uda_name", "sds_count", "professors", "publications"]
        .map(String::from)
        .to_vec();
    for p in &s.percentiles {
        cols.push(format!("hca_{}", p.label()));
        cols.push(format!("hca_{}_share_pct", p.label()));
    }
    let mut t = Table::new("summary", "Dataset per discipline", cols);
    t.rows
        .extend(s.rows.iter().chain(&s.overall).map(summary_cells));
    t
}

fn discipline_cells(d: &DisciplineScoreboard) -> Vec<Cell> {
    let mut cells = vec![
        Cell::text(&d.uda),
        Cell::text(&d.uda_name),
        Cell::count(d.n_fields),
        Cell::count(d.n_professors),
        Cell::euro(d.total_cost),
    ];
    for x in &d.per_p {
        cells.push(Cell::count(x.ts_count));
        cells.push(Cell::pct(x.ts_share));
    }
    cells.extend(d.per_p.iter().map(|x| Cell::fss(x.fss_ts)));
    cells.extend(d.per_p.iter().map(|x| Cell::fss(x.fss_fhca)));
    cells
}

/// Top scientists and cost-weighted strength per discipline.
pub fn discipline_table(d: &DisciplineTable) -> Table {
    let mut cols: Vec<String> = ["uda", "uda_name", "fields", "professors", "total_cost"]
        .map(String::from)
        .to_vec();
    for p in &d.percentiles {
        cols.push(format!("ts_{}", p.label()));
        cols.push(format!("ts_{}_share_pct", p.label()));
    }
    cols.extend(
        d.percentiles
            .iter()
            .map(|p| format!("fss_ts_{}", p.label())),
    );
    cols.extend(
        d.percentiles
            .iter()
            .map(|p| format!("fss_fhca_{}", p.label())),
    );
    let mut t = Table::new(
        "disciplines",
        "Top scientists and field strength per discipline",
        cols,
    );
    t.rows
        .extend(d.rows.iter().chain(&d.overall).map(discipline_cells));
    t
}

/// Research staff by rank and total cost per field, largest first.
pub fn size_table(b: &Scoreboards) -> Table {
    let cols = [
        "sds",
        "sds_name",
        "uda",
        "assistant",
        "associate",
        "full",
        "total",
        "total_cost",
    ]
    .map(String::from)
    .to_vec();
    let mut t = Table::new("sizes", "Research staff and total cost per field", cols);
    let mut fields: Vec<_> = b.fields.iter().collect();
    fields.sort_by(|a, b| {
        b.total_cost
            .total_cmp(&a.total_cost)
            .then_with(|| a.sds.cmp(&b.sds))
    });
    for f in fields {
        let n = |r: Rank| Cell::count(f.rank_counts.get(&r).copied().unwrap_or(0));
        t.rows.push(vec![
            Cell::text(&f.sds),
            Cell::text(&f.sds_name),
            Cell::text(&f.uda),
            n(Rank::Assistant),
            n(Rank::Associate),
            n(Rank::Full),
            Cell::count(f.n_professors),
            Cell::euro(f.total_cost),
        ]);
    }
    t
}

/// Per-field strength with the counts behind it: for each percentile, top
/// scientists, FHCA total and both indicators.
pub fn field_table(b: &Scoreboards) -> Table {
    let mut cols: Vec<String> = ["sds", "sds_name", "uda", "professors", "total_cost"]
        .map(String::from)
        .to_vec();
    for prefix in ["ts", "fhca", "fss_ts", "fss_fhca"] {
        cols.extend(
            b.percentiles
                .iter()
                .map(|p| format!("{prefix}_{}", p.label())),
        );
    }
    cols.push("fallback_flags".into());
    let mut t = Table::new("fields", "Field strength per field", cols);
    for f in &b.fields {
        let mut row = vec![
            Cell::text(&f.sds),
            Cell::text(&f.sds_name),
            Cell::text(&f.uda),
            Cell::count(f.n_professors),
            Cell::euro(f.total_cost),
        ];
        row.extend(f.per_p.iter().map(|x| Cell::count(x.ts_count)));
        row.extend(f.per_p.iter().map(|x| Cell::fss(x.fhca_total)));
        row.extend(f.per_p.iter().map(|x| Cell::fss(x.fss_ts)));
        row.extend(f.per_p.iter().map(|x| Cell::fss(x.fss_fhca)));
        row.push(Cell::text(f.fallback_flags()));
        t.rows.push(row);
    }
    t
}

fn uda_of<'a>(b: &'a Scoreboards, sds: &str) -> &'a str {
    b.fields
        .iter()
        .find(|f| f.sds == sds)
        .map(|f| f.uda.as_str())
        .unwrap_or("")
}

/// Strongest and weakest fields for each indicator.
pub fn extremes_table(b: &Scoreboards, a: &Analytics) -> Table {
    let cols = [
        "indicator",
        "group",
        "position",
        "sds",
        "uda",
        "value",
        "rank",
    ]
    .map(String::from)
    .to_vec();
    let mut t = Table::new(
        "field_extremes",
        "Strongest and weakest fields per indicator",
        cols,
    );
    for ext in &a.extremes {
        for (group, list) in [("top", &ext.top), ("bottom", &ext.bottom)] {
            for (i, r) in list.iter().enumerate() {
                t.rows.push(vec![
                    Cell::text(&ext.indicator),
                    Cell::text(group),
                    Cell::count(i + 1),
                    Cell::text(&r.sds),
                    Cell::text(uda_of(b, &r.sds)),
                    Cell::fss(r.value),
                    Cell::Fixed(r.rank, 1),
                ]);
            }
        }
    }
    t
}

/// Spearman matrix; undefined entries are empty in CSV and `n/a` in
/// Markdown.
pub fn correlation_table(a: &Analytics) -> Table {
    let m = &a.correlations;
    let mut cols = vec!["indicator".to_string()];
    cols.extend(m.indicators.iter().cloned());
    let mut t = Table::new("correlations", "Spearman correlation matrix", cols);
    if a.rankings.iter().all(|r| r.ranked.is_empty()) {
        return t;
    }
    for (name, row) in m.indicators.iter().zip(&m.values) {
        let mut cells = vec![Cell::text(name)];
        cells.extend(
            row.iter()
                .map(|v| v.map_or(Cell::Null, |v| Cell::Fixed(v, 3))),
        );
        t.rows.push(cells);
    }
    t
}

/// Fields above (strong) or below (weak) both medians at some percentile.
pub fn quadrant_table(b: &Scoreboards, a: &Analytics) -> Table {
    let ids = IndicatorId::all(&b.percentiles);
    let mut cols = ["set", "sds", "sds_name", "uda"].map(String::from).to_vec();
    cols.extend(ids.iter().map(IndicatorId::name));
    let mut t = Table::new(
        "quadrants",
        "Strong and weak fields by median quadrants",
        cols,
    );
    let q = &a.quadrants;
    for (set, members) in [
        ("strong", &q.strong_union),
        ("weak", &q.weak_union),
        ("conflicting", &q.conflicting),
    ] {
        for (i, f) in b.fields.iter().enumerate() {
            if !members.contains(&f.sds) {
                continue;
            }
            let mut row = vec![
                Cell::text(set),
                Cell::text(&f.sds),
                Cell::text(&f.sds_name),
                Cell::text(&f.uda),
            ];
            row.extend(ids.iter().map(|id| Cell::fss(id.value(b, i))));
            t.rows.push(row);
        }
    }
    t
}

/// Top and bottom fields by average rank over all indicators.
pub fn avg_rank_table(b: &Scoreboards, a: &Analytics) -> Table {
    let ids = IndicatorId::all(&b.percentiles);
    let mut cols = ["group", "position", "sds", "uda"]
        .map(String::from)
        .to_vec();
    for id in &ids {
        cols.push(id.name());
        cols.push(format!("{}_rank", id.name()));
    }
    cols.push("avg_rank".into());
    let mut t = Table::new("avg_rank", "Top and bottom fields by average rank", cols);
    let ar = &a.average_rank;
    for (group, list) in [("top", &ar.top), ("bottom", &ar.bottom)] {
        for e in list {
            let i = b
                .fields
                .iter()
                .position(|f| f.sds == e.sds)
                .expect("ranked field exists");
            let mut row = vec![
                Cell::text(group),
                Cell::count(e.position),
                Cell::text(&e.sds),
                Cell::text(&b.fields[i].uda),
            ];
            for (id, rank) in ids.iter().zip(&e.ranks) {
                row.push(Cell::fss(id.value(b, i)));
                row.push(Cell::Fixed(*rank, 1));
            }
            row.push(Cell::fss(e.average));
            t.rows.push(row);
        }
    }
    t
}

/// Every report table, in output order.
pub fn tables(bundle: &ReportBundle) -> Vec<Table> {
    let b = &bundle.fields;
    let a = &bundle.analytics;
    vec![
        summary_table(&bundle.summary),
        discipline_table(&bundle.disciplines),
        size_table(b),
        field_table(b),
        extremes_table(b, a),
        correlation_table(a),
        quadrant_table(b, a),
        avg_rank_table(b, a),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub table: String,
    pub format: Format,
    /// Relative to the report directory.
    pub path: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderManifest {
    pub entries: Vec<ManifestEntry>,
}

fn write(path: &Path, body: &str) -> Result<(), RenderError> {
    std::fs::write(path, body).map_err(|source| RenderError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes one file per table and format into `dir`, plus `manifest.json`.
pub fn render(
    bundle: &ReportBundle,
    formats: &[Format],
    dir: &Path,
) -> Result<RenderManifest, RenderError> {
    std::fs::create_dir_all(dir).map_err(|source| RenderError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut formats = formats.to_vec();
    formats.sort();
    formats.dedup();
    let mut entries = Vec::new();
    for table in tables(bundle) {
        for &format in &formats {
            let file = format!("{}.{}", table.name, format.extension());
            write(&dir.join(&file), &table.render(format))?;
            entries.push(ManifestEntry {
                table: table.name.to_string(),
                format,
                path: file,
                rows: table.rows.len(),
            });
        }
    }
    let manifest = RenderManifest { entries };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    write(&dir.join("manifest.json"), &json)?;
    Ok(manifest)
}
