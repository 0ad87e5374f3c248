//! Citation cells and highly cited article (HCA) flags.
//!
//! A cell groups every publication sharing a publication year and subject
//! category. An article is in the top p% of a cell when fewer than
//! `p * size / 100` cell members have strictly more citations than it, so
//! tied articles all get the better outcome. Articles listed under several
//! categories are judged in each and flagged if any cell puts them on top.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Corpus, PublicationRecord};
use crate::model::Percentile;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HcaError {
    #[error("publication `{pub_id}` is not a member of cell ({year}, {category})")]
    NotInCell {
        pub_id: String,
        year: i32,
        category: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationCell {
    pub year: i32,
    pub category: String,
    /// `(pub_id, citations)` sorted by pub_id.
    pub members: Vec<(String, u64)>,
}

impl CitationCell {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Citation counts sorted descending.
    fn descending(&self) -> Vec<u64> {
        let mut c: Vec<u64> = self.members.iter().map(|(_, c)| *c).collect();
        c.sort_unstable_by(|a, b| b.cmp(a));
        c
    }
}

/// Groups publications into (year, category) cells, ordered by year then
/// category.
pub fn build_cells<'a, I>(publications: I) -> Vec<CitationCell>
where
    I: IntoIterator<Item = &'a PublicationRecord>,
{
    let mut cells: BTreeMap<(i32, &str), Vec<(String, u64)>> = BTreeMap::new();
    for p in publications {
        for cat in &p.subject_categories {
            cells
                .entry((p.year, cat))
                .or_default()
                .push((p.pub_id.clone(), p.citations));
        }
    }
    cells
        .into_iter()
        .map(|((year, category), mut members)| {
            members.sort();
            CitationCell {
                year,
                category: category.to_string(),
                members,
            }
        })
        .collect()
}

/// Number of members with strictly more citations, given the cell's counts
/// in descending order.
fn better_count(descending: &[u64], citations: u64) -> usize {
    descending.partition_point(|&c| c > citations)
}

fn within_top(better: usize, size: usize, p: Percentile) -> bool {
    (better as f64) < p.value() * size as f64 / 100.0
}

pub fn is_top_p(pub_id: &str, cell: &CitationCell, p: Percentile) -> Result<bool, HcaError> {
    let citations = cell
        .members
        .iter()
        .find(|(id, _)| id == pub_id)
        .map(|(_, c)| *c)
        .ok_or_else(|| HcaError::NotInCell {
            pub_id: pub_id.to_string(),
            year: cell.year,
            category: cell.category.clone(),
        })?;
    Ok(within_top(
        better_count(&cell.descending(), citations),
        cell.size(),
        p,
    ))
}

/// Publications in the top p% of at least one of their cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HcaFlagSet {
    pub p: Percentile,
    pub flagged: BTreeSet<String>,
    /// For each flagged article, the category where its relative position
    /// (share of the cell ahead of it) is best. Ties go to the smaller code.
    pub best_category: BTreeMap<String, String>,
}

impl HcaFlagSet {
    pub fn contains(&self, pub_id: &str) -> bool {
        self.flagged.contains(pub_id)
    }

    pub fn len(&self) -> usize {
        self.flagged.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flagged.is_empty()
    }
}

pub fn flag_hcas(cells: &[CitationCell], p: Percentile) -> HcaFlagSet {
    // pub_id -> (better, size, category) of the best cell so far
    let mut best: BTreeMap<&str, (usize, usize, &str)> = BTreeMap::new();
    for cell in cells {
        let desc = cell.descending();
        let size = cell.size();
        for (id, citations) in &cell.members {
            let better = better_count(&desc, *citations);
            if !within_top(better, size, p) {
                continue;
            }
            best.entry(id)
                .and_modify(|cur| {
                    // better/size < cur.0/cur.1
                    if better * cur.1 < cur.0 * size {
                        *cur = (better, size, &cell.category);
                    }
                })
                .or_insert((better, size, &cell.category));
        }
    }
    HcaFlagSet {
        p,
        flagged: best.keys().map(|k| k.to_string()).collect(),
        best_category: best
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.2.to_string()))
            .collect(),
    }
}

/// Builds the cells for a corpus and flags them at every percentile.
pub fn flag_corpus(
    corpus: &Corpus,
    percentiles: &[Percentile],
) -> (Vec<CitationCell>, Vec<HcaFlagSet>) {
    let cells = build_cells(corpus.cell_publications());
    let flags = percentiles.iter().map(|&p| flag_hcas(&cells, p)).collect();
    (cells, flags)
}

/// Credit each author receives for one article under fractional counting.
pub fn fractional_value(author_count: u32) -> f64 {
    debug_assert!(author_count >= 1, "author_count validated upstream");
    1.0 / f64::from(author_count)
}

/// `pub_id,p,category_of_best_rank`, one row per flag, ordered by p then id.
pub fn flags_csv(flags: &[HcaFlagSet]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["pub_id", "p", "category_of_best_rank"])
        .expect("in-memory write");
    for set in flags {
        let p = set.p.label();
        for (id, cat) in &set.best_category {
            w.write_record([id.as_str(), p.as_str(), cat.as_str()])
                .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}
