//! Deterministic synthetic corpora in the four-table input format.
//!
//! Citation counts are log-normal around a per-professor quality factor,
//! so every cell has a heavy right tail. Non-roster "world" articles are
//! added to each cell as a citation baseline. `hca_fraction` below 1 adds a
//! block of world articles cited above everything else in the cell, which
//! pushes roster articles out of the top percentiles; at 0 the block is as
//! large as the rest of the cell and no roster article reaches the top
//! half.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Rank;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthesis parameter: {0}")]
    InvalidParams(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub seed: u64,
    pub n_udas: usize,
    pub n_fields_per_uda: usize,
    /// Inclusive range.
    pub professors_per_field: (usize, usize),
    /// Inclusive range of publication years.
    pub years: (i32, i32),
    /// Mean articles per professor-year before field and personal effects.
    pub pubs_per_professor_year: f64,
    /// Field publication intensity multipliers are drawn from this range.
    pub field_intensity: (f64, f64),
    pub citation_median: f64,
    /// Log-scale spread of citations.
    pub citation_sigma: f64,
    /// Overrides the citation distribution with a constant.
    pub constant_citations: Option<u64>,
    /// Inclusive range of subject categories per article.
    pub categories_per_pub: (usize, usize),
    pub categories_per_uda: usize,
    /// Non-roster co-authors per article, inclusive range.
    pub extra_authors: (u32, u32),
    /// Chance an article has a second roster author.
    pub coauthor_prob: f64,
    /// Chance that second roster author comes from any field.
    pub cross_field_prob: f64,
    /// Probability of starting as assistant, associate, full.
    pub rank_mix: [f64; 3],
    pub promotion_prob: f64,
    /// Chance a professor is active for only two years.
    pub short_tenure_prob: f64,
    /// World articles per roster article in each cell.
    pub baseline_ratio: f64,
    pub hca_fraction: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            seed: 42,
            n_udas: 11,
            n_fields_per_uda: 4,
            professors_per_field: (30, 30),
            years: (2012, 2016),
            pubs_per_professor_year: 2.5,
            field_intensity: (0.5, 1.5),
            citation_median: 8.0,
            citation_sigma: 1.0,
            constant_citations: None,
            categories_per_pub: (1, 2),
            categories_per_uda: 2,
            extra_authors: (0, 5),
            coauthor_prob: 0.15,
            cross_field_prob: 0.1,
            rank_mix: [0.3, 0.35, 0.35],
            promotion_prob: 0.08,
            short_tenure_prob: 0.05,
            baseline_ratio: 0.25,
            hca_fraction: 1.0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidParams(m));
        if self.n_udas == 0 || self.n_fields_per_uda == 0 {
            return bad("n_udas and n_fields_per_uda must be positive".into());
        }
        if self.professors_per_field.0 == 0
            || self.professors_per_field.0 > self.professors_per_field.1
        {
            return bad(format!(
                "professors_per_field {:?} is empty or zero",
                self.professors_per_field
            ));
        }
        if self.years.0 > self.years.1 {
            return bad(format!("years {:?} is empty", self.years));
        }
        if !(self.field_intensity.0 > 0.0 && self.field_intensity.0 <= self.field_intensity.1) {
            return bad(format!(
                "field_intensity {:?} must be positive and non-empty",
                self.field_intensity
            ));
        }
        if self.categories_per_pub.0 == 0 || self.categories_per_pub.0 > self.categories_per_pub.1 {
            return bad(format!(
                "categories_per_pub {:?} is empty or zero",
                self.categories_per_pub
            ));
        }
        if self.categories_per_uda == 0 {
            return bad("categories_per_uda must be positive".into());
        }
        if self.extra_authors.0 > self.extra_authors.1 {
            return bad(format!("extra_authors {:?} is empty", self.extra_authors));
        }
        if !(self.pubs_per_professor_year >= 0.0
            && self.citation_median > 0.0
            && self.citation_sigma >= 0.0)
        {
            return bad("publication and citation parameters must be non-negative".into());
        }
        for (name, p) in [
            ("coauthor_prob", self.coauthor_prob),
            ("cross_field_prob", self.cross_field_prob),
            ("promotion_prob", self.promotion_prob),
            ("short_tenure_prob", self.short_tenure_prob),
            ("hca_fraction", self.hca_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if self.rank_mix.iter().any(|w| *w < 0.0) || self.rank_mix.iter().sum::<f64>() <= 0.0 {
            return bad("rank_mix weights must be non-negative with a positive sum".into());
        }
        if self.baseline_ratio < 0.0 {
            return bad("baseline_ratio must be non-negative".into());
        }
        Ok(())
    }
}

/// The four tables as CSV text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthCorpus {
    pub taxonomy: String,
    pub researchers: String,
    pub publications: String,
    pub authorships: String,
}

impl SynthCorpus {
    pub fn texts(&self) -> crate::ingest::InputTexts<'_> {
        crate::ingest::InputTexts {
            taxonomy: self.taxonomy.as_bytes(),
            researchers: self.researchers.as_bytes(),
            publications: self.publications.as_bytes(),
            authorships: self.authorships.as_bytes(),
        }
    }

    /// Writes the tables under their conventional names.
    pub fn write_to(&self, dir: &Path) -> Result<(), SynthError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| SynthError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        for (name, body) in [
            ("taxonomy.csv", &self.taxonomy),
            ("researchers.csv", &self.researchers),
            ("publications.csv", &self.publications),
            ("authorships.csv", &self.authorships),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(io(&path))?;
        }
        Ok(())
    }
}

struct Professor {
    id: String,
    field: usize,
    quality: f64,
    productivity: f64,
    ranks: BTreeMap<i32, Rank>,
}

struct Article {
    id: String,
    year: i32,
    citations: u64,
    author_count: u32,
    categories: Vec<String>,
    authors: Vec<usize>,
}

fn category_code(uda: usize, k: usize) -> String {
    format!("C{:02}{}", uda + 1, (b'a' + k as u8) as char)
}

fn pick_rank(rng: &mut ChaCha8Rng, mix: &[f64; 3]) -> Rank {
    let total: f64 = mix.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (rank, w) in Rank::ALL.iter().zip(mix) {
        if u < *w {
            return *rank;
        }
        u -= w;
    }
    Rank::Full
}

fn promote(rank: Rank) -> Rank {
    match rank {
        Rank::Assistant => Rank::Associate,
        _ => Rank::Full,
    }
}

fn csv_text<const N: usize>(header: [&str; N], rows: impl Iterator<Item = [String; N]>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn generate(params: &SynthParams) -> Result<SynthCorpus, SynthError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let years: Vec<i32> = (params.years.0..=params.years.1).collect();
    let n_fields = params.n_udas * params.n_fields_per_uda;
    let n_categories = params.n_udas * params.categories_per_uda;
    let all_categories: Vec<String> = (0..params.n_udas)
        .flat_map(|u| (0..params.categories_per_uda).map(move |k| category_code(u, k)))
        .collect();

    let mut taxonomy_rows = Vec::new();
    for f in 0..n_fields {
        let uda = f / params.n_fields_per_uda;
        taxonomy_rows.push([
            format!("U{:02}-F{:02}", uda + 1, f % params.n_fields_per_uda + 1),
            format!(
                "Field {:02}.{:02}",
                uda + 1,
                f % params.n_fields_per_uda + 1
            ),
            format!("U{:02}", uda + 1),
            format!("Discipline {:02}", uda + 1),
        ]);
    }

    let quality_dist = LogNormal::new(0.0, 0.6).expect("valid sigma");
    let productivity_dist = LogNormal::new(0.0, 0.4).expect("valid sigma");
    let mut intensity = Vec::with_capacity(n_fields);
    let mut professors: Vec<Professor> = Vec::new();
    for f in 0..n_fields {
        intensity.push(rng.gen_range(params.field_intensity.0..=params.field_intensity.1));
        let n = rng.gen_range(params.professors_per_field.0..=params.professors_per_field.1);
        for _ in 0..n {
            let active: Vec<i32> = if years.len() > 2 && rng.gen_bool(params.short_tenure_prob) {
                let start = rng.gen_range(0..=years.len() - 2);
                years[start..start + 2].to_vec()
            } else {
                years.clone()
            };
            let mut rank = pick_rank(&mut rng, &params.rank_mix);
            let mut ranks = BTreeMap::new();
            for y in active {
                ranks.insert(y, rank);
                if rng.gen_bool(params.promotion_prob) {
                    rank = promote(rank);
                }
            }
            professors.push(Professor {
                id: format!("R{:05}", professors.len() + 1),
                field: f,
                quality: quality_dist.sample(&mut rng),
                productivity: productivity_dist.sample(&mut rng),
                ranks,
            });
        }
    }

    // professors active in each (field, year), for co-author draws
    let mut active_by_field_year: BTreeMap<(usize, i32), Vec<usize>> = BTreeMap::new();
    let mut active_by_year: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, p) in professors.iter().enumerate() {
        for &y in p.ranks.keys() {
            active_by_field_year
                .entry((p.field, y))
                .or_default()
                .push(i);
            active_by_year.entry(y).or_default().push(i);
        }
    }

    let base_mu = params.citation_median.ln();
    let draw_citations = |rng: &mut ChaCha8Rng, quality: f64| -> u64 {
        if let Some(c) = params.constant_citations {
            return c;
        }
        let d =
            LogNormal::new(base_mu + quality.ln(), params.citation_sigma).expect("valid params");
        d.sample(rng).floor() as u64
    };

    let mut articles: Vec<Article> = Vec::new();
    for (i, prof) in professors.iter().enumerate() {
        let uda = prof.field / params.n_fields_per_uda;
        let home = category_code(uda, prof.field % params.categories_per_uda);
        for &year in prof.ranks.keys() {
            let lambda = params.pubs_per_professor_year * intensity[prof.field] * prof.productivity;
            let count = if lambda > 0.0 {
                Poisson::new(lambda)
                    .expect("positive rate")
                    .sample(&mut rng) as usize
            } else {
                0
            };
            for _ in 0..count {
                let mut authors = vec![i];
                if rng.gen_bool(params.coauthor_prob) {
                    let pool = if rng.gen_bool(params.cross_field_prob) {
                        &active_by_year[&year]
                    } else {
                        &active_by_field_year[&(prof.field, year)]
                    };
                    if let Some(&other) = pool.choose(&mut rng) {
                        if other != i {
                            authors.push(other);
                        }
                    }
                }
                let extra = rng.gen_range(params.extra_authors.0..=params.extra_authors.1);
                let n_cats = rng
                    .gen_range(params.categories_per_pub.0..=params.categories_per_pub.1)
                    .min(n_categories);
                let mut categories = vec![home.clone()];
                while categories.len() < n_cats {
                    let c = all_categories.choose(&mut rng).expect("categories exist");
                    if !categories.contains(c) {
                        categories.push(c.clone());
                    }
                }
                categories.sort();
                articles.push(Article {
                    id: format!("P{:06}", articles.len() + 1),
                    year,
                    citations: draw_citations(&mut rng, prof.quality),
                    author_count: authors.len() as u32 + extra,
                    categories,
                    authors,
                });
            }
        }
    }

    // world baseline, cell by cell
    let mut cells: BTreeMap<(i32, &str), (usize, u64)> = BTreeMap::new();
    for a in &articles {
        for c in &a.categories {
            let e = cells.entry((a.year, c.as_str())).or_default();
            e.0 += 1;
            e.1 = e.1.max(a.citations);
        }
    }
    let mut world: Vec<Article> = Vec::new();
    let mut world_id = 0usize;
    for (&(year, cat), &(roster, _)) in &cells {
        let n_base = (params.baseline_ratio * roster as f64).round() as usize;
        let mut top = cells[&(year, cat)].1;
        for _ in 0..n_base {
            world_id += 1;
            let citations = draw_citations(&mut rng, 1.0);
            top = top.max(citations);
            world.push(Article {
                id: format!("W{world_id:06}"),
                year,
                citations,
                author_count: 1 + rng.gen_range(params.extra_authors.0..=params.extra_authors.1),
                categories: vec![cat.to_string()],
                authors: vec![],
            });
        }
        let n_elite = ((1.0 - params.hca_fraction) * (roster + n_base) as f64).ceil() as usize;
        for _ in 0..n_elite {
            world_id += 1;
            world.push(Article {
                id: format!("W{world_id:06}"),
                year,
                citations: top + 1 + rng.gen_range(0..=top.max(1)),
                author_count: 1 + rng.gen_range(params.extra_authors.0..=params.extra_authors.1),
                categories: vec![cat.to_string()],
                authors: vec![],
            });
        }
    }

    let researchers = csv_text(
        ["researcher_id", "sds_code", "year", "rank"],
        professors.iter().flat_map(|p| {
            let sds = taxonomy_rows[p.field][0].clone();
            p.ranks
                .iter()
                .map(move |(y, r)| [p.id.clone(), sds.clone(), y.to_string(), r.to_string()])
        }),
    );
    let publications = csv_text(
        [
            "pub_id",
            "year",
            "citations",
            "author_count",
            "subject_categories",
        ],
        articles.iter().chain(&world).map(|a| {
            [
                a.id.clone(),
                a.year.to_string(),
                a.citations.to_string(),
                a.author_count.to_string(),
                a.categories.join(";"),
            ]
        }),
    );
    let professors = &professors;
    let authorships = csv_text(
        ["pub_id", "researcher_id"],
        articles.iter().flat_map(|a| {
            a.authors
                .iter()
                .map(move |&i| [a.id.clone(), professors[i].id.clone()])
        }),
    );
    let taxonomy = csv_text(
        ["sds_code", "sds_name", "uda_code", "uda_name"],
        taxonomy_rows.into_iter(),
    );
    Ok(SynthCorpus {
        taxonomy,
        researchers,
        publications,
        authorships,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_corpus;
    use crate::model::AnalysisConfig;

    fn small() -> SynthParams {
        SynthParams {
            n_udas: 2,
            n_fields_per_uda: 2,
            professors_per_field: (8, 12),
            ..Default::default()
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        assert_eq!(generate(&small()).unwrap(), generate(&small()).unwrap());
        let other = SynthParams { seed: 7, ..small() };
        assert_ne!(generate(&small()).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn output_validates() {
        let corpus = generate(&small()).unwrap();
        let c = parse_corpus(corpus.texts(), &AnalysisConfig::default()).unwrap();
        assert_eq!(c.taxonomy.sds_count(), 4);
        assert!(!c.publications.is_empty());
        assert!(!c.baseline.is_empty());
    }

    #[test]
    fn default_roster_size() {
        let p = SynthParams::default();
        let corpus = generate(&p).unwrap();
        let rows = corpus.researchers.lines().skip(1);
        let ids: std::collections::BTreeSet<&str> =
            rows.map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(ids.len(), 11 * 4 * 30);
    }

    #[test]
    fn single_field() {
        let p = SynthParams {
            n_udas: 1,
            n_fields_per_uda: 1,
            ..small()
        };
        let c = parse_corpus(generate(&p).unwrap().texts(), &AnalysisConfig::default()).unwrap();
        assert_eq!(c.taxonomy.sds_count(), 1);
    }

    #[test]
    fn rejects_bad_params() {
        for p in [
            SynthParams {
                n_udas: 0,
                ..small()
            },
            SynthParams {
                professors_per_field: (5, 4),
                ..small()
            },
            SynthParams {
                hca_fraction: 1.5,
                ..small()
            },
            SynthParams {
                years: (2016, 2012),
                ..small()
            },
        ] {
            assert!(matches!(generate(&p), Err(SynthError::InvalidParams(_))));
        }
    }
}
