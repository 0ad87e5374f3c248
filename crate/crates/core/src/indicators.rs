//! Field strength indicators and their cost-weighted discipline
//! aggregates.
//!
//! For a field with total research cost `C`:
//!
//! * `fss_ts   = scale * TS / C`, the count of top scientists per euro;
//! * `fss_fhca = scale * (FHCA / mean TS output) / C`, the field's
//!   fractional HCA total expressed in units of a typical top scientist's
//!   fractional output, per euro.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ingest::Corpus;
use crate::model::{AnalysisConfig, CostModel, Percentile, Rank};
use crate::scoring::{avg_ts_fractional_output, RescaleSource, ResearcherScore, TsDetection};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileIndicators {
    pub p: Percentile,
    pub ts_count: usize,
    pub fhca_total: f64,
    pub ts_output_mean: Option<f64>,
    pub rescale_source: RescaleSource,
    pub fhca_rescaled: f64,
    pub fss_ts: f64,
    pub fss_fhca: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldScoreboard {
    pub sds: String,
    pub sds_name: String,
    pub uda: String,
    pub n_professors: usize,
    /// Headcount by rank held in the last active year.
    pub rank_counts: BTreeMap<Rank, usize>,
    pub total_cost: f64,
    pub per_p: Vec<PercentileIndicators>,
}

impl FieldScoreboard {
    pub fn fss_ts(&self, i: usize) -> f64 {
        self.per_p[i].fss_ts
    }

    pub fn fss_fhca(&self, i: usize) -> f64 {
        self.per_p[i].fss_fhca
    }

    /// `fhca_5:uda_fallback;...` for every percentile not rescaled by the
    /// field's own top scientists.
    pub fn fallback_flags(&self) -> String {
        self.per_p
            .iter()
            .filter(|x| x.rescale_source != RescaleSource::Field)
            .map(|x| format!("fhca_{}:{}", x.p.label(), x.rescale_source.as_str()))
            .collect::<Vec<_>>()
            .join(";")
    }
}

pub fn fss_ts(ts_count: usize, total_cost: f64, reporting_scale: f64) -> f64 {
    reporting_scale * ts_count as f64 / total_cost
}

/// Zero when no rescaling denominator could be found.
pub fn fss_fhca(
    fhca_total: f64,
    ts_output_mean: Option<f64>,
    total_cost: f64,
    reporting_scale: f64,
) -> f64 {
    match ts_output_mean {
        Some(mean) if mean > 0.0 => reporting_scale * (fhca_total / mean) / total_cost,
        _ => 0.0,
    }
}

/// Output of [`build_scoreboards`]: one row per staffed field, plus notes
/// for fields left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scoreboards {
    pub percentiles: Vec<Percentile>,
    pub fields: Vec<FieldScoreboard>,
    pub notes: Vec<String>,
}

pub fn build_scoreboards(
    corpus: &Corpus,
    scores: &[ResearcherScore],
    detections: &BTreeMap<String, Vec<TsDetection>>,
    cost_model: &CostModel,
    analysis: &AnalysisConfig,
) -> Scoreboards {
    let percentiles = analysis.hca_percentiles.clone();
    let mut by_field: BTreeMap<&str, Vec<&ResearcherScore>> = BTreeMap::new();
    for s in scores {
        by_field.entry(&s.sds).or_default().push(s);
    }
    let output_of: BTreeMap<&str, f64> = scores
        .iter()
        .map(|s| (s.researcher_id.as_str(), s.frac_pub_output))
        .collect();

    // Top-scientist outputs pooled per discipline and nationally, per p.
    let mut uda_outputs: BTreeMap<(&str, usize), Vec<f64>> = BTreeMap::new();
    let mut national_outputs: Vec<Vec<f64>> = vec![Vec::new(); percentiles.len()];
    for (sds, dets) in detections {
        let uda = corpus.taxonomy.uda_of(sds).expect("validated field");
        for (i, det) in dets.iter().enumerate() {
            for id in &det.members {
                let out = output_of[id.as_str()];
                uda_outputs.entry((uda, i)).or_default().push(out);
                national_outputs[i].push(out);
            }
        }
    }

    let mut fields = Vec::new();
    let mut notes = Vec::new();
    for entry in corpus.taxonomy.sds_entries() {
        let Some(members) = by_field.get(entry.code.as_str()) else {
            notes.push(format!(
                "field {} has no professors and was excluded",
                entry.code
            ));
            continue;
        };
        let mut years_by_rank: BTreeMap<Rank, usize> = BTreeMap::new();
        for s in members {
            for (rank, n) in corpus.researchers[&s.researcher_id].years_by_rank() {
                *years_by_rank.entry(rank).or_default() += n;
            }
        }
        let total_cost = cost_model.cost_of_years(&years_by_rank).unwrap_or(0.0);
        if total_cost <= 0.0 {
            notes.push(format!(
                "field {} has zero research cost and was excluded",
                entry.code
            ));
            continue;
        }
        let mut rank_counts: BTreeMap<Rank, usize> = Rank::ALL.iter().map(|r| (*r, 0)).collect();
        for s in members {
            if let Some(rank) = corpus.researchers[&s.researcher_id].latest_rank() {
                *rank_counts.entry(rank).or_default() += 1;
            }
        }
        let dets = &detections[&entry.code];
        let per_p = percentiles
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let det = &dets[i];
                let fhca_total: f64 = members.iter().map(|s| s.fhca_scores[i]).sum();
                let field_outputs: Vec<f64> = det
                    .members
                    .iter()
                    .map(|id| output_of[id.as_str()])
                    .collect();
                let empty = Vec::new();
                let uda_pool = uda_outputs.get(&(entry.uda.as_str(), i)).unwrap_or(&empty);
                let mean = avg_ts_fractional_output(
                    &field_outputs,
                    uda_pool,
                    &national_outputs[i],
                    analysis.rescale_fallback,
                );
                let fhca_rescaled = match mean.value {
                    Some(m) if m > 0.0 => fhca_total / m,
                    _ => 0.0,
                };
                PercentileIndicators {
                    p,
                    ts_count: det.members.len(),
                    fhca_total,
                    ts_output_mean: mean.value,
                    rescale_source: mean.source,
                    fhca_rescaled,
                    fss_ts: fss_ts(det.members.len(), total_cost, cost_model.reporting_scale),
                    fss_fhca: fss_fhca(
                        fhca_total,
                        mean.value,
                        total_cost,
                        cost_model.reporting_scale,
                    ),
                }
            })
            .collect();
        fields.push(FieldScoreboard {
            sds: entry.code.clone(),
            sds_name: entry.name.clone(),
            uda: entry.uda.clone(),
            n_professors: members.len(),
            rank_counts,
            total_cost,
            per_p,
        });
    }
    Scoreboards {
        percentiles,
        fields,
        notes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisciplinePercentile {
    pub p: Percentile,
    pub ts_count: usize,
    /// Top scientists as a share of professors, in percent.
    pub ts_share: f64,
    pub fss_ts: f64,
    pub fss_fhca: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisciplineScoreboard {
    pub uda: String,
    pub uda_name: String,
    pub n_fields: usize,
    pub n_professors: usize,
    pub total_cost: f64,
    pub per_p: Vec<DisciplinePercentile>,
}

/// Cost-weighted mean, clamped to the member range so that rounding can
/// never push it outside.
fn weighted_mean(pairs: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let total: f64 = pairs.clone().map(|(w, _)| w).sum();
    let (lo, hi) = pairs
        .clone()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, v)| {
            (lo.min(v), hi.max(v))
        });
    let mean = pairs.map(|(w, v)| w * v).sum::<f64>() / total;
    mean.clamp(lo, hi)
}

/// Aggregates the given fields into one row, weighting each by its total
/// cost. `None` for an empty slice.
pub fn aggregate_uda(
    uda: &str,
    uda_name: &str,
    fields: &[&FieldScoreboard],
) -> Option<DisciplineScoreboard> {
    let first = fields.first()?;
    let n_professors: usize = fields.iter().map(|f| f.n_professors).sum();
    let total_cost: f64 = fields.iter().map(|f| f.total_cost).sum();
    let per_p = (0..first.per_p.len())
        .map(|i| {
            let ts_count: usize = fields.iter().map(|f| f.per_p[i].ts_count).sum();
            DisciplinePercentile {
                p: first.per_p[i].p,
                ts_count,
                ts_share: 100.0 * ts_count as f64 / n_professors as f64,
                fss_ts: weighted_mean(fields.iter().map(|f| (f.total_cost, f.fss_ts(i)))),
                fss_fhca: weighted_mean(fields.iter().map(|f| (f.total_cost, f.fss_fhca(i)))),
            }
        })
        .collect();
    Some(DisciplineScoreboard {
        uda: uda.to_string(),
        uda_name: uda_name.to_string(),
        n_fields: fields.len(),
        n_professors,
        total_cost,
        per_p,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisciplineTable {
    pub percentiles: Vec<Percentile>,
    pub rows: Vec<DisciplineScoreboard>,
    pub overall: Option<DisciplineScoreboard>,
}

/// One row per discipline in code order, plus the national aggregate.
pub fn aggregate_disciplines(boards: &Scoreboards, corpus: &Corpus) -> DisciplineTable {
    let mut by_uda: BTreeMap<&str, Vec<&FieldScoreboard>> = BTreeMap::new();
    for f in &boards.fields {
        by_uda.entry(&f.uda).or_default().push(f);
    }
    let rows = by_uda
        .iter()
        .filter_map(|(uda, fields)| {
            aggregate_uda(
                uda,
                corpus.taxonomy.uda_name(uda).unwrap_or_default(),
                fields,
            )
        })
        .collect();
    let all: Vec<&FieldScoreboard> = boards.fields.iter().collect();
    DisciplineTable {
        percentiles: boards.percentiles.clone(),
        rows,
        overall: aggregate_uda("ALL", "Overall", &all),
    }
}

/// `scoreboard.csv` with full-precision values.
pub fn scoreboard_csv(boards: &Scoreboards) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "sds".to_string(),
        "uda".into(),
        "n_professors".into(),
        "total_cost".into(),
    ];
    for prefix in ["ts", "fss_ts", "fss_fhca"] {
        for p in &boards.percentiles {
            header.push(format!("{prefix}_{}", p.label()));
        }
    }
    header.push("fallback_flags".into());
    w.write_record(&header).expect("in-memory write");
    for f in &boards.fields {
        let mut row = vec![
            f.sds.clone(),
            f.uda.clone(),
            f.n_professors.to_string(),
            f.total_cost.to_string(),
        ];
        row.extend(f.per_p.iter().map(|x| x.ts_count.to_string()));
        row.extend(f.per_p.iter().map(|x| x.fss_ts.to_string()));
        row.extend(f.per_p.iter().map(|x| x.fss_fhca.to_string()));
        row.push(f.fallback_flags());
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(sds: &str, cost: f64, profs: usize, fss: &[(f64, f64, usize)]) -> FieldScoreboard {
        FieldScoreboard {
            sds: sds.into(),
            sds_name: sds.into(),
            uda: "U".into(),
            n_professors: profs,
            rank_counts: BTreeMap::new(),
            total_cost: cost,
            per_p: fss
                .iter()
                .map(|&(t, h, n)| PercentileIndicators {
                    p: Percentile(5.0),
                    ts_count: n,
                    fhca_total: 0.0,
                    ts_output_mean: None,
                    rescale_source: RescaleSource::Field,
                    fhca_rescaled: 0.0,
                    fss_ts: t,
                    fss_fhca: h,
                })
                .collect(),
        }
    }

    #[test]
    fn fss_ts_values() {
        assert_eq!(fss_ts(0, 700070.0, 1e8), 0.0);
        assert!((fss_ts(2, 700070.0, 1e8) - 285.6857).abs() < 1e-4);
        assert_eq!(fss_ts(2, 1400140.0, 1e8) * 2.0, fss_ts(2, 700070.0, 1e8));
    }

    #[test]
    fn fss_fhca_values() {
        assert_eq!(fss_fhca(0.0, Some(3.0), 5e5, 1e8), 0.0);
        assert!((fss_fhca(1.5, Some(3.0), 5e5, 1e8) - 100.0).abs() < 1e-12);
        assert_eq!(fss_fhca(1.5, None, 5e5, 1e8), 0.0);
        // doubling both FHCAs and TS output leaves the indicator unchanged
        assert_eq!(
            fss_fhca(1.5, Some(3.0), 5e5, 1e8),
            fss_fhca(3.0, Some(6.0), 5e5, 1e8)
        );
    }

    #[test]
    fn single_field_discipline_equals_field() {
        let f = field("A", 1e6, 10, &[(4.0, 7.0, 2)]);
        let d = aggregate_uda("U", "Disc", &[&f]).unwrap();
        assert_eq!(d.per_p[0].fss_ts, 4.0);
        assert_eq!(d.per_p[0].fss_fhca, 7.0);
        assert_eq!(d.per_p[0].ts_share, 20.0);
    }

    #[test]
    fn equal_cost_fields_average() {
        let a = field("A", 1e6, 10, &[(4.0, 1.0, 1)]);
        let b = field("B", 1e6, 30, &[(8.0, 3.0, 3)]);
        let d = aggregate_uda("U", "Disc", &[&a, &b]).unwrap();
        assert_eq!(d.per_p[0].fss_ts, 6.0);
        assert_eq!(d.per_p[0].ts_count, 4);
        assert_eq!(d.per_p[0].ts_share, 10.0);
        assert!(aggregate_uda("U", "Disc", &[]).is_none());
    }

    #[test]
    fn weighted_mean_stays_in_range() {
        let v = 5.53;
        let fields: Vec<FieldScoreboard> = (0..7)
            .map(|i| field(&i.to_string(), 1234.5 * (i as f64 + 0.3), 3, &[(v, v, 0)]))
            .collect();
        let refs: Vec<&FieldScoreboard> = fields.iter().collect();
        let d = aggregate_uda("U", "Disc", &refs).unwrap();
        assert_eq!(d.per_p[0].fss_ts, v);
    }
}
