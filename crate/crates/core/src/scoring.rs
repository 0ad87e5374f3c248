//! Per-researcher fractional scores and top-scientist detection.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hca::{fractional_value, HcaFlagSet};
use crate::ingest::Corpus;
use crate::model::{CostError, CostModel, Percentile, RescaleFallback};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoringError {
    #[error("cannot compute a fence over an empty score list")]
    EmptyScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResearcherScore {
    pub researcher_id: String,
    pub sds: String,
    /// Fractional HCA credit, one entry per configured percentile.
    pub fhca_scores: Vec<f64>,
    /// Fractional credit over all scored publications.
    pub frac_pub_output: f64,
    /// Research cost over the active years.
    pub cost: f64,
}

/// Scores every roster researcher, in researcher-id order. `flags` must be
/// ordered like the configured percentiles.
pub fn score_researchers(
    corpus: &Corpus,
    flags: &[HcaFlagSet],
    cost_model: &CostModel,
) -> Result<Vec<ResearcherScore>, CostError> {
    let by_researcher = corpus.publications_by_researcher();
    corpus
        .researchers
        .values()
        .map(|r| {
            let pubs = by_researcher.get(r.researcher_id.as_str());
            let mut fhca_scores = vec![0.0; flags.len()];
            let mut frac_pub_output = 0.0;
            for p in pubs.into_iter().flatten() {
                let credit = fractional_value(p.author_count);
                frac_pub_output += credit;
                for (score, set) in fhca_scores.iter_mut().zip(flags) {
                    if set.contains(&p.pub_id) {
                        *score += credit;
                    }
                }
            }
            Ok(ResearcherScore {
                researcher_id: r.researcher_id.clone(),
                sds: r.sds.clone(),
                fhca_scores,
                frac_pub_output,
                cost: cost_model.researcher_cost(r)?,
            })
        })
        .collect()
}

/// Box-plot upper fence `q3 + multiplier * iqr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TukeyFence {
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub threshold: f64,
}

/// Quantile of ascending data, interpolating linearly between the order
/// statistics around position `(n - 1) q`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn tukey_fence(scores: &[f64], multiplier: f64) -> Result<TukeyFence, ScoringError> {
    if scores.is_empty() {
        return Err(ScoringError::EmptyScores);
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    Ok(TukeyFence {
        q1,
        q3,
        iqr,
        threshold: q3 + multiplier * iqr,
    })
}

/// Researchers whose score lies strictly above the field's fence. The
/// slice must cover every professor of the field, zero scorers included.
pub fn detect_top_scientists(field_scores: &[(&str, f64)], multiplier: f64) -> BTreeSet<String> {
    let values: Vec<f64> = field_scores.iter().map(|(_, s)| *s).collect();
    let Ok(fence) = tukey_fence(&values, multiplier) else {
        return BTreeSet::new();
    };
    field_scores
        .iter()
        .filter(|(_, s)| *s > fence.threshold)
        .map(|(id, _)| id.to_string())
        .collect()
}

/// Where a field's rescaling denominator came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RescaleSource {
    Field,
    UdaFallback,
    NationalFallback,
    /// No top scientist anywhere; the indicator is reported as zero.
    Unavailable,
}

impl RescaleSource {
    pub fn as_str(self) -> &'static str {
        match self {
            RescaleSource::Field => "field",
            RescaleSource::UdaFallback => "uda_fallback",
            RescaleSource::NationalFallback => "national_fallback",
            RescaleSource::Unavailable => "unavailable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsOutputMean {
    pub value: Option<f64>,
    pub source: RescaleSource,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Mean fractional output of a field's top scientists, falling back to the
/// discipline's or the nation's top scientists when the field has none.
pub fn avg_ts_fractional_output(
    field_ts_outputs: &[f64],
    uda_ts_outputs: &[f64],
    national_ts_outputs: &[f64],
    fallback: RescaleFallback,
) -> TsOutputMean {
    if let Some(v) = mean(field_ts_outputs) {
        return TsOutputMean {
            value: Some(v),
            source: RescaleSource::Field,
        };
    }
    if fallback == RescaleFallback::UdaThenNational {
        if let Some(v) = mean(uda_ts_outputs) {
            return TsOutputMean {
                value: Some(v),
                source: RescaleSource::UdaFallback,
            };
        }
    }
    match mean(national_ts_outputs) {
        Some(v) => TsOutputMean {
            value: Some(v),
            source: RescaleSource::NationalFallback,
        },
        None => TsOutputMean {
            value: None,
            source: RescaleSource::Unavailable,
        },
    }
}

/// Top scientists of one field at one percentile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsDetection {
    pub p: Percentile,
    pub fence: TukeyFence,
    pub members: BTreeSet<String>,
}

/// Runs detection for every field (keyed by SDS code) and percentile.
pub fn detect_by_field(
    scores: &[ResearcherScore],
    percentiles: &[Percentile],
    multiplier: f64,
) -> BTreeMap<String, Vec<TsDetection>> {
    let mut by_field: BTreeMap<&str, Vec<&ResearcherScore>> = BTreeMap::new();
    for s in scores {
        by_field.entry(&s.sds).or_default().push(s);
    }
    by_field
        .into_iter()
        .map(|(sds, members)| {
            let detections = percentiles
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    let field_scores: Vec<(&str, f64)> = members
                        .iter()
                        .map(|s| (s.researcher_id.as_str(), s.fhca_scores[i]))
                        .collect();
                    let values: Vec<f64> = field_scores.iter().map(|(_, v)| *v).collect();
                    TsDetection {
                        p,
                        fence: tukey_fence(&values, multiplier).expect("field has professors"),
                        members: detect_top_scientists(&field_scores, multiplier),
                    }
                })
                .collect();
            (sds.to_string(), detections)
        })
        .collect()
}

/// `researcher_id,sds,p,fhca_score,frac_pub_output,is_ts`, full precision.
pub fn scores_csv(
    scores: &[ResearcherScore],
    percentiles: &[Percentile],
    detections: &BTreeMap<String, Vec<TsDetection>>,
) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "researcher_id",
        "sds",
        "p",
        "fhca_score",
        "frac_pub_output",
        "is_ts",
    ])
    .expect("in-memory write");
    for s in scores {
        for (i, p) in percentiles.iter().enumerate() {
            let is_ts = detections
                .get(&s.sds)
                .is_some_and(|d| d[i].members.contains(&s.researcher_id));
            w.write_record([
                s.researcher_id.clone(),
                s.sds.clone(),
                p.label(),
                s.fhca_scores[i].to_string(),
                s.frac_pub_output.to_string(),
                is_ts.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}
