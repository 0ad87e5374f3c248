//! Rankings, rank correlations, median quadrants and average-rank lists
//! over the per-field indicator columns.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicators::Scoreboards;
use crate::model::Percentile;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("rankings `{0}` and `{1}` cover different fields")]
    FieldMismatch(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorKind {
    FssTs,
    FssFhca,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorId {
    pub kind: IndicatorKind,
    pub p: Percentile,
    /// Position of `p` in the configured percentile list.
    pub p_index: usize,
}

impl IndicatorId {
    pub fn name(&self) -> String {
        match self.kind {
            IndicatorKind::FssTs => format!("fss_ts_{}", self.p.label()),
            IndicatorKind::FssFhca => format!("fss_fhca_{}", self.p.label()),
        }
    }

    /// All indicators for the given percentiles: every `fss_ts` column
    /// first, then every `fss_fhca` column.
    pub fn all(percentiles: &[Percentile]) -> Vec<IndicatorId> {
        [IndicatorKind::FssTs, IndicatorKind::FssFhca]
            .into_iter()
            .flat_map(|kind| {
                percentiles
                    .iter()
                    .enumerate()
                    .map(move |(p_index, &p)| IndicatorId { kind, p, p_index })
            })
            .collect()
    }

    pub fn value(&self, boards: &Scoreboards, field: usize) -> f64 {
        let f = &boards.fields[field];
        match self.kind {
            IndicatorKind::FssTs => f.fss_ts(self.p_index),
            IndicatorKind::FssFhca => f.fss_fhca(self.p_index),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedField {
    pub sds: String,
    pub value: f64,
    pub rank: f64,
}

/// Fields sorted by descending value, ties broken by field code for
/// display; tied values share their mean rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorRanking {
    pub indicator: String,
    pub ranked: Vec<RankedField>,
}

impl IndicatorRanking {
    pub fn rank_map(&self) -> BTreeMap<&str, f64> {
        self.ranked
            .iter()
            .map(|r| (r.sds.as_str(), r.rank))
            .collect()
    }
}

/// Descending fractional ranks: rank 1 is the largest value; a run of `m`
/// equal values starting at position `k` gets `k + (m - 1) / 2`.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let mean_rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean_rank;
        }
        start = end;
    }
    ranks
}

pub fn rank_indicator(values: &[(String, f64)], indicator: &str) -> IndicatorRanking {
    let just_values: Vec<f64> = values.iter().map(|(_, v)| *v).collect();
    let ranks = fractional_ranks(&just_values);
    let mut ranked: Vec<RankedField> = values
        .iter()
        .zip(ranks)
        .map(|((sds, value), rank)| RankedField {
            sds: sds.clone(),
            value: *value,
            rank,
        })
        .collect();
    ranked.sort_by(|a, b| b.value.total_cmp(&a.value).then_with(|| a.sds.cmp(&b.sds)));
    IndicatorRanking {
        indicator: indicator.to_string(),
        ranked,
    }
}

/// Pearson correlation; `None` with fewer than two points or no variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman correlation of two rankings over the same fields.
pub fn spearman(x: &IndicatorRanking, y: &IndicatorRanking) -> Result<Option<f64>, AnalyticsError> {
    let (rx, ry) = (x.rank_map(), y.rank_map());
    if rx.len() != ry.len() || rx.keys().zip(ry.keys()).any(|(a, b)| a != b) {
        return Err(AnalyticsError::FieldMismatch(
            x.indicator.clone(),
            y.indicator.clone(),
        ));
    }
    let a: Vec<f64> = rx.values().copied().collect();
    let b: Vec<f64> = ry.values().copied().collect();
    Ok(pearson(&a, &b))
}

/// Symmetric matrix of Spearman coefficients; `None` entries are undefined
/// (too few fields or a constant column).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub indicators: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

pub fn correlation_matrix(
    rankings: &[IndicatorRanking],
) -> Result<CorrelationMatrix, AnalyticsError> {
    let n = rankings.len();
    let mut values = vec![vec![None; n]; n];
    for i in 0..n {
        for j in i..n {
            let r = spearman(&rankings[i], &rankings[j])?;
            let r = if i == j { r.map(|_| 1.0) } else { r };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        indicators: rankings.iter().map(|r| r.indicator.clone()).collect(),
        values,
    })
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantSets {
    pub p: Percentile,
    pub fss_ts_median: f64,
    pub fss_fhca_median: f64,
    /// Strictly above both medians.
    pub high_high: BTreeSet<String>,
    /// Strictly below both medians.
    pub low_low: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantResult {
    pub per_p: Vec<QuadrantSets>,
    pub strong_union: BTreeSet<String>,
    pub weak_union: BTreeSet<String>,
    /// High-high at one percentile and low-low at another; kept out of
    /// both unions.
    pub conflicting: BTreeSet<String>,
}

pub fn quadrant_classify(boards: &Scoreboards) -> QuadrantResult {
    let mut per_p = Vec::new();
    for (i, &p) in boards.percentiles.iter().enumerate() {
        let ts: Vec<f64> = boards.fields.iter().map(|f| f.fss_ts(i)).collect();
        let fh: Vec<f64> = boards.fields.iter().map(|f| f.fss_fhca(i)).collect();
        let (Some(mt), Some(mf)) = (median(&ts), median(&fh)) else {
            continue;
        };
        let mut sets = QuadrantSets {
            p,
            fss_ts_median: mt,
            fss_fhca_median: mf,
            high_high: BTreeSet::new(),
            low_low: BTreeSet::new(),
        };
        for (k, f) in boards.fields.iter().enumerate() {
            if ts[k] > mt && fh[k] > mf {
                sets.high_high.insert(f.sds.clone());
            } else if ts[k] < mt && fh[k] < mf {
                sets.low_low.insert(f.sds.clone());
            }
        }
        per_p.push(sets);
    }
    let strong: BTreeSet<String> = per_p
        .iter()
        .flat_map(|s| s.high_high.iter().cloned())
        .collect();
    let weak: BTreeSet<String> = per_p
        .iter()
        .flat_map(|s| s.low_low.iter().cloned())
        .collect();
    let conflicting: BTreeSet<String> = strong.intersection(&weak).cloned().collect();
    QuadrantResult {
        per_p,
        strong_union: strong.difference(&conflicting).cloned().collect(),
        weak_union: weak.difference(&conflicting).cloned().collect(),
        conflicting,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageRankEntry {
    pub sds: String,
    /// One rank per indicator, in ranking order.
    pub ranks: Vec<f64>,
    pub average: f64,
    /// 1-based position in the ascending order of averages.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageRankExtremes {
    pub indicators: Vec<String>,
    pub top: Vec<AverageRankEntry>,
    /// The last `k` entries, still in ascending order of average rank.
    pub bottom: Vec<AverageRankEntry>,
    pub note: Option<String>,
}

pub fn average_rank_extremes(
    rankings: &[IndicatorRanking],
    k: usize,
) -> Result<AverageRankExtremes, AnalyticsError> {
    let maps: Vec<BTreeMap<&str, f64>> = rankings.iter().map(IndicatorRanking::rank_map).collect();
    if let Some(first) = maps.first() {
        for (m, r) in maps.iter().zip(rankings).skip(1) {
            if m.len() != first.len() || m.keys().zip(first.keys()).any(|(a, b)| a != b) {
                return Err(AnalyticsError::FieldMismatch(
                    rankings[0].indicator.clone(),
                    r.indicator.clone(),
                ));
            }
        }
    }
    let mut entries: Vec<AverageRankEntry> = maps
        .first()
        .map(|first| {
            first
                .keys()
                .map(|sds| {
                    let ranks: Vec<f64> = maps.iter().map(|m| m[sds]).collect();
                    let average = ranks.iter().sum::<f64>() / ranks.len() as f64;
                    AverageRankEntry {
                        sds: sds.to_string(),
                        ranks,
                        average,
                        position: 0,
                    }
                })
                .collect()
        })
        .unwrap_or_default();
    entries.sort_by(|a, b| {
        a.average
            .total_cmp(&b.average)
            .then_with(|| a.sds.cmp(&b.sds))
    });
    for (i, e) in entries.iter_mut().enumerate() {
        e.position = i + 1;
    }
    let n = entries.len();
    let note = (k > n).then(|| format!("requested {k} entries but only {n} fields are ranked"));
    let k = k.min(n);
    Ok(AverageRankExtremes {
        indicators: rankings.iter().map(|r| r.indicator.clone()).collect(),
        top: entries[..k].to_vec(),
        bottom: entries[n - k..].to_vec(),
        note,
    })
}

/// Top and bottom `k` of one ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingExtremes {
    pub indicator: String,
    pub top: Vec<RankedField>,
    pub bottom: Vec<RankedField>,
}

impl IndicatorRanking {
    pub fn extremes(&self, k: usize) -> RankingExtremes {
        let k = k.min(self.ranked.len());
        RankingExtremes {
            indicator: self.indicator.clone(),
            top: self.ranked[..k].to_vec(),
            bottom: self.ranked[self.ranked.len() - k..].to_vec(),
        }
    }
}

/// Everything derived from the final scoreboard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analytics {
    pub rankings: Vec<IndicatorRanking>,
    pub correlations: CorrelationMatrix,
    pub quadrants: QuadrantResult,
    pub average_rank: AverageRankExtremes,
    pub extremes: Vec<RankingExtremes>,
}

pub fn analyze(boards: &Scoreboards, top_k: usize) -> Result<Analytics, AnalyticsError> {
    let rankings: Vec<IndicatorRanking> = IndicatorId::all(&boards.percentiles)
        .iter()
        .map(|id| {
            let values: Vec<(String, f64)> = (0..boards.fields.len())
                .map(|i| (boards.fields[i].sds.clone(), id.value(boards, i)))
                .collect();
            rank_indicator(&values, &id.name())
        })
        .collect();
    Ok(Analytics {
        correlations: correlation_matrix(&rankings)?,
        quadrants: quadrant_classify(boards),
        average_rank: average_rank_extremes(&rankings, top_k)?,
        extremes: rankings.iter().map(|r| r.extremes(top_k)).collect(),
        rankings,
    })
}
