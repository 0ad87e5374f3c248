//! Domain types: field taxonomy, researcher rosters, the labor + capital
//! cost model and the analysis configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Academic rank held by a professor at the close of a year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rank {
    Assistant,
    Associate,
    Full,
}

impl Rank {
    pub const ALL: [Rank; 3] = [Rank::Assistant, Rank::Associate, Rank::Full];

    pub fn as_str(self) -> &'static str {
        match self {
            Rank::Assistant => "assistant",
            Rank::Associate => "associate",
            Rank::Full => "full",
        }
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rank {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "assistant" => Ok(Rank::Assistant),
            "associate" => Ok(Rank::Associate),
            "full" => Ok(Rank::Full),
            other => Err(format!("unknown rank `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SdsEntry {
    pub code: String,
    pub name: String,
    pub uda: String,
}

/// Two-level field classification: fine-grained fields (SDS) grouped into
/// disciplines (UDA). Both maps are keyed by code.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    sds: BTreeMap<String, SdsEntry>,
    udas: BTreeMap<String, String>,
}

impl Taxonomy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a discipline. Re-registering the same code with the same
    /// name is a no-op; a different name is rejected.
    pub fn add_uda(&mut self, code: &str, name: &str) -> Result<(), String> {
        match self.udas.get(code) {
            Some(existing) if existing != name => Err(format!(
                "discipline `{code}` declared with conflicting names `{existing}` and `{name}`"
            )),
            Some(_) => Ok(()),
            None => {
                self.udas.insert(code.to_string(), name.to_string());
                Ok(())
            }
        }
    }

    pub fn add_sds(&mut self, code: &str, name: &str, uda: &str) -> Result<(), String> {
        if self.sds.contains_key(code) {
            return Err(format!("duplicate field code `{code}`"));
        }
        if !self.udas.contains_key(uda) {
            return Err(format!(
                "field `{code}` references unknown discipline `{uda}`"
            ));
        }
        self.sds.insert(
            code.to_string(),
            SdsEntry {
                code: code.to_string(),
                name: name.to_string(),
                uda: uda.to_string(),
            },
        );
        Ok(())
    }

    pub fn sds(&self, code: &str) -> Option<&SdsEntry> {
        self.sds.get(code)
    }

    pub fn uda_of(&self, sds: &str) -> Option<&str> {
        self.sds.get(sds).map(|e| e.uda.as_str())
    }

    pub fn uda_name(&self, uda: &str) -> Option<&str> {
        self.udas.get(uda).map(String::as_str)
    }

    /// Fields in code order.
    pub fn sds_entries(&self) -> impl Iterator<Item = &SdsEntry> {
        self.sds.values()
    }

    /// Disciplines as `(code, name)` in code order.
    pub fn uda_entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.udas.iter().map(|(c, n)| (c.as_str(), n.as_str()))
    }

    pub fn sds_count(&self) -> usize {
        self.sds.len()
    }
}

/// One professor on the roster, with the rank held in each active year.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResearcherRecord {
    pub researcher_id: String,
    pub sds: String,
    pub rank_by_year: BTreeMap<i32, Rank>,
}

impl ResearcherRecord {
    pub fn active_years(&self) -> BTreeSet<i32> {
        self.rank_by_year.keys().copied().collect()
    }

    pub fn years_active(&self) -> usize {
        self.rank_by_year.len()
    }

    pub fn years_by_rank(&self) -> BTreeMap<Rank, usize> {
        let mut counts = BTreeMap::new();
        for &rank in self.rank_by_year.values() {
            *counts.entry(rank).or_default() += 1;
        }
        counts
    }

    /// Rank held in the last active year, used for headcount tables.
    pub fn latest_rank(&self) -> Option<Rank> {
        self.rank_by_year.values().next_back().copied()
    }
}

fn default_salary() -> BTreeMap<Rank, f64> {
    BTreeMap::from([
        (Rank::Assistant, 54628.0),
        (Rank::Associate, 66821.0),
        (Rank::Full, 101301.0),
    ])
}

fn default_capital() -> f64 {
    42693.0
}

fn default_time_share() -> f64 {
    0.5
}

fn default_reporting_scale() -> f64 {
    1e8
}

/// Yearly production-factor costs per professor. Only the research share of
/// salary is charged; capital is the same for every rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    #[serde(default = "default_salary")]
    pub salary: BTreeMap<Rank, f64>,
    #[serde(default = "default_capital")]
    pub capital: f64,
    #[serde(default = "default_time_share")]
    pub research_time_share: f64,
    #[serde(default = "default_reporting_scale")]
    pub reporting_scale: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            salary: default_salary(),
            capital: default_capital(),
            research_time_share: default_time_share(),
            reporting_scale: default_reporting_scale(),
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for rank in Rank::ALL {
            match self.salary.get(&rank) {
                None => return Err(ConfigError::UnknownRank(rank.to_string())),
                Some(w) if !(w.is_finite() && *w > 0.0) => {
                    return Err(ConfigError::Invalid(format!(
                        "salary for {rank} must be > 0, got {w}"
                    )))
                }
                Some(_) => {}
            }
        }
        if !(self.capital.is_finite() && self.capital > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "capital must be > 0, got {}",
                self.capital
            )));
        }
        if !(self.research_time_share > 0.0 && self.research_time_share <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "research_time_share must lie in (0, 1], got {}",
                self.research_time_share
            )));
        }
        if !(self.reporting_scale.is_finite() && self.reporting_scale > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "reporting_scale must be > 0, got {}",
                self.reporting_scale
            )));
        }
        Ok(())
    }

    /// Research cost of one professor-year at `rank`: the research share of
    /// salary plus capital. Kept at full precision.
    pub fn cost_per_year(&self, rank: Rank) -> Result<f64, ConfigError> {
        let salary = self
            .salary
            .get(&rank)
            .ok_or_else(|| ConfigError::UnknownRank(rank.to_string()))?;
        Ok(salary * self.research_time_share + self.capital)
    }

    /// Cost of `rank` relative to an assistant professor.
    pub fn normalization_factor(&self, rank: Rank) -> Result<f64, ConfigError> {
        let base = self.cost_per_year(Rank::Assistant)?;
        if base <= 0.0 {
            return Err(ConfigError::Invalid(
                "assistant cost must be positive".into(),
            ));
        }
        Ok(self.cost_per_year(rank)? / base)
    }

    /// Cost of a number of professor-years at each rank. Grouping by rank
    /// makes the result independent of the order the years were listed in.
    pub fn cost_of_years(&self, years_by_rank: &BTreeMap<Rank, usize>) -> Result<f64, ConfigError> {
        let mut total = 0.0;
        for (&rank, &years) in years_by_rank {
            total += years as f64 * self.cost_per_year(rank)?;
        }
        Ok(total)
    }

    /// Total research cost of a professor over the window, resolving the
    /// rank year by year.
    pub fn researcher_cost(&self, researcher: &ResearcherRecord) -> Result<f64, CostError> {
        if researcher.rank_by_year.is_empty() {
            return Err(CostError::NoActiveYears(researcher.researcher_id.clone()));
        }
        self.cost_of_years(&researcher.years_by_rank())
            .map_err(CostError::Config)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CostError {
    #[error("researcher `{0}` has no active years")]
    NoActiveYears(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// What to divide a field's FHCA total by when the field has no top
/// scientist of its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RescaleFallback {
    #[default]
    UdaThenNational,
    NationalOnly,
}

/// A top-p% citation threshold, in percent.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Percentile(pub f64);

impl Percentile {
    pub fn value(self) -> f64 {
        self.0
    }

    /// Short label for column names: `5`, `10`, `2.5`.
    pub fn label(self) -> String {
        if self.0.fract() == 0.0 {
            format!("{}", self.0 as i64)
        } else {
            format!("{}", self.0)
        }
    }
}

impl fmt::Display for Percentile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}%", self.label())
    }
}

fn default_start_year() -> i32 {
    2012
}
fn default_end_year() -> i32 {
    2016
}
fn default_percentiles() -> Vec<Percentile> {
    vec![Percentile(5.0), Percentile(10.0)]
}
fn default_min_years() -> usize {
    3
}
fn default_census_date() -> String {
    "2018-10-30".to_string()
}
fn default_fence_multiplier() -> f64 {
    1.5
}
fn default_top_k() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_start_year")]
    pub start_year: i32,
    #[serde(default = "default_end_year")]
    pub end_year: i32,
    #[serde(default = "default_percentiles")]
    pub hca_percentiles: Vec<Percentile>,
    #[serde(default = "default_min_years")]
    pub min_years: usize,
    /// Date citations were counted. Metadata only.
    #[serde(default = "default_census_date")]
    pub census_date: String,
    #[serde(default = "default_fence_multiplier")]
    pub ts_fence_multiplier: f64,
    #[serde(default)]
    pub rescale_fallback: RescaleFallback,
    /// When set, publications without a roster author are left out of the
    /// citation cells as well as out of scoring.
    #[serde(default)]
    pub roster_only_baseline: bool,
    /// Length of the top/bottom lists in the field reports.
    #[serde(default = "default_top_k")]
    pub top_k: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            start_year: default_start_year(),
            end_year: default_end_year(),
            hca_percentiles: default_percentiles(),
            min_years: default_min_years(),
            census_date: default_census_date(),
            ts_fence_multiplier: default_fence_multiplier(),
            rescale_fallback: RescaleFallback::default(),
            roster_only_baseline: false,
            top_k: default_top_k(),
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.start_year > self.end_year {
            return Err(ConfigError::Invalid(format!(
                "window start {} is after end {}",
                self.start_year, self.end_year
            )));
        }
        if self.hca_percentiles.is_empty() {
            return Err(ConfigError::Invalid(
                "hca_percentiles must not be empty".into(),
            ));
        }
        for p in &self.hca_percentiles {
            if !(p.0 > 0.0 && p.0 < 100.0) {
                return Err(ConfigError::Invalid(format!(
                    "percentile {} outside (0, 100)",
                    p.0
                )));
            }
        }
        for pair in self.hca_percentiles.windows(2) {
            if pair[0].0 >= pair[1].0 {
                return Err(ConfigError::Invalid(
                    "hca_percentiles must be strictly increasing".into(),
                ));
            }
        }
        if !(self.ts_fence_multiplier >= 0.0 && self.ts_fence_multiplier.is_finite()) {
            return Err(ConfigError::Invalid(format!(
                "ts_fence_multiplier must be >= 0, got {}",
                self.ts_fence_multiplier
            )));
        }
        if !is_iso_date(&self.census_date) {
            return Err(ConfigError::Invalid(format!(
                "census_date `{}` is not YYYY-MM-DD",
                self.census_date
            )));
        }
        Ok(())
    }

    pub fn contains_year(&self, year: i32) -> bool {
        (self.start_year..=self.end_year).contains(&year)
    }
}

fn is_iso_date(s: &str) -> bool {
    let parts: Vec<&str> = s.split('-').collect();
    if parts.len() != 3 || parts[0].len() != 4 || parts[1].len() != 2 || parts[2].len() != 2 {
        return false;
    }
    let nums: Option<Vec<u32>> = parts.iter().map(|p| p.parse().ok()).collect();
    matches!(nums.as_deref(), Some([_, m, d]) if (1..=12).contains(m) && (1..=31).contains(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn researcher(years: &[(i32, Rank)]) -> ResearcherRecord {
        ResearcherRecord {
            researcher_id: "r1".into(),
            sds: "S1".into(),
            rank_by_year: years.iter().copied().collect(),
        }
    }

    #[test]
    fn yearly_costs_match_rank_table() {
        let m = CostModel::default();
        assert_eq!(m.cost_per_year(Rank::Assistant).unwrap(), 70007.0);
        assert_eq!(m.cost_per_year(Rank::Associate).unwrap(), 76103.5);
        assert_eq!(m.cost_per_year(Rank::Full).unwrap(), 93343.5);
    }

    #[test]
    fn zero_salary_leaves_capital() {
        let m = CostModel {
            salary: BTreeMap::from([(Rank::Full, 0.0)]),
            research_time_share: 1.0,
            ..CostModel::default()
        };
        assert_eq!(m.cost_per_year(Rank::Full).unwrap(), 42693.0);
    }

    #[test]
    fn missing_rank_is_config_error() {
        let mut m = CostModel::default();
        m.salary.remove(&Rank::Associate);
        assert!(matches!(
            m.cost_per_year(Rank::Associate),
            Err(ConfigError::UnknownRank(_))
        ));
        assert!(m.validate().is_err());
    }

    #[test]
    fn normalization_factors() {
        let m = CostModel::default();
        assert_eq!(m.normalization_factor(Rank::Assistant).unwrap(), 1.0);
        let assoc = m.normalization_factor(Rank::Associate).unwrap();
        assert!((assoc - 76103.5 / 70007.0).abs() < 1e-15);
        assert!((assoc - 1.0871).abs() < 5e-5);
        let full = m.normalization_factor(Rank::Full).unwrap();
        assert_eq!(full, 93343.5 / 70007.0);
        assert!((full - 1.3334).abs() < 1e-4);
    }

    #[test]
    fn researcher_cost_sums_years() {
        let m = CostModel::default();
        let five = researcher(&[
            (2012, Rank::Assistant),
            (2013, Rank::Assistant),
            (2014, Rank::Assistant),
            (2015, Rank::Assistant),
            (2016, Rank::Assistant),
        ]);
        assert_eq!(m.researcher_cost(&five).unwrap(), 350035.0);

        let promoted = researcher(&[
            (2012, Rank::Assistant),
            (2013, Rank::Assistant),
            (2014, Rank::Assistant),
            (2015, Rank::Associate),
            (2016, Rank::Associate),
        ]);
        assert_eq!(m.researcher_cost(&promoted).unwrap(), 362228.0);

        let idle = researcher(&[]);
        assert!(matches!(
            m.researcher_cost(&idle),
            Err(CostError::NoActiveYears(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(AnalysisConfig::default().validate().is_ok());
        let bad = AnalysisConfig {
            start_year: 2017,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = AnalysisConfig {
            hca_percentiles: vec![Percentile(0.0)],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = AnalysisConfig {
            ts_fence_multiplier: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = AnalysisConfig {
            census_date: "30/10/2018".into(),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = CostModel {
            research_time_share: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn taxonomy_rejects_orphans_and_duplicates() {
        let mut t = Taxonomy::new();
        t.add_uda("U1", "Physics").unwrap();
        assert!(t.add_uda("U1", "Chemistry").is_err());
        t.add_sds("S1", "Optics", "U1").unwrap();
        assert!(t.add_sds("S1", "Optics", "U1").is_err());
        assert!(t.add_sds("S2", "Orphan", "U9").is_err());
        assert_eq!(t.uda_of("S1"), Some("U1"));
    }

    #[test]
    fn percentile_labels() {
        assert_eq!(Percentile(5.0).label(), "5");
        assert_eq!(Percentile(2.5).label(), "2.5");
    }
}
