//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each and exits non-zero if any failed.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use fss_core::analytics::{rank_indicator, spearman};
use fss_core::hca::{flag_hcas, CitationCell};
use fss_core::ingest::InputTexts;
use fss_core::oracle::{oracle_quartiles, oracle_spearman, oracle_top_p};
use fss_core::pipeline::{run_on_texts, run_to_dir, PipelineOutput};
use fss_core::reporting::{tables, Cell, Format};
use fss_core::scoring::{detect_top_scientists, tukey_fence};
use fss_core::synth::{generate, SynthCorpus, SynthParams};
use fss_core::{Config, CostModel, InputPaths, Percentile, Rank};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn within(budget: Duration, started: Instant, what: &str) -> Outcome {
    let took = started.elapsed();
    ensure!(took < budget, "{what} took {took:?}, budget {budget:?}");
    Ok(())
}

fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn default_corpus() -> SynthCorpus {
    generate(&SynthParams::default()).expect("default params are valid")
}

fn run(texts: InputTexts<'_>, config: &Config) -> PipelineOutput {
    run_on_texts(texts, config).expect("pipeline runs")
}

fn cost_model_reproduction() -> Outcome {
    let started = Instant::now();
    let model = CostModel::default();
    for (rank, exact, printed) in [
        (Rank::Assistant, 70007.0, 70007.0),
        (Rank::Associate, 76103.5, 76104.0),
        (Rank::Full, 93343.5, 93344.0),
    ] {
        let c = model.cost_per_year(rank).map_err(|e| e.to_string())?;
        ensure!(c == exact, "{rank}: got {c}, expected {exact}");
        ensure!(
            (c - printed).abs() <= 0.5,
            "{rank}: {c} is more than 0.5 from {printed}"
        );
    }
    within(Duration::from_secs(1), started, "cost reproduction")
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let percentiles = [1.0, 2.5, 5.0, 10.0, 25.0, 50.0];

    for case in 0..1000 {
        let size = rng.gen_range(1..=200);
        let members: Vec<(String, u64)> = (0..size)
            .map(|i| (format!("p{i:04}"), rng.gen_range(0..=50)))
            .collect();
        let p = percentiles[rng.gen_range(0..percentiles.len())];
        let cell = CitationCell {
            year: 2014,
            category: "X".into(),
            members: members.clone(),
        };
        let engine = flag_hcas(&[cell], Percentile(p)).flagged;
        let oracle = oracle_top_p(&members, p);
        ensure!(
            engine == oracle,
            "flags differ on case {case} (size {size}, p {p})"
        );
    }

    for case in 0..1000 {
        let size = rng.gen_range(1..=500);
        let zero_share: f64 = rng.gen();
        let v: Vec<f64> = (0..size)
            .map(|_| {
                if rng.gen::<f64>() < zero_share {
                    0.0
                } else {
                    rng.gen_range(0.0..10.0)
                }
            })
            .collect();
        let fence = tukey_fence(&v, 1.5).map_err(|e| e.to_string())?;
        let (q1, q3) = oracle_quartiles(&v);
        ensure!(
            (fence.q1 - q1).abs() <= 1e-12 && (fence.q3 - q3).abs() <= 1e-12,
            "quartiles differ on case {case}: ({}, {}) vs ({q1}, {q3})",
            fence.q1,
            fence.q3
        );
    }

    for case in 0..1000 {
        let n = rng.gen_range(2..=60);
        let levels = rng.gen_range(1..=n);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..levels) as f64).collect();
        let y: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(0..levels) as f64 * 0.5)
            .collect();
        let ids: Vec<String> = (0..n).map(|i| format!("f{i:03}")).collect();
        let pair = |v: &[f64]| {
            ids.iter()
                .cloned()
                .zip(v.iter().copied())
                .collect::<Vec<_>>()
        };
        let engine = spearman(
            &rank_indicator(&pair(&x), "x"),
            &rank_indicator(&pair(&y), "y"),
        )
        .map_err(|e| e.to_string())?;
        let oracle = oracle_spearman(&x, &y);
        match (engine, oracle) {
            (None, None) => {}
            (Some(a), Some(b)) if (a - b).abs() <= 1e-10 => {}
            other => return Err(format!("spearman differs on case {case}: {other:?}")),
        }
    }
    within(Duration::from_secs(60), started, "oracle equivalence")
}

fn invariance_suite() -> Outcome {
    let started = Instant::now();
    let corpus = default_corpus();
    let config = Config::default();
    let base = run(corpus.texts(), &config);
    ensure!(
        (1000..=1600).contains(&base.corpus.researchers.len()),
        "default corpus has {} researchers",
        base.corpus.researchers.len()
    );

    // (a) nestedness, on the default corpus and a few smaller ones
    let mut outputs = vec![];
    for seed in [1, 2, 3] {
        let params = SynthParams {
            seed,
            n_udas: 3,
            ..SynthParams::default()
        };
        let small = generate(&params).map_err(|e| e.to_string())?;
        outputs.push(run(small.texts(), &config));
    }
    for out in outputs.iter().chain([&base]) {
        ensure!(
            out.flags[0].flagged.is_subset(&out.flags[1].flagged),
            "flagged(5) not within flagged(10)"
        );
    }

    // (b) positive scaling of one field's scores
    let mut by_field: BTreeMap<&str, Vec<(&str, Vec<f64>)>> = BTreeMap::new();
    for s in &base.scores {
        by_field
            .entry(&s.sds)
            .or_default()
            .push((&s.researcher_id, s.fhca_scores.clone()));
    }
    for (sds, members) in &by_field {
        for i in 0..config.analysis.hca_percentiles.len() {
            let scores: Vec<(&str, f64)> = members.iter().map(|(id, v)| (*id, v[i])).collect();
            let reference = detect_top_scientists(&scores, 1.5);
            for c in [0.001, 0.5, 2.0, 3.0, 7.25, 1e6] {
                let scaled: Vec<(&str, f64)> = scores.iter().map(|(id, v)| (*id, v * c)).collect();
                ensure!(
                    detect_top_scientists(&scaled, 1.5) == reference,
                    "scaling {sds} by {c} changed its top scientists at p index {i}"
                );
            }
        }
    }

    // (c) uniform cost inflation
    for c in [1.7, 10.0] {
        let mut inflated = config.clone();
        inflated.cost.capital *= c;
        for w in inflated.cost.salary.values_mut() {
            *w *= c;
        }
        let out = run(corpus.texts(), &inflated);
        for (a, b) in base.scoreboards.fields.iter().zip(&out.scoreboards.fields) {
            for (x, y) in a.per_p.iter().zip(&b.per_p) {
                for (before, after) in [(x.fss_ts, y.fss_ts), (x.fss_fhca, y.fss_fhca)] {
                    ensure!(
                        rel_diff(before / c, after) < 1e-12,
                        "{}: {before} / {c} != {after}",
                        a.sds
                    );
                }
            }
        }
        for (r, s) in base.analytics.rankings.iter().zip(&out.analytics.rankings) {
            ensure!(
                r.rank_map() == s.rank_map(),
                "ranking {} changed under cost inflation",
                r.indicator
            );
        }
        let (q, qi) = (&base.analytics.quadrants, &out.analytics.quadrants);
        ensure!(
            q.strong_union == qi.strong_union
                && q.weak_union == qi.weak_union
                && q.conflicting == qi.conflicting,
            "quadrant membership changed under cost inflation"
        );
        for (pq, pqi) in q.per_p.iter().zip(&qi.per_p) {
            ensure!(
                pq.high_high == pqi.high_high && pq.low_low == pqi.low_low,
                "per-p quadrants changed"
            );
        }
        ensure!(
            base.analytics.correlations.values == out.analytics.correlations.values,
            "correlations changed under cost inflation"
        );
    }

    // (d) discipline aggregates are convex combinations
    for row in &base.disciplines.rows {
        let members: Vec<_> = base
            .scoreboards
            .fields
            .iter()
            .filter(|f| f.uda == row.uda)
            .collect();
        ensure!(!members.is_empty(), "discipline {} has no fields", row.uda);
        for (i, agg) in row.per_p.iter().enumerate() {
            for (value, column) in [
                (
                    agg.fss_ts,
                    members.iter().map(|f| f.fss_ts(i)).collect::<Vec<_>>(),
                ),
                (
                    agg.fss_fhca,
                    members.iter().map(|f| f.fss_fhca(i)).collect(),
                ),
            ] {
                let lo = column.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                ensure!(
                    lo <= value && value <= hi,
                    "{}: {value} outside [{lo}, {hi}]",
                    row.uda
                );
            }
        }
    }
    within(Duration::from_secs(120), started, "invariance suite")
}

fn zero_path() -> Outcome {
    let params = SynthParams {
        hca_fraction: 0.0,
        ..SynthParams::default()
    };
    let corpus = generate(&params).map_err(|e| e.to_string())?;
    let out = run(corpus.texts(), &Config::default());
    for f in &out.flags {
        ensure!(
            f.flagged
                .iter()
                .all(|id| !out.corpus.publications.contains_key(id)),
            "a roster article was flagged"
        );
    }
    for f in &out.scoreboards.fields {
        for x in &f.per_p {
            ensure!(
                x.ts_count == 0 && x.fss_ts == 0.0 && x.fss_fhca == 0.0,
                "{} has a non-zero indicator",
                f.sds
            );
        }
    }
    let q = &out.analytics.quadrants;
    ensure!(
        q.strong_union.is_empty() && q.weak_union.is_empty(),
        "quadrant unions are not empty"
    );
    ensure!(
        out.analytics
            .correlations
            .values
            .iter()
            .flatten()
            .all(Option::is_none),
        "a correlation is defined on constant columns"
    );

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = fss_core::reporting::render(
        &out.bundle,
        &[Format::Csv, Format::Json, Format::Markdown],
        dir.path(),
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        manifest.entries.len() == tables(&out.bundle).len() * 3,
        "missing report files"
    );
    for entry in &manifest.entries {
        let body =
            std::fs::read_to_string(dir.path().join(&entry.path)).map_err(|e| e.to_string())?;
        ensure!(!body.is_empty(), "{} is empty", entry.path);
        if entry.format == Format::Json {
            serde_json::from_str::<serde_json::Value>(&body)
                .map_err(|e| format!("{}: {e}", entry.path))?;
        }
    }
    let correlations = tables(&out.bundle)
        .into_iter()
        .find(|t| t.name == "correlations")
        .unwrap();
    ensure!(
        correlations
            .rows
            .iter()
            .flat_map(|r| &r[1..])
            .all(|c| *c == Cell::Null),
        "correlation table shows a value"
    );
    Ok(())
}

/// Two fields of one discipline with identical staff and costs. The top
/// scientist of `B2` has exactly twice the fractional output and twice the
/// highly cited articles of the top scientist of `A1`.
fn rescaling_pair_texts() -> [String; 4] {
    let taxonomy =
        "sds_code,sds_name,uda_code,uda_name\nA1,Field A,U,Disc\nB2,Field B,U,Disc\n".to_string();
    let mut researchers = String::from("researcher_id,sds_code,year,rank\n");
    for field in ["A1", "B2"] {
        for i in 0..20 {
            for year in 2012..=2016 {
                let rank = ["assistant", "associate", "full"][i % 3];
                researchers.push_str(&format!("{field}-{i:02},{field},{year},{rank}\n"));
            }
        }
    }
    let mut publications = String::from("pub_id,year,citations,author_count,subject_categories\n");
    let mut authorships = String::from("pub_id,researcher_id\n");
    let mut add = |id: String, cites: u64, authors: u32, who: Option<&str>| {
        publications.push_str(&format!("{id},2014,{cites},{authors},C\n"));
        if let Some(r) = who {
            authorships.push_str(&format!("{id},{r}\n"));
        }
    };
    // (highly cited sole, plain sole, plain with one co-author) per star
    for (field, mult) in [("A1", 1), ("B2", 2)] {
        let star = format!("{field}-00");
        for k in 0..2 * mult {
            add(format!("{field}-hca{k}"), 100, 1, Some(&star));
        }
        for k in 0..mult {
            add(format!("{field}-sole{k}"), 1, 1, Some(&star));
        }
        for k in 0..mult {
            add(format!("{field}-co{k}"), 1, 2, Some(&star));
        }
    }
    for k in 0..30 {
        add(format!("w-mid{k:03}"), 50, 3, None);
    }
    for k in 0..200 {
        add(format!("w-low{k:03}"), 0, 3, None);
    }
    [taxonomy, researchers, publications, authorships]
}

fn rescaling_pair() -> Outcome {
    let [t, r, p, a] = rescaling_pair_texts();
    let texts = InputTexts {
        taxonomy: t.as_bytes(),
        researchers: r.as_bytes(),
        publications: p.as_bytes(),
        authorships: a.as_bytes(),
    };
    let out = run(texts, &Config::default());
    let field = |code: &str| {
        out.scoreboards
            .fields
            .iter()
            .find(|f| f.sds == code)
            .unwrap()
    };
    let (fa, fb) = (field("A1"), field("B2"));
    ensure!(fa.total_cost == fb.total_cost, "fields differ in cost");
    for i in 0..fa.per_p.len() {
        let (x, y) = (&fa.per_p[i], &fb.per_p[i]);
        ensure!(
            x.ts_count == 1 && y.ts_count == 1,
            "expected one top scientist per field"
        );
        ensure!(
            y.fhca_total == 2.0 * x.fhca_total,
            "FHCA totals are not in ratio 2"
        );
        ensure!(
            y.ts_output_mean == x.ts_output_mean.map(|m| 2.0 * m),
            "outputs are not in ratio 2"
        );
        ensure!(x.fss_fhca > 0.0, "field A has no rescaled FHCAs");
        let d = (x.fss_fhca - y.fss_fhca).abs() / x.fss_fhca;
        ensure!(d < 1e-12, "relative difference {d}");
    }
    Ok(())
}

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = tmp.path().join("data");
    default_corpus()
        .write_to(&data)
        .map_err(|e| e.to_string())?;
    let config = Config {
        inputs: InputPaths::in_dir(&data),
        ..Config::default()
    };
    let all = [Format::Csv, Format::Json, Format::Markdown];
    let (_, m1) = run_to_dir(&config, &tmp.path().join("run1"), &all).map_err(|e| e.to_string())?;
    let (_, m2) = run_to_dir(&config, &tmp.path().join("run2"), &all).map_err(|e| e.to_string())?;
    ensure!(m1 == m2, "run manifests differ");
    let (a, b) = (
        files_under(&tmp.path().join("run1")),
        files_under(&tmp.path().join("run2")),
    );
    ensure!(a.len() > 20, "only {} files written", a.len());
    ensure!(a.keys().eq(b.keys()), "different file sets");
    for (path, bytes) in &a {
        ensure!(b[path] == *bytes, "{} differs between runs", path.display());
    }
    let regenerated = default_corpus();
    ensure!(
        regenerated == default_corpus(),
        "generator is not deterministic"
    );
    Ok(())
}

fn structural_mimicry() -> Outcome {
    let corpus = default_corpus();
    let config = Config::default();
    let out = run(corpus.texts(), &config);
    let k = config.analysis.top_k;
    let n_p = config.analysis.hca_percentiles.len();

    let summary = &out.bundle.summary;
    let overall = summary
        .overall
        .as_ref()
        .ok_or("summary has no overall row")?;
    ensure!(
        summary.rows.len() == 11,
        "{} discipline rows",
        summary.rows.len()
    );
    let professors: usize = summary.rows.iter().map(|r| r.professors).sum();
    ensure!(
        professors == overall.professors,
        "professor counts do not add up"
    );
    let pubs: usize = summary.rows.iter().map(|r| r.publications).sum();
    ensure!(
        overall.publications == out.corpus.publications.len(),
        "overall publications are not distinct"
    );
    ensure!(
        pubs > overall.publications,
        "no cross-discipline article was de-duplicated"
    );
    for row in summary.rows.iter().chain([overall]) {
        ensure!(
            row.hca_counts.len() == n_p && row.hca_shares.len() == n_p,
            "HCA columns missing"
        );
    }

    let disciplines = &out.bundle.disciplines;
    ensure!(
        disciplines.rows.len() == 11 && disciplines.overall.is_some(),
        "discipline table shape"
    );

    ensure!(
        out.scoreboards.fields.len() == 44,
        "{} fields",
        out.scoreboards.fields.len()
    );
    for f in &out.scoreboards.fields {
        ensure!(f.per_p.len() == n_p, "{} lacks a percentile", f.sds);
    }
    let csv = fss_core::indicators::scoreboard_csv(&out.scoreboards);
    let header = csv.lines().next().unwrap_or_default();
    ensure!(
        header == "sds,uda,n_professors,total_cost,ts_5,ts_10,fss_ts_5,fss_ts_10,fss_fhca_5,fss_fhca_10,fallback_flags",
        "scoreboard header is {header}"
    );
    ensure!(
        csv.lines().count() == 45,
        "scoreboard has {} lines",
        csv.lines().count()
    );
    let all_tables = tables(&out.bundle);
    let fields = all_tables
        .iter()
        .find(|t| t.name == "fields")
        .ok_or("no fields table")?;
    for p in ["5", "10"] {
        for col in ["ts", "fhca", "fss_ts", "fss_fhca"] {
            let name = format!("{col}_{p}");
            ensure!(fields.columns.contains(&name), "fields table lacks {name}");
        }
    }
    ensure!(
        fields.rows.len() == 44,
        "fields table has {} rows",
        fields.rows.len()
    );

    let corr = &out.analytics.correlations;
    ensure!(
        corr.indicators.len() == 4 && corr.values.len() == 4,
        "correlation matrix is not 4x4"
    );
    for i in 0..4 {
        ensure!(corr.values[i].len() == 4, "row {i} is not of length 4");
        ensure!(
            corr.values[i][i] == Some(1.0),
            "diagonal entry {i} is {:?}",
            corr.values[i][i]
        );
        for j in 0..4 {
            ensure!(
                corr.values[i][j] == corr.values[j][i],
                "matrix is not symmetric at ({i}, {j})"
            );
            if let Some(r) = corr.values[i][j] {
                ensure!((-1.0..=1.0).contains(&r), "entry ({i}, {j}) = {r}");
            }
        }
    }

    let q = &out.analytics.quadrants;
    ensure!(q.per_p.len() == n_p, "quadrants per percentile");
    ensure!(
        q.strong_union.is_disjoint(&q.weak_union),
        "strong and weak unions overlap"
    );
    ensure!(
        !q.strong_union.is_empty() && !q.weak_union.is_empty(),
        "a quadrant union is empty"
    );

    let avg = &out.analytics.average_rank;
    ensure!(
        avg.top.len() == k && avg.bottom.len() == k,
        "average-rank lists are not of length {k}"
    );
    ensure!(
        avg.top
            .iter()
            .chain(&avg.bottom)
            .all(|e| e.ranks.len() == 4),
        "average over 4 rankings"
    );
    ensure!(
        avg.top.windows(2).all(|w| w[0].average <= w[1].average),
        "top list is not ascending"
    );
    ensure!(out.analytics.extremes.len() == 4, "per-indicator extremes");
    for e in &out.analytics.extremes {
        ensure!(
            e.top.len() == k && e.bottom.len() == k,
            "extremes of {} are not of length {k}",
            e.indicator
        );
    }

    let names: BTreeSet<&str> = tables(&out.bundle).iter().map(|t| t.name).collect();
    for name in [
        "summary",
        "disciplines",
        "sizes",
        "fields",
        "field_extremes",
        "correlations",
        "quadrants",
        "avg_rank",
    ] {
        ensure!(names.contains(name), "no {name} table");
    }
    for t in tables(&out.bundle) {
        ensure!(
            t.rows.iter().all(|r| r.len() == t.columns.len()),
            "ragged rows in {}",
            t.name
        );
    }
    Ok(())
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("cost model reproduction", cost_model_reproduction),
        ("oracle equivalence", oracle_equivalence),
        ("invariance suite", invariance_suite),
        ("zero-path end to end", zero_path),
        ("rescaling pair", rescaling_pair),
        ("determinism", determinism),
        ("structural shapes", structural_mimicry),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let label = format!("criterion {}: {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(()) => println!("{label} ... PASS ({secs:.2}s)"),
            Err(why) => {
                failed += 1;
                println!("{label} ... FAIL ({secs:.2}s): {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
