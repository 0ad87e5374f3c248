//! Naive reference implementations used to cross-check the engine.
//!
//! Nothing here calls into the engine modules. Each routine follows the
//! textbook definition with quadratic scans where that is the plainest
//! formulation.

use std::collections::BTreeSet;

/// Top-p% membership by pairwise comparison: an item is flagged when the
/// number of items with strictly more citations, times 100, is below
/// `p * size`.
pub fn oracle_top_p(members: &[(String, u64)], p: f64) -> BTreeSet<String> {
    let size = members.len() as f64;
    let mut flagged = BTreeSet::new();
    for (id, mine) in members {
        let mut ahead = 0u64;
        for (_, other) in members {
            if other > mine {
                ahead += 1;
            }
        }
        if 100.0 * (ahead as f64) < p * size {
            flagged.insert(id.clone());
        }
    }
    flagged
}

/// Quantile with linear interpolation between order statistics, the
/// position of quantile `q` being `(n - 1) q` on zero-based sorted data.
/// Written as a tent-weighted sum over all order statistics.
pub fn oracle_quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty sample");
    let mut sorted = values.to_vec();
    // insertion sort keeps this free of library sort assumptions
    for i in 1..sorted.len() {
        let mut j = i;
        while j > 0 && sorted[j - 1] > sorted[j] {
            sorted.swap(j - 1, j);
            j -= 1;
        }
    }
    let h = (sorted.len() - 1) as f64 * q;
    let mut acc = 0.0;
    for (i, v) in sorted.iter().enumerate() {
        let w = 1.0 - (i as f64 - h).abs();
        if w > 0.0 {
            acc += w * v;
        }
    }
    acc
}

/// `(q1, q3)` under the interpolation convention above.
pub fn oracle_quartiles(values: &[f64]) -> (f64, f64) {
    (oracle_quantile(values, 0.25), oracle_quantile(values, 0.75))
}

/// Mid-ranks, descending: rank 1 for the largest value, tied values get
/// the mean of the positions they span.
pub fn oracle_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|v| {
            let greater = values.iter().filter(|o| *o > v).count() as f64;
            let equal = values.iter().filter(|o| *o == v).count() as f64;
            greater + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Pearson correlation of mid-ranks. `None` when fewer than two points or
/// either side has no rank variance.
pub fn oracle_spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "paired samples");
    let n = x.len();
    if n < 2 {
        return None;
    }
    let rx = oracle_ranks(x);
    let ry = oracle_ranks(y);
    let nf = n as f64;
    let sx: f64 = rx.iter().sum();
    let sy: f64 = ry.iter().sum();
    let sxx: f64 = rx.iter().map(|a| a * a).sum();
    let syy: f64 = ry.iter().map(|b| b * b).sum();
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| a * b).sum();
    let cov = nf * sxy - sx * sy;
    let vx = nf * sxx - sx * sx;
    let vy = nf * syy - sy * sy;
    if vx <= 0.0 || vy <= 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_of_one_to_nine() {
        let v: Vec<f64> = (1..=9).map(f64::from).collect();
        assert_eq!(oracle_quartiles(&v), (3.0, 7.0));
    }

    #[test]
    fn quartiles_of_singleton() {
        assert_eq!(oracle_quartiles(&[4.5]), (4.5, 4.5));
    }

    #[test]
    fn quartiles_with_spike() {
        let (q1, q3) = oracle_quartiles(&[0.0, 0.0, 0.0, 10.0]);
        assert_eq!(q1, 0.0);
        assert_eq!(q3, 2.5);
        // 75 zeros of 100: q3 sits a quarter of the way to the first positive
        let mut v = vec![0.0; 75];
        v.extend((1..=25).map(|i| i as f64 / 10.0));
        assert_eq!(oracle_quartiles(&v).1, 0.025);
        let mut v = vec![0.0; 76];
        v.extend((1..=24).map(|i| i as f64 / 10.0));
        assert_eq!(oracle_quartiles(&v).1, 0.0);
        let mut w: Vec<f64> = (1..=8).map(f64::from).collect();
        w.push(100.0);
        assert_eq!(oracle_quartiles(&w), (3.0, 7.0));
    }

    #[test]
    fn top_p_oracle_cases() {
        let distinct: Vec<(String, u64)> = (0..100).map(|i| (format!("{i:03}"), i)).collect();
        let top: BTreeSet<String> = (90..100).map(|i| format!("{i:03}")).collect();
        assert_eq!(oracle_top_p(&distinct, 10.0), top);
        let tied: Vec<(String, u64)> = (0..20).map(|i| (i.to_string(), 3)).collect();
        assert_eq!(oracle_top_p(&tied, 5.0).len(), 20);
        assert_eq!(oracle_top_p(&[("x".into(), 0)], 1.0).len(), 1);
    }

    #[test]
    fn spearman_oracle_cases() {
        assert_eq!(
            oracle_spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]),
            Some(1.0)
        );
        let r = oracle_spearman(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
        assert_eq!(oracle_spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
        assert_eq!(oracle_spearman(&[1.0], &[1.0]), None);
        // with ties: ranks (2.5, 2.5, 1) against (1.5, 1.5, 3), perfectly reversed
        let r = oracle_spearman(&[1.0, 1.0, 2.0], &[3.0, 3.0, 1.0]).unwrap();
        assert!((r + 1.0).abs() < 1e-15);
    }
}
