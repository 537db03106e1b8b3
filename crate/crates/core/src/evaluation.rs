//! Top-k ranking metrics per user and their aggregation over users and runs.
//!
//! Each user's candidate set is that user's own test interactions, ranked by
//! score (descending, ties by ascending item id).

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Cut-offs reported by default.
pub const DEFAULT_KS: [usize; 2] = [5, 10];

/// One scored test interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredItem {
    pub user_id: u32,
    pub item_id: u32,
    pub score: f64,
    pub relevant: bool,
}

/// A user's test items in ranked order.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRanking {
    pub user_id: u32,
    /// `(item_id, score, relevant)`.
    pub items: Vec<(u32, f64, bool)>,
}

impl UserRanking {
    pub fn relevance(&self) -> Vec<bool> {
        self.items.iter().map(|&(_, _, r)| r).collect()
    }

    pub fn total_relevant(&self) -> usize {
        self.items.iter().filter(|&&(_, _, r)| r).count()
    }
}

/// Sorts one user's items by score descending, ties by item id ascending.
pub fn rank_user(user_id: u32, items: &[(u32, f64, bool)]) -> Result<UserRanking> {
    if items.is_empty() {
        return Err(Error::Empty("user ranking"));
    }
    if items.iter().any(|i| i.1.is_nan()) {
        return Err(Error::NonFinite("ranking score"));
    }
    let mut items = items.to_vec();
    items.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(UserRanking { user_id, items })
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::Config("k must be positive".into()))
    } else {
        Ok(())
    }
}

fn hits(relevance: &[bool], k: usize) -> usize {
    relevance.iter().take(k).filter(|&&r| r).count()
}

/// Relevant items in the top `k` divided by `k`.
pub fn precision_at_k(relevance: &[bool], k: usize) -> Result<f64> {
    check_k(k)?;
    Ok(hits(relevance, k) as f64 / k as f64)
}

/// Relevant items in the top `k` divided by all relevant items.
pub fn recall_at_k(relevance: &[bool], total_relevant: usize, k: usize) -> Result<f64> {
    check_k(k)?;
    if total_relevant == 0 {
        return Err(Error::Empty("recall without relevant items"));
    }
    Ok(hits(relevance, k) as f64 / total_relevant as f64)
}

/// Binary-gain DCG over the ideal DCG, both truncated at `k`.
pub fn ndcg_at_k(relevance: &[bool], total_relevant: usize, k: usize) -> Result<f64> {
    check_k(k)?;
    if total_relevant == 0 {
        return Err(Error::Empty("NDCG without relevant items"));
    }
    let discount = |pos: usize| 1.0 / ((pos + 2) as f64).log2();
    let dcg: f64 = relevance
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, &r)| r)
        .map(|(p, _)| discount(p))
        .sum();
    let ideal: f64 = (0..total_relevant.min(k)).map(discount).sum();
    Ok(dcg / ideal)
}

/// Sum of precision@p over relevant positions p <= k, over min(relevant, k).
pub fn average_precision_at_k(relevance: &[bool], total_relevant: usize, k: usize) -> Result<f64> {
    check_k(k)?;
    if total_relevant == 0 {
        return Err(Error::Empty("average precision without relevant items"));
    }
    let mut found = 0usize;
    let mut sum = 0.0;
    for (p, &r) in relevance.iter().take(k).enumerate() {
        if r {
            found += 1;
            sum += found as f64 / (p + 1) as f64;
        }
    }
    Ok(sum / total_relevant.min(k) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Precision,
    Recall,
    Ndcg,
    Map,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Precision, Metric::Recall, Metric::Ndcg, Metric::Map];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::Ndcg => "ndcg",
            Metric::Map => "map",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            Metric::Precision => "P",
            Metric::Recall => "R",
            Metric::Ndcg => "NDCG",
            Metric::Map => "MAP",
        }
    }
}

/// User-averaged metrics of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub values: BTreeMap<(Metric, usize), f64>,
    /// Users with at least one test item (precision denominator).
    pub users_ranked: usize,
    /// Users with at least one relevant test item (other metrics).
    pub users_with_relevant: usize,
}

impl RunMetrics {
    pub fn get(&self, metric: Metric, k: usize) -> Option<f64> {
        self.values.get(&(metric, k)).copied()
    }
}

/// Groups scored items by user and ranks each group.
pub fn rank_all(items: &[ScoredItem]) -> Result<Vec<UserRanking>> {
    let mut by_user: BTreeMap<u32, Vec<(u32, f64, bool)>> = BTreeMap::new();
    for s in items {
        by_user
            .entry(s.user_id)
            .or_default()
            .push((s.item_id, s.score, s.relevant));
    }
    by_user
        .into_par_iter()
        .map(|(u, list)| rank_user(u, &list))
        .collect()
}

/// Precision is averaged over all ranked users; recall, NDCG and MAP over
/// users with at least one relevant test item.
pub fn evaluate(items: &[ScoredItem], ks: &[usize]) -> Result<RunMetrics> {
    if items.is_empty() {
        return Err(Error::Empty("test set"));
    }
    if ks.is_empty() {
        return Err(Error::Empty("cut-off list"));
    }
    for &k in ks {
        check_k(k)?;
    }
    let rankings = rank_all(items)?;
    let per_user: Vec<Vec<Option<f64>>> = rankings
        .par_iter()
        .map(|r| -> Result<Vec<Option<f64>>> {
            let rel = r.relevance();
            let total = r.total_relevant();
            let mut row = Vec::with_capacity(ks.len() * 4);
            for &k in ks {
                row.push(Some(precision_at_k(&rel, k)?));
                if total == 0 {
                    row.extend([None, None, None]);
                } else {
                    row.push(Some(recall_at_k(&rel, total, k)?));
                    row.push(Some(ndcg_at_k(&rel, total, k)?));
                    row.push(Some(average_precision_at_k(&rel, total, k)?));
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let users_with_relevant = rankings.iter().filter(|r| r.total_relevant() > 0).count();
    let mut values = BTreeMap::new();
    for (ki, &k) in ks.iter().enumerate() {
        for (mi, metric) in Metric::ALL.into_iter().enumerate() {
            let col = ki * 4 + mi;
            let (sum, n) = per_user
                .iter()
                .filter_map(|row| row[col])
                .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            values.insert((metric, k), if n == 0 { 0.0 } else { sum / n as f64 });
        }
    }
    Ok(RunMetrics {
        values,
        users_ranked: rankings.len(),
        users_with_relevant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub metric: Metric,
    pub k: usize,
    pub mean: f64,
    /// Sample standard deviation over runs; 0 for a single run.
    pub std: f64,
}

/// Mean and spread of every metric across seeded runs.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub ks: Vec<usize>,
    pub rows: Vec<MetricSummary>,
    pub n_seeds: usize,
    /// Set when only one run was made and `std` carries no information.
    pub single_run: bool,
}

impl MetricsReport {
    pub fn from_runs(runs: &[RunMetrics]) -> Result<Self> {
        let first = runs.first().ok_or(Error::Empty("metric runs"))?;
        let mut ks: Vec<usize> = first.values.keys().map(|&(_, k)| k).collect();
        ks.sort_unstable();
        ks.dedup();
        let n = runs.len();
        let mut rows = Vec::new();
        for &k in &ks {
            for metric in Metric::ALL {
                let xs = runs
                    .iter()
                    .map(|r| {
                        r.get(metric, k)
                            .ok_or_else(|| Error::Format(format!("run lacks {}@{k}", metric.name())))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let mean = xs.iter().sum::<f64>() / n as f64;
                let std = if n < 2 || xs.iter().all(|&x| x == xs[0]) {
                    0.0
                } else {
                    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
                };
                rows.push(MetricSummary { metric, k, mean, std });
            }
        }
        Ok(Self {
            ks,
            rows,
            n_seeds: n,
            single_run: n == 1,
        })
    }

    pub fn get(&self, metric: Metric, k: usize) -> Option<&MetricSummary> {
        self.rows.iter().find(|r| r.metric == metric && r.k == k)
    }

    pub fn mean(&self, metric: Metric, k: usize) -> Option<f64> {
        self.get(metric, k).map(|r| r.mean)
    }

    /// `metric,k,mean,std,n_seeds`.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "metric,k,mean,std,n_seeds")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{}", r.metric.name(), r.k, r.mean, r.std, self.n_seeds)?;
        }
        Ok(())
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cols: Vec<&MetricSummary> = self
            .ks
            .iter()
            .flat_map(|&k| Metric::ALL.into_iter().filter_map(move |m| self.get(m, k)))
            .collect();
        for c in &cols {
            write!(f, "{:>14}", format!("{}@{}", c.metric.short(), c.k))?;
        }
        writeln!(f)?;
        for c in &cols {
            write!(f, "{:>14}", format!("{:.3} ({:.3})", c.mean, c.std))?;
        }
        writeln!(f)?;
        write!(f, "runs: {}", self.n_seeds)?;
        if self.single_run {
            write!(f, " (single run, std not estimated)")?;
        }
        writeln!(f)
    }
}

/// Runs `run(seed)` for `seed = base_seed + 0 .. n_runs` and summarises.
pub fn repeat_evaluate(
    n_runs: usize,
    base_seed: u64,
    mut run: impl FnMut(u64) -> Result<RunMetrics>,
) -> Result<MetricsReport> {
    if n_runs == 0 {
        return Err(Error::Config("number of runs must be at least 1".into()));
    }
    let runs = (0..n_runs as u64)
        .map(|r| run(base_seed.wrapping_add(r)))
        .collect::<Result<Vec<_>>>()?;
    MetricsReport::from_runs(&runs)
}
