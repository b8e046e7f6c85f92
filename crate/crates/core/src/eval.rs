//! Recall-at-N / median-rank evaluation and the method × test-set
//! comparison table.
//!
//! A ground-truth clip that a method does not return at all is ranked
//! `pool_size + 1`, so the median rank is defined for every method.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::GroundTruthPair;
use crate::embedding::RankedResult;
use crate::error::{Error, Result};
use crate::router::RetrievalMethod;

/// Anything that can produce a ranked list for a query.
pub trait Retriever {
    fn ranked(&self, query: &str, k: usize) -> Result<Vec<RankedResult>>;
}

impl Retriever for RetrievalMethod {
    /// Unencodable queries count as an empty list.
    fn ranked(&self, query: &str, k: usize) -> Result<Vec<RankedResult>> {
        match self.query(query, k) {
            Ok(out) => Ok(out.results),
            Err(Error::Unencodable) => Ok(Vec::new()),
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRanking {
    pub pair: GroundTruthPair,
    pub rank: usize,
    pub found: bool,
    pub list_size: usize,
}

/// 1-based rank of `truth` in `results`, or `pool_size + 1` when absent.
pub fn rank_of_truth(results: &[RankedResult], truth: &str, pool_size: usize) -> usize {
    results
        .iter()
        .find(|r| r.clip_id == truth)
        .map_or(pool_size + 1, |r| r.rank)
}

pub fn recall_at_n(rankings: &[QueryRanking], n: usize) -> Result<f64> {
    if rankings.is_empty() || n == 0 {
        return Err(Error::validation("recall needs n ≥ 1 and at least one ranking"));
    }
    let hits = rankings.iter().filter(|r| r.rank <= n).count();
    Ok(hits as f64 / rankings.len() as f64)
}

pub fn median_rank(rankings: &[QueryRanking]) -> Result<f64> {
    if rankings.is_empty() {
        return Err(Error::validation("median rank needs at least one ranking"));
    }
    let mut ranks: Vec<usize> = rankings.iter().map(|r| r.rank).collect();
    ranks.sort_unstable();
    let mid = ranks.len() / 2;
    Ok(if ranks.len() % 2 == 1 {
        ranks[mid] as f64
    } else {
        (ranks[mid - 1] + ranks[mid]) as f64 / 2.0
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(rename = "R@1")]
    pub r1: f64,
    #[serde(rename = "R@5")]
    pub r5: f64,
    #[serde(rename = "R@10")]
    pub r10: f64,
    #[serde(rename = "MdR")]
    pub mdr: f64,
    pub n_queries: usize,
    pub n_not_found: usize,
}

impl MetricReport {
    pub fn from_rankings(rankings: &[QueryRanking]) -> Result<Self> {
        Ok(Self {
            r1: recall_at_n(rankings, 1)?,
            r5: recall_at_n(rankings, 5)?,
            r10: recall_at_n(rankings, 10)?,
            mdr: median_rank(rankings)?,
            n_queries: rankings.len(),
            n_not_found: rankings.iter().filter(|r| !r.found).count(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRun {
    pub report: MetricReport,
    pub rankings: Vec<QueryRanking>,
}

/// Queries every pair against the full pool (`k = pool_size`) and folds the
/// ranks in pair order.
pub fn run_eval(retriever: &dyn Retriever, pairs: &[GroundTruthPair], pool_size: usize) -> Result<EvalRun> {
    let k = pool_size.max(1);
    let mut rankings = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let results = retriever.ranked(&pair.query_text, k)?;
        let rank = rank_of_truth(&results, &pair.clip_id, pool_size);
        rankings.push(QueryRanking {
            pair: pair.clone(),
            rank,
            found: rank <= pool_size,
            list_size: results.len(),
        });
    }
    Ok(EvalRun {
        report: MetricReport::from_rankings(&rankings)?,
        rankings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub trained_on: String,
    pub results: BTreeMap<String, MetricReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub test_sets: Vec<String>,
    pub rows: Vec<ComparisonRow>,
}

pub struct MethodEntry<'a> {
    pub label: String,
    pub trained_on: String,
    pub retriever: &'a dyn Retriever,
}

pub struct TestSet<'a> {
    pub label: String,
    pub pairs: &'a [GroundTruthPair],
}

pub fn compare(methods: &[MethodEntry<'_>], test_sets: &[TestSet<'_>], pool_size: usize) -> Result<ComparisonTable> {
    if test_sets.is_empty() {
        return Err(Error::validation("comparison needs at least one test set"));
    }
    let mut rows = Vec::with_capacity(methods.len());
    for m in methods {
        let mut results = BTreeMap::new();
        for t in test_sets {
            results.insert(t.label.clone(), run_eval(m.retriever, t.pairs, pool_size)?.report);
        }
        rows.push(ComparisonRow {
            method: m.label.clone(),
            trained_on: m.trained_on.clone(),
            results,
        });
    }
    Ok(ComparisonTable {
        test_sets: test_sets.iter().map(|t| t.label.clone()).collect(),
        rows,
    })
}

impl ComparisonTable {
    pub fn get(&self, method: &str, test_set: &str) -> Option<&MetricReport> {
        self.rows
            .iter()
            .find(|r| r.method == method)
            .and_then(|r| r.results.get(test_set))
    }

    /// `method → test set → metrics`.
    pub fn nested(&self) -> BTreeMap<String, BTreeMap<String, MetricReport>> {
        self.rows
            .iter()
            .map(|r| (r.method.clone(), r.results.clone()))
            .collect()
    }

    /// Aligned text table, R@5 first.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<12} {:<12}", "Method", "Trained on");
        for t in &self.test_sets {
            let _ = write!(out, " | {:^34}", format!("Test: {t}"));
        }
        out.push('\n');
        let _ = write!(out, "{:<12} {:<12}", "", "");
        for _ in &self.test_sets {
            let _ = write!(out, " | {:>7} {:>7} {:>7} {:>9}", "R@5", "R@1", "R@10", "MdR");
        }
        out.push('\n');
        let width = 25 + self.test_sets.len() * 37;
        out.push_str(&"-".repeat(width));
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{:<12} {:<12}", row.method, row.trained_on);
            for t in &self.test_sets {
                match row.results.get(t) {
                    Some(m) => {
                        let _ = write!(
                            out,
                            " | {:>7.1} {:>7.1} {:>7.1} {:>9.1}",
                            m.r5 * 100.0,
                            m.r1 * 100.0,
                            m.r10 * 100.0,
                            m.mdr
                        );
                    }
                    None => {
                        let _ = write!(out, " | {:>34}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

/// One directional claim about the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

pub const ROUTING_GAIN: f64 = 0.30;
pub const ORIGINAL_SLACK: f64 = 0.05;

/// The three R@5 orderings expected on a mixed-query archive:
/// classifier routing beats the baseline on mixed queries by a wide margin,
/// the customised model beats the baseline on mixed queries, and the
/// customised model gives up little on plain captions.
pub fn check_orderings(table: &ComparisonTable, original: &str, mixed: &str) -> Result<Vec<OrderingCheck>> {
    let r5 = |method: &str, set: &str| {
        table
            .get(method, set)
            .map(|m| m.r5)
            .ok_or_else(|| Error::validation(format!("comparison table lacks {method} on {set}")))
    };
    let base_mixed = r5("baseline", mixed)?;
    let cls_mixed = r5("classifier", mixed)?;
    let cust_mixed = r5("customised", mixed)?;
    let base_orig = r5("baseline", original)?;
    let cust_orig = r5("customised", original)?;
    let check = |name: String, lhs: f64, rhs: f64| OrderingCheck {
        name,
        lhs,
        rhs,
        passed: lhs >= rhs - 1e-12,
    };
    Ok(vec![
        check(
            format!("classifier R@5({mixed}) >= baseline R@5({mixed}) + {ROUTING_GAIN:.2}"),
            cls_mixed,
            base_mixed + ROUTING_GAIN,
        ),
        check(
            format!("customised R@5({mixed}) >= baseline R@5({mixed})"),
            cust_mixed,
            base_mixed,
        ),
        check(
            format!("baseline R@5({original}) >= customised R@5({original}) - {ORIGINAL_SLACK:.2}"),
            base_orig,
            cust_orig - ORIGINAL_SLACK,
        ),
    ])
}
