use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricResult;
use crate::error::{Error, Result};
use crate::metrics::{Category, Direction};

/// Ranks of one metric across explainers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRanking {
    pub metric: String,
    pub category: Category,
    pub direction: Direction,
    /// Aggregate means in explainer order; `None` when every sample failed.
    pub means: Vec<Option<f64>>,
    /// 1 is best; ties share the average rank.
    pub ranks: Vec<f64>,
    /// `(n - rank) / (n - 1)`.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub category: Category,
    pub explainer: String,
    pub score: f64,
}

/// Per-category explainer comparison: the data behind a radar chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub explainers: Vec<String>,
    pub metrics: Vec<MetricRanking>,
    /// Sorted by (category name, explainer).
    pub categories: Vec<CategoryScore>,
    /// Mean of the category scores, in explainer order.
    pub overall: Vec<f64>,
}

/// Tie-averaged ranks where rank 1 is the best. Missing values rank below
/// every present one.
pub fn direction_ranks(means: &[Option<f64>], direction: Direction) -> Vec<f64> {
    let key = |v: Option<f64>| -> Option<f64> {
        v.map(|m| match direction {
            Direction::HigherBetter => m,
            Direction::LowerBetter => -m,
        })
    };
    // better(i, j): i strictly better than j
    let better = |a: Option<f64>, b: Option<f64>| match (key(a), key(b)) {
        (Some(x), Some(y)) => x > y,
        (Some(_), None) => true,
        _ => false,
    };
    let same = |a: Option<f64>, b: Option<f64>| match (key(a), key(b)) {
        (Some(x), Some(y)) => x == y,
        (None, None) => true,
        _ => false,
    };
    means
        .iter()
        .map(|&mi| {
            let ahead = means.iter().filter(|&&mj| better(mj, mi)).count() as f64;
            let tied = means.iter().filter(|&&mj| same(mj, mi)).count() as f64;
            ahead + (tied + 1.0) / 2.0
        })
        .collect()
}

/// Build the ranking table from per-(explainer, metric) results.
pub fn rank(results: &[MetricResult]) -> Result<RankingTable> {
    let mut explainers: Vec<String> = Vec::new();
    for r in results {
        if !explainers.contains(&r.explainer) {
            explainers.push(r.explainer.clone());
        }
    }
    let n = explainers.len();
    if n < 2 {
        return Err(Error::FewerThanTwoExplainers(n));
    }
    let mut metric_order: Vec<&str> = Vec::new();
    for r in results {
        if !metric_order.contains(&r.metric.as_str()) {
            metric_order.push(&r.metric);
        }
    }

    let mut metrics = Vec::with_capacity(metric_order.len());
    for name in metric_order {
        let cells: Vec<&MetricResult> = results.iter().filter(|r| r.metric == name).collect();
        let first = cells[0];
        let means: Vec<Option<f64>> = explainers
            .iter()
            .map(|e| cells.iter().find(|r| &r.explainer == e).and_then(|r| r.aggregate.mean))
            .collect();
        let ranks = direction_ranks(&means, first.direction);
        let scores = ranks.iter().map(|r| (n as f64 - r) / (n as f64 - 1.0)).collect();
        metrics.push(MetricRanking {
            metric: name.to_string(),
            category: first.category,
            direction: first.direction,
            means,
            ranks,
            scores,
        });
    }

    let mut by_category: BTreeMap<&str, (Category, Vec<Vec<f64>>)> = BTreeMap::new();
    for m in &metrics {
        by_category
            .entry(m.category.name())
            .or_insert_with(|| (m.category, Vec::new()))
            .1
            .push(m.scores.clone());
    }
    let mut categories = Vec::new();
    let mut per_explainer = vec![Vec::new(); n];
    for (category, rows) in by_category.values() {
        for (i, e) in explainers.iter().enumerate() {
            let score = rows.iter().map(|s| s[i]).sum::<f64>() / rows.len() as f64;
            per_explainer[i].push(score);
            categories.push(CategoryScore {
                category: *category,
                explainer: e.clone(),
                score,
            });
        }
    }
    categories.sort_by(|a, b| {
        (a.category.name(), a.explainer.as_str()).cmp(&(b.category.name(), b.explainer.as_str()))
    });
    let overall = per_explainer.iter().map(|s| crate::stats::mean(s)).collect();
    Ok(RankingTable {
        explainers,
        metrics,
        categories,
        overall,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Aggregate;

    fn cell(metric: &str, explainer: &str, category: Category, direction: Direction, mean: Option<f64>) -> MetricResult {
        MetricResult {
            metric: metric.into(),
            explainer: explainer.into(),
            category,
            direction,
            per_sample: Vec::new(),
            aggregate: Aggregate { mean, std: mean.map(|_| 0.0), n: usize::from(mean.is_some()) },
            effective_config: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    #[test]
    fn two_point_ranking() {
        let r = rank(&[
            cell("m", "a", Category::Complexity, Direction::LowerBetter, Some(0.2)),
            cell("m", "b", Category::Complexity, Direction::LowerBetter, Some(0.8)),
        ])
        .unwrap();
        assert_eq!(r.metrics[0].scores, vec![1.0, 0.0]);
        let tie = rank(&[
            cell("m", "a", Category::Complexity, Direction::LowerBetter, Some(0.5)),
            cell("m", "b", Category::Complexity, Direction::LowerBetter, Some(0.5)),
        ])
        .unwrap();
        assert_eq!(tie.metrics[0].scores, vec![0.5, 0.5]);
    }

    #[test]
    fn missing_means_rank_last() {
        let ranks = direction_ranks(&[None, Some(1.0), None, Some(3.0)], Direction::HigherBetter);
        assert_eq!(ranks, vec![3.5, 2.0, 3.5, 1.0]);
    }

    #[test]
    fn single_explainer_is_rejected() {
        let r = rank(&[cell("m", "a", Category::Complexity, Direction::LowerBetter, Some(0.2))]);
        assert!(matches!(r, Err(Error::FewerThanTwoExplainers(1))));
    }

    #[test]
    fn category_scores_average_metrics() {
        let r = rank(&[
            cell("m1", "a", Category::Faithfulness, Direction::HigherBetter, Some(1.0)),
            cell("m1", "b", Category::Faithfulness, Direction::HigherBetter, Some(0.0)),
            cell("m2", "a", Category::Faithfulness, Direction::LowerBetter, Some(1.0)),
            cell("m2", "b", Category::Faithfulness, Direction::LowerBetter, Some(0.0)),
            cell("m3", "a", Category::Axiomatic, Direction::LowerBetter, Some(0.0)),
            cell("m3", "b", Category::Axiomatic, Direction::LowerBetter, Some(1.0)),
        ])
        .unwrap();
        let names: Vec<_> = r.categories.iter().map(|c| (c.category.name(), c.explainer.as_str(), c.score)).collect();
        assert_eq!(
            names,
            vec![("axiomatic", "a", 1.0), ("axiomatic", "b", 0.0), ("faithfulness", "a", 0.5), ("faithfulness", "b", 0.5)]
        );
        assert_eq!(r.overall, vec![0.75, 0.25]);
    }
}
