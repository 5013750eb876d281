//! Correlation, ranking and concentration statistics shared by the metrics.
//!
//! Everything here works on `f64` slices and is allocation-light. Ties are
//! always resolved with fractional (average) ranks.

use crate::error::{Error, Result};

fn check_lengths(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < min {
        return Err(Error::TooShort {
            need: min,
            got: x.len(),
        });
    }
    Ok(())
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population standard deviation (divides by `n`).
pub fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Sample Pearson correlation, computed with the two-pass covariance formula.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y, 2)?;
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateVariance(
            "pearson: constant input vector".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based fractional ranks: tied values share the mean of their positions.
pub fn fractional_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && v[order[j]] == v[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share rank mean((i+1)..=j)
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y, 2)?;
    pearson(&fractional_ranks(x), &fractional_ranks(y)).map_err(|_| {
        Error::DegenerateVariance("spearman: constant input vector".into())
    })
}

/// Kendall's tau-b between two score vectors.
///
/// When either vector is constant tau-b is undefined; identical vectors then
/// score 1.0 and anything else 0.0.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y, 2)?;
    let n = x.len();
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut ties_x, mut ties_y) = (0i64, 0i64);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = (x[i] - x[j]).partial_cmp(&0.0).unwrap_or(std::cmp::Ordering::Equal);
            let dy = (y[i] - y[j]).partial_cmp(&0.0).unwrap_or(std::cmp::Ordering::Equal);
            use std::cmp::Ordering::Equal;
            match (dx, dy) {
                (Equal, Equal) => {
                    ties_x += 1;
                    ties_y += 1;
                }
                (Equal, _) => ties_x += 1,
                (_, Equal) => ties_y += 1,
                (a, b) if a == b => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as i64;
    let denom = (((pairs - ties_x) * (pairs - ties_y)) as f64).sqrt();
    if denom == 0.0 {
        return Ok(if x == y { 1.0 } else { 0.0 });
    }
    Ok(((concordant - discordant) as f64 / denom).clamp(-1.0, 1.0))
}

/// ROC AUC by the Mann-Whitney rank-sum; tied scores count one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let ranks = fractional_ranks(scores);
    let rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l)
        .map(|(r, _)| r)
        .sum();
    let n_pos = n_pos as f64;
    let u = rank_sum - n_pos * (n_pos + 1.0) / 2.0;
    Ok(u / (n_pos * n_neg as f64))
}

/// Shannon entropy (nats) of `p` after normalising it to sum one.
pub fn entropy(p: &[f64]) -> Result<f64> {
    if p.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParameter(
            "entropy: negative probability mass".into(),
        ));
    }
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return Err(Error::AllZero);
    }
    let h = p
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| {
            let q = v / total;
            -q * q.ln()
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}

/// Gini index of `|v|`; 0 for a perfectly dense vector, `(d-1)/d` for one-hot.
pub fn gini(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::TooShort { need: 1, got: 0 });
    }
    let mut sorted: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let total: f64 = sorted.iter().sum();
    if total == 0.0 {
        return Err(Error::AllZero);
    }
    sorted.sort_by(f64::total_cmp);
    let d = sorted.len() as f64;
    let acc: f64 = sorted
        .iter()
        .enumerate()
        .map(|(k, x)| (x / total) * ((d - (k + 1) as f64 + 0.5) / d))
        .sum();
    Ok((1.0 - 2.0 * acc).max(0.0))
}

/// Trapezoidal area under `ys` sampled on a uniform grid over `[0, 1]`.
pub fn auc_trapezoid(ys: &[f64]) -> Result<f64> {
    if ys.len() < 2 {
        return Err(Error::TooShort {
            need: 2,
            got: ys.len(),
        });
    }
    let h = 1.0 / (ys.len() - 1) as f64;
    Ok(ys.windows(2).map(|w| (w[0] + w[1]) * 0.5 * h).sum())
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
