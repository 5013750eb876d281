mod support;

use support::*;
use xaieval_core::stats::{auc_trapezoid, entropy, gini, kendall_tau, pearson, roc_auc, spearman};
use xaieval_core::Rng;

const TOL: f64 = 1e-12;
const CASES: usize = 200;

fn corpus(seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = Rng::from_seed(seed);
    (0..CASES)
        .map(|i| {
            let n = 2 + rng.below(7);
            let coarse = i % 3 == 0;
            (random_vector(&mut rng, n, coarse), random_vector(&mut rng, n, coarse))
        })
        .collect()
}

fn agree(got: xaieval_core::Result<f64>, want: Option<f64>) {
    match (got, want) {
        (Ok(g), Some(w)) => assert!((g - w).abs() <= TOL, "got {g}, oracle {w}"),
        (Err(_), None) => {}
        (g, w) => panic!("implementation {g:?} but oracle {w:?}"),
    }
}

#[test]
fn pearson_matches_covariance_definition() {
    for (x, y) in corpus(1) {
        agree(pearson(&x, &y), oracle_pearson(&x, &y));
    }
}

#[test]
fn spearman_matches_counted_ranks() {
    for (x, y) in corpus(2) {
        agree(spearman(&x, &y), oracle_spearman(&x, &y));
    }
}

#[test]
fn roc_auc_matches_pair_counting() {
    for (x, y) in corpus(3) {
        let labels: Vec<bool> = y.iter().map(|&v| v > 0.0).collect();
        agree(roc_auc(&x, &labels), oracle_roc_auc(&x, &labels));
    }
}

#[test]
fn gini_matches_mean_absolute_difference() {
    for (x, _) in corpus(4) {
        agree(gini(&x), oracle_gini(&x));
    }
}

#[test]
fn entropy_matches_log_sum_form() {
    for (x, _) in corpus(5) {
        let p: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        agree(entropy(&p), oracle_entropy(&p));
    }
}

#[test]
fn trapezoid_matches_end_corrected_sum() {
    for (x, _) in corpus(6) {
        agree(auc_trapezoid(&x), Some(oracle_trapezoid(&x)));
    }
}

#[test]
fn kendall_matches_pair_counting() {
    for (x, y) in corpus(7) {
        let mut s = 0.0;
        let (mut tx, mut ty) = (0.0, 0.0);
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                let a = (x[i] - x[j]).signum() * f64::from(u8::from(x[i] != x[j]));
                let b = (y[i] - y[j]).signum() * f64::from(u8::from(y[i] != y[j]));
                s += a * b;
                tx += a * a;
                ty += b * b;
            }
        }
        let want = if tx == 0.0 || ty == 0.0 {
            if x == y { 1.0 } else { 0.0 }
        } else {
            s / (tx * ty).sqrt()
        };
        agree(kendall_tau(&x, &y), Some(want));
    }
}
