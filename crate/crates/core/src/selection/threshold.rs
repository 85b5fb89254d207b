//! Threshold tuning over a labeled pool of faithfulness scores.
//!
//! Candidate thresholds are `+inf`, the midpoints between adjacent distinct
//! scores, and `-inf`; a score counts as predicted faithful when it is at
//! least the threshold. The sweep walks from the highest threshold down and
//! keeps the first strict improvement, so ties resolve toward the higher
//! threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RocCriterion {
    /// Maximize TPR - FPR.
    #[default]
    Youden,
    /// Minimize the distance from the ROC point to (FPR 0, TPR 1).
    ClosestToCorner,
}

/// A tuned threshold and the objective value it attains on the pool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tuned {
    pub threshold: f64,
    /// Youden's J, negated corner distance, or F-beta depending on the tuner.
    pub objective: f64,
    pub predicted_positive: usize,
}

#[derive(Debug, Clone, Copy)]
struct Cut {
    threshold: f64,
    tp: u64,
    fp: u64,
}

fn validate(labeled: &[(f64, bool)]) -> Result<()> {
    match labeled.iter().find(|(s, _)| s.is_nan()) {
        Some(&(value, _)) => Err(Error::OutOfRange {
            field: "score",
            value,
            range: "non-NaN reals",
        }),
        None => Ok(()),
    }
}

fn midpoint(hi: f64, lo: f64) -> f64 {
    let m = hi / 2.0 + lo / 2.0;
    // adjacent floats: any t in (lo, hi] gives the same partition
    if m <= lo || m > hi {
        hi
    } else {
        m
    }
}

/// Every distinct partition, highest threshold first.
fn cuts(labeled: &[(f64, bool)]) -> Vec<Cut> {
    let mut sorted: Vec<(f64, bool)> = labeled.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut out = Vec::with_capacity(sorted.len() + 1);
    let (mut tp, mut fp) = (0u64, 0u64);
    out.push(Cut {
        threshold: f64::INFINITY,
        tp,
        fp,
    });
    let mut i = 0;
    while i < sorted.len() {
        let score = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == score {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let threshold = match sorted.get(i) {
            Some(&(next, _)) => midpoint(score, next),
            None => f64::NEG_INFINITY,
        };
        out.push(Cut { threshold, tp, fp });
    }
    out
}

fn pick<K: PartialOrd>(cuts: &[Cut], key: impl Fn(&Cut) -> K) -> usize {
    let mut best = 0;
    let mut best_key = key(&cuts[0]);
    for (i, c) in cuts.iter().enumerate().skip(1) {
        let k = key(c);
        if k > best_key {
            best = i;
            best_key = k;
        }
    }
    best
}

/// Picks the ROC operating point that is best under `criterion`.
pub fn tune_threshold_roc_with(labeled: &[(f64, bool)], criterion: RocCriterion) -> Result<Tuned> {
    validate(labeled)?;
    let pos = labeled.iter().filter(|l| l.1).count() as u64;
    let neg = labeled.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let cuts = cuts(labeled);
    let (p, n) = (pos as i128, neg as i128);
    let best = match criterion {
        // J * P * N, exact
        RocCriterion::Youden => pick(&cuts, |c| c.tp as i128 * n - c.fp as i128 * p),
        // -(squared corner distance) * (P * N)^2, exact
        RocCriterion::ClosestToCorner => pick(&cuts, |c| {
            let miss = (p - c.tp as i128) * n;
            let false_alarm = c.fp as i128 * p;
            -(miss * miss + false_alarm * false_alarm)
        }),
    };
    let c = cuts[best];
    let tpr = c.tp as f64 / pos as f64;
    let fpr = c.fp as f64 / neg as f64;
    let objective = match criterion {
        RocCriterion::Youden => tpr - fpr,
        RocCriterion::ClosestToCorner => -((1.0 - tpr).powi(2) + fpr * fpr).sqrt(),
    };
    Ok(Tuned {
        threshold: c.threshold,
        objective,
        predicted_positive: (c.tp + c.fp) as usize,
    })
}

/// Youden's J tuner.
pub fn tune_threshold_roc(labeled: &[(f64, bool)]) -> Result<Tuned> {
    tune_threshold_roc_with(labeled, RocCriterion::Youden)
}

pub const MAX_BETA: f64 = 10.0;

pub fn validate_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= MAX_BETA {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("beta must lie in (0, {MAX_BETA}], got {beta}")))
    }
}

/// F-beta for a cut with `tp` true positives out of `pred` predicted and
/// `pos` actual positives: `(1+b^2) P R / (b^2 P + R)`, written in the
/// equivalent count form `(1+b^2) tp / (b^2 pos + pred)`. Zero when nothing
/// is predicted.
pub fn f_beta(tp: u64, pred: u64, pos: u64, beta: f64) -> f64 {
    if tp == 0 {
        return 0.0;
    }
    let b2 = beta * beta;
    (1.0 + b2) * tp as f64 / (b2 * pos as f64 + pred as f64)
}

/// Picks the threshold maximizing F-beta. Smaller `beta` weights precision
/// more heavily.
pub fn tune_threshold_fbeta(labeled: &[(f64, bool)], beta: f64) -> Result<Tuned> {
    validate_beta(beta)?;
    validate(labeled)?;
    let pos = labeled.iter().filter(|l| l.1).count() as u64;
    if pos == 0 {
        return Err(Error::NoPositives);
    }
    let cuts = cuts(labeled);
    let score = |c: &Cut| f_beta(c.tp, c.tp + c.fp, pos, beta);
    let c = cuts[pick(&cuts, score)];
    Ok(Tuned {
        threshold: c.threshold,
        objective: score(&c),
        predicted_positive: (c.tp + c.fp) as usize,
    })
}
