use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::threshold::{tune_threshold_fbeta, tune_threshold_roc_with, validate_beta, RocCriterion, Tuned};
use super::{select, CandidateSet, SelectionResult};
use crate::error::{Error, Result};
use crate::parallel::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectorMode {
    Roc(RocCriterion),
    FBeta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectorConfig {
    pub mode: SelectorMode,
    pub folds: usize,
    pub seed: u64,
}

impl SelectorConfig {
    pub const DEFAULT_FOLDS: usize = 10;

    pub fn new(mode: SelectorMode, folds: usize, seed: u64) -> Result<Self> {
        if folds < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 folds, got {folds}")));
        }
        if let SelectorMode::FBeta(beta) = mode {
            validate_beta(beta)?;
        }
        Ok(SelectorConfig { mode, folds, seed })
    }

    /// Builds a config from command-line style parts: `mode` is `roc` or
    /// `fbeta`, and `beta` must be given exactly when the mode is `fbeta`.
    pub fn from_parts(
        mode: &str,
        beta: Option<f64>,
        criterion: RocCriterion,
        folds: usize,
        seed: u64,
    ) -> Result<Self> {
        let mode = match (mode, beta) {
            ("roc", None) => SelectorMode::Roc(criterion),
            ("roc", Some(_)) => {
                return Err(Error::InvalidConfig("beta is only valid with mode fbeta".into()))
            }
            ("fbeta", Some(b)) => SelectorMode::FBeta(b),
            ("fbeta", None) => return Err(Error::InvalidConfig("mode fbeta requires beta".into())),
            (other, _) => return Err(Error::InvalidConfig(format!("unknown mode `{other}`"))),
        };
        Self::new(mode, folds, seed)
    }
}

pub fn tune(pool: &[(f64, bool)], mode: SelectorMode) -> Result<Tuned> {
    match mode {
        SelectorMode::Roc(criterion) => tune_threshold_roc_with(pool, criterion),
        SelectorMode::FBeta(beta) => tune_threshold_fbeta(pool, beta),
    }
}

/// Fold index of each of `n` examples: a seeded shuffle cut into `folds`
/// contiguous chunks whose sizes differ by at most one.
pub fn assign_folds(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0; n];
    let (base, extra) = (n / folds, n % folds);
    let mut pos = 0;
    for fold in 0..folds {
        let size = base + usize::from(fold < extra);
        for &i in &order[pos..pos + size] {
            fold_of[i] = fold;
        }
        pos += size;
    }
    fold_of
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    /// One result per input set, in input order.
    pub results: Vec<SelectionResult>,
    pub fold_of: Vec<usize>,
    pub fold_thresholds: Vec<Tuned>,
}

/// For each fold, tunes a threshold on the `(score, human label)` pairs of
/// every candidate in the other folds and selects within the held-out fold.
/// Candidates without a human label do not enter the tuning pool.
pub fn cross_validated_select(
    sets: &[CandidateSet],
    config: &SelectorConfig,
    exec: Execution,
) -> Result<CrossValidation> {
    if config.folds < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {}", config.folds)));
    }
    if sets.len() < config.folds {
        return Err(Error::TooFewExamples {
            examples: sets.len(),
            folds: config.folds,
        });
    }
    for c in sets.iter().flat_map(|s| s.candidates()) {
        c.require_score()?;
    }

    let fold_of = assign_folds(sets.len(), config.folds, config.seed);
    let folds: Vec<usize> = (0..config.folds).collect();
    let per_fold = exec.try_map(&folds, |&fold| {
        let pool: Vec<(f64, bool)> = sets
            .iter()
            .zip(&fold_of)
            .filter(|(_, &f)| f != fold)
            .flat_map(|(s, _)| s.candidates())
            .filter_map(|c| Some((c.score?, c.human_label?)))
            .collect();
        let tuned = tune(&pool, config.mode)?;
        let picks = sets
            .iter()
            .enumerate()
            .filter(|(i, _)| fold_of[*i] == fold)
            .map(|(i, s)| Ok((i, select(s, tuned.threshold)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok::<_, Error>((tuned, picks))
    })?;

    let mut slots: Vec<Option<SelectionResult>> = vec![None; sets.len()];
    let mut fold_thresholds = Vec::with_capacity(config.folds);
    for (tuned, picks) in per_fold {
        fold_thresholds.push(tuned);
        for (i, r) in picks {
            slots[i] = Some(r);
        }
    }
    Ok(CrossValidation {
        results: slots
            .into_iter()
            .map(|r| r.expect("every example belongs to one fold"))
            .collect(),
        fold_of,
        fold_thresholds,
    })
}
