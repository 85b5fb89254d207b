//! Oracle selectors driven by human judgments.
//!
//! * `bf`: the baseline output when it is faithful, else the output of the
//!   next more extractive system.
//! * `bfe`: like `bf`, but a faithful baseline is replaced by the next more
//!   abstractive system's output whenever that one is faithful too.
//! * `qfe`: among the quartile systems, the most faithful output, and among
//!   those the most abstractive.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{CandidateSet, Candidate, SelectionResult, SystemOrder};
use crate::error::{Error, Result};

pub fn oracle_bf<'a>(baseline: &'a Candidate, more_extractive: &'a Candidate) -> Result<&'a Candidate> {
    if baseline.require_label()? {
        Ok(baseline)
    } else {
        Ok(more_extractive)
    }
}

pub fn oracle_bfe<'a>(
    baseline: &'a Candidate,
    more_abstractive: &'a Candidate,
    more_extractive: &'a Candidate,
) -> Result<&'a Candidate> {
    if !baseline.require_label()? {
        return Ok(more_extractive);
    }
    if more_abstractive.require_label()? {
        Ok(more_abstractive)
    } else {
        Ok(baseline)
    }
}

/// Highest human score, then lowest coverage, then the system ranked most
/// abstractive in `order`.
pub fn oracle_qfe<'a, I>(candidates: I, order: &SystemOrder) -> Result<&'a Candidate>
where
    I: IntoIterator<Item = &'a Candidate>,
{
    let mut best: Option<(&Candidate, f64)> = None;
    for c in candidates {
        let score = c.human_score.ok_or_else(|| Error::MissingScore {
            id: c.example_id.clone(),
            system: c.system_id.clone(),
        })?;
        let better = match best {
            None => true,
            Some((b, bs)) => score
                .total_cmp(&bs)
                .then_with(|| b.coverage.total_cmp(&c.coverage))
                .then_with(|| order.rank(&b.system_id).cmp(&order.rank(&c.system_id)))
                == Ordering::Greater,
        };
        if better {
            best = Some((c, score));
        }
    }
    best.map(|(c, _)| c).ok_or(Error::EmptyInput)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    Bf,
    Bfe,
    Qfe,
}

impl std::str::FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bf" => Ok(OracleKind::Bf),
            "bfe" => Ok(OracleKind::Bfe),
            "qfe" => Ok(OracleKind::Qfe),
            other => Err(Error::InvalidConfig(format!("unknown oracle `{other}`"))),
        }
    }
}

/// Which systems the oracles consult. Unpinned neighbors are resolved from
/// mean coverage; unpinned quartiles are every system except the baseline.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleSystems {
    pub baseline: String,
    pub more_abstractive: Option<String>,
    pub more_extractive: Option<String>,
    pub quartiles: Option<Vec<String>>,
}

impl OracleSystems {
    pub fn new(baseline: impl Into<String>) -> Self {
        OracleSystems {
            baseline: baseline.into(),
            ..Default::default()
        }
    }

    fn resolve<'a>(
        pinned: &'a Option<String>,
        found: Option<&'a str>,
        what: &str,
        baseline: &str,
    ) -> Result<&'a str> {
        pinned
            .as_deref()
            .or(found)
            .ok_or_else(|| Error::InvalidConfig(format!("no system is {what} than `{baseline}`")))
    }
}

/// Applies an oracle to every candidate set.
pub fn run_oracle(sets: &[CandidateSet], kind: OracleKind, systems: &OracleSystems) -> Result<Vec<SelectionResult>> {
    let order = SystemOrder::by_mean_coverage(sets);
    let base = systems.baseline.as_str();
    if kind != OracleKind::Qfe && order.mean_coverage(base).is_none() {
        return Err(Error::InvalidConfig(format!("baseline system `{base}` has no candidates")));
    }
    let extractive = || {
        OracleSystems::resolve(&systems.more_extractive, order.more_extractive_than(base), "more extractive", base)
    };
    let abstractive = || {
        OracleSystems::resolve(&systems.more_abstractive, order.more_abstractive_than(base), "more abstractive", base)
    };

    match kind {
        OracleKind::Bf => {
            let ext = extractive()?;
            sets.iter()
                .map(|s| {
                    let c = oracle_bf(s.require(base)?, s.require(ext)?)?;
                    Ok(SelectionResult::from_candidate(c, None, false))
                })
                .collect()
        }
        OracleKind::Bfe => {
            let (abs, ext) = (abstractive()?, extractive()?);
            sets.iter()
                .map(|s| {
                    let c = oracle_bfe(s.require(base)?, s.require(abs)?, s.require(ext)?)?;
                    Ok(SelectionResult::from_candidate(c, None, false))
                })
                .collect()
        }
        OracleKind::Qfe => sets
            .iter()
            .map(|s| {
                let c = match &systems.quartiles {
                    Some(q) => {
                        let pool = q.iter().map(|sys| s.require(sys)).collect::<Result<Vec<_>>>()?;
                        oracle_qfe(pool, &order)?
                    }
                    None => oracle_qfe(s.candidates().iter().filter(|c| c.system_id != base), &order)?,
                };
                Ok(SelectionResult::from_candidate(c, None, false))
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeled(system: &str, cov: f64, label: bool) -> Candidate {
        Candidate::new("e", system, cov).with_label(label)
    }

    fn scored(system: &str, cov: f64, score: f64) -> Candidate {
        Candidate::new("e", system, cov).with_human_score(score)
    }

    fn order() -> SystemOrder {
        SystemOrder::from_means(vec![
            ("Q1".into(), 0.5),
            ("Q2".into(), 0.6),
            ("Q3".into(), 0.7),
            ("baseline".into(), 0.76),
            ("Q4".into(), 0.9),
        ])
    }

    #[test]
    fn bf_branches() {
        let q4 = labeled("Q4", 0.9, true);
        let good = labeled("baseline", 0.76, true);
        let bad = labeled("baseline", 0.76, false);
        assert_eq!(oracle_bf(&good, &q4).unwrap().system_id, "baseline");
        assert_eq!(oracle_bf(&bad, &q4).unwrap().system_id, "Q4");
        let unlabeled = Candidate::new("e", "baseline", 0.76);
        assert!(matches!(oracle_bf(&unlabeled, &q4), Err(Error::MissingLabel { .. })));
    }

    #[test]
    fn bfe_branches() {
        let q4 = Candidate::new("e", "Q4", 0.9);
        let good = labeled("baseline", 0.76, true);
        let bad = labeled("baseline", 0.76, false);
        let q3_good = labeled("Q3", 0.7, true);
        let q3_bad = labeled("Q3", 0.7, false);
        assert_eq!(oracle_bfe(&good, &q3_good, &q4).unwrap().system_id, "Q3");
        assert_eq!(oracle_bfe(&good, &q3_bad, &q4).unwrap().system_id, "baseline");
        assert_eq!(oracle_bfe(&bad, &q3_good, &q4).unwrap().system_id, "Q4");
        // an unfaithful baseline never consults the abstractive label
        let q3_unlabeled = Candidate::new("e", "Q3", 0.7);
        assert_eq!(oracle_bfe(&bad, &q3_unlabeled, &q4).unwrap().system_id, "Q4");
        assert!(matches!(
            oracle_bfe(&good, &q3_unlabeled, &q4),
            Err(Error::MissingLabel { .. })
        ));
    }

    #[test]
    fn qfe_prefers_faithfulness_then_abstractiveness() {
        let cands = [
            scored("Q1", 0.5, 1.0 / 3.0),
            scored("Q2", 0.6, 1.0),
            scored("Q3", 0.7, 1.0),
            scored("Q4", 0.9, 1.0),
        ];
        assert_eq!(oracle_qfe(&cands, &order()).unwrap().system_id, "Q2");

        let equal = [scored("Q3", 0.7, 2.0 / 3.0), scored("Q1", 0.5, 2.0 / 3.0), scored("Q4", 0.9, 2.0 / 3.0)];
        assert_eq!(oracle_qfe(&equal, &order()).unwrap().system_id, "Q1");

        // equal score and coverage: the system ranked more abstractive wins
        let tied = [scored("Q3", 0.6, 1.0), scored("Q2", 0.6, 1.0)];
        assert_eq!(oracle_qfe(&tied, &order()).unwrap().system_id, "Q2");

        let single = [scored("Q4", 0.9, 0.0)];
        assert_eq!(oracle_qfe(&single, &order()).unwrap().system_id, "Q4");

        let missing = [Candidate::new("e", "Q1", 0.5)];
        assert!(matches!(oracle_qfe(&missing, &order()), Err(Error::MissingScore { .. })));
        assert!(matches!(oracle_qfe(&[], &order()), Err(Error::EmptyInput)));
    }

    #[test]
    fn run_resolves_neighbors_by_mean_coverage() {
        let set = |id: &str, base_label: bool| {
            CandidateSet::new(vec![
                Candidate::new(id, "Q1", 0.5).with_human_score(1.0),
                Candidate::new(id, "Q2", 0.6).with_human_score(0.0),
                Candidate::new(id, "Q3", 0.7).with_human_score(1.0),
                Candidate::new(id, "Q4", 0.9).with_human_score(1.0),
                Candidate::new(id, "baseline", 0.76).with_human_score(if base_label { 1.0 } else { 0.0 }),
            ])
            .unwrap()
        };
        let sets = vec![set("a", true), set("b", false)];
        let systems = OracleSystems::new("baseline");

        let bf = run_oracle(&sets, OracleKind::Bf, &systems).unwrap();
        assert_eq!(bf[0].chosen_system, "baseline");
        assert_eq!(bf[1].chosen_system, "Q4");

        let bfe = run_oracle(&sets, OracleKind::Bfe, &systems).unwrap();
        assert_eq!(bfe[0].chosen_system, "Q3");
        assert_eq!(bfe[1].chosen_system, "Q4");

        let qfe = run_oracle(&sets, OracleKind::Qfe, &systems).unwrap();
        assert!(qfe.iter().all(|r| r.chosen_system == "Q1"));

        let pinned = OracleSystems {
            more_abstractive: Some("Q2".into()),
            ..OracleSystems::new("baseline")
        };
        let bfe = run_oracle(&sets, OracleKind::Bfe, &pinned).unwrap();
        assert_eq!(bfe[0].chosen_system, "baseline");

        let top = OracleSystems::new("Q4");
        assert!(matches!(run_oracle(&sets, OracleKind::Bf, &top), Err(Error::InvalidConfig(_))));
        let unknown = OracleSystems::new("nope");
        assert!(matches!(run_oracle(&sets, OracleKind::Bf, &unknown), Err(Error::InvalidConfig(_))));
    }
}
