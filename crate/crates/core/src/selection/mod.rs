//! Per-example choice among candidate summaries from several systems.
//!
//! Two families of selectors live here: the human-judgment oracles and the
//! learned selector, which picks the most abstractive candidate whose
//! faithfulness score clears a threshold tuned by cross-validation.

mod cv;
mod oracle;
mod threshold;

use std::collections::{HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::annotations::{binary_label, example_score, AnnotatedOutput};
use crate::corpus::{malformed, open, parse_object, string_field, Example};
use crate::error::{Error, Result};
use crate::text_metrics::measure_text;

pub use cv::{assign_folds, cross_validated_select, tune, CrossValidation, SelectorConfig, SelectorMode};
pub use oracle::{
    oracle_bf, oracle_bfe, oracle_qfe, run_oracle, OracleKind, OracleSystems,
};
pub use threshold::{
    f_beta, tune_threshold_fbeta, tune_threshold_roc, tune_threshold_roc_with, validate_beta,
    RocCriterion, Tuned, MAX_BETA,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub example_id: String,
    pub system_id: String,
    pub summary: String,
    pub coverage: f64,
    /// Pluggable faithfulness score, e.g. from an external classifier.
    pub score: Option<f64>,
    /// Majority human judgment.
    pub human_label: Option<bool>,
    /// Fraction of annotators judging the output faithful.
    pub human_score: Option<f64>,
}

impl Candidate {
    pub fn new(example_id: impl Into<String>, system_id: impl Into<String>, coverage: f64) -> Self {
        Candidate {
            example_id: example_id.into(),
            system_id: system_id.into(),
            summary: String::new(),
            coverage,
            score: None,
            human_label: None,
            human_score: None,
        }
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = Some(score);
        self
    }

    /// Sets both the human score and the majority label derived from it.
    pub fn with_human_score(mut self, score: f64) -> Self {
        self.human_score = Some(score);
        self.human_label = Some(score >= 2.0 / 3.0);
        self
    }

    pub fn with_label(mut self, label: bool) -> Self {
        self.human_label = Some(label);
        self
    }

    pub(crate) fn require_score(&self) -> Result<f64> {
        self.score.ok_or_else(|| Error::MissingScore {
            id: self.example_id.clone(),
            system: self.system_id.clone(),
        })
    }

    pub(crate) fn require_label(&self) -> Result<bool> {
        self.human_label.ok_or_else(|| Error::MissingLabel {
            id: self.example_id.clone(),
            system: self.system_id.clone(),
        })
    }
}

/// All candidates for one example; systems are distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    example_id: String,
    candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn new(candidates: Vec<Candidate>) -> Result<Self> {
        let first = candidates.first().ok_or(Error::EmptyInput)?;
        let example_id = first.example_id.clone();
        let mut systems = HashSet::new();
        for c in &candidates {
            if c.example_id != example_id {
                return Err(Error::InvalidConfig(format!(
                    "candidate set mixes examples `{example_id}` and `{}`",
                    c.example_id
                )));
            }
            if !(0.0..=1.0).contains(&c.coverage) {
                return Err(Error::OutOfRange {
                    field: "coverage",
                    value: c.coverage,
                    range: "[0, 1]",
                });
            }
            if !systems.insert(c.system_id.as_str()) {
                return Err(Error::DuplicateCandidate {
                    system: c.system_id.clone(),
                    id: example_id,
                });
            }
        }
        Ok(CandidateSet {
            example_id,
            candidates,
        })
    }

    pub fn example_id(&self) -> &str {
        &self.example_id
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn candidates_mut(&mut self) -> &mut [Candidate] {
        &mut self.candidates
    }

    pub fn get(&self, system: &str) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.system_id == system)
    }

    pub(crate) fn require(&self, system: &str) -> Result<&Candidate> {
        self.get(system).ok_or_else(|| Error::MissingCandidate {
            id: self.example_id.clone(),
            system: system.to_owned(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub example_id: String,
    pub chosen_system: String,
    pub chosen_summary: String,
    pub coverage: f64,
    /// `None` for oracle choices, which use no threshold.
    pub threshold_used: Option<f64>,
    /// No candidate cleared the threshold; the most extractive was taken.
    pub fallback: bool,
    pub human_label: Option<bool>,
    pub human_score: Option<f64>,
}

impl SelectionResult {
    pub(crate) fn from_candidate(c: &Candidate, threshold: Option<f64>, fallback: bool) -> Self {
        SelectionResult {
            example_id: c.example_id.clone(),
            chosen_system: c.system_id.clone(),
            chosen_summary: c.summary.clone(),
            coverage: c.coverage,
            threshold_used: threshold,
            fallback,
            human_label: c.human_label,
            human_score: c.human_score,
        }
    }
}

/// Most abstractive candidate whose score is at least `threshold`, or the
/// most extractive one (flagged as fallback) when none passes. Equal
/// coverages keep the earlier candidate.
pub fn select(set: &CandidateSet, threshold: f64) -> Result<SelectionResult> {
    let mut best_pass: Option<&Candidate> = None;
    let mut most_extractive: Option<&Candidate> = None;
    for c in set.candidates() {
        let score = c.require_score()?;
        if score >= threshold && best_pass.is_none_or(|b| c.coverage < b.coverage) {
            best_pass = Some(c);
        }
        if most_extractive.is_none_or(|b| c.coverage > b.coverage) {
            most_extractive = Some(c);
        }
    }
    Ok(match best_pass {
        Some(c) => SelectionResult::from_candidate(c, Some(threshold), false),
        None => SelectionResult::from_candidate(
            most_extractive.expect("candidate sets are nonempty"),
            Some(threshold),
            true,
        ),
    })
}

/// Systems ranked from most abstractive to most extractive by their mean
/// candidate coverage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemOrder {
    systems: Vec<(String, f64)>,
}

impl SystemOrder {
    pub fn from_means(mut systems: Vec<(String, f64)>) -> Self {
        systems.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        SystemOrder { systems }
    }

    pub fn by_mean_coverage(sets: &[CandidateSet]) -> Self {
        let mut sums: HashMap<&str, (f64, usize)> = HashMap::new();
        for c in sets.iter().flat_map(|s| s.candidates()) {
            let e = sums.entry(c.system_id.as_str()).or_default();
            e.0 += c.coverage;
            e.1 += 1;
        }
        Self::from_means(
            sums.into_iter()
                .map(|(s, (sum, n))| (s.to_owned(), sum / n as f64))
                .collect(),
        )
    }

    pub fn systems(&self) -> &[(String, f64)] {
        &self.systems
    }

    pub fn mean_coverage(&self, system: &str) -> Option<f64> {
        self.systems.iter().find(|s| s.0 == system).map(|s| s.1)
    }

    /// Position in the order; unknown systems sort last.
    pub fn rank(&self, system: &str) -> usize {
        self.systems
            .iter()
            .position(|s| s.0 == system)
            .unwrap_or(usize::MAX)
    }

    /// The system with the smallest mean coverage strictly above `system`'s.
    pub fn more_extractive_than(&self, system: &str) -> Option<&str> {
        let own = self.mean_coverage(system)?;
        self.systems
            .iter()
            .find(|s| s.1 > own)
            .map(|s| s.0.as_str())
    }

    /// The system with the largest mean coverage strictly below `system`'s.
    pub fn more_abstractive_than(&self, system: &str) -> Option<&str> {
        let own = self.mean_coverage(system)?;
        self.systems
            .iter()
            .rev()
            .find(|s| s.1 < own)
            .map(|s| s.0.as_str())
    }
}

/// Mean coverage of the selected outputs, and their mean human faithfulness
/// when every selected output carries a human score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub n_examples: usize,
    pub mean_coverage: f64,
    pub mean_faithfulness: Option<f64>,
    pub fallbacks: usize,
}

impl SelectionSummary {
    pub fn from_results(results: &[SelectionResult]) -> Self {
        let n = results.len();
        let mean = |sum: f64| if n == 0 { 0.0 } else { sum / n as f64 };
        let mean_faithfulness = results
            .iter()
            .map(|r| r.human_score)
            .sum::<Option<f64>>()
            .filter(|_| n > 0)
            .map(mean);
        SelectionSummary {
            n_examples: n,
            mean_coverage: mean(results.iter().map(|r| r.coverage).sum()),
            mean_faithfulness,
            fallbacks: results.iter().filter(|r| r.fallback).count(),
        }
    }
}

/// Where candidate faithfulness scores come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scorer {
    /// The `score` field of the candidates file.
    #[default]
    File,
    /// The candidate's own coverage. A naive stand-in for a real scorer.
    CoverageDemo,
}

impl Scorer {
    pub fn apply(self, sets: &mut [CandidateSet]) {
        if self == Scorer::CoverageDemo {
            for c in sets.iter_mut().flat_map(|s| s.candidates.iter_mut()) {
                c.score = Some(c.coverage);
            }
        }
    }
}

impl std::str::FromStr for Scorer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "file" => Ok(Scorer::File),
            "coverage-demo" => Ok(Scorer::CoverageDemo),
            other => Err(Error::InvalidConfig(format!("unknown scorer `{other}`"))),
        }
    }
}

/// Attaches human scores and labels from annotations, joined on
/// `(example id, system)`. Returns the number of candidates labeled.
pub fn attach_annotations(sets: &mut [CandidateSet], annotations: &[AnnotatedOutput]) -> Result<usize> {
    let mut by_key: HashMap<(&str, &str), &AnnotatedOutput> = HashMap::new();
    for a in annotations {
        by_key.insert((a.example_id.as_str(), a.system_id.as_str()), a);
    }
    let mut joined = 0;
    for c in sets.iter_mut().flat_map(|s| s.candidates.iter_mut()) {
        if let Some(a) = by_key.get(&(c.example_id.as_str(), c.system_id.as_str())) {
            let score = example_score(a)?;
            c.human_score = Some(score.value());
            c.human_label = Some(binary_label(score));
            joined += 1;
        }
    }
    Ok(joined)
}

/// Reads candidate records `{id, system, summary, score?, coverage?}` and
/// groups them into sets in order of first appearance. Candidates without a
/// `coverage` field are measured against the article of the same id in
/// `corpus`.
pub fn read_candidates<R: BufRead>(reader: R, corpus: Option<&[Example]>) -> Result<Vec<CandidateSet>> {
    let articles: HashMap<&str, &str> = corpus
        .unwrap_or_default()
        .iter()
        .map(|e| (e.id.as_str(), e.article.as_str()))
        .collect();
    let mut groups: Vec<Vec<Candidate>> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (i, text) in reader.lines().enumerate() {
        let line = i + 1;
        let text = text.map_err(|e| malformed(line, e.to_string()))?;
        let Some(obj) = parse_object(&text, line)? else {
            continue;
        };
        let id = string_field(&obj, "id", line)?;
        let system = string_field(&obj, "system", line)?;
        let summary = string_field(&obj, "summary", line)?;
        let optional_number = |field: &str| -> Result<Option<f64>> {
            match obj.get(field) {
                None | Some(Value::Null) => Ok(None),
                Some(v) => v
                    .as_f64()
                    .map(Some)
                    .ok_or_else(|| malformed(line, format!("field `{field}` is not a number"))),
            }
        };
        let score = optional_number("score")?;
        let coverage = match optional_number("coverage")? {
            Some(c) if (0.0..=1.0).contains(&c) => c,
            Some(c) => return Err(malformed(line, format!("coverage {c} outside [0, 1]"))),
            None => {
                let article = articles.get(id.as_str()).ok_or_else(|| {
                    malformed(line, format!("no coverage given and no article for `{id}`"))
                })?;
                measure_text(article, &summary)
                    .map_err(|e| malformed(line, e.to_string()))?
                    .2
                    .coverage
            }
        };
        let slot = *index.entry(id.clone()).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        if groups[slot].iter().any(|c| c.system_id == system) {
            return Err(Error::DuplicateCandidate { system, id });
        }
        groups[slot].push(Candidate {
            example_id: id,
            system_id: system,
            summary,
            coverage,
            score,
            human_label: None,
            human_score: None,
        });
    }
    groups.into_iter().map(CandidateSet::new).collect()
}

pub fn load_candidates(path: impl AsRef<Path>, corpus: Option<&[Example]>) -> Result<Vec<CandidateSet>> {
    read_candidates(open(path.as_ref())?, corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quartile_set() -> CandidateSet {
        CandidateSet::new(vec![
            Candidate::new("e", "Q1", 0.50).with_score(0.3),
            Candidate::new("e", "Q2", 0.61).with_score(0.7),
            Candidate::new("e", "Q3", 0.74).with_score(0.9),
            Candidate::new("e", "Q4", 0.87).with_score(0.95),
        ])
        .unwrap()
    }

    #[test]
    fn select_examples() {
        let set = quartile_set();
        let r = select(&set, 0.6).unwrap();
        assert_eq!((r.chosen_system.as_str(), r.fallback), ("Q2", false));
        let r = select(&set, 0.99).unwrap();
        assert_eq!((r.chosen_system.as_str(), r.fallback), ("Q4", true));
        let r = select(&set, 0.0).unwrap();
        assert_eq!(r.chosen_system, "Q1");
        let r = select(&set, 0.95).unwrap();
        assert_eq!((r.chosen_system.as_str(), r.fallback), ("Q4", false));
        let r = select(&set, f64::NEG_INFINITY).unwrap();
        assert_eq!(r.chosen_system, "Q1");
    }

    #[test]
    fn select_requires_scores() {
        let set = CandidateSet::new(vec![
            Candidate::new("e", "Q1", 0.5).with_score(0.3),
            Candidate::new("e", "Q2", 0.6),
        ])
        .unwrap();
        assert!(matches!(select(&set, 0.1), Err(Error::MissingScore { system, .. }) if system == "Q2"));
    }

    #[test]
    fn candidate_set_validation() {
        assert!(matches!(CandidateSet::new(vec![]), Err(Error::EmptyInput)));
        assert!(matches!(
            CandidateSet::new(vec![Candidate::new("e", "Q1", 0.5), Candidate::new("e", "Q1", 0.6)]),
            Err(Error::DuplicateCandidate { .. })
        ));
        assert!(CandidateSet::new(vec![Candidate::new("e", "Q1", 0.5), Candidate::new("f", "Q2", 0.6)]).is_err());
        assert!(CandidateSet::new(vec![Candidate::new("e", "Q1", 1.5)]).is_err());
    }

    #[test]
    fn system_order_neighbors() {
        let order = SystemOrder::from_means(vec![
            ("Q4".into(), 0.87),
            ("baseline".into(), 0.76),
            ("Q1".into(), 0.50),
            ("Q3".into(), 0.74),
            ("Q2".into(), 0.61),
        ]);
        assert_eq!(order.more_extractive_than("baseline"), Some("Q4"));
        assert_eq!(order.more_abstractive_than("baseline"), Some("Q3"));
        assert_eq!(order.more_extractive_than("Q4"), None);
        assert_eq!(order.more_abstractive_than("Q1"), None);
        assert_eq!(order.rank("Q1"), 0);
        assert_eq!(order.rank("nope"), usize::MAX);
    }

    #[test]
    fn reads_candidates_with_and_without_coverage() {
        let corpus = vec![Example {
            id: "e1".into(),
            article: "the cat sat on the mat".into(),
            summary: "cat on mat".into(),
        }];
        let text = r#"{"id":"e1","system":"Q1","summary":"a cat sat","score":0.4}
{"id":"e1","system":"Q4","summary":"the cat sat","coverage":1.0,"score":0.9}
{"id":"e2","system":"Q1","summary":"x","coverage":0.0}
"#;
        let sets = read_candidates(text.as_bytes(), Some(&corpus)).unwrap();
        assert_eq!(sets.len(), 2);
        assert!((sets[0].get("Q1").unwrap().coverage - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(sets[1].candidates()[0].score, None);

        let no_article = "{\"id\":\"zz\",\"system\":\"Q1\",\"summary\":\"x\"}\n";
        assert!(matches!(
            read_candidates(no_article.as_bytes(), Some(&corpus)),
            Err(Error::MalformedRecord { line: 1, .. })
        ));
        let dup = format!("{text}{{\"id\":\"e2\",\"system\":\"Q1\",\"summary\":\"y\",\"coverage\":0.5}}\n");
        assert!(matches!(
            read_candidates(dup.as_bytes(), Some(&corpus)),
            Err(Error::DuplicateCandidate { .. })
        ));
    }

    #[test]
    fn annotations_join() {
        let mut sets = vec![quartile_set()];
        let anns = vec![AnnotatedOutput {
            example_id: "e".into(),
            system_id: "Q2".into(),
            summary: None,
            judgments: vec![true, false, true],
        }];
        assert_eq!(attach_annotations(&mut sets, &anns).unwrap(), 1);
        let q2 = sets[0].get("Q2").unwrap();
        assert_eq!(q2.human_label, Some(true));
        assert_eq!(q2.human_score, Some(2.0 / 3.0));
        assert_eq!(sets[0].get("Q1").unwrap().human_label, None);
    }

    #[test]
    fn coverage_demo_scorer() {
        let mut sets = vec![CandidateSet::new(vec![Candidate::new("e", "Q1", 0.4)]).unwrap()];
        Scorer::CoverageDemo.apply(&mut sets);
        assert_eq!(sets[0].candidates()[0].score, Some(0.4));
    }

    #[test]
    fn summary_block() {
        let set = quartile_set();
        let results = vec![select(&set, 0.6).unwrap(), select(&set, 0.99).unwrap()];
        let s = SelectionSummary::from_results(&results);
        assert!((s.mean_coverage - (0.61 + 0.87) / 2.0).abs() < 1e-15);
        assert_eq!(s.fallbacks, 1);
        assert_eq!(s.mean_faithfulness, None);
    }

    fn arb_set() -> impl Strategy<Value = CandidateSet> {
        prop::collection::vec((0.0f64..=1.0, 0u32..=100), 1..6).prop_map(|v| {
            CandidateSet::new(
                v.into_iter()
                    .enumerate()
                    .map(|(i, (cov, score))| {
                        Candidate::new("e", format!("s{i}"), cov).with_score(score as f64 / 100.0)
                    })
                    .collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn raising_threshold_never_lowers_coverage(set in arb_set(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let r_lo = select(&set, lo).unwrap();
            let r_hi = select(&set, hi).unwrap();
            prop_assert!(r_hi.coverage >= r_lo.coverage);
            if !r_lo.fallback {
                prop_assert!(set.get(&r_lo.chosen_system).unwrap().score.unwrap() >= lo);
            }
        }

        #[test]
        fn monotone_score_transform_keeps_choice(set in arb_set(), t in 0u32..=100) {
            let t = t as f64 / 100.0;
            let f = |x: f64| (3.0 * x).exp() - 2.0;
            let mut mapped = set.clone();
            for c in mapped.candidates_mut() {
                c.score = c.score.map(f);
            }
            prop_assert_eq!(select(&set, t).unwrap().chosen_system, select(&mapped, f(t)).unwrap().chosen_system);
        }
    }
}
