//! Human faithfulness judgments.
//!
//! An output's score is the fraction of annotators who judged it faithful;
//! a system's score is the mean over its annotated examples. An output
//! counts as faithful for selection purposes when at least two thirds of
//! its annotators agree.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{malformed, open, parse_object, string_field};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedOutput {
    pub example_id: String,
    pub system_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    /// `true` means the annotator judged the summary faithful.
    pub judgments: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FaithfulnessScore(f64);

impl FaithfulnessScore {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(FaithfulnessScore(value))
        } else {
            Err(Error::OutOfRange {
                field: "faithfulness",
                value,
                range: "[0, 1]",
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

const MAJORITY: f64 = 2.0 / 3.0;

pub fn example_score(ann: &AnnotatedOutput) -> Result<FaithfulnessScore> {
    if ann.judgments.is_empty() {
        return Err(Error::NoJudgments);
    }
    let yes = ann.judgments.iter().filter(|&&j| j).count();
    Ok(FaithfulnessScore(yes as f64 / ann.judgments.len() as f64))
}

/// Faithful when at least two thirds of annotators said so.
pub fn binary_label(score: FaithfulnessScore) -> bool {
    score.0 >= MAJORITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemScore {
    pub system_id: String,
    pub mean_faithfulness: f64,
    pub mean_coverage: f64,
    pub n_examples: usize,
}

/// Averages faithfulness and coverage over one system's annotated examples.
/// `coverage` maps example id to the coverage of this system's output.
pub fn system_score(
    annotations: &[AnnotatedOutput],
    coverage: &HashMap<String, f64>,
) -> Result<SystemScore> {
    let first = annotations.first().ok_or(Error::EmptyInput)?;
    let mut faith = 0.0;
    let mut cov = 0.0;
    for ann in annotations {
        if ann.system_id != first.system_id {
            return Err(Error::MixedSystems(
                first.system_id.clone(),
                ann.system_id.clone(),
            ));
        }
        faith += example_score(ann)?.value();
        cov += coverage
            .get(&ann.example_id)
            .ok_or_else(|| Error::MissingCoverage(ann.example_id.clone()))?;
    }
    let n = annotations.len() as f64;
    Ok(SystemScore {
        system_id: first.system_id.clone(),
        mean_faithfulness: faith / n,
        mean_coverage: cov / n,
        n_examples: annotations.len(),
    })
}

/// Groups annotations by system, systems in order of first appearance.
pub fn group_by_system(annotations: &[AnnotatedOutput]) -> Vec<(String, Vec<AnnotatedOutput>)> {
    let mut order: Vec<(String, Vec<AnnotatedOutput>)> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for ann in annotations {
        let slot = *index.entry(ann.system_id.as_str()).or_insert_with(|| {
            order.push((ann.system_id.clone(), Vec::new()));
            order.len() - 1
        });
        order[slot].1.push(ann.clone());
    }
    order
}

/// Majority labels keyed by `(example_id, system_id)`.
pub fn label_index(annotations: &[AnnotatedOutput]) -> Result<HashMap<(String, String), bool>> {
    annotations
        .iter()
        .map(|a| {
            let label = binary_label(example_score(a)?);
            Ok(((a.example_id.clone(), a.system_id.clone()), label))
        })
        .collect()
}

/// Reads line-delimited records `{id, system, judgments[, summary]}`.
/// A second record for the same `(system, id)` is rejected.
pub fn read_annotations<R: BufRead>(reader: R) -> Result<Vec<AnnotatedOutput>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, text) in reader.lines().enumerate() {
        let line = i + 1;
        let text = text.map_err(|e| malformed(line, e.to_string()))?;
        let Some(obj) = parse_object(&text, line)? else {
            continue;
        };
        let example_id = string_field(&obj, "id", line)?;
        let system_id = string_field(&obj, "system", line)?;
        let summary = match obj.get("summary") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(malformed(line, "field `summary` is not a string")),
        };
        let judgments = match obj.get("judgments") {
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| v.as_bool())
                .collect::<Option<Vec<bool>>>()
                .ok_or_else(|| malformed(line, "`judgments` must hold booleans"))?,
            Some(_) => return Err(malformed(line, "`judgments` is not a list")),
            None => return Err(malformed(line, "missing field `judgments`")),
        };
        if judgments.is_empty() {
            return Err(malformed(line, "`judgments` is empty"));
        }
        if !seen.insert((system_id.clone(), example_id.clone())) {
            return Err(Error::DuplicateAnnotation {
                system: system_id,
                id: example_id,
            });
        }
        out.push(AnnotatedOutput {
            example_id,
            system_id,
            summary,
            judgments,
        });
    }
    Ok(out)
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<Vec<AnnotatedOutput>> {
    read_annotations(open(path.as_ref())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn ann(id: &str, system: &str, judgments: &[bool]) -> AnnotatedOutput {
        AnnotatedOutput {
            example_id: id.into(),
            system_id: system.into(),
            summary: None,
            judgments: judgments.to_vec(),
        }
    }

    #[test]
    fn example_scores() {
        let s = example_score(&ann("a", "s", &[true, true, false])).unwrap();
        assert_eq!(s.value(), 2.0 / 3.0);
        assert_eq!(example_score(&ann("a", "s", &[true; 3])).unwrap().value(), 1.0);
        assert_eq!(example_score(&ann("a", "s", &[false])).unwrap().value(), 0.0);
        assert!(matches!(example_score(&ann("a", "s", &[])), Err(Error::NoJudgments)));
    }

    #[test]
    fn majority_label() {
        let score = |k: usize, n: usize| FaithfulnessScore(k as f64 / n as f64);
        assert!(binary_label(score(2, 3)));
        assert!(!binary_label(score(1, 3)));
        assert!(binary_label(score(3, 3)));
        assert!(binary_label(score(4, 6)));
        assert!(!binary_label(score(3, 5)));
    }

    #[test]
    fn system_means() {
        let anns = [ann("a", "s", &[true; 3]), ann("b", "s", &[true, true, false])];
        let cov: HashMap<String, f64> = [("a".into(), 0.6), ("b".into(), 0.8)].into();
        let s = system_score(&anns, &cov).unwrap();
        assert!((s.mean_faithfulness - 5.0 / 6.0).abs() < 1e-15);
        assert!((s.mean_coverage - 0.7).abs() < 1e-15);
        assert_eq!(s.n_examples, 2);

        let s = system_score(&anns[1..], &cov).unwrap();
        assert_eq!(s.mean_faithfulness, 2.0 / 3.0);
        assert_eq!(s.mean_coverage, 0.8);
    }

    #[test]
    fn two_hundred_examples_average_to_display_value() {
        // 100 unanimous + 100 two-of-three outputs average to 5/6 = 83.33%.
        let anns: Vec<AnnotatedOutput> = (0..200)
            .map(|i| {
                let j = if i % 2 == 0 { [true; 3] } else { [true, false, true] };
                ann(&format!("e{i}"), "baseline", &j)
            })
            .collect();
        let cov: HashMap<String, f64> = (0..200).map(|i| (format!("e{i}"), 0.7612)).collect();
        let s = system_score(&anns, &cov).unwrap();
        assert_eq!(format!("{:.2}", s.mean_faithfulness * 100.0), "83.33");
    }

    #[test]
    fn system_errors() {
        let cov: HashMap<String, f64> = [("a".into(), 0.6)].into();
        let mixed = [ann("a", "s", &[true]), ann("a", "t", &[true])];
        assert!(matches!(system_score(&mixed, &cov), Err(Error::MixedSystems(..))));
        let missing = [ann("zz", "s", &[true])];
        assert!(matches!(system_score(&missing, &cov), Err(Error::MissingCoverage(id)) if id == "zz"));
    }

    #[test]
    fn reads_records_and_rejects_duplicates() {
        let text = r#"{"id":"a","system":"q1","judgments":[true,false,true]}
{"id":"a","system":"q2","judgments":[true,true,true],"summary":"x"}
"#;
        let anns = read_annotations(Cursor::new(text)).unwrap();
        assert_eq!(anns.len(), 2);
        assert_eq!(anns[1].summary.as_deref(), Some("x"));
        let groups = group_by_system(&anns);
        assert_eq!(groups[0].0, "q1");

        let dup = format!("{text}{{\"id\":\"a\",\"system\":\"q1\",\"judgments\":[true]}}\n");
        assert!(matches!(
            read_annotations(Cursor::new(dup)),
            Err(Error::DuplicateAnnotation { .. })
        ));
        let bad = "{\"id\":\"a\",\"system\":\"q1\",\"judgments\":[1]}\n";
        assert!(matches!(
            read_annotations(Cursor::new(bad)),
            Err(Error::MalformedRecord { line: 1, .. })
        ));
    }

    proptest! {
        #[test]
        fn system_mean_within_example_range(
            judgments in prop::collection::vec(prop::collection::vec(any::<bool>(), 1..6), 1..40)
        ) {
            let anns: Vec<AnnotatedOutput> = judgments
                .iter()
                .enumerate()
                .map(|(i, j)| ann(&i.to_string(), "s", j))
                .collect();
            let cov: HashMap<String, f64> = (0..anns.len()).map(|i| (i.to_string(), 0.5)).collect();
            let scores: Vec<f64> = anns.iter().map(|a| example_score(a).unwrap().value()).collect();
            let s = system_score(&anns, &cov).unwrap();
            let lo = scores.iter().cloned().fold(1.0, f64::min);
            let hi = scores.iter().cloned().fold(0.0, f64::max);
            prop_assert!(s.mean_faithfulness >= lo - 1e-12 && s.mean_faithfulness <= hi + 1e-12);
        }

        #[test]
        fn label_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(!binary_label(FaithfulnessScore(lo)) || binary_label(FaithfulnessScore(hi)));
        }
    }
}
