//! Corpus ingestion and extractiveness-quartile splitting.
//!
//! Corpora are line-delimited JSON objects with string fields `id`,
//! `article` and `summary`. Quartiles are formed from the reference
//! summaries' coverage using nearest-rank 25th/50th/75th percentiles `a`,
//! `b`, `c`:
//!
//! ```text
//! q1 = { x | e_x <= a }      q2 = { x | a < e_x <= b }
//! q3 = { x | b < e_x <= c }  q4 = { x | e_x > c }
//! ```

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::parallel::Execution;
use crate::text_metrics::{measure_text, ExtractivenessMetrics};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub article: String,
    pub summary: String,
}

/// Extracts a required non-empty string field from a JSON object line.
pub(crate) fn string_field(obj: &serde_json::Map<String, Value>, field: &str, line: usize) -> Result<String> {
    match obj.get(field) {
        Some(Value::String(s)) if !s.is_empty() => Ok(s.clone()),
        Some(Value::String(_)) => Err(malformed(line, format!("field `{field}` is empty"))),
        Some(_) => Err(malformed(line, format!("field `{field}` is not a string"))),
        None => Err(malformed(line, format!("missing field `{field}`"))),
    }
}

pub(crate) fn malformed(line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedRecord {
        line,
        reason: reason.into(),
    }
}

/// Parses one line as a JSON object. `None` for blank lines.
pub(crate) fn parse_object(text: &str, line: usize) -> Result<Option<serde_json::Map<String, Value>>> {
    if text.trim().is_empty() {
        return Ok(None);
    }
    match serde_json::from_str::<Value>(text) {
        Ok(Value::Object(obj)) => Ok(Some(obj)),
        Ok(_) => Err(malformed(line, "record is not a JSON object")),
        Err(e) => Err(malformed(line, e.to_string())),
    }
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Streaming corpus reader yielding `(line_number, Example)` in file order.
///
/// Only the ids seen so far are retained, for duplicate detection.
pub struct CorpusReader<R> {
    lines: std::io::Lines<R>,
    line: usize,
    seen: HashSet<String>,
    failed: bool,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R) -> Self {
        CorpusReader {
            lines: reader.lines(),
            line: 0,
            seen: HashSet::new(),
            failed: false,
        }
    }

    fn parse(&mut self, text: &str) -> Result<Option<Example>> {
        let Some(obj) = parse_object(text, self.line)? else {
            return Ok(None);
        };
        let id = string_field(&obj, "id", self.line)?;
        let article = string_field(&obj, "article", self.line)?;
        let summary = string_field(&obj, "summary", self.line)?;
        if !self.seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        Ok(Some(Example {
            id,
            article,
            summary,
        }))
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<(usize, Example)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(malformed(self.line + 1, e.to_string())));
                }
            };
            self.line += 1;
            match self.parse(&text) {
                Ok(Some(ex)) => return Some(Ok((self.line, ex))),
                Ok(None) => continue,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
        }
    }
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<CorpusReader<BufReader<File>>> {
    Ok(CorpusReader::new(open(path.as_ref())?))
}

/// Reads a whole corpus into memory.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<Example>> {
    load_corpus(path)?.map(|r| r.map(|(_, ex)| ex)).collect()
}

/// Per-example extractiveness together with the token lengths needed for
/// quartile statistics. Holds no text beyond the id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleMeasure {
    pub id: String,
    pub coverage: f64,
    pub density: f64,
    pub article_len: usize,
    pub summary_len: usize,
}

impl ExampleMeasure {
    pub fn metrics(&self) -> ExtractivenessMetrics {
        ExtractivenessMetrics {
            coverage: self.coverage,
            density: self.density,
            summary_len: self.summary_len,
        }
    }
}

pub fn measure_example(example: &Example) -> Result<ExampleMeasure> {
    let (article, _, m) = measure_text(&example.article, &example.summary)?;
    Ok(ExampleMeasure {
        id: example.id.clone(),
        coverage: m.coverage,
        density: m.density,
        article_len: article.len(),
        summary_len: m.summary_len,
    })
}

/// Measures a batch, preserving input order. Each result stays paired with
/// its example so callers can report the failing record.
pub fn measure_batch(examples: &[Example], exec: Execution) -> Vec<Result<ExampleMeasure>> {
    exec.map(examples, measure_example)
}

/// Nearest-rank percentile: the element at index `ceil(p/100 * n) - 1` of
/// the ascending sort.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(p > 0.0 && p < 100.0) {
        return Err(Error::InvalidPercentile(p));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(nearest_rank(&sorted, p))
}

fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = (p * n as f64 / 100.0).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuartileThresholds {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quartile {
    Q1,
    Q2,
    Q3,
    Q4,
}

impl Quartile {
    pub const ALL: [Quartile; 4] = [Quartile::Q1, Quartile::Q2, Quartile::Q3, Quartile::Q4];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["q1", "q2", "q3", "q4"][self.index()]
    }
}

impl QuartileThresholds {
    pub fn from_coverages(coverages: &[f64]) -> Result<Self> {
        if coverages.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut sorted = coverages.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(QuartileThresholds {
            a: nearest_rank(&sorted, 25.0),
            b: nearest_rank(&sorted, 50.0),
            c: nearest_rank(&sorted, 75.0),
        })
    }

    pub fn assign(&self, coverage: f64) -> Quartile {
        if coverage <= self.a {
            Quartile::Q1
        } else if coverage <= self.b {
            Quartile::Q2
        } else if coverage <= self.c {
            Quartile::Q3
        } else {
            Quartile::Q4
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuartileSplit {
    /// Example ids per quartile, in corpus order.
    pub quartiles: [Vec<String>; 4],
    pub thresholds: QuartileThresholds,
}

impl QuartileSplit {
    pub fn members(&self, q: Quartile) -> &[String] {
        &self.quartiles[q.index()]
    }
}

pub fn split_quartiles(corpus: &[ExampleMeasure]) -> Result<QuartileSplit> {
    let coverages: Vec<f64> = corpus.iter().map(|m| m.coverage).collect();
    let thresholds = QuartileThresholds::from_coverages(&coverages)?;
    let mut quartiles: [Vec<String>; 4] = Default::default();
    for m in corpus {
        quartiles[thresholds.assign(m.coverage).index()].push(m.id.clone());
    }
    Ok(QuartileSplit {
        quartiles,
        thresholds,
    })
}

/// Means are `None` for an empty quartile.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QuartileSummary {
    pub count: usize,
    pub mean_article_len: Option<f64>,
    pub mean_summary_len: Option<f64>,
    pub mean_coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuartileStats {
    pub quartiles: [QuartileSummary; 4],
}

impl QuartileStats {
    pub fn total(&self) -> usize {
        self.quartiles.iter().map(|q| q.count).sum()
    }
}

/// Running sums for quartile statistics, fed one example at a time.
#[derive(Debug, Clone, Default)]
pub struct StatsAccumulator {
    count: [usize; 4],
    article_len: [u64; 4],
    summary_len: [u64; 4],
    coverage: [f64; 4],
}

impl StatsAccumulator {
    pub fn add(&mut self, q: Quartile, m: &ExampleMeasure) {
        let i = q.index();
        self.count[i] += 1;
        self.article_len[i] += m.article_len as u64;
        self.summary_len[i] += m.summary_len as u64;
        self.coverage[i] += m.coverage;
    }

    pub fn finish(&self) -> QuartileStats {
        let quartiles = std::array::from_fn(|i| {
            let n = self.count[i];
            let mean = |sum: f64| (n > 0).then(|| sum / n as f64);
            QuartileSummary {
                count: n,
                mean_article_len: mean(self.article_len[i] as f64),
                mean_summary_len: mean(self.summary_len[i] as f64),
                mean_coverage: mean(self.coverage[i]),
            }
        });
        QuartileStats { quartiles }
    }
}

pub fn quartile_stats(split: &QuartileSplit, corpus: &[ExampleMeasure]) -> QuartileStats {
    let mut acc = StatsAccumulator::default();
    for m in corpus {
        acc.add(split.thresholds.assign(m.coverage), m);
    }
    acc.finish()
}
