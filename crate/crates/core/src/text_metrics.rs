//! Tokenization and extractive-fragment analysis.
//!
//! A summary is parsed left to right against its article. At every summary
//! position the longest token span that also occurs contiguously in the
//! article is taken as a fragment; positions whose token never occurs in the
//! article are skipped. Coverage and density are computed from the fragment
//! lengths.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalized word tokens of a piece of text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    tokens: Vec<String>,
    original_text: String,
}

impl TokenSequence {
    /// Wraps already-normalized tokens. Empty tokens and tokens containing
    /// whitespace are dropped so the sequence invariants still hold.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens
            .into_iter()
            .map(Into::into)
            .filter(|t| !t.is_empty() && !t.chars().any(char::is_whitespace))
            .collect();
        let original_text = tokens.join(" ");
        TokenSequence {
            tokens,
            original_text,
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn original_text(&self) -> &str {
        &self.original_text
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c,
            '\u{00A1}' | '\u{00AB}' | '\u{00B7}' | '\u{00BB}' | '\u{00BF}'
            | '\u{2010}'..='\u{2027}'
            | '\u{2030}'..='\u{205E}'
            | '\u{3001}'..='\u{3003}'
            | '\u{3008}'..='\u{3011}')
}

/// Lowercases, splits on Unicode whitespace and strips leading/trailing
/// punctuation from each token. Tokens left empty are dropped.
pub fn tokenize(text: &str) -> TokenSequence {
    let tokens = text
        .split_whitespace()
        .filter_map(|raw| {
            let stripped = raw.trim_matches(is_punctuation);
            (!stripped.is_empty()).then(|| stripped.to_lowercase())
        })
        .collect();
    TokenSequence {
        tokens,
        original_text: text.to_owned(),
    }
}

/// A span copied from the article: `length` summary tokens starting at
/// `summary_start` equal the article tokens starting at `article_start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    pub summary_start: usize,
    pub article_start: usize,
    pub length: usize,
}

impl Fragment {
    pub fn summary_range(&self) -> Range<usize> {
        self.summary_start..self.summary_start + self.length
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentDecomposition {
    pub fragments: Vec<Fragment>,
    pub summary_len: usize,
    pub article_len: usize,
}

impl FragmentDecomposition {
    pub fn covered_tokens(&self) -> usize {
        self.fragments.iter().map(|f| f.length).sum()
    }

    pub fn metrics(&self) -> ExtractivenessMetrics {
        let n = self.summary_len as f64;
        let squared: usize = self.fragments.iter().map(|f| f.length * f.length).sum();
        ExtractivenessMetrics {
            coverage: self.covered_tokens() as f64 / n,
            density: squared as f64 / n,
            summary_len: self.summary_len,
        }
    }

    /// Maximal runs of summary positions not covered by any fragment.
    pub fn novelty_spans(&self) -> Vec<Range<usize>> {
        let mut spans = Vec::new();
        let mut cursor = 0;
        for f in &self.fragments {
            if f.summary_start > cursor {
                spans.push(cursor..f.summary_start);
            }
            cursor = f.summary_start + f.length;
        }
        if cursor < self.summary_len {
            spans.push(cursor..self.summary_len);
        }
        spans
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractivenessMetrics {
    /// Fraction of summary tokens inside copied fragments.
    pub coverage: f64,
    /// Mean squared fragment length per summary token.
    pub density: f64,
    pub summary_len: usize,
}

const ABSENT: u32 = u32::MAX;

/// Greedy left-to-right fragment parse of `summary` against `article`.
///
/// Candidate article positions are looked up by the id of the summary token,
/// so only positions that can start a match are extended. Among equally long
/// matches the smallest article index wins.
pub fn greedy_fragments(
    article: &TokenSequence,
    summary: &TokenSequence,
) -> Result<FragmentDecomposition> {
    if summary.is_empty() {
        return Err(Error::EmptySummary);
    }

    let mut ids: HashMap<&str, u32> = HashMap::with_capacity(article.len());
    let mut starts: Vec<Vec<usize>> = Vec::new();
    let article_ids: Vec<u32> = article
        .tokens
        .iter()
        .enumerate()
        .map(|(pos, tok)| {
            let next = ids.len() as u32;
            let id = *ids.entry(tok.as_str()).or_insert(next);
            if id as usize == starts.len() {
                starts.push(Vec::new());
            }
            starts[id as usize].push(pos);
            id
        })
        .collect();
    let summary_ids: Vec<u32> = summary
        .tokens
        .iter()
        .map(|tok| ids.get(tok.as_str()).copied().unwrap_or(ABSENT))
        .collect();

    let mut fragments = Vec::new();
    let mut i = 0;
    while i < summary_ids.len() {
        let id = summary_ids[i];
        if id == ABSENT {
            i += 1;
            continue;
        }
        let mut best_len = 0;
        let mut best_start = 0;
        for &start in &starts[id as usize] {
            let len = summary_ids[i..]
                .iter()
                .zip(&article_ids[start..])
                .take_while(|(s, a)| s == a)
                .count();
            if len > best_len {
                best_len = len;
                best_start = start;
                if i + len == summary_ids.len() {
                    break;
                }
            }
        }
        fragments.push(Fragment {
            summary_start: i,
            article_start: best_start,
            length: best_len,
        });
        i += best_len;
    }

    Ok(FragmentDecomposition {
        fragments,
        summary_len: summary.len(),
        article_len: article.len(),
    })
}

pub fn extractiveness(
    article: &TokenSequence,
    summary: &TokenSequence,
) -> Result<ExtractivenessMetrics> {
    greedy_fragments(article, summary).map(|d| d.metrics())
}

/// Summary index ranges not covered by any extractive fragment.
pub fn novelty_spans(article: &TokenSequence, summary: &TokenSequence) -> Result<Vec<Range<usize>>> {
    greedy_fragments(article, summary).map(|d| d.novelty_spans())
}

/// Tokenizes both texts and measures the summary against the article.
pub fn measure_text(article: &str, summary: &str) -> Result<(TokenSequence, TokenSequence, ExtractivenessMetrics)> {
    let article = tokenize(article);
    let summary = tokenize(summary);
    let metrics = extractiveness(&article, &summary)?;
    Ok((article, summary, metrics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(tokens: &[&str]) -> TokenSequence {
        TokenSequence::from_tokens(tokens.iter().copied())
    }

    /// Reference parse: at each summary position try every article position
    /// and every length, keeping the longest (first) match.
    fn naive_fragments(article: &[String], summary: &[String]) -> Vec<Fragment> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < summary.len() {
            let mut best: Option<(usize, usize)> = None;
            for a in 0..article.len() {
                for len in 1..=summary.len() - i {
                    if a + len > article.len() {
                        break;
                    }
                    if summary[i..i + len] == article[a..a + len]
                        && best.is_none_or(|(_, l)| len > l)
                    {
                        best = Some((a, len));
                    }
                }
            }
            match best {
                Some((a, len)) => {
                    out.push(Fragment {
                        summary_start: i,
                        article_start: a,
                        length: len,
                    });
                    i += len;
                }
                None => i += 1,
            }
        }
        out
    }

    #[test]
    fn tokenize_normalizes() {
        assert_eq!(
            tokenize("Drink plenty of water.").tokens(),
            ["drink", "plenty", "of", "water"]
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("A  B\tA").tokens(), ["a", "b", "a"]);
        assert_eq!(tokenize("\"Hello,\" -- world!").tokens(), ["hello", "world"]);
        assert_eq!(tokenize("don't e-mail").tokens(), ["don't", "e-mail"]);
        assert_eq!(tokenize("«Ça» va…").tokens(), ["ça", "va"]);
    }

    #[test]
    fn greedy_examples() {
        let d = greedy_fragments(&seq(&["a", "b", "c", "d"]), &seq(&["a", "b", "x"])).unwrap();
        assert_eq!(
            d.fragments,
            vec![Fragment {
                summary_start: 0,
                article_start: 0,
                length: 2
            }]
        );
        assert_eq!(d.covered_tokens(), 2);

        let d = greedy_fragments(&seq(&["a", "c", "b", "a", "b"]), &seq(&["a", "b"])).unwrap();
        assert_eq!(
            d.fragments,
            vec![Fragment {
                summary_start: 0,
                article_start: 3,
                length: 2
            }]
        );

        let x = seq(&["p", "q", "r", "s", "t"]);
        let d = greedy_fragments(&x, &x).unwrap();
        assert_eq!(
            d.fragments,
            vec![Fragment {
                summary_start: 0,
                article_start: 0,
                length: 5
            }]
        );
    }

    #[test]
    fn empty_summary_is_an_error() {
        let article = seq(&["a"]);
        assert!(matches!(
            greedy_fragments(&article, &seq(&[])),
            Err(Error::EmptySummary)
        ));
        assert!(matches!(
            extractiveness(&article, &tokenize(" ... ")),
            Err(Error::EmptySummary)
        ));
        assert!(matches!(
            novelty_spans(&article, &seq(&[])),
            Err(Error::EmptySummary)
        ));
    }

    #[test]
    fn extractiveness_examples() {
        let x = seq(&["one", "two", "three", "four"]);
        let m = extractiveness(&x, &x).unwrap();
        assert_eq!(m.coverage, 1.0);
        assert_eq!(m.density, 4.0);

        let m = extractiveness(&seq(&["a", "b"]), &seq(&["c", "d"])).unwrap();
        assert_eq!((m.coverage, m.density), (0.0, 0.0));

        let m = extractiveness(&seq(&["a", "b", "c", "d"]), &seq(&["a", "b", "x"])).unwrap();
        assert!((m.coverage - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.density - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.summary_len, 3);
    }

    #[test]
    fn novelty_examples() {
        let a = seq(&["a", "b", "c"]);
        assert!(novelty_spans(&a, &seq(&["b", "c"])).unwrap().is_empty());
        assert_eq!(
            novelty_spans(&seq(&["a", "b"]), &seq(&["a", "b", "x"])).unwrap(),
            vec![2..3]
        );
        assert_eq!(
            novelty_spans(&a, &seq(&["x", "y", "z"])).unwrap(),
            vec![0..3]
        );
        assert_eq!(
            novelty_spans(&a, &seq(&["x", "a", "y", "z", "c"])).unwrap(),
            vec![0..1, 2..4]
        );
    }

    #[test]
    fn table_example_marks_novel_words() {
        let article = "Because diarrhea frequently causes dehydration, it is crucial that patients \
                       with IBD remain hydrated. Drink at least 8 glasses of water every day (or 64 oz). You might need to consume beverages \
                       such as Pedialyte or Gatorade to help replenish them.";
        let (_, summary, m) = measure_text(article, "Drink plenty of water to stay hydrated.").unwrap();
        let spans = novelty_spans(&tokenize(article), &summary).unwrap();
        let novel: Vec<&str> = spans
            .iter()
            .flat_map(|r| summary.tokens()[r.clone()].iter().map(String::as_str))
            .collect();
        assert_eq!(novel, ["plenty", "stay"]);
        assert!((m.coverage - 5.0 / 7.0).abs() < 1e-12);
    }

    fn token_vec(max_len: usize, min_len: usize) -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec((0u8..5).prop_map(|c| ((b'a' + c) as char).to_string()), min_len..=max_len)
    }

    proptest! {
        #[test]
        fn matches_naive_reference(article in token_vec(30, 0), summary in token_vec(12, 1)) {
            let d = greedy_fragments(
                &TokenSequence::from_tokens(article.clone()),
                &TokenSequence::from_tokens(summary.clone()),
            ).unwrap();
            prop_assert_eq!(&d.fragments, &naive_fragments(&article, &summary));
        }

        #[test]
        fn fragments_are_sound_and_maximal(article in token_vec(30, 0), summary in token_vec(12, 1)) {
            let d = greedy_fragments(
                &TokenSequence::from_tokens(article.clone()),
                &TokenSequence::from_tokens(summary.clone()),
            ).unwrap();
            let mut prev_end = 0;
            for f in &d.fragments {
                prop_assert!(f.length >= 1);
                prop_assert!(f.summary_start >= prev_end);
                prev_end = f.summary_start + f.length;
                prop_assert_eq!(
                    &summary[f.summary_range()],
                    &article[f.article_start..f.article_start + f.length]
                );
                let end = f.summary_start + f.length;
                if end < summary.len() {
                    let longer = &summary[f.summary_start..=end];
                    prop_assert!(!article.windows(longer.len()).any(|w| w == longer));
                }
            }
            for span in d.novelty_spans() {
                for tok in &summary[span] {
                    prop_assert!(!article.contains(tok));
                }
            }
            let m = d.metrics();
            prop_assert!((0.0..=1.0).contains(&m.coverage));
            prop_assert!(m.coverage <= m.density + 1e-12);
            prop_assert!(m.density <= m.summary_len as f64 + 1e-12);
            prop_assert_eq!(m.coverage == 1.0, d.novelty_spans().is_empty());
        }

        #[test]
        fn tokenize_is_deterministic(text in "\\PC{0,60}") {
            let a = tokenize(&text);
            prop_assert_eq!(&a, &tokenize(&text));
            for t in a.tokens() {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.chars().any(char::is_whitespace));
            }
        }
    }
}
