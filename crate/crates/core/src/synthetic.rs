//! Seeded synthetic corpora and candidate sets for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Example;
use crate::selection::{Candidate, CandidateSet};

/// Article/summary pairs over a small vocabulary. Summaries splice copied
/// article spans with out-of-article words, so coverage varies per example.
pub fn corpus(n: usize, article_len: usize, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let article: Vec<String> = (0..article_len)
                .map(|_| format!("w{}", rng.gen_range(0..400)))
                .collect();
            let target = rng.gen_range(6..16);
            let copy_rate: f64 = rng.gen();
            let mut summary = Vec::with_capacity(target + 4);
            while summary.len() < target {
                if rng.gen_bool(copy_rate) {
                    let len = rng.gen_range(1..=4).min(article_len);
                    let start = rng.gen_range(0..=article_len - len);
                    summary.extend_from_slice(&article[start..start + len]);
                } else {
                    summary.push(format!("novel{}", rng.gen_range(0..50)));
                }
            }
            Example {
                id: format!("doc{i:06}"),
                article: article.join(" "),
                summary: summary.join(" ") + ".",
            }
        })
        .collect()
}

/// One system of a synthetic candidate pool.
#[derive(Debug, Clone)]
pub struct SyntheticSystem {
    pub name: &'static str,
    pub mean_coverage: f64,
    /// Per-annotator probability of judging the output faithful.
    pub faithful_rate: f64,
}

/// Four quartile systems with coverage and faithfulness rising together.
pub const QUARTILES: [SyntheticSystem; 4] = [
    SyntheticSystem {
        name: "Q1",
        mean_coverage: 0.50,
        faithful_rate: 0.72,
    },
    SyntheticSystem {
        name: "Q2",
        mean_coverage: 0.61,
        faithful_rate: 0.79,
    },
    SyntheticSystem {
        name: "Q3",
        mean_coverage: 0.74,
        faithful_rate: 0.87,
    },
    SyntheticSystem {
        name: "Q4",
        mean_coverage: 0.87,
        faithful_rate: 0.89,
    },
];

#[derive(Debug, Clone)]
pub struct CandidateFixture {
    pub systems: Vec<SyntheticSystem>,
    pub n_examples: usize,
    pub annotators: usize,
    /// Half-width of the uniform noise added to the label-determined score.
    pub noise: f64,
    pub seed: u64,
}

impl Default for CandidateFixture {
    fn default() -> Self {
        CandidateFixture {
            systems: QUARTILES.to_vec(),
            n_examples: 200,
            annotators: 3,
            noise: 0.3,
            seed: 2021,
        }
    }
}

impl CandidateFixture {
    /// Candidate sets with human scores, majority labels and a classifier
    /// score centred at 0.7 for faithful and 0.3 for unfaithful outputs.
    pub fn generate(&self) -> Vec<CandidateSet> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.n_examples)
            .map(|i| {
                let id = format!("ex{i:04}");
                let mut cands: Vec<Candidate> = self
                    .systems
                    .iter()
                    .map(|sys| {
                        let coverage = (sys.mean_coverage + rng.gen_range(-0.05..=0.05)).clamp(0.0, 1.0);
                        let yes = (0..self.annotators)
                            .filter(|_| rng.gen_bool(sys.faithful_rate))
                            .count();
                        let human = yes as f64 / self.annotators as f64;
                        let c = Candidate::new(id.clone(), sys.name, coverage).with_human_score(human);
                        let centre = if c.human_label == Some(true) { 0.7 } else { 0.3 };
                        let score = centre + rng.gen_range(-self.noise..=self.noise);
                        Candidate {
                            summary: format!("{} summary of {id}", sys.name),
                            ..c.with_score(score)
                        }
                    })
                    .collect();
                cands.shuffle(&mut rng);
                CandidateSet::new(cands).expect("distinct systems")
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::measure_example;

    #[test]
    fn corpus_is_seeded_and_measurable() {
        let a = corpus(20, 40, 1);
        assert_eq!(a, corpus(20, 40, 1));
        let covs: Vec<f64> = a.iter().map(|e| measure_example(e).unwrap().coverage).collect();
        assert!(covs.iter().any(|&c| c < 0.5));
        assert!(covs.iter().any(|&c| c > 0.5));
    }

    #[test]
    fn fixture_shape() {
        let sets = CandidateFixture::default().generate();
        assert_eq!(sets.len(), 200);
        assert!(sets.iter().all(|s| s.candidates().len() == 4));
        assert!(sets
            .iter()
            .flat_map(|s| s.candidates())
            .all(|c| c.score.is_some() && c.human_label.is_some()));
    }
}
