//! Corpus- and sentence-level BLEU with clipped n-gram precision.
//!
//! Scores are on the 0–100 scale. The tokenization and case handling used
//! for scoring are part of [`ScoringConfig`] and are echoed in every report.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::{tokenize, BpeModel};

pub const MAX_N: usize = 4;

#[derive(Debug, Error)]
pub enum BleuError {
    #[error("{candidates} candidates but {references} references")]
    Pairing {
        candidates: usize,
        references: usize,
    },
    #[error("nothing to score")]
    Empty,
    #[error("subword tokenization requested but no model was supplied")]
    MissingModel,
}

pub type Result<T, E = BleuError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothing {
    None,
    /// Zero-match orders use `1 / (total + 1)`; sentence level only.
    AddOneOnZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tokenization {
    Whitespace,
    /// BPE pieces from a supplied model.
    Subword,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub max_n: usize,
    pub smoothing: Smoothing,
    pub tokenization: Tokenization,
    pub case_sensitive: bool,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            max_n: MAX_N,
            smoothing: Smoothing::None,
            tokenization: Tokenization::Whitespace,
            case_sensitive: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuReport {
    pub score: f64,
    #[serde(rename = "bp")]
    pub brevity_penalty: f64,
    pub precisions: Vec<f64>,
    pub candidate_length: usize,
    pub reference_length: usize,
    pub config: ScoringConfig,
}

/// Sufficient statistics: clipped matches and totals per order, lengths.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NgramStats {
    pub matches: Vec<usize>,
    pub totals: Vec<usize>,
    pub candidate_length: usize,
    pub reference_length: usize,
}

impl NgramStats {
    fn zeros(max_n: usize) -> Self {
        Self {
            matches: vec![0; max_n],
            totals: vec![0; max_n],
            ..Self::default()
        }
    }

    fn add(&mut self, other: &NgramStats) {
        for n in 0..self.matches.len() {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.candidate_length += other.candidate_length;
        self.reference_length += other.reference_length;
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

pub fn sentence_stats(candidate: &[String], reference: &[String], max_n: usize) -> NgramStats {
    let mut stats = NgramStats::zeros(max_n);
    stats.candidate_length = candidate.len();
    stats.reference_length = reference.len();
    for n in 1..=max_n {
        let cand = ngram_counts(candidate, n);
        let refs = ngram_counts(reference, n);
        stats.totals[n - 1] = candidate.len().saturating_sub(n - 1);
        stats.matches[n - 1] = cand
            .iter()
            .map(|(gram, &c)| c.min(refs.get(gram).copied().unwrap_or(0)))
            .sum();
    }
    stats
}

/// `min(1, exp(1 - r/c))`; zero for an empty candidate.
pub fn brevity_penalty(candidate_length: usize, reference_length: usize) -> f64 {
    if candidate_length == 0 {
        0.0
    } else if candidate_length >= reference_length {
        1.0
    } else {
        (1.0 - reference_length as f64 / candidate_length as f64).exp()
    }
}

fn report(stats: &NgramStats, config: ScoringConfig, smoothing: Smoothing) -> BleuReport {
    let precisions: Vec<f64> = stats
        .matches
        .iter()
        .zip(&stats.totals)
        .map(|(&m, &t)| match smoothing {
            Smoothing::AddOneOnZero if m == 0 => 1.0 / (t as f64 + 1.0),
            _ if t == 0 => 0.0,
            _ => m as f64 / t as f64,
        })
        .collect();
    let bp = brevity_penalty(stats.candidate_length, stats.reference_length);
    let score = if precisions.iter().any(|&p| p <= 0.0) {
        0.0
    } else {
        let mean_log = precisions.iter().map(|p| p.ln()).sum::<f64>() / precisions.len() as f64;
        (bp * mean_log.exp() * 100.0).min(100.0)
    };
    BleuReport {
        score,
        brevity_penalty: bp,
        precisions,
        candidate_length: stats.candidate_length,
        reference_length: stats.reference_length,
        config,
    }
}

impl BleuReport {
    /// Flat JSON: `{score, bp, p1..p4, candidate_length, reference_length, config}`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        obj.insert("score".into(), self.score.into());
        obj.insert("bp".into(), self.brevity_penalty.into());
        for (i, p) in self.precisions.iter().enumerate() {
            obj.insert(format!("p{}", i + 1), (*p).into());
        }
        obj.insert("candidate_length".into(), self.candidate_length.into());
        obj.insert("reference_length".into(), self.reference_length.into());
        obj.insert(
            "config".into(),
            serde_json::to_value(self.config).expect("config serializes"),
        );
        serde_json::Value::Object(obj)
    }
}

/// Scorer bound to a configuration and, for subword scoring, a model.
pub struct Scorer<'m> {
    config: ScoringConfig,
    model: Option<&'m BpeModel>,
}

impl<'m> Scorer<'m> {
    pub fn new(config: ScoringConfig) -> Result<Self> {
        if config.tokenization == Tokenization::Subword {
            return Err(BleuError::MissingModel);
        }
        Ok(Self {
            config,
            model: None,
        })
    }

    pub fn with_model(config: ScoringConfig, model: &'m BpeModel) -> Self {
        Self {
            config,
            model: Some(model),
        }
    }

    pub fn config(&self) -> ScoringConfig {
        self.config
    }

    pub fn tokens(&self, text: &str) -> Vec<String> {
        let text = if self.config.case_sensitive {
            text.to_string()
        } else {
            text.to_lowercase()
        };
        match (self.config.tokenization, self.model) {
            (Tokenization::Subword, Some(model)) => tokenize(model, &text)
                .tokens
                .into_iter()
                .map(|t| {
                    if self.config.case_sensitive {
                        format!("{}|{}", t.piece, t.case)
                    } else {
                        t.piece
                    }
                })
                .collect(),
            _ => text.split_whitespace().map(str::to_string).collect(),
        }
    }

    pub fn corpus_bleu<C, R>(&self, candidates: &[C], references: &[R]) -> Result<BleuReport>
    where
        C: AsRef<str>,
        R: AsRef<str>,
    {
        if candidates.len() != references.len() {
            return Err(BleuError::Pairing {
                candidates: candidates.len(),
                references: references.len(),
            });
        }
        if candidates.is_empty() {
            return Err(BleuError::Empty);
        }
        let mut total = NgramStats::zeros(self.config.max_n);
        for (c, r) in candidates.iter().zip(references) {
            let stats = sentence_stats(
                &self.tokens(c.as_ref()),
                &self.tokens(r.as_ref()),
                self.config.max_n,
            );
            total.add(&stats);
        }
        // Smoothing is a sentence-level device only.
        Ok(report(&total, self.config, Smoothing::None))
    }

    pub fn sentence_bleu(&self, candidate: &str, reference: &str) -> Result<BleuReport> {
        if candidate.trim().is_empty() || reference.trim().is_empty() {
            return Err(BleuError::Empty);
        }
        let stats = sentence_stats(
            &self.tokens(candidate),
            &self.tokens(reference),
            self.config.max_n,
        );
        Ok(report(&stats, self.config, self.config.smoothing))
    }
}

/// Whitespace, case-sensitive, unsmoothed corpus BLEU.
pub fn corpus_bleu<C: AsRef<str>, R: AsRef<str>>(
    candidates: &[C],
    references: &[R],
) -> Result<BleuReport> {
    Scorer::new(ScoringConfig::default())?.corpus_bleu(candidates, references)
}

pub fn sentence_bleu(candidate: &str, reference: &str, config: ScoringConfig) -> Result<BleuReport> {
    Scorer::new(config)?.sentence_bleu(candidate, reference)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_scores_100() {
        let refs = ["the cat sat on the mat", "a dog barked loudly at night"];
        let r = corpus_bleu(&refs, &refs).unwrap();
        assert_eq!(r.score, 100.0);
        assert_eq!(r.brevity_penalty, 1.0);
        assert!(r.precisions.iter().all(|&p| p == 1.0));
    }

    #[test]
    fn unigram_clipping() {
        // one "the" in the reference: 1 of 4 candidate unigrams survives clipping
        let r = corpus_bleu(&["the the the the"], &["the cat"]).unwrap();
        assert_eq!(r.precisions[0], 1.0 / 4.0);
        let r = corpus_bleu(&["the the the the"], &["the cat sat on the mat"]).unwrap();
        assert_eq!(r.precisions[0], 2.0 / 4.0);
    }

    #[test]
    fn brevity_penalty_ratio() {
        // candidate length 4, reference length 11: BP = exp(1 - 11/4)
        let r = corpus_bleu(&["a b c d"], &["a b c d e f g h i j k"]).unwrap();
        assert!((r.brevity_penalty - (1.0f64 - 11.0 / 4.0).exp()).abs() < 1e-15);
        assert!((brevity_penalty(100, 272) - (1.0f64 - 2.72).exp()).abs() < 1e-15);
        assert!((brevity_penalty(1_000_000, 2_718_282) - 0.1793).abs() < 1e-3);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            corpus_bleu(&["a"], &["a", "b"]),
            Err(BleuError::Pairing { .. })
        ));
    }

    #[test]
    fn sentence_smoothing() {
        let cand = "the quick brown dog jumps";
        let refr = "the quick brown fox leaps high";
        let plain = sentence_bleu(cand, refr, ScoringConfig::default()).unwrap();
        assert_eq!(plain.precisions[3], 0.0);
        assert_eq!(plain.score, 0.0);
        let smoothed = sentence_bleu(
            cand,
            refr,
            ScoringConfig {
                smoothing: Smoothing::AddOneOnZero,
                ..ScoringConfig::default()
            },
        )
        .unwrap();
        // p = 3/5, 2/4, 1/3, 1/(2+1); BP = exp(1 - 6/5)
        let expected = (1.0f64 - 6.0 / 5.0).exp()
            * (((3.0f64 / 5.0).ln() + 0.5f64.ln() + 2.0 * (1.0f64 / 3.0).ln()) / 4.0).exp()
            * 100.0;
        assert!(smoothed.score > 0.0);
        assert!((smoothed.score - expected).abs() < 1e-9);
        assert_eq!(
            sentence_bleu("same words here ok", "same words here ok", ScoringConfig::default())
                .unwrap()
                .score,
            100.0
        );
    }

    #[test]
    fn case_insensitive_option() {
        let cfg = ScoringConfig {
            case_sensitive: false,
            ..ScoringConfig::default()
        };
        let s = Scorer::new(cfg).unwrap();
        assert_eq!(s.corpus_bleu(&["The Cat sat down"], &["the cat sat down"]).unwrap().score, 100.0);
    }

    #[test]
    fn subword_requires_model() {
        let cfg = ScoringConfig {
            tokenization: Tokenization::Subword,
            ..ScoringConfig::default()
        };
        assert!(matches!(Scorer::new(cfg), Err(BleuError::MissingModel)));
    }

    #[test]
    fn report_json_shape() {
        let r = corpus_bleu(&["a b c d"], &["a b c d"]).unwrap();
        let v = r.to_json();
        for key in ["score", "bp", "p1", "p2", "p3", "p4", "candidate_length", "reference_length", "config"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
