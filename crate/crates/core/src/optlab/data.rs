use std::collections::BTreeMap;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::Bigram;
use super::OptimError;
use crate::rng::stream_rng;

/// Token id used for both sentence start and sentence end.
pub const BOUNDARY: u32 = 0;

/// Bigram examples of a sentence, framed by the boundary token.
pub fn sentence_bigrams(sentence: &[u32]) -> impl Iterator<Item = Bigram> + '_ {
    std::iter::once(BOUNDARY)
        .chain(sentence.iter().copied())
        .zip(sentence.iter().copied().chain(std::iter::once(BOUNDARY)))
}

pub fn bigrams(sentences: &[Vec<u32>]) -> Vec<Bigram> {
    sentences.iter().flat_map(|s| sentence_bigrams(s)).collect()
}

/// Tokenized monolingual training and validation text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmCorpus {
    pub vocab: usize,
    pub train: Vec<Vec<u32>>,
    pub valid: Vec<Vec<u32>>,
}

impl LmCorpus {
    /// Maps whitespace tokens to ids; id 0 is the sentence boundary and
    /// tokens beyond `max_vocab - 1` distinct types share the last id.
    pub fn from_text<'a>(
        train: impl IntoIterator<Item = &'a str>,
        valid: impl IntoIterator<Item = &'a str>,
        max_vocab: usize,
    ) -> Self {
        let train: Vec<&str> = train.into_iter().collect();
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for line in &train {
            for tok in line.split_whitespace() {
                *counts.entry(tok).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let keep = max_vocab.saturating_sub(2);
        let ids: BTreeMap<&str, u32> = ranked
            .iter()
            .take(keep)
            .enumerate()
            .map(|(i, (w, _))| (*w, i as u32 + 1))
            .collect();
        let unk = ids.len() as u32 + 1;
        let encode = |line: &str| -> Vec<u32> {
            line.split_whitespace()
                .map(|t| ids.get(t).copied().unwrap_or(unk))
                .collect()
        };
        Self {
            vocab: ids.len() + 2,
            train: train.iter().map(|l| encode(l)).filter(|s| !s.is_empty()).collect(),
            valid: valid.into_iter().map(encode).filter(|s| !s.is_empty()).collect(),
        }
    }

    pub fn train_bigrams(&self) -> Vec<Bigram> {
        bigrams(&self.train)
    }

    pub fn valid_bigrams(&self) -> Vec<Bigram> {
        bigrams(&self.valid)
    }

    pub fn with_train(&self, train: Vec<Vec<u32>>) -> Self {
        Self {
            vocab: self.vocab,
            train,
            valid: self.valid.clone(),
        }
    }
}

/// Deterministic batch order: every epoch reshuffles the training bigrams
/// with its own stream and cuts them into fixed-size batches.
pub struct BatchPlan {
    examples: Vec<Bigram>,
    batch_size: usize,
    seed: u64,
    orders: Mutex<BTreeMap<usize, Vec<u32>>>,
}

impl BatchPlan {
    pub fn new(examples: Vec<Bigram>, batch_size: usize, seed: u64) -> Result<Self, OptimError> {
        if batch_size == 0 {
            return Err(OptimError::Config("batch size must be positive".into()));
        }
        if examples.is_empty() {
            return Err(OptimError::Config("training data yields no batches".into()));
        }
        Ok(Self {
            examples,
            batch_size,
            seed,
            orders: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.examples.len().div_ceil(self.batch_size)
    }

    pub fn examples(&self) -> usize {
        self.examples.len()
    }

    /// Batch `index` of 1-based `epoch`.
    pub fn batch(&self, epoch: usize, index: usize) -> Vec<Bigram> {
        let mut orders = self.orders.lock().expect("order cache");
        if !orders.contains_key(&epoch) {
            let mut order: Vec<u32> = (0..self.examples.len() as u32).collect();
            order.shuffle(&mut stream_rng(self.seed, &format!("optlab.shuffle.{epoch}")));
            // only the current and next epoch are ever in flight
            while orders.len() > 2 {
                orders.pop_first();
            }
            orders.insert(epoch, order);
        }
        let order = &orders[&epoch];
        let start = index * self.batch_size;
        let end = (start + self.batch_size).min(order.len());
        order[start..end]
            .iter()
            .map(|&i| self.examples[i as usize])
            .collect()
    }
}

/// Parameters of the bundled synthetic language.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyCorpusConfig {
    pub vocab: usize,
    pub train_sentences: usize,
    pub valid_sentences: usize,
    /// Successor candidates per token.
    pub branching: usize,
    /// Zipf exponent over the successor candidates.
    pub zipf: f64,
    pub max_len: usize,
    pub end_probability: f64,
    pub seed: u64,
}

impl Default for ToyCorpusConfig {
    fn default() -> Self {
        Self {
            vocab: 200,
            train_sentences: 1500,
            valid_sentences: 200,
            branching: 6,
            zipf: 1.2,
            max_len: 20,
            end_probability: 0.08,
            seed: 2017,
        }
    }
}

/// Sentences from a seeded sparse Markov source with Zipfian successors.
pub fn toy_corpus(config: &ToyCorpusConfig) -> LmCorpus {
    let mut rng = stream_rng(config.seed, "optlab.toy");
    let words = config.vocab.max(2) as u32;
    let weights: Vec<f64> = (1..=config.branching.max(1))
        .map(|r| 1.0 / (r as f64).powf(config.zipf))
        .collect();
    let total: f64 = weights.iter().sum();
    let successors: Vec<Vec<u32>> = (0..words)
        .map(|_| {
            (0..weights.len())
                .map(|_| rng.gen_range(1..words))
                .collect()
        })
        .collect();
    let sentence = |rng: &mut crate::rng::StreamRng| {
        let mut out = Vec::new();
        let mut prev = BOUNDARY;
        while out.len() < config.max_len {
            if !out.is_empty() && rng.gen_bool(config.end_probability) {
                break;
            }
            let mut u = rng.gen::<f64>() * total;
            let mut pick = weights.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if u < *w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            prev = successors[prev as usize][pick];
            out.push(prev);
        }
        out
    };
    let train = (0..config.train_sentences).map(|_| sentence(&mut rng)).collect();
    let valid = (0..config.valid_sentences).map(|_| sentence(&mut rng)).collect();
    LmCorpus {
        vocab: words as usize,
        train,
        valid,
    }
}

/// Sentences `1 2` only: every transition is forced.
pub fn deterministic_corpus(sentences: usize) -> LmCorpus {
    LmCorpus {
        vocab: 3,
        train: vec![vec![1, 2]; sentences],
        valid: vec![vec![1, 2]; sentences.clamp(1, 10)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bigrams_are_framed() {
        assert_eq!(sentence_bigrams(&[5, 6]).collect::<Vec<_>>(), vec![(0, 5), (5, 6), (6, 0)]);
    }

    #[test]
    fn toy_corpus_is_seeded() {
        let config = ToyCorpusConfig {
            train_sentences: 50,
            ..Default::default()
        };
        assert_eq!(toy_corpus(&config), toy_corpus(&config));
        let other = toy_corpus(&ToyCorpusConfig { seed: 1, ..config });
        assert_ne!(toy_corpus(&config), other);
        assert!(toy_corpus(&config).train.iter().all(|s| !s.is_empty() && s.len() <= 20));
    }

    #[test]
    fn batches_cover_epoch_once() {
        let plan = BatchPlan::new((0..10).map(|i| (i, i)).collect(), 4, 3).unwrap();
        assert_eq!(plan.batches_per_epoch(), 3);
        let mut seen: Vec<u32> = (0..3).flat_map(|b| plan.batch(1, b)).map(|p| p.0).collect();
        seen.sort();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        assert_ne!(plan.batch(1, 0), plan.batch(2, 0));
        assert_eq!(plan.batch(1, 0), BatchPlan::new((0..10).map(|i| (i, i)).collect(), 4, 3).unwrap().batch(1, 0));
    }

    #[test]
    fn text_vocabulary() {
        let lm = LmCorpus::from_text(["a b a", "c a"], ["a z"], 3);
        assert_eq!(lm.vocab, 3);
        assert_eq!(lm.train[0], vec![1, 2, 1]);
        assert_eq!(lm.valid[0], vec![1, 2]);
    }
}
