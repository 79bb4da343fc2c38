//! Word vectors: a skip-gram negative-sampling trainer and the plain text
//! vector format (`count dim` header, then `word v1 ... vd`).

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use super::{BsfError, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Embeddings {
    dim: usize,
    words: Vec<String>,
    vectors: Vec<f32>,
    index: HashMap<String, usize>,
}

pub fn cosine(a: &[f32], b: &[f32]) -> Option<f64> {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        dot += x as f64 * y as f64;
        na += x as f64 * x as f64;
        nb += y as f64 * y as f64;
    }
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

impl Embeddings {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Default::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Inserts or replaces a vector. Returns true when the word was already present.
    pub fn insert(&mut self, word: &str, vector: &[f32]) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(BsfError::Config(format!(
                "vector for '{word}' has {} values, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(BsfError::Config(format!("vector for '{word}' is not finite")));
        }
        if let Some(&i) = self.index.get(word) {
            self.vectors[i * self.dim..(i + 1) * self.dim].copy_from_slice(vector);
            return Ok(true);
        }
        self.index.insert(word.to_string(), self.words.len());
        self.words.push(word.to_string());
        self.vectors.extend_from_slice(vector);
        Ok(false)
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index
            .get(word)
            .map(|&i| &self.vectors[i * self.dim..(i + 1) * self.dim])
    }

    pub fn similarity(&self, a: &str, b: &str) -> Option<f64> {
        cosine(self.get(a)?, self.get(b)?)
    }

    /// All other words ranked by cosine similarity to `word`, best first,
    /// ties by word.
    pub fn neighbours(&self, word: &str) -> Vec<(String, f64)> {
        let Some(v) = self.get(word) else {
            return Vec::new();
        };
        let mut out: Vec<(String, f64)> = self
            .words
            .iter()
            .filter(|w| w.as_str() != word)
            .filter_map(|w| cosine(v, self.get(w).expect("stored")).map(|s| (w.clone(), s)))
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out
    }

    pub fn nearest(&self, word: &str, k: usize) -> Vec<(String, f64)> {
        let mut n = self.neighbours(word);
        n.truncate(k);
        n
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.dim);
        for (i, w) in self.words.iter().enumerate() {
            out.push_str(w);
            for v in &self.vectors[i * self.dim..(i + 1) * self.dim] {
                write!(out, " {v}").expect("string write");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(BsfError::Format {
            line: 1,
            message: "missing header".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let parse_header = |s: &str| {
            s.parse::<usize>().map_err(|_| BsfError::Format {
                line: 1,
                message: format!("bad header '{header}'"),
            })
        };
        if fields.len() != 2 {
            return Err(BsfError::Format {
                line: 1,
                message: format!("expected 'count dim', found '{header}'"),
            });
        }
        let (count, dim) = (parse_header(fields[0])?, parse_header(fields[1])?);
        let mut emb = Embeddings::new(dim);
        let mut rows = 0;
        for (i, line) in lines {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts.next().expect("non-empty line");
            let values = parts
                .map(|v| v.parse::<f32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| BsfError::Format {
                    line: line_no,
                    message: e.to_string(),
                })?;
            if values.len() != dim {
                return Err(BsfError::Format {
                    line: line_no,
                    message: format!("{} values for '{word}', header says {dim}", values.len()),
                });
            }
            let replaced = emb.insert(word, &values).map_err(|e| BsfError::Format {
                line: line_no,
                message: e.to_string(),
            })?;
            if replaced {
                log::warn!("line {line_no}: duplicate vector for '{word}', keeping the last one");
            }
            rows += 1;
        }
        if rows != count {
            log::warn!("header announces {count} vectors, file has {rows}");
        }
        Ok(emb)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_text())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SgnsConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f32,
    pub min_count: u64,
    /// Frequent-word subsampling threshold; 0 disables it.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        Self {
            dim: 50,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_count: 1,
            subsample: 1e-3,
            seed: 1,
        }
    }
}

const LOW_DATA_TOKENS: usize = 1000;

/// Skip-gram with negative sampling over tokenized sentences.
pub fn train_embeddings(sentences: &[Vec<String>], config: &SgnsConfig) -> Result<Embeddings> {
    if config.dim == 0 || config.window == 0 {
        return Err(BsfError::Config("dim and window must be positive".into()));
    }
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for s in sentences {
        for t in s {
            *counts.entry(t).or_default() += 1;
        }
    }
    let total_tokens: u64 = counts.values().sum();
    if total_tokens == 0 {
        return Err(BsfError::Training("empty corpus".into()));
    }
    if (total_tokens as usize) < LOW_DATA_TOKENS {
        log::warn!("only {total_tokens} tokens; embeddings will be unreliable");
    }
    let mut vocab: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= config.min_count).collect();
    if vocab.is_empty() {
        return Err(BsfError::Training(format!("no word reaches min_count {}", config.min_count)));
    }
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let ids: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, &(w, _))| (w, i)).collect();
    let kept_total: u64 = vocab.iter().map(|&(_, c)| c).sum();

    let keep_prob: Vec<f64> = vocab
        .iter()
        .map(|&(_, c)| {
            if config.subsample <= 0.0 {
                return 1.0;
            }
            let f = c as f64 / kept_total as f64;
            (((f / config.subsample).sqrt() + 1.0) * config.subsample / f).min(1.0)
        })
        .collect();
    let mut cumulative = Vec::with_capacity(vocab.len());
    let mut acc = 0.0;
    for &(_, c) in &vocab {
        acc += (c as f64).powf(0.75);
        cumulative.push(acc);
    }

    let (n, d) = (vocab.len(), config.dim);
    let mut rng = stream_rng(config.seed, "bsf.sgns");
    let mut input: Vec<f32> = (0..n * d).map(|_| (rng.gen::<f32>() - 0.5) / d as f32).collect();
    let mut output = vec![0.0f32; n * d];
    let mut grad = vec![0.0f32; d];

    let encoded: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| s.iter().filter_map(|t| ids.get(t.as_str()).copied()).collect())
        .collect();
    let planned = (kept_total as usize * config.epochs).max(1) as f32;
    let mut processed = 0usize;
    for _ in 0..config.epochs {
        for sentence in &encoded {
            let kept: Vec<usize> = sentence
                .iter()
                .copied()
                .filter(|&w| keep_prob[w] >= 1.0 || rng.gen::<f64>() < keep_prob[w])
                .collect();
            processed += sentence.len();
            let lr = config.learning_rate * (1.0 - processed as f32 / planned).max(1e-4);
            for (pos, &center) in kept.iter().enumerate() {
                let reach = rng.gen_range(1..=config.window);
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(kept.len() - 1);
                for (ctx_pos, &context) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                    if ctx_pos == pos {
                        continue;
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let ctx = &mut input[context * d..(context + 1) * d];
                    for k in 0..=config.negatives {
                        let (target, label) = if k == 0 {
                            (center, 1.0)
                        } else {
                            let r = rng.gen::<f64>() * acc;
                            let t = cumulative.partition_point(|&c| c <= r).min(n - 1);
                            if t == center {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let out = &mut output[target * d..(target + 1) * d];
                        let dot: f32 = ctx.iter().zip(out.iter()).map(|(a, b)| a * b).sum();
                        let sig = 1.0 / (1.0 + (-dot.clamp(-30.0, 30.0)).exp());
                        let g = lr * (label - sig);
                        for j in 0..d {
                            grad[j] += g * out[j];
                            out[j] += g * ctx[j];
                        }
                    }
                    for j in 0..d {
                        ctx[j] += grad[j];
                    }
                }
            }
        }
    }

    let mut emb = Embeddings::new(d);
    for (i, &(w, _)) in vocab.iter().enumerate() {
        emb.insert(w, &input[i * d..(i + 1) * d])?;
    }
    Ok(emb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;

    fn toy(dim: usize) -> Embeddings {
        let mut e = Embeddings::new(dim);
        e.insert("a", &[1.0, 0.0, 0.5]).unwrap();
        e.insert("b", &[0.25, -1.5, 3.0]).unwrap();
        e
    }

    #[test]
    fn lookup_and_text_format() {
        let e = Embeddings::from_text("2 3\na 1 0 0.5\nb 0.25 -1.5 3\n").unwrap();
        assert_eq!(e.get("b"), Some(&[0.25, -1.5, 3.0][..]));
        assert_eq!(e.get("c"), None);
        assert_eq!(e, toy(3));
    }

    #[test]
    fn wrong_width_reports_line() {
        match Embeddings::from_text("2 3\na 1 0 0.5\nb 1 2 3 4\n") {
            Err(BsfError::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicates_keep_last() {
        let e = Embeddings::from_text("2 1\na 1\na 2\n").unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.get("a"), Some(&[2.0][..]));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut e = Embeddings::new(4);
        e.insert("x", &[0.1, 1.0 / 3.0, -7.123_456_7e-12, f32::MAX]).unwrap();
        e.insert("y", &[f32::MIN_POSITIVE, -0.0, 2.5e8, 1e-45]).unwrap();
        let back = Embeddings::from_text(&e.to_text()).unwrap();
        for w in ["x", "y"] {
            let (a, b) = (e.get(w).unwrap(), back.get(w).unwrap());
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn self_similarity() {
        let e = toy(3);
        assert!((e.similarity("a", "a").unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), None);
    }

    fn shared_context_corpus() -> Vec<Vec<String>> {
        let mut rng = stream_rng(3, "test");
        let fillers: Vec<String> = (0..30).map(|i| format!("w{i}")).collect();
        let mut out = Vec::new();
        for i in 0..600 {
            let mut s: Vec<String> = (0..6).map(|_| fillers.choose(&mut rng).unwrap().clone()).collect();
            let word = if i % 2 == 0 { "alpha" } else { "beta" };
            s.splice(2..2, ["red", word, "blue"].iter().map(|w| w.to_string()));
            out.push(s);
        }
        out
    }

    #[test]
    fn shared_contexts_make_neighbours() {
        let cfg = SgnsConfig {
            dim: 16,
            window: 2,
            epochs: 5,
            subsample: 0.0,
            ..Default::default()
        };
        let e = train_embeddings(&shared_context_corpus(), &cfg).unwrap();
        let top: Vec<String> = e.nearest("alpha", 3).into_iter().map(|(w, _)| w).collect();
        assert!(top.contains(&"beta".to_string()), "{top:?}");
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = SgnsConfig {
            dim: 8,
            epochs: 1,
            ..Default::default()
        };
        let corpus = shared_context_corpus();
        assert_eq!(train_embeddings(&corpus, &cfg).unwrap(), train_embeddings(&corpus, &cfg).unwrap());
    }

    #[test]
    fn degenerate_corpora() {
        let one = vec![vec!["just".to_string(), "one".to_string(), "sentence".to_string()]];
        let e = train_embeddings(&one, &SgnsConfig::default()).unwrap();
        assert_eq!(e.len(), 3);
        assert!(matches!(train_embeddings(&[], &SgnsConfig::default()), Err(BsfError::Training(_))));
    }
}
