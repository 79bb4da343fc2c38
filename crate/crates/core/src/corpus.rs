//! Parallel corpora: loading, splitting, nested subsampling.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::stream_rng;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line counts differ: source has {source_lines} lines, target has {target_lines}")]
    Alignment { source_lines: usize, target_lines: usize },
    #[error("{path}: invalid UTF-8 on line {line}")]
    Decode { path: PathBuf, line: usize },
    #[error("{path}: line {line} must contain exactly one tab")]
    Tsv { path: PathBuf, line: usize },
    #[error("requested {requested} sentences but the corpus only has {available}")]
    Size { requested: usize, available: usize },
    #[error("subsample sizes must be non-decreasing, got {0:?}")]
    UnorderedSizes(Vec<usize>),
    #[error("source and target language codes must differ (both are {0:?})")]
    SameLanguage(String),
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub id: usize,
    pub source: String,
    pub target: String,
}

/// An ordered, immutable list of sentence pairs.
///
/// A freshly loaded corpus carries ids `0..n`. Corpora produced by
/// [`split`] and [`subsample`] keep the ids of the corpus they were drawn
/// from, so membership can be compared across the pieces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelCorpus {
    pub pairs: Vec<SentencePair>,
    pub source_lang: String,
    pub target_lang: String,
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub corpus: ParallelCorpus,
    /// Aligned lines skipped because either side was blank.
    pub dropped: usize,
}

#[derive(Debug, Clone)]
pub struct CorpusSplit {
    pub train: ParallelCorpus,
    pub validation: ParallelCorpus,
    pub seed: u64,
}

impl ParallelCorpus {
    pub fn new(source_lang: &str, target_lang: &str) -> Result<Self> {
        if source_lang == target_lang {
            return Err(CorpusError::SameLanguage(source_lang.to_string()));
        }
        Ok(Self {
            pairs: Vec::new(),
            source_lang: source_lang.to_string(),
            target_lang: target_lang.to_string(),
        })
    }

    /// Builds a corpus from in-memory pairs, dropping blank ones.
    pub fn from_pairs<S, T>(
        source_lang: &str,
        target_lang: &str,
        pairs: impl IntoIterator<Item = (S, T)>,
    ) -> Result<Loaded>
    where
        S: Into<String>,
        T: Into<String>,
    {
        let mut corpus = Self::new(source_lang, target_lang)?;
        let mut dropped = 0;
        for (source, target) in pairs {
            let (source, target) = (source.into(), target.into());
            if source.trim().is_empty() || target.trim().is_empty() {
                dropped += 1;
                continue;
            }
            let id = corpus.pairs.len();
            corpus.pairs.push(SentencePair { id, source, target });
        }
        Ok(Loaded { corpus, dropped })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn ids(&self) -> BTreeSet<usize> {
        self.pairs.iter().map(|p| p.id).collect()
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.source.as_str())
    }

    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.target.as_str())
    }

    fn with_pairs(&self, pairs: Vec<SentencePair>) -> Self {
        Self {
            pairs,
            source_lang: self.source_lang.clone(),
            target_lang: self.target_lang.clone(),
        }
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = fs::read(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.is_empty() {
        return Ok(Vec::new());
    }
    let body = bytes.strip_suffix(b"\n").unwrap_or(&bytes);
    body.split(|&b| b == b'\n')
        .enumerate()
        .map(|(i, line)| {
            let line = line.strip_suffix(b"\r").unwrap_or(line);
            std::str::from_utf8(line)
                .map(str::to_string)
                .map_err(|_| CorpusError::Decode {
                    path: path.to_path_buf(),
                    line: i + 1,
                })
        })
        .collect()
}

/// Loads two line-aligned files (LF or CRLF).
pub fn load_parallel(
    source_path: impl AsRef<Path>,
    target_path: impl AsRef<Path>,
    source_lang: &str,
    target_lang: &str,
) -> Result<Loaded> {
    let source = read_lines(source_path.as_ref())?;
    let target = read_lines(target_path.as_ref())?;
    if source.len() != target.len() {
        return Err(CorpusError::Alignment {
            source_lines: source.len(),
            target_lines: target.len(),
        });
    }
    ParallelCorpus::from_pairs(source_lang, target_lang, source.into_iter().zip(target))
}

/// Loads a two-column tab-separated file.
pub fn load_tsv(path: impl AsRef<Path>, source_lang: &str, target_lang: &str) -> Result<Loaded> {
    let path = path.as_ref();
    let lines = read_lines(path)?;
    let mut pairs = Vec::with_capacity(lines.len());
    for (i, line) in lines.into_iter().enumerate() {
        let mut cols = line.split('\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(s), Some(t), None) => pairs.push((s.to_string(), t.to_string())),
            _ => {
                return Err(CorpusError::Tsv {
                    path: path.to_path_buf(),
                    line: i + 1,
                })
            }
        }
    }
    ParallelCorpus::from_pairs(source_lang, target_lang, pairs)
}

fn write_side<'a>(path: &Path, lines: impl Iterator<Item = &'a str>) -> Result<()> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
    for line in lines {
        out.write_all(line.as_bytes()).map_err(io_err)?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Writes the corpus as two LF-terminated aligned files.
pub fn write_parallel(
    corpus: &ParallelCorpus,
    source_path: impl AsRef<Path>,
    target_path: impl AsRef<Path>,
) -> Result<()> {
    write_side(source_path.as_ref(), corpus.sources())?;
    write_side(target_path.as_ref(), corpus.targets())
}

fn shuffled_indices(n: usize, seed: u64, stream: &str) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, stream));
    order
}

/// Draws a uniformly random validation set of `validation_size` pairs.
///
/// Both halves keep corpus order and the original ids.
pub fn split(corpus: &ParallelCorpus, validation_size: usize, seed: u64) -> Result<CorpusSplit> {
    if validation_size >= corpus.len() && validation_size > 0 {
        return Err(CorpusError::Size {
            requested: validation_size,
            available: corpus.len(),
        });
    }
    let order = shuffled_indices(corpus.len(), seed, "corpus.split");
    let mut in_validation = vec![false; corpus.len()];
    for &i in &order[..validation_size] {
        in_validation[i] = true;
    }
    let (validation, train): (Vec<_>, Vec<_>) = corpus
        .pairs
        .iter()
        .cloned()
        .zip(in_validation)
        .partition(|(_, v)| *v);
    Ok(CorpusSplit {
        train: corpus.with_pairs(train.into_iter().map(|(p, _)| p).collect()),
        validation: corpus.with_pairs(validation.into_iter().map(|(p, _)| p).collect()),
        seed,
    })
}

/// Nested random subsets: every returned corpus contains the previous one.
pub fn subsample(
    corpus: &ParallelCorpus,
    sizes: &[usize],
    seed: u64,
) -> Result<Vec<ParallelCorpus>> {
    Ok(nested_indices(corpus.len(), sizes, seed)?
        .into_iter()
        .map(|chosen| corpus.with_pairs(chosen.into_iter().map(|i| corpus.pairs[i].clone()).collect()))
        .collect())
}

/// Sorted index sets behind [`subsample`], usable for any indexed collection.
pub fn nested_indices(len: usize, sizes: &[usize], seed: u64) -> Result<Vec<Vec<usize>>> {
    if sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(CorpusError::UnorderedSizes(sizes.to_vec()));
    }
    if let Some(&max) = sizes.iter().max() {
        if max > len {
            return Err(CorpusError::Size {
                requested: max,
                available: len,
            });
        }
    }
    let order = shuffled_indices(len, seed, "corpus.subsample");
    Ok(sizes
        .iter()
        .map(|&size| {
            let mut chosen = order[..size].to_vec();
            chosen.sort_unstable();
            chosen
        })
        .collect())
}
