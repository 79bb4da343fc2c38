//! Byte-pair-encoding merge learning and application.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::presplit::{presplit, UnitKind};
use super::{Result, TokenizerError};
use crate::corpus::ParallelCorpus;

const FORMAT_VERSION: &str = "bpe-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BpeMode {
    Joint,
    SeparateSource,
    SeparateTarget,
}

impl fmt::Display for BpeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BpeMode::Joint => "joint",
            BpeMode::SeparateSource => "separate-source",
            BpeMode::SeparateTarget => "separate-target",
        })
    }
}

impl FromStr for BpeMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "joint" => Ok(BpeMode::Joint),
            "separate-source" => Ok(BpeMode::SeparateSource),
            "separate-target" => Ok(BpeMode::SeparateTarget),
            other => Err(format!("unknown BPE mode {other:?}")),
        }
    }
}

/// Which sides of a parallel corpus the merges are learned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    Joint,
    Separate,
}

impl FromStr for TrainMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "joint" => Ok(TrainMode::Joint),
            "separate" => Ok(TrainMode::Separate),
            other => Err(format!("unknown training mode {other:?} (joint|separate)")),
        }
    }
}

#[derive(Debug, Clone)]
pub enum TrainedModels {
    Joint(BpeModel),
    Separate { source: BpeModel, target: BpeModel },
}

/// Ordered merge list plus the base alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    mode: BpeMode,
    merges: Vec<(String, String)>,
    alphabet: BTreeSet<char>,
    ranks: HashMap<(String, String), usize>,
}

impl BpeModel {
    pub fn new(mode: BpeMode, alphabet: BTreeSet<char>, merges: Vec<(String, String)>) -> Self {
        let ranks = merges
            .iter()
            .enumerate()
            .map(|(i, pair)| (pair.clone(), i))
            .collect();
        Self {
            mode,
            merges,
            alphabet,
            ranks,
        }
    }

    pub fn mode(&self) -> BpeMode {
        self.mode
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn merge_count(&self) -> usize {
        self.merges.len()
    }

    pub fn alphabet(&self) -> &BTreeSet<char> {
        &self.alphabet
    }

    /// Alphabet plus every merge result.
    pub fn vocabulary(&self) -> BTreeSet<String> {
        self.alphabet
            .iter()
            .map(|c| c.to_string())
            .chain(self.merges.iter().map(|(l, r)| format!("{l}{r}")))
            .collect()
    }

    /// Model restricted to its first `n` merges.
    pub fn truncated(&self, n: usize) -> Self {
        Self::new(
            self.mode,
            self.alphabet.clone(),
            self.merges[..n.min(self.merges.len())].to_vec(),
        )
    }

    /// Segments one unit by repeatedly merging the lowest-ranked adjacent pair.
    pub fn encode_word(&self, word: &str) -> Vec<String> {
        let mut symbols: Vec<String> = word.chars().map(String::from).collect();
        if self.merges.is_empty() {
            return symbols;
        }
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())).copied())
                .min();
            let Some(rank) = best else { break };
            let (left, right) = &self.merges[rank];
            symbols = merge_in(&symbols, left, right);
        }
        symbols
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{FORMAT_VERSION} {} {}\n", self.mode, self.merges.len());
        out.push_str("alphabet");
        for c in &self.alphabet {
            out.push(' ');
            out.push(*c);
        }
        out.push('\n');
        for (l, r) in &self.merges {
            out.push_str(l);
            out.push(' ');
            out.push_str(r);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| TokenizerError::ModelFormat {
            line,
            message: msg.to_string(),
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad(1, "missing header"))?;
        let fields: Vec<&str> = header.split(' ').collect();
        let (mode, count) = match fields.as_slice() {
            [FORMAT_VERSION, mode, count] => (
                mode.parse::<BpeMode>().map_err(|e| bad(1, &e))?,
                count
                    .parse::<usize>()
                    .map_err(|_| bad(1, "merge count is not an integer"))?,
            ),
            _ => return Err(bad(1, "expected `bpe-v1 <mode> <merge_count>`")),
        };
        let alphabet_line = lines.next().ok_or_else(|| bad(2, "missing alphabet line"))?;
        let mut alphabet_fields = alphabet_line.split(' ');
        if alphabet_fields.next() != Some("alphabet") {
            return Err(bad(2, "expected `alphabet ...`"));
        }
        let mut alphabet = BTreeSet::new();
        for sym in alphabet_fields {
            let mut chars = sym.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => {
                    alphabet.insert(c);
                }
                _ => return Err(bad(2, "alphabet entries must be single characters")),
            }
        }
        let mut merges = Vec::with_capacity(count);
        for (i, line) in lines.enumerate() {
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                    merges.push((l.to_string(), r.to_string()))
                }
                _ => return Err(bad(i + 3, "expected two space-separated symbols")),
            }
        }
        if merges.len() != count {
            return Err(bad(
                1,
                &format!("header declares {count} merges, file has {}", merges.len()),
            ));
        }
        Ok(Self::new(mode, alphabet, merges))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path.as_ref(), self.to_text()).map_err(|source| TokenizerError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref()).map_err(|source| TokenizerError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }
}

fn merge_in(symbols: &[String], left: &str, right: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        if i + 1 < symbols.len() && symbols[i] == left && symbols[i + 1] == right {
            out.push(format!("{left}{right}"));
            i += 2;
        } else {
            out.push(symbols[i].clone());
            i += 1;
        }
    }
    out
}

/// Frequency of every BPE unit (lowercased word fragment or punctuation
/// character) in the given sentences. Placeholders are excluded.
pub fn word_counts<'a>(sentences: impl IntoIterator<Item = &'a str>) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for sentence in sentences {
        for unit in presplit(sentence) {
            if unit.kind != UnitKind::Placeholder {
                *counts.entry(unit.text).or_insert(0) += 1;
            }
        }
    }
    counts
}

type Pair = (u32, u32);

struct Interner {
    symbols: Vec<Arc<str>>,
    ids: HashMap<Arc<str>, u32>,
}

impl Interner {
    fn new() -> Self {
        Self {
            symbols: Vec::new(),
            ids: HashMap::new(),
        }
    }

    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        let sym: Arc<str> = Arc::from(s);
        self.symbols.push(sym.clone());
        self.ids.insert(sym, id);
        id
    }
}

/// Incremental pair statistics with an ordered queue keyed by
/// (count desc, left asc, right asc).
struct PairStats {
    counts: HashMap<Pair, i64>,
    queue: BTreeSet<(Reverse<i64>, Arc<str>, Arc<str>, Pair)>,
    where_found: HashMap<Pair, Vec<usize>>,
}

impl PairStats {
    fn adjust(&mut self, interner: &Interner, pair: Pair, delta: i64, word: usize) {
        let count = self.counts.entry(pair).or_insert(0);
        let old = *count;
        *count += delta;
        let new = *count;
        let key = |c: i64| {
            (
                Reverse(c),
                interner.symbols[pair.0 as usize].clone(),
                interner.symbols[pair.1 as usize].clone(),
                pair,
            )
        };
        if old > 0 {
            self.queue.remove(&key(old));
        }
        if new > 0 {
            self.queue.insert(key(new));
        }
        if delta > 0 {
            self.where_found.entry(pair).or_default().push(word);
        }
    }
}

fn pairs_of(word: &[u32]) -> impl Iterator<Item = Pair> + '_ {
    word.windows(2).map(|w| (w[0], w[1]))
}

/// Learns up to `merge_count` merges from a word-frequency dictionary.
///
/// Each step merges the most frequent adjacent pair, ties broken by the
/// lexicographically smallest (left, right). Stops early once no pair occurs
/// at least twice.
pub fn learn_merges(counts: &BTreeMap<String, u64>, merge_count: usize) -> Vec<(String, String)> {
    let mut interner = Interner::new();
    let mut words: Vec<Vec<u32>> = Vec::with_capacity(counts.len());
    let mut freqs: Vec<i64> = Vec::with_capacity(counts.len());
    for (word, &freq) in counts {
        let mut buf = [0u8; 4];
        words.push(
            word.chars()
                .map(|c| interner.intern(c.encode_utf8(&mut buf)))
                .collect(),
        );
        freqs.push(freq as i64);
    }
    let mut stats = PairStats {
        counts: HashMap::new(),
        queue: BTreeSet::new(),
        where_found: HashMap::new(),
    };
    for (w, word) in words.iter().enumerate() {
        for pair in pairs_of(word) {
            stats.adjust(&interner, pair, freqs[w], w);
        }
    }

    let mut merges = Vec::new();
    while merges.len() < merge_count {
        let Some((Reverse(count), left, right, pair)) = stats.queue.first().cloned() else {
            break;
        };
        if count < 2 {
            break;
        }
        let merged = interner.intern(&format!("{left}{right}"));
        merges.push((left.to_string(), right.to_string()));

        let mut affected = stats.where_found.remove(&pair).unwrap_or_default();
        affected.sort_unstable();
        affected.dedup();
        for w in affected {
            let word = &words[w];
            if !pairs_of(word).any(|p| p == pair) {
                continue;
            }
            let freq = freqs[w];
            let old_pairs: Vec<Pair> = pairs_of(word).collect();
            let mut next = Vec::with_capacity(word.len());
            let mut i = 0;
            while i < word.len() {
                if i + 1 < word.len() && (word[i], word[i + 1]) == pair {
                    next.push(merged);
                    i += 2;
                } else {
                    next.push(word[i]);
                    i += 1;
                }
            }
            for p in old_pairs {
                stats.adjust(&interner, p, -freq, w);
            }
            for p in pairs_of(&next).collect::<Vec<_>>() {
                stats.adjust(&interner, p, freq, w);
            }
            words[w] = next;
        }
    }
    merges
}

fn train_on<'a>(
    sentences: impl IntoIterator<Item = &'a str>,
    merge_count: usize,
    mode: BpeMode,
) -> Result<BpeModel> {
    let counts = word_counts(sentences);
    if counts.is_empty() {
        return Err(TokenizerError::EmptyCorpus);
    }
    let alphabet = counts.keys().flat_map(|w| w.chars()).collect();
    let merges = learn_merges(&counts, merge_count);
    Ok(BpeModel::new(mode, alphabet, merges))
}

/// Trains a BPE model on monolingual sentences.
pub fn train_monolingual<'a>(
    sentences: impl IntoIterator<Item = &'a str>,
    merge_count: usize,
) -> Result<BpeModel> {
    train_on(sentences, merge_count, BpeMode::Joint)
}

/// Trains one joint model over both sides, or one model per side.
pub fn train_bpe(
    corpus: &ParallelCorpus,
    merge_count: usize,
    mode: TrainMode,
) -> Result<TrainedModels> {
    if corpus.is_empty() {
        return Err(TokenizerError::EmptyCorpus);
    }
    Ok(match mode {
        TrainMode::Joint => TrainedModels::Joint(train_on(
            corpus.sources().chain(corpus.targets()),
            merge_count,
            BpeMode::Joint,
        )?),
        TrainMode::Separate => TrainedModels::Separate {
            source: train_on(corpus.sources(), merge_count, BpeMode::SeparateSource)?,
            target: train_on(corpus.targets(), merge_count, BpeMode::SeparateTarget)?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_merge_low_lower() {
        let model = train_monolingual(["low low lower"], 10).unwrap();
        assert_eq!(model.merges()[0], ("l".to_string(), "o".to_string()));
    }

    #[test]
    fn zero_merges_gives_characters() {
        let model = train_monolingual(["hello world"], 0).unwrap();
        assert_eq!(model.encode_word("hello"), vec!["h", "e", "l", "l", "o"]);
        let alphabet: BTreeSet<String> = model.alphabet().iter().map(|c| c.to_string()).collect();
        assert_eq!(model.vocabulary(), alphabet);
    }

    #[test]
    fn three_merges_extend_vocabulary_exactly() {
        let model = train_monolingual(["aaab aaab aaab cd cd"], 3).unwrap();
        assert_eq!(model.merge_count(), 3);
        let mut expected: BTreeSet<String> =
            model.alphabet().iter().map(|c| c.to_string()).collect();
        for (l, r) in model.merges() {
            expected.insert(format!("{l}{r}"));
        }
        assert_eq!(model.vocabulary(), expected);
        assert_eq!(model.vocabulary().len(), model.alphabet().len() + 3);
    }

    #[test]
    fn early_stop_when_no_pair_repeats() {
        let model = train_monolingual(["abc"], 50).unwrap();
        assert_eq!(model.merge_count(), 0);
        assert!(model.vocabulary().len() < model.alphabet().len() + 50);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(
            train_monolingual(["", "   "], 5),
            Err(TokenizerError::EmptyCorpus)
        ));
    }

    #[test]
    fn model_file_round_trip() {
        let model = train_monolingual(["the cat sat on the mat, the end."], 6).unwrap();
        let text = model.to_text();
        let header = format!("bpe-v1 joint {}\nalphabet ", model.merge_count());
        assert!(text.starts_with(&header));
        assert_eq!(BpeModel::from_text(&text).unwrap(), model);
    }

    #[test]
    fn malformed_model_file() {
        assert!(BpeModel::from_text("bpe-v2 joint 0\nalphabet\n").is_err());
        assert!(BpeModel::from_text("bpe-v1 joint 2\nalphabet a b\na b\n").is_err());
        assert!(BpeModel::from_text("bpe-v1 joint 1\nalphabet a b\na b c\n").is_err());
    }

    #[test]
    fn joint_alphabet_is_union() {
        let corpus = ParallelCorpus::from_pairs("en", "de", [("abc abc", "xyz äöü")])
            .unwrap()
            .corpus;
        let TrainedModels::Joint(joint) = train_bpe(&corpus, 5, TrainMode::Joint).unwrap() else {
            panic!("joint expected")
        };
        let TrainedModels::Separate { source, target } =
            train_bpe(&corpus, 5, TrainMode::Separate).unwrap()
        else {
            panic!("separate expected")
        };
        let union: BTreeSet<char> = source.alphabet().union(target.alphabet()).copied().collect();
        assert_eq!(joint.alphabet(), &union);
        assert_eq!(source.mode(), BpeMode::SeparateSource);
    }
}
