//! Multinomial logistic regression over hashed unigram and bigram counts.
//!
//! Feature indices are the low `bits` bits of 64-bit FNV-1a over
//! `"1:" + token` for unigrams and `"2:" + left + " " + right` for bigrams,
//! with tokens from [`super::tokens`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{tokens, BsfError, Result};
use crate::hashing::fnv1a64;
use crate::rng::stream_rng;

pub const MODEL_HEADER: &str = "hashed-linear-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub bits: u32,
    pub bigrams: bool,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self {
            bits: 18,
            bigrams: true,
        }
    }
}

impl FeatureSpec {
    pub fn width(&self) -> usize {
        1 << self.bits
    }
}

/// Sorted `(index, count)` pairs.
pub fn features(text: &str, spec: FeatureSpec) -> Vec<(usize, f64)> {
    let mask = (1u64 << spec.bits) - 1;
    let toks = tokens(text);
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    let mut add = |key: String| *counts.entry((fnv1a64(&key) & mask) as usize).or_default() += 1.0;
    for t in &toks {
        add(format!("1:{t}"));
    }
    if spec.bigrams {
        for w in toks.windows(2) {
            add(format!("2:{} {}", w[0], w[1]));
        }
    }
    counts.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub features: FeatureSpec,
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 strength, applied to the weights touched by each example.
    pub l2: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            features: FeatureSpec::default(),
            learning_rate: 0.2,
            epochs: 10,
            l2: 1e-6,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HashedLinearClassifier {
    labels: Vec<String>,
    spec: FeatureSpec,
    /// `weights[label * width + feature]`
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl HashedLinearClassifier {
    pub fn new(labels: Vec<String>, spec: FeatureSpec) -> Self {
        Self {
            weights: vec![0.0; labels.len() * spec.width()],
            bias: vec![0.0; labels.len()],
            labels,
            spec,
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn spec(&self) -> FeatureSpec {
        self.spec
    }

    fn scores_of(&self, feats: &[(usize, f64)]) -> Vec<f64> {
        let width = self.spec.width();
        (0..self.labels.len())
            .map(|l| {
                let row = &self.weights[l * width..(l + 1) * width];
                self.bias[l] + feats.iter().map(|&(i, c)| row[i] * c).sum::<f64>()
            })
            .collect()
    }

    pub fn scores(&self, text: &str) -> Vec<f64> {
        self.scores_of(&features(text, self.spec))
    }

    /// Argmax of the label scores; ties go to the earlier label.
    pub fn predict(&self, text: &str) -> &str {
        let scores = self.scores(text);
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        &self.labels[best]
    }

    /// Multiplies every weight and bias by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.weights.iter_mut().chain(out.bias.iter_mut()).for_each(|w| *w *= factor);
        out
    }

    pub fn to_text(&self) -> String {
        let width = self.spec.width();
        let mut out = format!(
            "{MODEL_HEADER}\nbits {}\nbigrams {}\nlabels {}\nbias",
            self.spec.bits,
            self.spec.bigrams,
            self.labels.join("\t")
        );
        for b in &self.bias {
            write!(out, " {b}").expect("string write");
        }
        out.push('\n');
        for i in 0..width {
            let column: Vec<f64> = (0..self.labels.len()).map(|l| self.weights[l * width + i]).collect();
            if column.iter().any(|&w| w != 0.0) {
                write!(out, "{i}").expect("string write");
                for w in column {
                    write!(out, " {w}").expect("string write");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| BsfError::Format { line, message };
        let mut lines = text.lines();
        let mut next = |line: usize, key: &str| -> Result<String> {
            let l = lines.next().ok_or_else(|| err(line, format!("missing '{key}'")))?;
            if key.is_empty() {
                return Ok(l.to_string());
            }
            l.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .map(String::from)
                .ok_or_else(|| err(line, format!("expected '{key}'")))
        };
        if next(1, "")? != MODEL_HEADER {
            return Err(err(1, format!("not a {MODEL_HEADER} model")));
        }
        let bits: u32 = next(2, "bits")?.parse().map_err(|_| err(2, "bad bits".into()))?;
        if !(1..=30).contains(&bits) {
            return Err(err(2, format!("bits {bits} out of range")));
        }
        let bigrams: bool = next(3, "bigrams")?.parse().map_err(|_| err(3, "bad bigrams flag".into()))?;
        let labels: Vec<String> = next(4, "labels")?.split('\t').map(String::from).collect();
        let parse_row = |line: usize, text: &str| -> Result<Vec<f64>> {
            let row = text
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| err(line, e.to_string()))?;
            if row.len() != labels.len() {
                return Err(err(line, format!("{} values for {} labels", row.len(), labels.len())));
            }
            Ok(row)
        };
        let bias = parse_row(5, &next(5, "bias")?)?;
        let mut clf = Self::new(labels.clone(), FeatureSpec { bits, bigrams });
        clf.bias = bias;
        let width = clf.spec.width();
        for (i, line) in text.lines().enumerate().skip(5) {
            let line_no = i + 1;
            let Some((index, rest)) = line.split_once(' ') else {
                return Err(err(line_no, "expected 'index w1 ... wL'".into()));
            };
            let index: usize = index.parse().map_err(|_| err(line_no, format!("bad index '{index}'")))?;
            if index >= width {
                return Err(err(line_no, format!("index {index} exceeds 2^{bits}")));
            }
            for (l, w) in parse_row(line_no, rest)?.into_iter().enumerate() {
                clf.weights[l * width + index] = w;
            }
        }
        Ok(clf)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_text())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// SGD on the softmax cross-entropy, one example at a time, in an order
/// reshuffled every epoch.
pub fn train_classifier(labeled: &[(String, String)], config: &ClassifierConfig) -> Result<HashedLinearClassifier> {
    let labels: Vec<String> = labeled
        .iter()
        .map(|(_, l)| l.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if labels.len() < 2 {
        return Err(BsfError::DegenerateTraining(labels));
    }
    if !(1..=30).contains(&config.features.bits) {
        return Err(BsfError::Config(format!("bits {} out of range", config.features.bits)));
    }
    let mut clf = HashedLinearClassifier::new(labels, config.features);
    let width = config.features.width();
    let examples: Vec<(Vec<(usize, f64)>, usize)> = labeled
        .iter()
        .map(|(text, label)| {
            let y = clf.labels.binary_search(label).expect("label collected above");
            (features(text, config.features), y)
        })
        .collect();
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut stream_rng(config.seed, &format!("bsf.classifier.{epoch}")));
        for &e in &order {
            let (feats, y) = &examples[e];
            let scores = clf.scores_of(feats);
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
            let z: f64 = exp.iter().sum();
            for (l, p) in exp.iter().map(|v| v / z).enumerate() {
                let g = p - if l == *y { 1.0 } else { 0.0 };
                clf.bias[l] -= config.learning_rate * g;
                let row = &mut clf.weights[l * width..(l + 1) * width];
                for &(i, c) in feats {
                    row[i] -= config.learning_rate * (g * c + config.l2 * row[i]);
                }
            }
        }
    }
    Ok(clf)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub labels: Vec<String>,
    pub per_label: BTreeMap<String, LabelMetrics>,
    pub macro_avg: LabelMetrics,
    pub weighted_avg: LabelMetrics,
    pub accuracy: f64,
    /// `confusion[gold][predicted]` in `labels` order.
    pub confusion: Vec<Vec<usize>>,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// One-vs-rest precision, recall and F1; an empty denominator counts as 0.
pub fn score_predictions<S: AsRef<str>>(gold: &[S], predicted: &[S]) -> Result<ClassificationReport> {
    if gold.is_empty() {
        return Err(BsfError::Empty("held-out set"));
    }
    if gold.len() != predicted.len() {
        return Err(BsfError::Config(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            predicted.len()
        )));
    }
    let labels: Vec<String> = gold
        .iter()
        .chain(predicted)
        .map(|s| s.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pos = |s: &str| labels.binary_search_by(|l| l.as_str().cmp(s)).expect("collected");
    let mut confusion = vec![vec![0usize; labels.len()]; labels.len()];
    for (g, p) in gold.iter().zip(predicted) {
        confusion[pos(g.as_ref())][pos(p.as_ref())] += 1;
    }
    let n = gold.len();
    let mut per_label = BTreeMap::new();
    let (mut macro_avg, mut weighted) = ([0.0; 3], [0.0; 3]);
    for (i, label) in labels.iter().enumerate() {
        let tp = confusion[i][i];
        let support: usize = confusion[i].iter().sum();
        let predicted_here: usize = confusion.iter().map(|row| row[i]).sum();
        let precision = ratio(tp, predicted_here);
        let recall = ratio(tp, support);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        for (k, v) in [precision, recall, f1].into_iter().enumerate() {
            macro_avg[k] += v / labels.len() as f64;
            weighted[k] += v * support as f64 / n as f64;
        }
        per_label.insert(
            label.clone(),
            LabelMetrics {
                precision,
                recall,
                f1,
                support,
            },
        );
    }
    let avg = |v: [f64; 3]| LabelMetrics {
        precision: v[0],
        recall: v[1],
        f1: v[2],
        support: n,
    };
    Ok(ClassificationReport {
        accuracy: ratio((0..labels.len()).map(|i| confusion[i][i]).sum(), n),
        labels,
        per_label,
        macro_avg: avg(macro_avg),
        weighted_avg: avg(weighted),
        confusion,
    })
}

pub fn evaluate_classifier(clf: &HashedLinearClassifier, heldout: &[(String, String)]) -> Result<ClassificationReport> {
    let gold: Vec<&str> = heldout.iter().map(|(_, l)| l.as_str()).collect();
    let predicted: Vec<&str> = heldout.iter().map(|(t, _)| clf.predict(t)).collect();
    score_predictions(&gold, &predicted)
}

impl ClassificationReport {
    pub fn to_table(&self) -> String {
        let width = self.labels.iter().map(String::len).max().unwrap_or(0).max(12);
        let mut out = format!("{:width$}  precision  recall  f1     support\n", "");
        let rows = self
            .labels
            .iter()
            .map(|l| (l.as_str(), self.per_label[l]))
            .chain([("macro avg", self.macro_avg), ("weighted avg", self.weighted_avg)]);
        for (name, m) in rows {
            writeln!(
                out,
                "{name:width$}  {:>9.2}  {:>6.2}  {:>5.2}  {:>7}",
                m.precision, m.recall, m.f1, m.support
            )
            .expect("string write");
        }
        writeln!(out, "{:width$}  {:>9.2}", "accuracy", self.accuracy).expect("string write");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> Vec<(String, String)> {
        let a = ["sun", "beach", "warm", "sand", "sea"];
        let b = ["snow", "ski", "cold", "ice", "slope"];
        (0..20)
            .map(|i| {
                let (words, label) = if i % 2 == 0 { (&a, "summer") } else { (&b, "winter") };
                (format!("{} {} {}", words[i % 5], words[(i + 1) % 5], words[(i + 3) % 5]), label.to_string())
            })
            .collect()
    }

    #[test]
    fn feature_hashing_is_stable() {
        let f = features("Free parking", FeatureSpec::default());
        let expect = |k: &str| (fnv1a64(k) & ((1 << 18) - 1)) as usize;
        let mut want = vec![(expect("1:free"), 1.0), (expect("1:parking"), 1.0), (expect("2:free parking"), 1.0)];
        want.sort_by_key(|p| p.0);
        assert_eq!(f, want);
        let no_bigrams = FeatureSpec {
            bigrams: false,
            ..Default::default()
        };
        assert_eq!(features("a a", no_bigrams), vec![(expect("1:a"), 2.0)]);
    }

    #[test]
    fn separable_data_is_learned() {
        let data = separable();
        let clf = train_classifier(&data, &ClassifierConfig::default()).unwrap();
        assert!(data.iter().all(|(t, l)| clf.predict(t) == l));
        let again = train_classifier(&data, &ClassifierConfig::default()).unwrap();
        assert_eq!(clf, again);
    }

    #[test]
    fn empty_text_follows_bias() {
        let mut data = separable();
        data.push(("sun".into(), "summer".into()));
        data.push(("sea".into(), "summer".into()));
        let clf = train_classifier(&data, &ClassifierConfig::default()).unwrap();
        let s = clf.scores("");
        let expected = if s[1] > s[0] { "winter" } else { "summer" };
        assert_eq!(clf.predict(""), expected);
        assert_eq!(clf.predict("!!"), expected);
    }

    #[test]
    fn single_label_is_degenerate() {
        let data = vec![("a".to_string(), "x".to_string()), ("b".to_string(), "x".to_string())];
        assert!(matches!(
            train_classifier(&data, &ClassifierConfig::default()),
            Err(BsfError::DegenerateTraining(_))
        ));
    }

    #[test]
    fn model_file_round_trip() {
        let clf = train_classifier(&separable(), &ClassifierConfig::default()).unwrap();
        let text = clf.to_text();
        assert!(text.starts_with("hashed-linear-v1\nbits 18\n"));
        assert_eq!(HashedLinearClassifier::from_text(&text).unwrap(), clf);
        let broken = text.replacen("bits 18", "bits x", 1);
        assert!(matches!(HashedLinearClassifier::from_text(&broken), Err(BsfError::Format { line: 2, .. })));
    }

    #[test]
    fn scaling_keeps_predictions() {
        let data = separable();
        let clf = train_classifier(&data, &ClassifierConfig::default()).unwrap();
        let big = clf.scaled(7.5);
        assert!(data.iter().all(|(t, _)| clf.predict(t) == big.predict(t)));
    }

    #[test]
    fn perfect_predictions() {
        let gold = ["a", "b", "c", "a"];
        let r = score_predictions(&gold, &gold).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.macro_avg.f1, 1.0);
        assert!(r.per_label.values().all(|m| (m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0)));
    }

    #[test]
    fn hand_counted_confusion() {
        // 6 x, 4 y; one x called y and one y called x.
        let gold = ["x", "x", "x", "x", "x", "x", "y", "y", "y", "y"];
        let pred = ["x", "x", "x", "x", "x", "y", "x", "y", "y", "y"];
        let r = score_predictions(&gold, &pred).unwrap();
        let x = r.per_label["x"];
        assert_eq!((x.precision, x.recall, x.support), (5.0 / 6.0, 5.0 / 6.0, 6));
        let y = r.per_label["y"];
        assert_eq!((y.precision, y.recall), (0.75, 0.75));
        assert!((r.macro_avg.f1 - (5.0 / 6.0 + 0.75) / 2.0).abs() < 1e-12);
        assert!((r.weighted_avg.f1 - (0.6 * 5.0 / 6.0 + 0.4 * 0.75)).abs() < 1e-12);
        assert_eq!(r.accuracy, 0.8);
        assert_eq!(r.confusion, vec![vec![5, 1], vec![1, 3]]);
        assert!(score_predictions::<&str>(&[], &[]).is_err());
    }
}
