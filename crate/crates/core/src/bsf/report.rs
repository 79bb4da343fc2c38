//! Source/translation aspect-value disagreement.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{match_sentences, AspectLexicon, BsfError, HashedLinearClassifier, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BilingualPair {
    pub id: String,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flag {
    pub id: String,
    pub source_label: String,
    pub target_label: String,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsfReport {
    pub aspect: String,
    pub labels: Vec<String>,
    pub matched: usize,
    /// `counts[source_label][target_label]`
    pub counts: Vec<Vec<usize>>,
    /// Rows normalized by source-label volume, in percent. Empty rows stay 0.
    pub percent: Vec<Vec<f64>>,
    pub flagged: Vec<Flag>,
    /// Source-matched pairs whose translation the target lexicon misses.
    pub target_unmatched: Vec<String>,
}

/// Classifies both sides of every pair the source lexicon matches and
/// flags those whose predicted labels differ.
pub fn cross_language_report(
    pairs: &[BilingualPair],
    source_lexicon: &AspectLexicon,
    target_lexicon: Option<&AspectLexicon>,
    source_clf: &HashedLinearClassifier,
    target_clf: &HashedLinearClassifier,
) -> Result<BsfReport> {
    if source_clf.labels() != target_clf.labels() {
        return Err(BsfError::Config(format!(
            "label sets differ: {:?} vs {:?}",
            source_clf.labels(),
            target_clf.labels()
        )));
    }
    let labels = source_clf.labels().to_vec();
    let sources: Vec<&str> = pairs.iter().map(|p| p.source.as_str()).collect();
    let matched = match_sentences(&sources, source_lexicon)?;
    let target_hits: Option<Vec<usize>> = match target_lexicon {
        Some(lex) => {
            let targets: Vec<&str> = matched.iter().map(|&i| pairs[i].target.as_str()).collect();
            Some(match_sentences(&targets, lex)?)
        }
        None => None,
    };
    let pos = |l: &str| labels.iter().position(|x| x == l).expect("shared label set");
    let mut counts = vec![vec![0usize; labels.len()]; labels.len()];
    let mut flagged = Vec::new();
    for &i in &matched {
        let p = &pairs[i];
        let (s, t) = (source_clf.predict(&p.source), target_clf.predict(&p.target));
        counts[pos(s)][pos(t)] += 1;
        if s != t {
            flagged.push(Flag {
                id: p.id.clone(),
                source_label: s.to_string(),
                target_label: t.to_string(),
                source: p.source.clone(),
                target: p.target.clone(),
            });
        }
    }
    let percent = counts
        .iter()
        .map(|row| {
            let total: usize = row.iter().sum();
            row.iter()
                .map(|&c| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 })
                .collect()
        })
        .collect();
    let target_unmatched = match target_hits {
        Some(hits) => (0..matched.len())
            .filter(|k| hits.binary_search(k).is_err())
            .map(|k| pairs[matched[k]].id.clone())
            .collect(),
        None => Vec::new(),
    };
    Ok(BsfReport {
        aspect: source_lexicon.aspect.clone(),
        labels,
        matched: matched.len(),
        counts,
        percent,
        flagged,
        target_unmatched,
    })
}

impl BsfReport {
    pub fn row_totals(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Row-normalized matrix with source labels down the side and target
    /// labels across the top.
    pub fn to_table(&self) -> String {
        let side = self.labels.iter().map(String::len).max().unwrap_or(0).max("source \\ target".len());
        let col = self.labels.iter().map(String::len).max().unwrap_or(0).max(8);
        let mut out = format!("{:side$}", "source \\ target");
        for l in &self.labels {
            write!(out, "  {l:>col$}").expect("string write");
        }
        writeln!(out, "  {:>6}", "n").expect("string write");
        for ((label, row), total) in self.labels.iter().zip(&self.percent).zip(self.row_totals()) {
            write!(out, "{label:side$}").expect("string write");
            for v in row {
                write!(out, "  {:>col$}", format!("{v:.1}%")).expect("string write");
            }
            writeln!(out, "  {total:>6}").expect("string write");
        }
        writeln!(out, "matched {}, flagged {}", self.matched, self.flagged.len()).expect("string write");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::{train_classifier, ClassifierConfig};
    use super::*;

    fn clf() -> HashedLinearClassifier {
        let data: Vec<(String, String)> = [
            ("free parking on site", "free"),
            ("parking is free for guests", "free"),
            ("complimentary parking", "free"),
            ("parking costs 10 euros", "paid"),
            ("paid parking nearby", "paid"),
            ("parking for a fee", "paid"),
        ]
        .iter()
        .map(|(t, l)| (t.to_string(), l.to_string()))
        .collect();
        train_classifier(&data, &ClassifierConfig::default()).unwrap()
    }

    fn pair(id: usize, s: &str, t: &str) -> BilingualPair {
        BilingualPair {
            id: format!("p{id}"),
            source: s.into(),
            target: t.into(),
        }
    }

    #[test]
    fn copies_give_identity() {
        let c = clf();
        let lex = AspectLexicon::from_seeds("parking", "en", &["parking"]);
        let pairs: Vec<BilingualPair> = ["free parking on site", "parking costs 10 euros", "breakfast included"]
            .iter()
            .enumerate()
            .map(|(i, s)| pair(i, s, s))
            .collect();
        let r = cross_language_report(&pairs, &lex, Some(&lex), &c, &c).unwrap();
        assert_eq!(r.matched, 2);
        assert!(r.flagged.is_empty());
        assert!(r.target_unmatched.is_empty());
        assert_eq!(r.percent, vec![vec![100.0, 0.0], vec![0.0, 100.0]]);
    }

    #[test]
    fn one_planted_flip_in_ten() {
        let c = clf();
        let lex = AspectLexicon::from_seeds("parking", "en", &["parking"]);
        let mut pairs: Vec<BilingualPair> = (0..10).map(|i| pair(i, "free parking on site", "free parking on site")).collect();
        pairs[6].target = "paid parking nearby".into();
        let r = cross_language_report(&pairs, &lex, None, &c, &c).unwrap();
        assert_eq!(r.percent[0], vec![90.0, 10.0]);
        assert_eq!(r.flagged.len(), 1);
        assert_eq!(r.flagged[0].id, "p6");
        assert_eq!((r.flagged[0].source_label.as_str(), r.flagged[0].target_label.as_str()), ("free", "paid"));
        let table = r.to_table();
        assert!(table.contains("90.0%"), "{table}");
    }

    #[test]
    fn label_sets_must_agree() {
        let c = clf();
        let other = HashedLinearClassifier::new(vec!["a".into(), "b".into()], c.spec());
        let lex = AspectLexicon::from_seeds("parking", "en", &["parking"]);
        assert!(matches!(
            cross_language_report(&[], &lex, None, &c, &other),
            Err(BsfError::Config(_))
        ));
    }
}
