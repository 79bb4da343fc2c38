//! Human adequacy/fluency score sheets, rater agreement, and agreement
//! between BLEU and human judgements.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("row {row}: {field} score {value} outside {min}..={max}")]
    Range {
        row: usize,
        field: &'static str,
        value: i64,
        min: u8,
        max: u8,
    },
    #[error("row {row}: duplicate score for sentence {sentence}, rater {rater}, system {system}")]
    Duplicate {
        row: usize,
        sentence: String,
        rater: String,
        system: String,
    },
    #[error("no records")]
    Empty,
    #[error("need at least 2 systems shared by BLEU and human scores, found {0}")]
    InsufficientData(usize),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRange {
    pub min: u8,
    pub max: u8,
}

impl Default for ScoreRange {
    fn default() -> Self {
        Self { min: 1, max: 4 }
    }
}

impl ScoreRange {
    fn check(&self, row: usize, field: &'static str, value: i64) -> Result<u8, EvalError> {
        if value < self.min as i64 || value > self.max as i64 {
            return Err(EvalError::Range {
                row,
                field,
                value,
                min: self.min,
                max: self.max,
            });
        }
        Ok(value as u8)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdequacyFluencyRecord {
    pub sentence_id: String,
    pub rater_id: String,
    pub system: String,
    pub adequacy: u8,
    pub fluency: u8,
    /// Binary entity-handling judgement, when the sheet has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity: Option<u8>,
}

#[derive(Debug, Deserialize)]
struct RawRow {
    sentence_id: String,
    rater_id: String,
    system: String,
    adequacy: String,
    fluency: String,
    #[serde(default)]
    entity: Option<String>,
}

fn integer(row: usize, field: &str, text: &str) -> Result<i64, EvalError> {
    text.trim().parse().map_err(|_| EvalError::Parse {
        row,
        message: format!("{field} '{text}' is not an integer"),
    })
}

/// Reads a score sheet; data rows are numbered from 1 after the header.
pub fn read_scores<R: Read>(input: R, range: ScoreRange) -> Result<Vec<AdequacyFluencyRecord>, EvalError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| EvalError::Parse {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    for needed in ["sentence_id", "rater_id", "system", "adequacy", "fluency"] {
        if !headers.iter().any(|h| h == needed) {
            return Err(EvalError::Parse {
                row: 0,
                message: format!("missing column '{needed}'"),
            });
        }
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, result) in reader.deserialize::<RawRow>().enumerate() {
        let row = i + 1;
        let raw = result.map_err(|e| EvalError::Parse {
            row,
            message: e.to_string(),
        })?;
        let adequacy = range.check(row, "adequacy", integer(row, "adequacy", &raw.adequacy)?)?;
        let fluency = range.check(row, "fluency", integer(row, "fluency", &raw.fluency)?)?;
        let entity = match raw.entity.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(text) => match integer(row, "entity", text)? {
                v @ (0 | 1) => Some(v as u8),
                v => {
                    return Err(EvalError::Range {
                        row,
                        field: "entity",
                        value: v,
                        min: 0,
                        max: 1,
                    })
                }
            },
        };
        let key = (raw.sentence_id.clone(), raw.rater_id.clone(), raw.system.clone());
        if !seen.insert(key) {
            return Err(EvalError::Duplicate {
                row,
                sentence: raw.sentence_id,
                rater: raw.rater_id,
                system: raw.system,
            });
        }
        out.push(AdequacyFluencyRecord {
            sentence_id: raw.sentence_id,
            rater_id: raw.rater_id,
            system: raw.system,
            adequacy,
            fluency,
            entity,
        });
    }
    Ok(out)
}

pub fn ingest_scores(path: &Path, range: ScoreRange) -> Result<Vec<AdequacyFluencyRecord>, EvalError> {
    let file = std::fs::File::open(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_scores(file, range)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaterMeans {
    pub adequacy: f64,
    pub fluency: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSummary {
    pub adequacy: f64,
    pub fluency: f64,
    pub per_rater: BTreeMap<String, RaterMeans>,
    /// Quadratic-weighted kappa; `None` when undefined.
    pub kappa_adequacy: Option<f64>,
    pub kappa_fluency: Option<f64>,
    pub entity_accuracy: Option<f64>,
    /// Distinct scored sentences.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub range: ScoreRange,
    pub systems: BTreeMap<String, SystemSummary>,
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Quadratic-weighted kappa of two aligned ordinal ratings.
pub fn quadratic_kappa(a: &[u8], b: &[u8], range: ScoreRange) -> Option<f64> {
    if a.len() != b.len() || a.is_empty() {
        return None;
    }
    let k = (range.max - range.min) as usize + 1;
    if k < 2 {
        return None;
    }
    let n = a.len() as f64;
    let mut observed = vec![0.0; k * k];
    let mut ha = vec![0.0; k];
    let mut hb = vec![0.0; k];
    for (&x, &y) in a.iter().zip(b) {
        let (i, j) = ((x - range.min) as usize, (y - range.min) as usize);
        observed[i * k + j] += 1.0;
        ha[i] += 1.0;
        hb[j] += 1.0;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            let w = ((i as f64 - j as f64) / (k - 1) as f64).powi(2);
            num += w * observed[i * k + j];
            den += w * ha[i] * hb[j] / n;
        }
    }
    (den > 0.0).then(|| 1.0 - num / den)
}

/// Mean pairwise kappa over rater pairs with shared sentences.
fn agreement(
    scores: &BTreeMap<&str, BTreeMap<&str, u8>>,
    range: ScoreRange,
) -> Option<f64> {
    let raters: Vec<_> = scores.keys().collect();
    let mut kappas = Vec::new();
    for i in 0..raters.len() {
        for j in i + 1..raters.len() {
            let (ra, rb) = (&scores[raters[i]], &scores[raters[j]]);
            let (a, b): (Vec<u8>, Vec<u8>) = ra
                .iter()
                .filter_map(|(s, &x)| rb.get(s).map(|&y| (x, y)))
                .unzip();
            if let Some(k) = quadratic_kappa(&a, &b, range) {
                kappas.push(k);
            }
        }
    }
    (!kappas.is_empty()).then(|| mean(kappas))
}

/// Per-system means, averaged within each sentence first and then across
/// sentences, with per-rater means and pairwise agreement.
pub fn summarize(records: &[AdequacyFluencyRecord], range: ScoreRange) -> Result<EvaluationSummary, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut by_system: BTreeMap<&str, Vec<&AdequacyFluencyRecord>> = BTreeMap::new();
    for r in records {
        by_system.entry(&r.system).or_default().push(r);
    }
    let mut systems = BTreeMap::new();
    for (system, recs) in by_system {
        let mut by_sentence: BTreeMap<&str, Vec<&AdequacyFluencyRecord>> = BTreeMap::new();
        let mut by_rater: BTreeMap<&str, Vec<&AdequacyFluencyRecord>> = BTreeMap::new();
        let mut adequacy: BTreeMap<&str, BTreeMap<&str, u8>> = BTreeMap::new();
        let mut fluency: BTreeMap<&str, BTreeMap<&str, u8>> = BTreeMap::new();
        for r in &recs {
            by_sentence.entry(&r.sentence_id).or_default().push(r);
            by_rater.entry(&r.rater_id).or_default().push(r);
            adequacy.entry(&r.rater_id).or_default().insert(&r.sentence_id, r.adequacy);
            fluency.entry(&r.rater_id).or_default().insert(&r.sentence_id, r.fluency);
        }
        let sentence_mean = |f: fn(&AdequacyFluencyRecord) -> f64| {
            mean(by_sentence.values().map(|rs| mean(rs.iter().map(|r| f(r)))))
        };
        let entity: Vec<f64> = recs.iter().filter_map(|r| r.entity.map(f64::from)).collect();
        systems.insert(
            system.to_string(),
            SystemSummary {
                adequacy: sentence_mean(|r| r.adequacy as f64),
                fluency: sentence_mean(|r| r.fluency as f64),
                per_rater: by_rater
                    .iter()
                    .map(|(rater, rs)| {
                        (
                            rater.to_string(),
                            RaterMeans {
                                adequacy: mean(rs.iter().map(|r| r.adequacy as f64)),
                                fluency: mean(rs.iter().map(|r| r.fluency as f64)),
                                n: rs.len(),
                            },
                        )
                    })
                    .collect(),
                kappa_adequacy: agreement(&adequacy, range),
                kappa_fluency: agreement(&fluency, range),
                entity_accuracy: (!entity.is_empty()).then(|| mean(entity)),
                n: by_sentence.len(),
            },
        );
    }
    Ok(EvaluationSummary { range, systems })
}

impl EvaluationSummary {
    /// metric name -> system -> score, ready for [`correlate`].
    pub fn human_metrics(&self) -> BTreeMap<String, BTreeMap<String, f64>> {
        let mut out: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (system, s) in &self.systems {
            out.entry("adequacy".into()).or_default().insert(system.clone(), s.adequacy);
            out.entry("fluency".into()).or_default().insert(system.clone(), s.fluency);
        }
        out
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(x.iter().copied()), mean(y.iter().copied()));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks, ascending, ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Highest-scoring key; ties go to the lexicographically smallest key.
fn argmax(scores: &BTreeMap<&str, f64>) -> String {
    let mut best: Option<(&str, f64)> = None;
    for (&k, &v) in scores {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub system: String,
    pub bleu: f64,
    pub human: f64,
    pub bleu_rank: f64,
    pub human_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCorrelation {
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub bleu_argmax: String,
    pub human_argmax: String,
    pub argmax_disagrees: bool,
    pub ranks: Vec<RankRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub systems: Vec<String>,
    pub metrics: BTreeMap<String, MetricCorrelation>,
}

/// Correlates BLEU with each human metric over the systems both cover.
pub fn correlate(
    bleu_by_system: &BTreeMap<String, f64>,
    human_by_metric: &BTreeMap<String, BTreeMap<String, f64>>,
) -> Result<CorrelationReport, EvalError> {
    let mut common: BTreeSet<&str> = bleu_by_system.keys().map(String::as_str).collect();
    for scores in human_by_metric.values() {
        common.retain(|s| scores.contains_key(*s));
    }
    if common.len() < 2 {
        return Err(EvalError::InsufficientData(common.len()));
    }
    if common.len() < 3 {
        log::warn!("correlation over {} systems is not meaningful", common.len());
    }
    let systems: Vec<&str> = common.into_iter().collect();
    let bleu: Vec<f64> = systems.iter().map(|s| bleu_by_system[*s]).collect();
    let bleu_map: BTreeMap<&str, f64> = systems.iter().copied().zip(bleu.iter().copied()).collect();
    let bleu_ranks = average_ranks(&bleu);
    let mut metrics = BTreeMap::new();
    for (name, scores) in human_by_metric {
        let human: Vec<f64> = systems.iter().map(|s| scores[*s]).collect();
        let human_map: BTreeMap<&str, f64> = systems.iter().copied().zip(human.iter().copied()).collect();
        let human_ranks = average_ranks(&human);
        let bleu_argmax = argmax(&bleu_map);
        let human_argmax = argmax(&human_map);
        metrics.insert(
            name.clone(),
            MetricCorrelation {
                pearson: pearson(&bleu, &human),
                spearman: spearman(&bleu, &human),
                argmax_disagrees: bleu_argmax != human_argmax,
                bleu_argmax,
                human_argmax,
                ranks: systems
                    .iter()
                    .enumerate()
                    .map(|(i, s)| RankRow {
                        system: s.to_string(),
                        bleu: bleu[i],
                        human: human[i],
                        bleu_rank: bleu_ranks[i],
                        human_rank: human_ranks[i],
                    })
                    .collect(),
            },
        );
    }
    Ok(CorrelationReport {
        systems: systems.into_iter().map(String::from).collect(),
        metrics,
    })
}

/// `system,bleu,<metric>...` rows for plotting BLEU against human scores.
pub fn plot_table(
    bleu_by_system: &BTreeMap<String, f64>,
    human_by_metric: &BTreeMap<String, BTreeMap<String, f64>>,
) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["system".to_string(), "bleu".to_string()];
    header.extend(human_by_metric.keys().cloned());
    w.write_record(&header).expect("in-memory csv");
    for (system, bleu) in bleu_by_system {
        let mut row = vec![system.clone(), bleu.to_string()];
        for scores in human_by_metric.values() {
            row.push(scores.get(system).map(|v| v.to_string()).unwrap_or_default());
        }
        w.write_record(&row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHEET: &str = "sentence_id,rater_id,system,adequacy,fluency\n\
        s1,r1,base,4,3\n\
        s1,r2,base,3,3\n\
        s2,r1,base,2,4\n\
        s2,r2,base,1,2\n\
        s3,r1,base,4,4\n\
        s3,r2,other,2,1\n";

    fn range() -> ScoreRange {
        ScoreRange::default()
    }

    fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn reads_valid_sheet() {
        let records = read_scores(SHEET.as_bytes(), range()).unwrap();
        assert_eq!(records.len(), 6);
        assert_eq!(records[2].adequacy, 2);
        assert_eq!(records[0].entity, None);
    }

    #[test]
    fn out_of_range_names_row() {
        let sheet = "sentence_id,rater_id,system,adequacy,fluency\ns1,r1,a,4,3\ns2,r1,a,9,3\n";
        match read_scores(sheet.as_bytes(), range()) {
            Err(EvalError::Range { row, field, value, .. }) => {
                assert_eq!((row, field, value), (2, "adequacy", 9));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicates_and_malformed_rows() {
        let dup = "sentence_id,rater_id,system,adequacy,fluency\ns1,r1,a,4,3\ns1,r1,a,3,3\n";
        assert!(matches!(read_scores(dup.as_bytes(), range()), Err(EvalError::Duplicate { row: 2, .. })));
        let bad = "sentence_id,rater_id,system,adequacy,fluency\ns1,r1,a,x,3\n";
        assert!(matches!(read_scores(bad.as_bytes(), range()), Err(EvalError::Parse { row: 1, .. })));
        let missing = "sentence_id,rater_id,adequacy,fluency\n";
        assert!(matches!(read_scores(missing.as_bytes(), range()), Err(EvalError::Parse { row: 0, .. })));
    }

    #[test]
    fn entity_column_is_optional_binary() {
        let sheet = "sentence_id,rater_id,system,adequacy,fluency,entity\ns1,r1,a,4,3,1\ns2,r1,a,4,3,0\ns3,r1,a,4,3,\n";
        let records = read_scores(sheet.as_bytes(), range()).unwrap();
        assert_eq!(records.iter().map(|r| r.entity).collect::<Vec<_>>(), vec![Some(1), Some(0), None]);
        let summary = summarize(&records, range()).unwrap();
        assert_eq!(summary.systems["a"].entity_accuracy, Some(0.5));
        let bad = "sentence_id,rater_id,system,adequacy,fluency,entity\ns1,r1,a,4,3,2\n";
        assert!(read_scores(bad.as_bytes(), range()).is_err());
    }

    #[test]
    fn sentence_first_means() {
        let records = read_scores(SHEET.as_bytes(), range()).unwrap();
        let summary = summarize(&records, range()).unwrap();
        let base = &summary.systems["base"];
        // sentence means: s1 3.5, s2 1.5, s3 4 -> 9/3
        assert_eq!(base.adequacy, 3.0);
        // fluency: s1 3, s2 3, s3 4 -> 10/3
        assert_eq!(base.fluency, 10.0 / 3.0);
        assert_eq!(base.n, 3);
        assert_eq!(base.per_rater["r1"].adequacy, 10.0 / 3.0);
        assert_eq!(base.per_rater["r2"].n, 2);
        let other = &summary.systems["other"];
        assert_eq!((other.adequacy, other.fluency, other.n), (2.0, 1.0, 1));
        assert_eq!(other.kappa_adequacy, None);
    }

    #[test]
    fn kappa_cases() {
        assert_eq!(quadratic_kappa(&[1, 2, 3, 4], &[1, 2, 3, 4], range()), Some(1.0));
        assert_eq!(quadratic_kappa(&[2, 2, 2], &[2, 2, 2], range()), None);
        let a = [1, 2, 3, 4, 2];
        let b = [2, 2, 4, 3, 1];
        assert_eq!(quadratic_kappa(&a, &b, range()), quadratic_kappa(&b, &a, range()));
        assert!(quadratic_kappa(&[1, 4], &[4, 1], range()).unwrap() < 0.0);
    }

    #[test]
    fn linear_relation_is_perfect() {
        let bleu = map(&[("1M", 40.0), ("2.5M", 43.5), ("5M", 45.1), ("7.5M", 47.95), ("10M", 47.2)]);
        let human: BTreeMap<String, f64> = bleu.iter().map(|(k, v)| (k.clone(), 2.0 * v + 1.0)).collect();
        let report = correlate(&bleu, &BTreeMap::from([("adequacy".to_string(), human)])).unwrap();
        let m = &report.metrics["adequacy"];
        assert!((m.pearson.unwrap() - 1.0).abs() < 1e-12);
        assert!(!m.argmax_disagrees);
    }

    #[test]
    fn monotone_transform_keeps_rank_correlation() {
        let bleu = map(&[("a", 1.0), ("b", 2.0), ("c", 3.0), ("d", 10.0)]);
        let human: BTreeMap<String, f64> = bleu.iter().map(|(k, v)| (k.clone(), v.powi(3))).collect();
        let report = correlate(&bleu, &BTreeMap::from([("fluency".to_string(), human)])).unwrap();
        let m = &report.metrics["fluency"];
        assert!((m.spearman.unwrap() - 1.0).abs() < 1e-12);
        assert!(m.pearson.unwrap() < 1.0 - 1e-6);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn too_few_systems() {
        let bleu = map(&[("a", 1.0), ("b", 2.0)]);
        let human = BTreeMap::from([("adequacy".to_string(), map(&[("a", 3.0), ("z", 1.0)]))]);
        assert!(matches!(correlate(&bleu, &human), Err(EvalError::InsufficientData(1))));
    }

    #[test]
    fn plot_rows() {
        let bleu = map(&[("a", 1.0), ("b", 2.0)]);
        let human = BTreeMap::from([("adequacy".to_string(), map(&[("a", 3.0), ("b", 3.5)]))]);
        assert_eq!(plot_table(&bleu, &human), "system,bleu,adequacy\na,1,3\nb,2,3.5\n");
    }
}
