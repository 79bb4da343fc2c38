//! Template-based entity recognition, placeholder masking with locale-aware
//! restoration, and parallel-corpus mismatch scans.

mod locale;
mod parsers;
mod templates;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::ParallelCorpus;

pub use locale::{round_half_up, LocaleFormat, TimeStyle, UnitPolicy, KM_PER_MILE};
pub use parsers::{
    metres, DateParser, DistanceParser, DurationParser, EntityParser, ParserRegistry, TimeParser,
};
pub use templates::{EntityTemplate, TemplateSet};

/// Relative tolerance used when comparing distances across units.
pub const DEFAULT_TOLERANCE: f64 = 0.005;

#[derive(Debug, Error)]
pub enum EntityError {
    #[error("template '{name}' does not compile: {message}")]
    Template { name: String, message: String },
    #[error("template file line {line}: {message}")]
    TemplateFile { line: usize, message: String },
    #[error("no {side}-side templates given")]
    NoTemplates { side: &'static str },
    #[error("placeholder {placeholder} has no entry in the map")]
    DanglingPlaceholder { placeholder: String },
    #[error("no renderer for entity type {0}")]
    Render(EntityType),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityType {
    Distance,
    Duration,
    Time,
    Date,
}

impl EntityType {
    pub const ALL: [EntityType; 4] = [Self::Distance, Self::Duration, Self::Time, Self::Date];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Distance => "distance",
            Self::Duration => "duration",
            Self::Time => "time",
            Self::Date => "date",
        }
    }

    /// Tag used inside placeholders.
    pub fn tag(self) -> &'static str {
        match self {
            Self::Distance => "DIST",
            Self::Duration => "DUR",
            Self::Time => "TIME",
            Self::Date => "DATE",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.tag() == tag)
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown entity type '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceUnit {
    M,
    Km,
    Mi,
}

impl DistanceUnit {
    pub fn symbol(self) -> &'static str {
        match self {
            Self::M => "m",
            Self::Km => "km",
            Self::Mi => "mi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NormalizedValue {
    Distance {
        magnitude: f64,
        /// Fractional digits in the source text, kept when rendering.
        decimals: usize,
        unit: DistanceUnit,
    },
    Duration {
        minutes: u32,
    },
    /// Minutes since midnight.
    Time {
        minutes: u32,
    },
    Date {
        year: i32,
        month: u32,
        day: u32,
    },
}

impl NormalizedValue {
    pub fn entity_type(&self) -> EntityType {
        match self {
            Self::Distance { .. } => EntityType::Distance,
            Self::Duration { .. } => EntityType::Duration,
            Self::Time { .. } => EntityType::Time,
            Self::Date { .. } => EntityType::Date,
        }
    }

    /// Equality with distances compared in metres under a relative tolerance.
    pub fn equivalent(&self, other: &Self, tolerance: f64) -> bool {
        match (*self, *other) {
            (
                Self::Distance {
                    magnitude: a,
                    unit: ua,
                    ..
                },
                Self::Distance {
                    magnitude: b,
                    unit: ub,
                    ..
                },
            ) => {
                let (a, b) = (metres(a, ua), metres(b, ub));
                let scale = a.abs().max(b.abs());
                scale == 0.0 || (a - b).abs() <= tolerance * scale
            }
            _ => self == other,
        }
    }
}

/// One recognized entity in a sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityMatch {
    pub start: usize,
    pub end: usize,
    pub entity_type: EntityType,
    pub text: String,
    pub value: NormalizedValue,
}

pub fn placeholder(entity_type: EntityType, index: usize) -> String {
    format!("⟦{}_{}⟧", entity_type.tag(), index)
}

fn placeholder_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"⟦([A-Z]+)_([0-9]+)⟧").expect("placeholder pattern"))
}

/// Non-overlapping leftmost-longest matches; ties go to the earlier template.
/// Text inside existing placeholders is never matched, nor are spans the
/// template's parser rejects.
pub fn find_entities(sentence: &str, templates: &TemplateSet) -> Vec<EntityMatch> {
    let protected: Vec<(usize, usize)> = placeholder_regex()
        .find_iter(sentence)
        .map(|m| (m.start(), m.end()))
        .collect();
    let mut candidates = Vec::new();
    for (rank, template) in templates.templates().iter().enumerate() {
        for m in template.regex().find_iter(sentence) {
            if m.is_empty() || protected.iter().any(|&(s, e)| m.start() < e && s < m.end()) {
                continue;
            }
            match template.parse(m.as_str()) {
                Some(value) => candidates.push((m.start(), m.end(), rank, value)),
                None => log::debug!("{} matched {:?} but could not parse it", template.name, m.as_str()),
            }
        }
    }
    candidates.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
    let mut out: Vec<EntityMatch> = Vec::new();
    let mut cursor = 0;
    for (start, end, _, value) in candidates {
        if start < cursor {
            continue;
        }
        cursor = end;
        out.push(EntityMatch {
            start,
            end,
            entity_type: value.entity_type(),
            text: sentence[start..end].to_string(),
            value,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceholderEntry {
    pub index: usize,
    pub entity_type: EntityType,
    pub original: String,
    pub value: NormalizedValue,
}

/// A masked sentence and what each placeholder stood for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceholderMap {
    /// Language of the unmasked source.
    pub language: String,
    pub masked: String,
    pub entries: Vec<PlaceholderEntry>,
}

impl PlaceholderMap {
    pub fn entry(&self, index: usize) -> Option<&PlaceholderEntry> {
        self.entries.get(index).filter(|e| e.index == index)
    }
}

/// Replaces entities left to right with `⟦TYPE_i⟧`, numbering from 0.
pub fn mask(sentence: &str, templates: &TemplateSet) -> PlaceholderMap {
    let language = templates.language().unwrap_or_default().to_string();
    let mut masked = String::with_capacity(sentence.len());
    let mut entries = Vec::new();
    let mut last = 0;
    for (index, m) in find_entities(sentence, templates).into_iter().enumerate() {
        masked.push_str(&sentence[last..m.start]);
        masked.push_str(&placeholder(m.entity_type, index));
        last = m.end;
        entries.push(PlaceholderEntry {
            index,
            entity_type: m.entity_type,
            original: m.text,
            value: m.value,
        });
    }
    masked.push_str(&sentence[last..]);
    PlaceholderMap {
        language,
        masked,
        entries,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unmasked {
    pub text: String,
    /// Entries whose placeholder the translation dropped.
    pub lost: Vec<usize>,
    /// Entries whose placeholder appears more than once.
    pub duplicated: Vec<usize>,
}

/// Substitutes placeholders in a translation. When the locale is the source
/// language with units kept, the original surface text is restored verbatim;
/// otherwise the value is rendered under `locale`.
pub fn unmask(
    translated: &str,
    map: &PlaceholderMap,
    locale: &LocaleFormat,
) -> Result<Unmasked, EntityError> {
    let registry = ParserRegistry::default();
    let verbatim = locale.language == map.language && locale.unit_policy == UnitPolicy::Keep;
    let mut seen = vec![0usize; map.entries.len()];
    let mut text = String::with_capacity(translated.len());
    let mut last = 0;
    for caps in placeholder_regex().captures_iter(translated) {
        let whole = caps.get(0).expect("group 0");
        let entry = caps[2]
            .parse::<usize>()
            .ok()
            .and_then(|i| map.entry(i))
            .filter(|e| Some(e.entity_type) == EntityType::from_tag(&caps[1]))
            .ok_or_else(|| EntityError::DanglingPlaceholder {
                placeholder: whole.as_str().to_string(),
            })?;
        seen[entry.index] += 1;
        text.push_str(&translated[last..whole.start()]);
        if verbatim {
            text.push_str(&entry.original);
        } else {
            let rendered = registry
                .get(entry.entity_type)
                .and_then(|p| p.render(&entry.value, locale))
                .ok_or(EntityError::Render(entry.entity_type))?;
            text.push_str(&rendered);
        }
        last = whole.end();
    }
    text.push_str(&translated[last..]);
    let lost: Vec<usize> = (0..seen.len()).filter(|&i| seen[i] == 0).collect();
    let duplicated: Vec<usize> = (0..seen.len()).filter(|&i| seen[i] > 1).collect();
    if !lost.is_empty() {
        log::warn!("translation lost entities {lost:?}");
    }
    Ok(Unmasked {
        text,
        lost,
        duplicated,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeMismatch {
    /// Pairs whose source and target match counts differ.
    pub pairs: usize,
    pub sample_ids: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MismatchReport {
    pub pairs_scanned: usize,
    pub by_type: BTreeMap<EntityType, TypeMismatch>,
    /// language -> surface form -> occurrences without a counterpart.
    pub unmatched: BTreeMap<String, BTreeMap<String, usize>>,
    pub total_unmatched: usize,
}

impl MismatchReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }

    /// Frequency table for proofreading, most frequent forms first.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "pairs scanned: {}", self.pairs_scanned);
        let _ = writeln!(out, "{:<10} {:>8}  sample ids", "type", "pairs");
        for (t, m) in &self.by_type {
            let ids: Vec<String> = m.sample_ids.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(out, "{:<10} {:>8}  {}", t.as_str(), m.pairs, ids.join(","));
        }
        let _ = writeln!(out, "\n{:<6} {:>6}  unmatched form", "lang", "count");
        for (lang, forms) in &self.unmatched {
            let mut rows: Vec<_> = forms.iter().collect();
            rows.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
            for (form, count) in rows {
                let _ = writeln!(out, "{lang:<6} {count:>6}  {form}");
            }
        }
        let _ = writeln!(out, "total unmatched: {}", self.total_unmatched);
        out
    }
}

const MAX_SAMPLES: usize = 20;

/// Indices of entities in `a` and `b` left without an equivalent partner
/// after greedy pairing in textual order.
fn unpaired(a: &[EntityMatch], b: &[EntityMatch]) -> (Vec<usize>, Vec<usize>) {
    let mut used = vec![false; b.len()];
    let mut left = Vec::new();
    for (i, x) in a.iter().enumerate() {
        let partner = b
            .iter()
            .enumerate()
            .position(|(j, y)| !used[j] && x.value.equivalent(&y.value, DEFAULT_TOLERANCE));
        match partner {
            Some(j) => used[j] = true,
            None => left.push(i),
        }
    }
    let right = (0..b.len()).filter(|&j| !used[j]).collect();
    (left, right)
}

/// Counts, per entity type, pairs where the two sides recognize a different
/// number of entities, and tabulates the entities in those pairs that have
/// no counterpart of equal value on the other side.
pub fn scan_mismatches(
    corpus: &ParallelCorpus,
    templates_src: &TemplateSet,
    templates_tgt: &TemplateSet,
) -> Result<MismatchReport, EntityError> {
    if templates_src.is_empty() {
        return Err(EntityError::NoTemplates { side: "source" });
    }
    if templates_tgt.is_empty() {
        return Err(EntityError::NoTemplates { side: "target" });
    }
    let types: BTreeSet<EntityType> = templates_src
        .entity_types()
        .into_iter()
        .chain(templates_tgt.entity_types())
        .collect();
    let mut report = MismatchReport {
        pairs_scanned: corpus.len(),
        by_type: types.iter().map(|&t| (t, TypeMismatch::default())).collect(),
        ..Default::default()
    };
    let (src_lang, tgt_lang) = (corpus.source_lang.clone(), corpus.target_lang.clone());
    for pair in &corpus.pairs {
        let src = find_entities(&pair.source, templates_src);
        let tgt = find_entities(&pair.target, templates_tgt);
        for &t in &types {
            let s: Vec<EntityMatch> = src.iter().filter(|m| m.entity_type == t).cloned().collect();
            let g: Vec<EntityMatch> = tgt.iter().filter(|m| m.entity_type == t).cloned().collect();
            if s.len() == g.len() {
                continue;
            }
            let entry = report.by_type.get_mut(&t).expect("type registered");
            entry.pairs += 1;
            if entry.sample_ids.len() < MAX_SAMPLES {
                entry.sample_ids.push(pair.id);
            }
            let (ls, lg) = unpaired(&s, &g);
            for (lang, matches, idx) in [(&src_lang, &s, ls), (&tgt_lang, &g, lg)] {
                for i in idx {
                    *report
                        .unmatched
                        .entry(lang.clone())
                        .or_default()
                        .entry(matches[i].text.clone())
                        .or_default() += 1;
                    report.total_unmatched += 1;
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationConfig {
    /// Restrict the audit to one entity type; all types otherwise.
    pub entity_type: Option<EntityType>,
    /// Accept distances given in a different unit.
    pub unit_conversion: bool,
    pub tolerance: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            entity_type: None,
            unit_conversion: true,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// 1 if every audited source entity is rendered with an equal value,
    /// 0 if not, `None` when the source has nothing to audit.
    pub scores: Vec<Option<u8>>,
    pub audited: usize,
    pub correct: usize,
    pub accuracy: Option<f64>,
}

fn same_value(a: &NormalizedValue, b: &NormalizedValue, config: &ValidationConfig) -> bool {
    if let (
        NormalizedValue::Distance { unit: ua, .. },
        NormalizedValue::Distance { unit: ub, .. },
    ) = (a, b)
    {
        if !config.unit_conversion && ua != ub {
            return false;
        }
    }
    a.equivalent(b, config.tolerance)
}

/// Binary per-sentence entity-handling scores.
pub fn validate_entity_translation(
    pairs: &[(String, String)],
    templates_src: &TemplateSet,
    templates_tgt: &TemplateSet,
    config: &ValidationConfig,
) -> ValidationReport {
    let keep = |m: &EntityMatch| config.entity_type.is_none_or(|t| t == m.entity_type);
    let mut scores = Vec::with_capacity(pairs.len());
    for (source, output) in pairs {
        let src: Vec<_> = find_entities(source, templates_src).into_iter().filter(keep).collect();
        if src.is_empty() {
            scores.push(None);
            continue;
        }
        let out: Vec<_> = find_entities(output, templates_tgt).into_iter().filter(keep).collect();
        let mut used = vec![false; out.len()];
        let ok = src.iter().all(|s| {
            match (0..out.len()).find(|&j| !used[j] && same_value(&s.value, &out[j].value, config)) {
                Some(j) => {
                    used[j] = true;
                    true
                }
                None => false,
            }
        });
        scores.push(Some(ok as u8));
    }
    let audited = scores.iter().flatten().count();
    let correct = scores.iter().flatten().filter(|&&s| s == 1).count();
    ValidationReport {
        accuracy: (audited > 0).then(|| correct as f64 / audited as f64),
        scores,
        audited,
        correct,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE4: &str = "Winterfell Railway Station can be reached in a 55-minute car ride.";

    fn en() -> TemplateSet {
        TemplateSet::starter_for("en")
    }

    fn de() -> TemplateSet {
        TemplateSet::starter_for("de")
    }

    fn corpus(pairs: &[(&str, &str)]) -> ParallelCorpus {
        ParallelCorpus::from_pairs("en", "de", pairs.iter().copied())
            .unwrap()
            .corpus
    }

    #[test]
    fn masks_duration() {
        let map = mask(TABLE4, &en());
        assert_eq!(
            map.masked,
            "Winterfell Railway Station can be reached in a ⟦DUR_0⟧ car ride."
        );
        assert_eq!(map.entries.len(), 1);
        assert_eq!(map.entries[0].original, "55-minute");
        assert_eq!(map.entries[0].value, NormalizedValue::Duration { minutes: 55 });
    }

    #[test]
    fn no_entities_is_identity() {
        let map = mask("No entities here.", &en());
        assert_eq!(map.masked, "No entities here.");
        assert!(map.entries.is_empty());
    }

    #[test]
    fn indices_follow_text_order() {
        let map = mask("1.9 km from A, 300 m from B", &en());
        assert_eq!(map.masked, "⟦DIST_0⟧ from A, ⟦DIST_1⟧ from B");
        assert_eq!(map.entries[0].original, "1.9 km");
        assert_eq!(map.entries[1].original, "300 m");
    }

    #[test]
    fn longest_match_wins() {
        let one = EntityTemplate::new(EntityType::Distance, "en", r"\d+ k").unwrap();
        let two = EntityTemplate::new(EntityType::Distance, "en", r"\d+ km").unwrap();
        let map = mask("go 5 km", &TemplateSet::new(vec![one, two]));
        assert_eq!(map.entries[0].original, "5 km");
    }

    #[test]
    fn german_unmask_keeps_number() {
        let map = mask(TABLE4, &en());
        let translated = "Winterfell Bahnhof ist mit einer ⟦DUR_0⟧ Autofahrt zu erreichen.";
        let out = unmask(translated, &map, &LocaleFormat::for_language("de")).unwrap();
        assert!(out.text.contains("55"));
        assert!(!out.text.contains("5-minütigen"));
        assert!(out.lost.is_empty());
    }

    #[test]
    fn identity_locale_restores_source() {
        let s = "Meet at 5 p.m. on April 3, 2024, 1.9 km from here.";
        let map = mask(s, &en());
        assert_eq!(map.entries.len(), 3);
        let out = unmask(&map.masked, &map, &LocaleFormat::for_language("en")).unwrap();
        assert_eq!(out.text, s);
    }

    #[test]
    fn decimal_separator_on_render() {
        let map = mask("1.9 km", &en());
        let out = unmask(&map.masked, &map, &LocaleFormat::for_language("de")).unwrap();
        assert_eq!(out.text, "1,9 km");
    }

    #[test]
    fn dangling_and_lost_placeholders() {
        let map = mask("5 km and 6 km", &en());
        let err = unmask("⟦DIST_2⟧", &map, &LocaleFormat::for_language("de")).unwrap_err();
        assert!(matches!(err, EntityError::DanglingPlaceholder { .. }));
        let err = unmask("⟦DUR_0⟧", &map, &LocaleFormat::for_language("de")).unwrap_err();
        assert!(matches!(err, EntityError::DanglingPlaceholder { .. }));
        let out = unmask("⟦DIST_1⟧ ⟦DIST_1⟧", &map, &LocaleFormat::for_language("de")).unwrap();
        assert_eq!(out.lost, vec![0]);
        assert_eq!(out.duplicated, vec![1]);
    }

    #[test]
    fn masking_is_idempotent() {
        let map = mask("leave at 14:30, arrive 2024-05-01 after 3 hours", &en());
        assert_eq!(map.entries.len(), 3);
        let again = mask(&map.masked, &en());
        assert!(again.entries.is_empty());
        assert_eq!(again.masked, map.masked);
    }

    #[test]
    fn metres_gap_is_found_then_fixed() {
        let c = corpus(&[("5 km away", "500 m entfernt")]);
        let src = TemplateSet::new(vec![EntityTemplate::new(
            EntityType::Distance,
            "en",
            r"\d+(?:\.\d+)? ?(?:km|m)\b",
        )
        .unwrap()]);
        let narrow = TemplateSet::new(vec![EntityTemplate::new(
            EntityType::Distance,
            "de",
            r"\d+(?:,\d+)? ?km\b",
        )
        .unwrap()]);
        let report = scan_mismatches(&c, &src, &narrow).unwrap();
        assert_eq!(report.by_type[&EntityType::Distance].pairs, 1);
        assert_eq!(report.unmatched["en"]["5 km"], 1);
        assert_eq!(report.total_unmatched, 1);

        let wide = TemplateSet::new(vec![EntityTemplate::new(
            EntityType::Distance,
            "de",
            r"\d+(?:,\d+)? ?(?:km|m)\b",
        )
        .unwrap()]);
        let report = scan_mismatches(&c, &src, &wide).unwrap();
        assert_eq!(report.by_type[&EntityType::Distance].pairs, 0);
        assert_eq!(report.total_unmatched, 0);
    }

    #[test]
    fn one_mismatched_pair_of_three() {
        let c = corpus(&[
            ("It is 5 km long.", "Es ist 5 km lang."),
            ("Check-in at 14:00.", "Check-in um 14 Uhr."),
            ("A 20-minute walk, 2 km.", "Ein Spaziergang von 2 km."),
        ]);
        let report = scan_mismatches(&c, &en(), &de()).unwrap();
        assert_eq!(report.by_type[&EntityType::Duration].pairs, 1);
        assert_eq!(report.by_type[&EntityType::Duration].sample_ids, vec![2]);
        assert_eq!(report.by_type[&EntityType::Distance].pairs, 0);
        assert_eq!(report.by_type[&EntityType::Time].pairs, 0);
        let total: usize = report.unmatched.values().flat_map(|m| m.values()).sum();
        assert_eq!(total, report.total_unmatched);
        assert!(report.to_table().contains("20-minute"));
    }

    #[test]
    fn equal_counts_report_nothing() {
        let c = corpus(&[("5 km", "5 km"), ("no entity", "keine")]);
        let report = scan_mismatches(&c, &en(), &de()).unwrap();
        assert!(report.by_type.values().all(|m| m.pairs == 0));
    }

    #[test]
    fn empty_template_sets_rejected() {
        let c = corpus(&[("a", "b")]);
        assert!(scan_mismatches(&c, &TemplateSet::default(), &de()).is_err());
        assert!(scan_mismatches(&c, &en(), &TemplateSet::default()).is_err());
    }

    #[test]
    fn validation_scores() {
        let pairs = vec![
            ("5 km".to_string(), "5 km".to_string()),
            ("10 miles".to_string(), "16,1 km".to_string()),
            ("a 55-minute ride".to_string(), "eine 5-minütigen Fahrt".to_string()),
            ("nothing".to_string(), "nichts".to_string()),
        ];
        let report = validate_entity_translation(&pairs, &en(), &de(), &ValidationConfig::default());
        assert_eq!(report.scores, vec![Some(1), Some(1), Some(0), None]);
        assert_eq!(report.audited, 3);
        assert!((report.accuracy.unwrap() - 2.0 / 3.0).abs() < 1e-12);

        let strict = ValidationConfig {
            unit_conversion: false,
            ..Default::default()
        };
        let report = validate_entity_translation(&pairs[1..2], &en(), &de(), &strict);
        assert_eq!(report.scores, vec![Some(0)]);
    }

    #[test]
    fn conversion_policy_renders_km() {
        let map = mask("10 miles", &en());
        let locale = LocaleFormat::for_language("de").with_unit_policy(UnitPolicy::ConvertToMetric);
        assert_eq!(unmask(&map.masked, &map, &locale).unwrap().text, "16,1 km");
    }
}
