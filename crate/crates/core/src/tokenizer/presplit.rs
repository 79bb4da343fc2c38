//! Pre-tokenization into BPE units with case features.
//!
//! A sentence is split on whitespace, then each chunk into placeholder
//! units, single-character punctuation units and alphanumeric runs. Runs
//! are further cut at case boundaries so every fragment is all-lower,
//! capitalized or all-upper ("WiFi" becomes "Wi" + "Fi"). Fragments whose
//! casing cannot be restored exactly keep their raw text with case `N`.

use std::sync::OnceLock;

use regex::Regex;

use super::CaseFeature;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitKind {
    Word,
    Punct,
    Placeholder,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub kind: UnitKind,
    /// Lowercased text for cased words, raw text otherwise.
    pub text: String,
    pub case: CaseFeature,
    /// No whitespace between this unit and the next one.
    pub joined_right: bool,
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^⟦[A-Z]+_[0-9]+⟧").expect("placeholder pattern"))
}

pub fn is_cased(c: char) -> bool {
    c.is_uppercase() || c.is_lowercase()
}

fn upper_single(c: char) -> Option<char> {
    let mut up = c.to_uppercase();
    match (up.next(), up.next()) {
        (Some(u), None) => Some(u),
        _ => None,
    }
}

fn lower_single(c: char) -> Option<char> {
    let mut low = c.to_lowercase();
    match (low.next(), low.next()) {
        (Some(l), None) => Some(l),
        _ => None,
    }
}

/// Applies a case feature to lowercased text. Works identically on a whole
/// fragment and piecewise, as long as only the piece holding the first cased
/// character of a `C` fragment is tagged `C`.
pub fn restore_case(text: &str, case: CaseFeature) -> String {
    match case {
        CaseFeature::Lower | CaseFeature::None => text.to_string(),
        CaseFeature::Upper => text
            .chars()
            .flat_map(|c| {
                let up: Vec<char> = if c.is_lowercase() {
                    c.to_uppercase().collect()
                } else {
                    vec![c]
                };
                up
            })
            .collect(),
        CaseFeature::Capitalized => {
            let mut out = String::with_capacity(text.len());
            let mut done = false;
            for c in text.chars() {
                if !done && is_cased(c) {
                    out.extend(c.to_uppercase());
                    done = true;
                } else {
                    out.push(c);
                }
            }
            out
        }
    }
}

/// Classifies a case-homogeneous fragment, returning its feature and
/// lowercased form, or `(None, raw)` if the casing is not exactly invertible.
fn classify(fragment: &str) -> (CaseFeature, String) {
    let raw = || (CaseFeature::None, fragment.to_string());
    let cased: Vec<bool> = fragment
        .chars()
        .filter(|&c| is_cased(c))
        .map(char::is_uppercase)
        .collect();
    let case = match cased.as_slice() {
        [] => return raw(),
        all if all.iter().all(|&up| !up) => CaseFeature::Lower,
        [true, rest @ ..] if rest.iter().all(|&up| !up) => CaseFeature::Capitalized,
        all if all.len() >= 2 && all.iter().all(|&up| up) => CaseFeature::Upper,
        _ => return raw(),
    };
    let mut lowered = String::with_capacity(fragment.len());
    for c in fragment.chars() {
        if c.is_uppercase() {
            match lower_single(c) {
                Some(l) if l.is_lowercase() && upper_single(l) == Some(c) => lowered.push(l),
                _ => return raw(),
            }
        } else {
            lowered.push(c);
        }
    }
    if lowered.chars().any(char::is_uppercase) || restore_case(&lowered, case) != fragment {
        return raw();
    }
    (case, lowered)
}

/// Cuts an alphanumeric run at case boundaries: before an uppercase letter
/// that follows a lowercase one, and before the last capital of an
/// uppercase run that is followed by lowercase ("XMLHttp" -> "XML" "Http").
fn case_fragments(word: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = word.char_indices().collect();
    let cased: Vec<(usize, bool)> = chars
        .iter()
        .enumerate()
        .filter(|(_, (_, c))| is_cased(*c))
        .map(|(i, (_, c))| (i, c.is_uppercase()))
        .collect();
    let mut cuts = Vec::new();
    for k in 1..cased.len() {
        let (idx, upper) = cased[k];
        if !upper {
            continue;
        }
        let prev_upper = cased[k - 1].1;
        let next_lower = cased.get(k + 1).is_some_and(|&(_, up)| !up);
        if !prev_upper || next_lower {
            cuts.push(chars[idx].0);
        }
    }
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut start = 0;
    for cut in cuts {
        out.push(&word[start..cut]);
        start = cut;
    }
    out.push(&word[start..]);
    out
}

/// Splits a sentence into units. Whitespace runs collapse to single
/// separators, so only canonically spaced input round-trips byte-exactly.
pub fn presplit(sentence: &str) -> Vec<Unit> {
    let mut units = Vec::new();
    for chunk in sentence.split(char::is_whitespace).filter(|c| !c.is_empty()) {
        let chunk_start = units.len();
        let mut pos = 0;
        while pos < chunk.len() {
            let rest = &chunk[pos..];
            if let Some(m) = placeholder_re().find(rest) {
                units.push(Unit {
                    kind: UnitKind::Placeholder,
                    text: m.as_str().to_string(),
                    case: CaseFeature::None,
                    joined_right: true,
                });
                pos += m.end();
                continue;
            }
            let c = rest.chars().next().expect("non-empty rest");
            if c.is_alphanumeric() {
                let end = rest
                    .char_indices()
                    .find(|&(_, c)| !c.is_alphanumeric())
                    .map_or(rest.len(), |(i, _)| i);
                for fragment in case_fragments(&rest[..end]) {
                    let (case, text) = classify(fragment);
                    units.push(Unit {
                        kind: UnitKind::Word,
                        text,
                        case,
                        joined_right: true,
                    });
                }
                pos += end;
            } else {
                units.push(Unit {
                    kind: UnitKind::Punct,
                    text: c.to_string(),
                    case: CaseFeature::None,
                    joined_right: true,
                });
                pos += c.len_utf8();
            }
        }
        if units.len() > chunk_start {
            units.last_mut().expect("chunk produced units").joined_right = false;
        }
    }
    units
}
