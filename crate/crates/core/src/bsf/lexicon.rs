//! Aspect lexicons: seeds, embedding-neighbourhood candidates, and the
//! proofread list actually used for matching.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{tokens, BsfError, Embeddings, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectLexicon {
    pub aspect: String,
    pub language: String,
    pub seeds: Vec<String>,
    pub candidates: Vec<(String, f64)>,
    pub approved: Vec<String>,
}

impl AspectLexicon {
    /// A lexicon whose seeds are approved as-is.
    pub fn from_seeds(aspect: &str, language: &str, seeds: &[&str]) -> Self {
        let seeds: Vec<String> = seeds.iter().map(|s| s.to_string()).collect();
        Self {
            aspect: aspect.into(),
            language: language.into(),
            approved: seeds.clone(),
            seeds,
            candidates: Vec::new(),
        }
    }

    pub fn with_candidates(mut self, candidates: Vec<(String, f64)>) -> Self {
        self.candidates = candidates;
        self
    }

    /// Replaces the approved list after proofreading; every term must come
    /// from the seeds or the candidates.
    pub fn approve(&mut self, terms: Vec<String>) -> Result<()> {
        let known: BTreeSet<&str> = self
            .seeds
            .iter()
            .map(String::as_str)
            .chain(self.candidates.iter().map(|(t, _)| t.as_str()))
            .collect();
        if let Some(bad) = terms.iter().find(|t| !known.contains(t.as_str())) {
            return Err(BsfError::UnknownApproved(bad.clone()));
        }
        self.approved = terms;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub candidates: Vec<(String, f64)>,
    pub missing: Vec<String>,
}

/// Top-`k` non-seed neighbours of every seed with similarity ≥ `min_sim`,
/// merged with the best similarity per term and sorted best first.
pub fn expand_seeds(emb: &Embeddings, seeds: &[String], k: usize, min_sim: f64) -> Expansion {
    let seed_set: BTreeSet<&str> = seeds.iter().map(String::as_str).collect();
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    let mut missing = Vec::new();
    for seed in seeds {
        if emb.get(seed).is_none() {
            missing.push(seed.clone());
            continue;
        }
        let found = emb
            .neighbours(seed)
            .into_iter()
            .filter(|(w, _)| !seed_set.contains(w.as_str()))
            .take(k)
            .filter(|&(_, s)| s >= min_sim);
        for (w, s) in found {
            let e = best.entry(w).or_insert(s);
            *e = e.max(s);
        }
    }
    if !seeds.is_empty() && missing.len() == seeds.len() {
        log::warn!("no seed is in the embedding vocabulary");
    } else if !missing.is_empty() {
        log::warn!("seeds missing from the embedding vocabulary: {}", missing.join(", "));
    }
    let mut candidates: Vec<(String, f64)> = best.into_iter().collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Expansion { candidates, missing }
}

/// Indices of the sentences containing any approved term as a contiguous
/// token sequence. Underscores in terms join phrase tokens.
pub fn match_sentences<S: AsRef<str>>(sentences: &[S], lexicon: &AspectLexicon) -> Result<Vec<usize>> {
    let terms: Vec<Vec<String>> = lexicon
        .approved
        .iter()
        .map(|t| tokens(&t.replace('_', " ")))
        .filter(|t| !t.is_empty())
        .collect();
    if terms.is_empty() {
        return Err(BsfError::EmptyLexicon);
    }
    Ok(sentences
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            let toks = tokens(&s.as_ref().replace('_', " "));
            terms.iter().any(|t| toks.windows(t.len()).any(|w| w == t.as_slice()))
        })
        .map(|(i, _)| i)
        .collect())
}

/// One term per line; `#` starts a comment.
pub fn read_terms(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect()
}

pub fn write_terms(terms: &[String]) -> String {
    terms.iter().map(|t| format!("{t}\n")).collect()
}

/// Candidate list for proofreading, similarity kept as a trailing comment.
pub fn write_candidates(candidates: &[(String, f64)]) -> String {
    let mut out = String::from("# candidate terms, best first; delete lines to reject\n");
    for (t, s) in candidates {
        out.push_str(&format!("{t}  # {s:.4}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Embeddings {
        let mut e = Embeddings::new(2);
        let at = |deg: f64| [deg.to_radians().cos() as f32, deg.to_radians().sin() as f32];
        e.insert("pet", &at(0.0)).unwrap();
        e.insert("dog", &at(0.9f64.acos().to_degrees())).unwrap();
        e.insert("car", &at(0.1f64.acos().to_degrees())).unwrap();
        e.insert("cat", &at(-50.0)).unwrap();
        e
    }

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn nearest_neighbour_wins() {
        let e = toy();
        assert!((e.similarity("pet", "dog").unwrap() - 0.9).abs() < 1e-6);
        let x = expand_seeds(&e, &strings(&["pet"]), 1, 0.0);
        assert_eq!(x.candidates.len(), 1);
        assert_eq!(x.candidates[0].0, "dog");
        assert!(expand_seeds(&e, &strings(&["pet"]), 0, 0.0).candidates.is_empty());
    }

    #[test]
    fn merged_candidates_keep_best_similarity() {
        let e = toy();
        let x = expand_seeds(&e, &strings(&["pet", "cat", "ghost"]), 3, -1.0);
        assert_eq!(x.missing, strings(&["ghost"]));
        let terms: Vec<&str> = x.candidates.iter().map(|(t, _)| t.as_str()).collect();
        assert_eq!(terms, vec!["dog", "car"]);
        let dog = x.candidates[0].1;
        assert!((dog - e.similarity("pet", "dog").unwrap()).abs() < 1e-12);
        assert!(x.candidates.windows(2).all(|w| w[0].1 >= w[1].1));
    }

    #[test]
    fn min_similarity_filters() {
        let x = expand_seeds(&toy(), &strings(&["pet"]), 3, 0.5);
        assert_eq!(x.candidates.iter().map(|(t, _)| t.as_str()).collect::<Vec<_>>(), vec!["dog", "cat"]);
    }

    #[test]
    fn matching_rules() {
        let lex = AspectLexicon::from_seeds("parking", "en", &["parking", "car park"]);
        let sentences = [
            "Free parking is available.",
            "The car is parked.",
            "Use the car park behind the hotel.",
            "PARKING: ask at reception",
            "Parkings nearby.",
            "Breakfast is served daily.",
        ];
        assert_eq!(match_sentences(&sentences, &lex).unwrap(), vec![0, 2, 3]);
        let phrase = AspectLexicon::from_seeds("parking", "en", &["car_park"]);
        assert_eq!(match_sentences(&sentences, &phrase).unwrap(), vec![2]);
        let empty = AspectLexicon::from_seeds("parking", "en", &[]);
        assert!(matches!(match_sentences(&sentences, &empty), Err(BsfError::EmptyLexicon)));
    }

    #[test]
    fn proofreading_round_trip() {
        let e = toy();
        let mut lex = AspectLexicon::from_seeds("pets", "en", &["pet"]);
        let expansion = expand_seeds(&e, &lex.seeds, 3, 0.0);
        lex = lex.with_candidates(expansion.candidates);
        let exported = write_candidates(&lex.candidates);
        let edited: String = exported.lines().filter(|l| !l.starts_with("car")).map(|l| format!("{l}\n")).collect();
        let mut approved = lex.seeds.clone();
        approved.extend(read_terms(&edited));
        lex.approve(approved).unwrap();
        assert_eq!(lex.approved, strings(&["pet", "dog", "cat"]));
        assert!(matches!(lex.approve(strings(&["horse"])), Err(BsfError::UnknownApproved(_))));
        assert_eq!(read_terms(&write_terms(&lex.approved)), lex.approved);
    }
}
