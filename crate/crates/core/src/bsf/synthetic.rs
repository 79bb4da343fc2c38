//! Generated English/German hotel-description sentences about parking,
//! with labeled monolingual sets and a parallel set containing planted
//! label flips.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{tokens, AspectLexicon, BilingualPair};
use crate::rng::{stream_rng, StreamRng};

pub const FREE: &str = "free parking";
pub const NON_FREE: &str = "non-free parking";
pub const NOT_ABOUT: &str = "not about parking";
pub const PARKING_LABELS: [&str; 3] = [FREE, NON_FREE, NOT_ABOUT];

// Aligned (en, de) templates. `{a|b}` slots line up position by position,
// `{N}` is a number.
const FREE_TEMPLATES: &[(&str, &str)] = &[
    (
        "{Free|Complimentary} parking is available {on site|nearby|for all guests}.",
        "{Kostenlose|Kostenfreie} Parkplätze stehen {vor Ort|in der Nähe|allen Gästen} zur Verfügung.",
    ),
    (
        "Guests can park for free {in the garage|on the premises|at the hotel}.",
        "Gäste parken kostenlos {in der Garage|auf dem Gelände|am Hotel}.",
    ),
    (
        "The hotel offers free {private|public|secured} parking.",
        "Das Hotel bietet kostenfreie {private|öffentliche|gesicherte} Parkplätze.",
    ),
    (
        "Parking is free of charge {for all guests|during your stay|at all times}.",
        "Das Parken ist {für alle Gäste|während Ihres Aufenthalts|jederzeit} kostenlos.",
    ),
    (
        "There is no charge for parking {at this property|in the hotel car park|in front of the building}.",
        "Für das Parken fallen {an dieser Unterkunft|im Parkhaus des Hotels|vor dem Gebäude} keine Gebühren an.",
    ),
    (
        "{Free|Complimentary} parking for {one car|two cars|motorbikes} is included in the room rate.",
        "{Kostenlose|Kostenfreie} Parkplätze für {ein Auto|zwei Autos|Motorräder} sind im Zimmerpreis inbegriffen.",
    ),
];

const NON_FREE_TEMPLATES: &[(&str, &str)] = &[
    (
        "Parking is available for {N} {EUR|USD|GBP} per {day|night}.",
        "Parkplätze stehen für {N} {EUR|USD|GBP} pro {Tag|Nacht} zur Verfügung.",
    ),
    (
        "{Private|Public|Secured} parking costs {N} {euros|dollars} per day.",
        "{Private|Öffentliche|Gesicherte} Parkplätze kosten {N} {Euro|Dollar} pro Tag.",
    ),
    (
        "Guests can use the {car park|garage} for a fee.",
        "Gäste können {das Parkhaus|die Garage} gegen Gebühr nutzen.",
    ),
    (
        "Parking is possible {nearby|on site|in the street} at an extra charge.",
        "Parken ist {in der Nähe|vor Ort|an der Straße} gegen Aufpreis möglich.",
    ),
    (
        "Parking spaces must be reserved and paid {in advance|at check-in}.",
        "Parkplätze müssen {im Voraus|beim Check-in} reserviert und bezahlt werden.",
    ),
    (
        "Parking is available {nearby|on site|in a public car park}.",
        "Parkplätze sind {in der Nähe|vor Ort|in einem öffentlichen Parkhaus} vorhanden.",
    ),
    (
        "Valet parking is offered for {N} {EUR|USD|GBP}.",
        "Ein Parkservice wird für {N} {EUR|USD|GBP} angeboten.",
    ),
];

const NOT_ABOUT_TEMPLATES: &[(&str, &str)] = &[
    (
        "The hotel is located next to a {large|beautiful|quiet} park.",
        "Das Hotel liegt neben einem {großen|schönen|ruhigen} Park.",
    ),
    (
        "Car rental is available at the {front desk|reception|tour desk}.",
        "Mietwagen erhalten Sie {am Empfang|an der Rezeption|am Reiseschalter}.",
    ),
    (
        "The rooms overlook the {park|garden|old town}.",
        "Die Zimmer bieten Blick auf {den Park|den Garten|die Altstadt}.",
    ),
    (
        "A {free|complimentary} breakfast is served {daily|every morning}.",
        "Ein {kostenloses|kostenfreies} Frühstück wird {täglich|jeden Morgen} serviert.",
    ),
    (
        "Free WiFi is available in {all areas|the lobby|all rooms}.",
        "Kostenfreies WLAN steht {in allen Bereichen|in der Lobby|in allen Zimmern} zur Verfügung.",
    ),
    (
        "The city centre is {N} minutes away by car.",
        "Das Stadtzentrum ist mit dem Auto {N} Minuten entfernt.",
    ),
    (
        "The {theme park|water park|national park} is a short drive away.",
        "{Der Freizeitpark|Der Wasserpark|Der Nationalpark} ist eine kurze Fahrt entfernt.",
    ),
];

const PREFIXES: &[(&str, &str)] = &[("", ""), ("Please note: ", "Bitte beachten Sie: "), ("Good to know: ", "Gut zu wissen: ")];

const LABEL_WEIGHTS: [f64; 3] = [0.4, 0.35, 0.25];

fn templates(label: &str) -> &'static [(&'static str, &'static str)] {
    match label {
        FREE => FREE_TEMPLATES,
        NON_FREE => NON_FREE_TEMPLATES,
        _ => NOT_ABOUT_TEMPLATES,
    }
}

/// Slot alternatives in order; `None` marks a number slot.
fn slots(template: &str) -> Vec<Option<Vec<&str>>> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let close = open + rest[open..].find('}').expect("closed slot");
        let body = &rest[open + 1..close];
        out.push((body != "N").then(|| body.split('|').collect()));
        rest = &rest[close + 1..];
    }
    out
}

fn fill(template: &str, choices: &[usize], number: u32) -> String {
    let mut out = String::new();
    let mut rest = template;
    let mut k = 0;
    while let Some(open) = rest.find('{') {
        let close = open + rest[open..].find('}').expect("closed slot");
        out.push_str(&rest[..open]);
        let body = &rest[open + 1..close];
        if body == "N" {
            out.push_str(&number.to_string());
        } else {
            let alts: Vec<&str> = body.split('|').collect();
            out.push_str(alts[choices[k] % alts.len()]);
        }
        k += 1;
        rest = &rest[close + 1..];
    }
    out.push_str(rest);
    out
}

/// One aligned draw: both language renderings of the same content.
struct Draw {
    en: String,
    de: String,
}

fn draw_label(rng: &mut StreamRng) -> &'static str {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    for (label, w) in PARKING_LABELS.iter().zip(LABEL_WEIGHTS) {
        acc += w;
        if r < acc {
            return label;
        }
    }
    NOT_ABOUT
}

fn draw(label: &str, rng: &mut StreamRng) -> Draw {
    let &(en, de) = templates(label).choose(rng).expect("templates");
    let choices: Vec<usize> = slots(en)
        .iter()
        .map(|s| s.as_ref().map_or(0, |alts| rng.gen_range(0..alts.len())))
        .collect();
    let number = rng.gen_range(3..=40);
    let &(pe, pd) = PREFIXES.choose(rng).expect("prefixes");
    Draw {
        en: format!("{pe}{}", fill(en, &choices, number)),
        de: format!("{pd}{}", fill(de, &choices, number)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub text: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedPair {
    pub id: String,
    pub source: String,
    pub target: String,
    pub source_label: String,
    pub target_label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub labeled_per_language: usize,
    pub heldout: usize,
    pub pairs: usize,
    pub flips: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            labeled_per_language: 800,
            heldout: 500,
            pairs: 400,
            flips: 12,
            seed: 2017,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParkingCorpus {
    /// language -> training sentences
    pub train: BTreeMap<String, Vec<LabeledSentence>>,
    pub heldout: BTreeMap<String, Vec<LabeledSentence>>,
    /// English source, German translation.
    pub pairs: Vec<PlantedPair>,
}

fn labeled(n: usize, language: &str, rng: &mut StreamRng) -> Vec<LabeledSentence> {
    (0..n)
        .map(|_| {
            let label = draw_label(rng);
            let d = draw(label, rng);
            LabeledSentence {
                text: if language == "en" { d.en } else { d.de },
                label: label.to_string(),
            }
        })
        .collect()
}

pub fn parking_corpus(config: &SyntheticConfig) -> ParkingCorpus {
    let mut train = BTreeMap::new();
    let mut heldout = BTreeMap::new();
    for lang in ["en", "de"] {
        let mut rng = stream_rng(config.seed, &format!("bsf.synthetic.train.{lang}"));
        train.insert(lang.to_string(), labeled(config.labeled_per_language, lang, &mut rng));
        let mut rng = stream_rng(config.seed, &format!("bsf.synthetic.heldout.{lang}"));
        heldout.insert(lang.to_string(), labeled(config.heldout, lang, &mut rng));
    }

    let mut rng = stream_rng(config.seed, "bsf.synthetic.pairs");
    let labels: Vec<&str> = (0..config.pairs).map(|_| draw_label(&mut rng)).collect();
    let mut flippable: Vec<usize> = (0..config.pairs).filter(|&i| labels[i] != NOT_ABOUT).collect();
    flippable.shuffle(&mut stream_rng(config.seed, "bsf.synthetic.flips"));
    let flipped: Vec<usize> = flippable.into_iter().take(config.flips).collect();
    let pairs = labels
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let d = draw(label, &mut rng);
            let (target, target_label) = if flipped.contains(&i) {
                let other = if label == FREE { NON_FREE } else { FREE };
                (draw(other, &mut rng).de, other)
            } else {
                (d.de, label)
            };
            PlantedPair {
                id: format!("p{i:04}"),
                source: d.en,
                target,
                source_label: label.to_string(),
                target_label: target_label.to_string(),
            }
        })
        .collect();
    ParkingCorpus { train, heldout, pairs }
}

impl ParkingCorpus {
    fn as_pairs(set: &BTreeMap<String, Vec<LabeledSentence>>, language: &str) -> Vec<(String, String)> {
        set.get(language)
            .map(|v| v.iter().map(|s| (s.text.clone(), s.label.clone())).collect())
            .unwrap_or_default()
    }

    pub fn training(&self, language: &str) -> Vec<(String, String)> {
        Self::as_pairs(&self.train, language)
    }

    pub fn heldout(&self, language: &str) -> Vec<(String, String)> {
        Self::as_pairs(&self.heldout, language)
    }

    pub fn bilingual(&self) -> Vec<BilingualPair> {
        self.pairs
            .iter()
            .map(|p| BilingualPair {
                id: p.id.clone(),
                source: p.source.clone(),
                target: p.target.clone(),
            })
            .collect()
    }

    pub fn planted_flips(&self) -> Vec<String> {
        self.pairs
            .iter()
            .filter(|p| p.source_label != p.target_label)
            .map(|p| p.id.clone())
            .collect()
    }

    /// Tokenized training and parallel text of one language, for embeddings.
    pub fn monolingual(&self, language: &str) -> Vec<Vec<String>> {
        let side = |p: &PlantedPair| if language == "en" { p.source.clone() } else { p.target.clone() };
        self.train
            .get(language)
            .into_iter()
            .flatten()
            .map(|s| s.text.clone())
            .chain(self.pairs.iter().map(side))
            .map(|s| tokens(&s))
            .collect()
    }
}

/// Seed lexicon for the parking aspect, approved as-is.
pub fn parking_lexicon(language: &str) -> AspectLexicon {
    let seeds: &[&str] = match language {
        "de" => &["parkplätze", "parken", "parkhaus", "park", "garage", "mietwagen"],
        _ => &["parking", "park", "car park", "garage", "car"],
    };
    AspectLexicon::from_seeds("parking", language, seeds)
}

#[cfg(test)]
mod tests {
    use super::super::match_sentences;
    use super::*;

    #[test]
    fn templates_are_aligned() {
        for label in PARKING_LABELS {
            for (en, de) in templates(label) {
                let (a, b) = (slots(en), slots(de));
                assert_eq!(a.len(), b.len(), "{en}");
                for (x, y) in a.iter().zip(&b) {
                    assert_eq!(x.as_ref().map(Vec::len), y.as_ref().map(Vec::len), "{en}");
                }
            }
        }
    }

    #[test]
    fn fill_uses_choices() {
        assert_eq!(fill("a {x|y} {N} {p|q}", &[1, 0, 1], 7), "a y 7 q");
    }

    #[test]
    fn corpus_shape() {
        let c = parking_corpus(&SyntheticConfig::default());
        assert_eq!(c.training("en").len(), 800);
        assert_eq!(c.heldout("de").len(), 500);
        assert_eq!(c.planted_flips().len(), 12);
        for label in PARKING_LABELS {
            assert!(c.train["en"].iter().any(|s| s.label == label));
        }
        assert_eq!(c, parking_corpus(&SyntheticConfig::default()));
    }

    #[test]
    fn parking_sentences_hit_the_lexicon() {
        let c = parking_corpus(&SyntheticConfig::default());
        let lex = parking_lexicon("en");
        let sources: Vec<&str> = c.pairs.iter().map(|p| p.source.as_str()).collect();
        let matched = match_sentences(&sources, &lex).unwrap();
        for (i, p) in c.pairs.iter().enumerate() {
            if p.source_label != NOT_ABOUT {
                assert!(matched.binary_search(&i).is_ok(), "{}", p.source);
            }
        }
    }
}
