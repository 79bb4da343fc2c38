//! Subword tokenization with case features and joiners.
//!
//! `tokenize` lowercases every word piece and carries the casing in a
//! separate [`CaseFeature`]; `joined_right` marks the absence of a space
//! before the next piece. `detokenize` inverts both exactly for any
//! canonically spaced sentence (single ASCII spaces between chunks, no
//! leading or trailing whitespace).

mod bpe;
mod format;
mod presplit;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bpe::{
    learn_merges, train_bpe, train_monolingual, word_counts, BpeMode, BpeModel, TrainMode,
    TrainedModels,
};
pub use format::TokenFormat;
pub use presplit::{presplit, restore_case, Unit, UnitKind};

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("cannot train on an empty corpus")]
    EmptyCorpus,
    #[error("model file line {line}: {message}")]
    ModelFormat { line: usize, message: String },
    #[error("malformed token {token:?}: {message}")]
    TokenFormat { token: String, message: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T, E = TokenizerError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseFeature {
    /// First cased letter upper, the rest lower.
    #[serde(rename = "C")]
    Capitalized,
    #[serde(rename = "L")]
    Lower,
    #[serde(rename = "U")]
    Upper,
    /// No cased letters, or casing kept verbatim.
    #[serde(rename = "N")]
    None,
}

impl CaseFeature {
    pub fn as_char(self) -> char {
        match self {
            CaseFeature::Capitalized => 'C',
            CaseFeature::Lower => 'L',
            CaseFeature::Upper => 'U',
            CaseFeature::None => 'N',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'C' => Some(CaseFeature::Capitalized),
            'L' => Some(CaseFeature::Lower),
            'U' => Some(CaseFeature::Upper),
            'N' => Some(CaseFeature::None),
            _ => None,
        }
    }
}

impl fmt::Display for CaseFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedToken {
    pub piece: String,
    pub case: CaseFeature,
    pub joined_right: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedSentence {
    pub tokens: Vec<AnnotatedToken>,
}

impl TokenizedSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn pieces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.piece.as_str())
    }
}

fn has_cased(text: &str) -> bool {
    text.chars().any(presplit::is_cased)
}

/// Per-piece feature inside a fragment: `C` goes only to the piece holding
/// the first cased letter, pieces without cased letters are `N`.
fn piece_features(pieces: &[String], unit_case: CaseFeature) -> Vec<CaseFeature> {
    let mut capital_pending = unit_case == CaseFeature::Capitalized;
    pieces
        .iter()
        .map(|piece| {
            if unit_case == CaseFeature::None || !has_cased(piece) {
                return CaseFeature::None;
            }
            match unit_case {
                CaseFeature::Capitalized if capital_pending => {
                    capital_pending = false;
                    CaseFeature::Capitalized
                }
                CaseFeature::Upper => CaseFeature::Upper,
                _ => CaseFeature::Lower,
            }
        })
        .collect()
}

pub fn tokenize(model: &BpeModel, sentence: &str) -> TokenizedSentence {
    let mut tokens = Vec::new();
    for unit in presplit(sentence) {
        let pieces = match unit.kind {
            UnitKind::Word => model.encode_word(&unit.text),
            UnitKind::Punct | UnitKind::Placeholder => vec![unit.text.clone()],
        };
        let features = piece_features(&pieces, unit.case);
        let last = pieces.len() - 1;
        for (i, (piece, case)) in pieces.into_iter().zip(features).enumerate() {
            tokens.push(AnnotatedToken {
                piece,
                case,
                joined_right: i < last || unit.joined_right,
            });
        }
    }
    TokenizedSentence { tokens }
}

pub fn detokenize(sentence: &TokenizedSentence) -> String {
    let mut out = String::new();
    let n = sentence.tokens.len();
    for (i, token) in sentence.tokens.iter().enumerate() {
        out.push_str(&restore_case(&token.piece, token.case));
        if i + 1 < n && !token.joined_right {
            out.push(' ');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(text: &str, merges: usize) -> BpeModel {
        train_monolingual([text], merges).unwrap()
    }

    #[test]
    fn empty_sentence() {
        let m = model("abc abc", 2);
        assert!(tokenize(&m, "").is_empty());
        assert_eq!(detokenize(&TokenizedSentence::default()), "");
    }

    #[test]
    fn book_variants_share_pieces() {
        let m = model("book book book books booking", 20);
        let lower = tokenize(&m, "book");
        assert_eq!(lower.pieces().collect::<Vec<_>>(), vec!["book"]);
        for (word, case) in [
            ("book", CaseFeature::Lower),
            ("Book", CaseFeature::Capitalized),
            ("BOOK", CaseFeature::Upper),
        ] {
            let t = tokenize(&m, word);
            assert_eq!(t.pieces().collect::<Vec<_>>(), vec!["book"]);
            assert_eq!(t.tokens[0].case, case);
            assert_eq!(detokenize(&t), word);
        }
    }

    #[test]
    fn zero_merges_is_character_level() {
        let m = model("hello", 0);
        let t = tokenize(&m, "Hi you");
        let rendered: Vec<_> = t
            .tokens
            .iter()
            .map(|t| (t.piece.as_str(), t.case, t.joined_right))
            .collect();
        assert_eq!(
            rendered,
            vec![
                ("h", CaseFeature::Capitalized, true),
                ("i", CaseFeature::Lower, false),
                ("y", CaseFeature::Lower, true),
                ("o", CaseFeature::Lower, true),
                ("u", CaseFeature::Lower, false),
            ]
        );
    }

    #[test]
    fn unseen_characters_pass_through() {
        let m = model("abc abc", 3);
        let t = tokenize(&m, "zß€");
        assert_eq!(t.pieces().collect::<Vec<_>>(), vec!["z", "ß", "€"]);
        assert_eq!(detokenize(&t), "zß€");
    }

    #[test]
    fn capitalized_fragment_marks_only_first_piece() {
        let m = model("ho ho dor dor", 3);
        let t = tokenize(&m, "Hodor");
        let got: Vec<_> = t.tokens.iter().map(|t| (t.piece.as_str(), t.case)).collect();
        assert_eq!(
            got,
            vec![("ho", CaseFeature::Capitalized), ("dor", CaseFeature::Lower)]
        );
    }
}
