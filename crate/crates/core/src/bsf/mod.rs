//! Business-sensitivity checks: seed lexicons expanded through embedding
//! neighbourhoods, keyword matching of aspect-relevant sentences, hashed
//! bag-of-ngrams classifiers on both sides of a translation, and a
//! cross-language disagreement report.

mod classifier;
mod embeddings;
mod lexicon;
mod report;
mod synthetic;

use thiserror::Error;

pub use classifier::{
    evaluate_classifier, features, score_predictions, train_classifier, ClassificationReport, ClassifierConfig,
    FeatureSpec, HashedLinearClassifier, LabelMetrics, MODEL_HEADER,
};
pub use embeddings::{cosine, train_embeddings, Embeddings, SgnsConfig};
pub use lexicon::{expand_seeds, match_sentences, read_terms, write_candidates, write_terms, AspectLexicon, Expansion};
pub use report::{cross_language_report, BilingualPair, BsfReport, Flag};
pub use synthetic::{
    parking_corpus, parking_lexicon, LabeledSentence, ParkingCorpus, PlantedPair, SyntheticConfig, FREE, NON_FREE,
    NOT_ABOUT, PARKING_LABELS,
};

#[derive(Debug, Error)]
pub enum BsfError {
    #[error("embedding training: {0}")]
    Training(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("classifier needs at least two labels, found {0:?}")]
    DegenerateTraining(Vec<String>),
    #[error("lexicon has no approved terms")]
    EmptyLexicon,
    #[error("approved term '{0}' is neither a seed nor a candidate")]
    UnknownApproved(String),
    #[error("{0}")]
    Config(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BsfError>;

/// Lowercased runs of letters, digits and underscores.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_rules() {
        assert_eq!(tokens("Free parking, 5 €/day!"), vec!["free", "parking", "5", "day"]);
        assert_eq!(tokens("Kostenlose Parkplätze"), vec!["kostenlose", "parkplätze"]);
        assert_eq!(tokens("car_park"), vec!["car_park"]);
        assert!(tokens(" .. ").is_empty());
    }
}
