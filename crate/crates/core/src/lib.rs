//! Machine-translation support toolkit.
//!
//! The crate covers the non-neural parts of a production translation
//! pipeline together with a small optimizer laboratory:
//!
//! - [`corpus`]: loading, splitting and subsampling parallel corpora
//! - [`tokenizer`]: byte-pair-encoding subwords with case features and joiners
//! - [`entities`]: template-based entity recognition and placeholder masking
//! - [`bleu`]: corpus- and sentence-level BLEU
//! - [`optlab`]: optimizer update rules, a surrogate language model and a
//!   discrete-event simulation of data-parallel SGD
//! - [`bsf`]: the business-sensitivity checks (lexicon expansion, hashed
//!   bag-of-ngrams classifiers, cross-language disagreement report)
//! - [`humaneval`]: adequacy/fluency score sheets and BLEU-vs-human correlation

pub mod bleu;
pub mod bsf;
pub mod corpus;
pub mod entities;
pub mod hashing;
pub mod humaneval;
pub mod optlab;
pub mod rng;
pub mod tokenizer;
