pub mod bleu;
pub mod bpe;
pub mod bsf;
pub mod corpus;
pub mod eval;
pub mod ner;
pub mod optlab;

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::Serialize;

use mtkit::corpus::{load_parallel, ParallelCorpus};

use crate::run::Run;

/// A parallel corpus given as two line-aligned files.
#[derive(Debug, Args, Serialize)]
pub struct CorpusInput {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, default_value = "en")]
    pub src_lang: String,
    #[arg(long, default_value = "de")]
    pub tgt_lang: String,
}

impl CorpusInput {
    pub fn load(&self, run: &mut Run) -> Result<ParallelCorpus> {
        run.input(&self.source)?;
        run.input(&self.target)?;
        let loaded = load_parallel(&self.source, &self.target, &self.src_lang, &self.tgt_lang)?;
        if loaded.dropped > 0 {
            log::warn!("dropped {} pairs with an empty side", loaded.dropped);
        }
        Ok(loaded.corpus)
    }
}

pub fn lines_to_text<S: AsRef<str>>(lines: impl IntoIterator<Item = S>) -> String {
    let mut out = String::new();
    for l in lines {
        out.push_str(l.as_ref());
        out.push('\n');
    }
    out
}

pub fn ids_text(corpus: &ParallelCorpus) -> String {
    lines_to_text(corpus.pairs.iter().map(|p| p.id.to_string()))
}
