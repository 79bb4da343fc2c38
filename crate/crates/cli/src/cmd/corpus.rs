use anyhow::Result;
use clap::Subcommand;
use serde::Serialize;
use serde_json::json;

use mtkit::corpus::{split, subsample, ParallelCorpus};

use super::{ids_text, lines_to_text, CorpusInput};
use crate::run::Run;

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Hold out a random validation set; ids of the input are kept.
    Split {
        #[command(flatten)]
        input: CorpusInput,
        /// Number of validation pairs.
        #[arg(long)]
        validation: usize,
    },
    /// Draw nested random subsets of increasing size.
    Subsample {
        #[command(flatten)]
        input: CorpusInput,
        /// Comma-separated, non-decreasing sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
    },
}

fn write_corpus(run: &mut Run, prefix: &str, corpus: &ParallelCorpus) -> Result<()> {
    run.write(&format!("{prefix}.{}", corpus.source_lang), lines_to_text(corpus.sources()))?;
    run.write(&format!("{prefix}.{}", corpus.target_lang), lines_to_text(corpus.targets()))?;
    run.write(&format!("{prefix}.ids"), ids_text(corpus))?;
    Ok(())
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Split { .. } => "split",
            Command::Subsample { .. } => "subsample",
        }
    }

    pub fn run(&self, run: &mut Run) -> Result<()> {
        match self {
            Command::Split { input, validation } => {
                let corpus = input.load(run)?;
                let parts = split(&corpus, *validation, run.seed())?;
                write_corpus(run, "train", &parts.train)?;
                write_corpus(run, "valid", &parts.validation)?;
                let text = format!(
                    "pairs {}\ntrain {}\nvalidation {}\nseed {}",
                    corpus.len(),
                    parts.train.len(),
                    parts.validation.len(),
                    parts.seed
                );
                let report = json!({
                    "pairs": corpus.len(),
                    "train": parts.train.len(),
                    "validation": parts.validation.len(),
                    "seed": parts.seed,
                });
                run.emit("corpus-split", &report, &text)
            }
            Command::Subsample { input, sizes } => {
                let corpus = input.load(run)?;
                let subsets = subsample(&corpus, sizes, run.seed())?;
                let mut text = format!("pairs {}\n", corpus.len());
                for (size, subset) in sizes.iter().zip(&subsets) {
                    write_corpus(run, &format!("sub{size}"), subset)?;
                    text.push_str(&format!("sub{size} {}\n", subset.len()));
                }
                let report = json!({ "pairs": corpus.len(), "sizes": sizes });
                run.emit("corpus-subsample", &report, &text)
            }
        }
    }
}
