use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use mtkit::tokenizer::{detokenize, tokenize, train_bpe, BpeModel, TokenFormat, TrainMode, TrainedModels};

use super::{lines_to_text, CorpusInput};
use crate::run::Run;

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Joint,
    Separate,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Learn merges on a parallel corpus.
    Train {
        #[command(flatten)]
        input: CorpusInput,
        #[arg(long, default_value_t = 32_000)]
        merges: usize,
        #[arg(long, value_enum, default_value_t = Mode::Joint)]
        mode: Mode,
    },
    /// Segment text into annotated subword tokens.
    Apply {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// File name inside the output directory.
        #[arg(long, default_value = "tokens.txt")]
        output: String,
    },
    /// Rebuild text from annotated tokens.
    Detok {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "detok.txt")]
        output: String,
    },
}

fn describe(name: &str, model: &BpeModel) -> (serde_json::Value, String) {
    (
        json!({
            "file": name,
            "mode": model.mode().to_string(),
            "merges": model.merge_count(),
            "alphabet": model.alphabet().len(),
            "vocabulary": model.vocabulary().len(),
        }),
        format!(
            "{name}: mode {}, {} merges, alphabet {}, vocabulary {}\n",
            model.mode(),
            model.merge_count(),
            model.alphabet().len(),
            model.vocabulary().len()
        ),
    )
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Train { .. } => "train",
            Command::Apply { .. } => "apply",
            Command::Detok { .. } => "detok",
        }
    }

    pub fn run(&self, run: &mut Run) -> Result<()> {
        match self {
            Command::Train { input, merges, mode } => {
                let corpus = input.load(run)?;
                let mode = match mode {
                    Mode::Joint => TrainMode::Joint,
                    Mode::Separate => TrainMode::Separate,
                };
                let models = match train_bpe(&corpus, *merges, mode)? {
                    TrainedModels::Joint(m) => vec![("bpe.model".to_string(), m)],
                    TrainedModels::Separate { source, target } => vec![
                        (format!("bpe.{}.model", corpus.source_lang), source),
                        (format!("bpe.{}.model", corpus.target_lang), target),
                    ],
                };
                let mut reports = Vec::new();
                let mut text = String::new();
                for (name, model) in &models {
                    if model.merge_count() < *merges {
                        log::warn!("{name}: only {} merges possible", model.merge_count());
                    }
                    run.write(name, model.to_text())?;
                    let (j, t) = describe(name, model);
                    reports.push(j);
                    text.push_str(&t);
                }
                run.emit("bpe-train", &reports, &text)
            }
            Command::Apply { model, input, output } => {
                run.input(model)?;
                let model = BpeModel::load(model)?;
                let format = TokenFormat::default();
                let lines = run.read_lines(input)?;
                let rendered: Vec<String> = lines.iter().map(|l| format.render(&tokenize(&model, l))).collect();
                let tokens: usize = rendered.iter().map(|l| l.split_whitespace().count()).sum();
                run.write(output, lines_to_text(&rendered))?;
                let report = json!({ "lines": lines.len(), "tokens": tokens, "output": output });
                run.emit("bpe-apply", &report, &format!("{} lines, {tokens} tokens -> {output}", lines.len()))
            }
            Command::Detok { input, output } => {
                let format = TokenFormat::default();
                let lines = run.read_lines(input)?;
                let text: Vec<String> = lines
                    .iter()
                    .enumerate()
                    .map(|(i, l)| {
                        format.parse(l).map(|t| detokenize(&t)).with_context(|| format!("line {}", i + 1))
                    })
                    .collect::<Result<_>>()?;
                run.write(output, lines_to_text(&text))?;
                let report = json!({ "lines": lines.len(), "output": output });
                run.emit("bpe-detok", &report, &format!("{} lines -> {output}", lines.len()))
            }
        }
    }
}
