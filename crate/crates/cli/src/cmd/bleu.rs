use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use mtkit::bleu::{BleuReport, Scorer, ScoringConfig, Smoothing, Tokenization};
use mtkit::tokenizer::BpeModel;

use crate::run::Run;

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothingArg {
    None,
    AddOne,
}

#[derive(Debug, Args, Serialize)]
pub struct Inputs {
    #[arg(long)]
    candidates: PathBuf,
    #[arg(long)]
    references: PathBuf,
    #[arg(long, default_value_t = 4)]
    max_n: usize,
    /// Fold case before matching.
    #[arg(long)]
    lowercase: bool,
    /// Score BPE pieces of this model instead of whitespace tokens.
    #[arg(long)]
    bpe_model: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Corpus-level BLEU from pooled n-gram counts.
    Corpus {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Per-sentence BLEU written as CSV.
    Sentence {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum, default_value_t = SmoothingArg::AddOne)]
        smoothing: SmoothingArg,
        #[arg(long, default_value = "bleu-sentence.csv")]
        output: String,
    },
}

fn summary_line(r: &BleuReport) -> String {
    let p: Vec<String> = r.precisions.iter().map(|p| format!("{:.1}", 100.0 * p)).collect();
    format!(
        "BLEU = {:.2}, {} (BP = {:.3}, ratio = {:.3}, hyp_len = {}, ref_len = {})",
        r.score,
        p.join("/"),
        r.brevity_penalty,
        r.candidate_length as f64 / r.reference_length.max(1) as f64,
        r.candidate_length,
        r.reference_length
    )
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Corpus { .. } => "corpus",
            Command::Sentence { .. } => "sentence",
        }
    }

    pub fn run(&self, run: &mut Run) -> Result<()> {
        let (inputs, smoothing) = match self {
            Command::Corpus { inputs } => (inputs, Smoothing::None),
            Command::Sentence { inputs, smoothing, .. } => (
                inputs,
                match smoothing {
                    SmoothingArg::None => Smoothing::None,
                    SmoothingArg::AddOne => Smoothing::AddOneOnZero,
                },
            ),
        };
        let cands = run.read_lines(&inputs.candidates)?;
        let refs = run.read_lines(&inputs.references)?;
        if cands.len() != refs.len() {
            bail!("{} candidates but {} references", cands.len(), refs.len());
        }
        let model = match &inputs.bpe_model {
            Some(p) => {
                run.input(p)?;
                Some(BpeModel::load(p)?)
            }
            None => None,
        };
        let config = ScoringConfig {
            max_n: inputs.max_n,
            smoothing,
            tokenization: if model.is_some() { Tokenization::Subword } else { Tokenization::Whitespace },
            case_sensitive: !inputs.lowercase,
        };
        let scorer = match &model {
            Some(m) => Scorer::with_model(config, m),
            None => Scorer::new(config)?,
        };
        match self {
            Command::Corpus { .. } => {
                let report = scorer.corpus_bleu(&cands, &refs)?;
                run.emit("bleu-corpus", &report.to_json(), &summary_line(&report))
            }
            Command::Sentence { output, .. } => {
                let mut csv = String::from("line,bleu\n");
                let mut scores = Vec::new();
                for (i, (c, r)) in cands.iter().zip(&refs).enumerate() {
                    // an empty side scores 0
                    let s = scorer.sentence_bleu(c, r).map(|r| r.score).unwrap_or(0.0);
                    csv.push_str(&format!("{},{s}\n", i + 1));
                    scores.push(s);
                }
                run.write(output, csv)?;
                let mean = scores.iter().sum::<f64>() / scores.len().max(1) as f64;
                let report = json!({ "sentences": scores.len(), "mean": mean, "output": output });
                run.emit(
                    "bleu-sentence",
                    &report,
                    &format!("{} sentences, mean sentence BLEU {mean:.2} -> {output}", scores.len()),
                )
            }
        }
    }
}
