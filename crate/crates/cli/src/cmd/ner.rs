use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Subcommand;
use serde::Serialize;
use serde_json::json;

use mtkit::entities::{
    mask, scan_mismatches, unmask, validate_entity_translation, EntityType, LocaleFormat, PlaceholderMap,
    TemplateSet, ValidationConfig, DEFAULT_TOLERANCE,
};

use super::{lines_to_text, CorpusInput};
use crate::run::Run;

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Count entity mismatches between the two sides of a corpus.
    Scan {
        #[command(flatten)]
        input: CorpusInput,
        /// Template file (TSV); the starter set when absent.
        #[arg(long)]
        templates: Option<PathBuf>,
    },
    /// Replace entities with typed placeholders.
    Mask {
        #[arg(long)]
        input: PathBuf,
        /// Language of the input.
        #[arg(long, default_value = "en")]
        locale: String,
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long, default_value = "masked.txt")]
        output: String,
        /// JSON-lines placeholder maps, one per input line.
        #[arg(long, default_value = "placeholders.jsonl")]
        maps: String,
    },
    /// Restore placeholders in translated text using the target locale.
    Unmask {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        maps: PathBuf,
        /// Language of the translation.
        #[arg(long, default_value = "de")]
        locale: String,
        #[arg(long, default_value = "unmasked.txt")]
        output: String,
    },
    /// Audit entity values in translations against their sources.
    Validate {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        hypotheses: PathBuf,
        #[arg(long, default_value = "en")]
        src_lang: String,
        #[arg(long, default_value = "de")]
        tgt_lang: String,
        #[arg(long)]
        templates: Option<PathBuf>,
        /// Restrict to one entity type (distance, duration, time, date, ...).
        #[arg(long = "type")]
        entity_type: Option<String>,
        /// Reject distances rendered in another unit.
        #[arg(long)]
        no_unit_conversion: bool,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
    },
}

fn templates(run: &mut Run, path: Option<&Path>, language: &str) -> Result<TemplateSet> {
    let set = match path {
        Some(p) => {
            run.input(p)?;
            TemplateSet::load(p)?.for_language(language)
        }
        None => TemplateSet::starter_for(language),
    };
    if set.is_empty() {
        bail!("no templates for language {language:?}");
    }
    Ok(set)
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Scan { .. } => "scan",
            Command::Mask { .. } => "mask",
            Command::Unmask { .. } => "unmask",
            Command::Validate { .. } => "validate",
        }
    }

    pub fn run(&self, run: &mut Run) -> Result<()> {
        match self {
            Command::Scan { input, templates: t } => {
                let corpus = input.load(run)?;
                let src = templates(run, t.as_deref(), &input.src_lang)?;
                let tgt = templates(run, t.as_deref(), &input.tgt_lang)?;
                let report = scan_mismatches(&corpus, &src, &tgt)?;
                run.emit("ner-scan", &report.to_json(), &report.to_table())
            }
            Command::Mask {
                input,
                locale,
                templates: t,
                output,
                maps,
            } => {
                let set = templates(run, t.as_deref(), locale)?;
                let lines = run.read_lines(input)?;
                let masked: Vec<PlaceholderMap> = lines.iter().map(|l| mask(l, &set)).collect();
                let mut jsonl = String::new();
                for m in &masked {
                    jsonl.push_str(&serde_json::to_string(m)?);
                    jsonl.push('\n');
                }
                run.write(output, lines_to_text(masked.iter().map(|m| m.masked.as_str())))?;
                run.write(maps, jsonl)?;
                let entities: usize = masked.iter().map(|m| m.entries.len()).sum();
                let report = json!({ "lines": lines.len(), "entities": entities, "output": output, "maps": maps });
                run.emit("ner-mask", &report, &format!("{} lines, {entities} entities masked", lines.len()))
            }
            Command::Unmask {
                input,
                maps,
                locale,
                output,
            } => {
                let lines = run.read_lines(input)?;
                let maps: Vec<PlaceholderMap> = run
                    .read_lines(maps)?
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| !l.trim().is_empty())
                    .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("placeholder map line {}", i + 1)))
                    .collect::<Result<_>>()?;
                if maps.len() != lines.len() {
                    bail!("{} translated lines but {} placeholder maps", lines.len(), maps.len());
                }
                let format = LocaleFormat::for_language(locale);
                let (mut text, mut lost, mut duplicated) = (Vec::new(), 0, 0);
                for (i, (line, map)) in lines.iter().zip(&maps).enumerate() {
                    let u = unmask(line, map, &format).with_context(|| format!("line {}", i + 1))?;
                    lost += u.lost.len();
                    duplicated += u.duplicated.len();
                    text.push(u.text);
                }
                run.write(output, lines_to_text(&text))?;
                let report = json!({ "lines": lines.len(), "lost": lost, "duplicated": duplicated, "output": output });
                run.emit(
                    "ner-unmask",
                    &report,
                    &format!("{} lines, {lost} placeholders lost, {duplicated} duplicated", lines.len()),
                )
            }
            Command::Validate {
                source,
                hypotheses,
                src_lang,
                tgt_lang,
                templates: t,
                entity_type,
                no_unit_conversion,
                tolerance,
            } => {
                let src = run.read_lines(source)?;
                let hyp = run.read_lines(hypotheses)?;
                if src.len() != hyp.len() {
                    bail!("{} source lines but {} hypotheses", src.len(), hyp.len());
                }
                let config = ValidationConfig {
                    entity_type: entity_type
                        .as_deref()
                        .map(str::parse::<EntityType>)
                        .transpose()
                        .map_err(anyhow::Error::msg)?,
                    unit_conversion: !no_unit_conversion,
                    tolerance: *tolerance,
                };
                let src_t = templates(run, t.as_deref(), src_lang)?;
                let tgt_t = templates(run, t.as_deref(), tgt_lang)?;
                let pairs: Vec<(String, String)> = src.into_iter().zip(hyp).collect();
                let report = validate_entity_translation(&pairs, &src_t, &tgt_t, &config);
                let accuracy = report.accuracy.map(|a| format!("{:.1}%", 100.0 * a)).unwrap_or_else(|| "n/a".into());
                let text = format!(
                    "{} sentences, {} audited, {} correct, accuracy {accuracy}",
                    pairs.len(),
                    report.audited,
                    report.correct
                );
                run.emit("ner-validate", &report, &text)
            }
        }
    }
}
