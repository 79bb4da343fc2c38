use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};
use serde::Serialize;
use serde_json::json;

use mtkit::humaneval::{correlate, plot_table, read_scores, summarize, AdequacyFluencyRecord, ScoreRange};

use crate::run::Run;

#[derive(Debug, Args, Serialize)]
pub struct Sheet {
    /// CSV with sentence_id, rater_id, system, adequacy, fluency[, entity].
    #[arg(long)]
    scores: PathBuf,
    #[arg(long, default_value_t = 1)]
    min_score: u8,
    #[arg(long, default_value_t = 4)]
    max_score: u8,
}

impl Sheet {
    fn range(&self) -> Result<ScoreRange> {
        if self.min_score >= self.max_score {
            bail!("score range {}..{} is empty", self.min_score, self.max_score);
        }
        Ok(ScoreRange {
            min: self.min_score,
            max: self.max_score,
        })
    }

    fn load(&self, run: &mut Run) -> Result<Vec<AdequacyFluencyRecord>> {
        let text = run.read(&self.scores)?;
        Ok(read_scores(text.as_bytes(), self.range()?)?)
    }
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Validate a score sheet and store it as JSON.
    Ingest {
        #[command(flatten)]
        sheet: Sheet,
    },
    /// Per-system means, per-rater means and rater agreement.
    Summarize {
        #[command(flatten)]
        sheet: Sheet,
    },
    /// Correlate human scores with BLEU per system.
    Correlate {
        #[command(flatten)]
        sheet: Sheet,
        /// CSV of `system,bleu` rows; a header line is allowed.
        #[arg(long)]
        bleu: PathBuf,
    },
}

fn read_bleu(run: &mut Run, path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (i, line) in run.read_lines(path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (system, score) = line
            .split_once(',')
            .with_context(|| format!("{}:{}: expected system,bleu", path.display(), i + 1))?;
        match score.trim().parse::<f64>() {
            Ok(v) => {
                if out.insert(system.trim().to_string(), v).is_some() {
                    bail!("{}:{}: duplicate system {system:?}", path.display(), i + 1);
                }
            }
            Err(_) if i == 0 => continue,
            Err(_) => bail!("{}:{}: bad score {score:?}", path.display(), i + 1),
        }
    }
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Summarize { .. } => "summarize",
            Command::Correlate { .. } => "correlate",
        }
    }

    pub fn run(&self, run: &mut Run) -> Result<()> {
        match self {
            Command::Ingest { sheet } => {
                let records = sheet.load(run)?;
                run.write("records.json", serde_json::to_string_pretty(&records)? + "\n")?;
                let mut systems: BTreeMap<&str, usize> = BTreeMap::new();
                for r in &records {
                    *systems.entry(&r.system).or_default() += 1;
                }
                let raters: std::collections::BTreeSet<&str> = records.iter().map(|r| r.rater_id.as_str()).collect();
                let mut text = format!("{} scores from {} raters\n", records.len(), raters.len());
                for (s, n) in &systems {
                    writeln!(text, "  {s}: {n}").expect("string write");
                }
                let report = json!({ "records": records.len(), "raters": raters.len(), "systems": systems });
                run.emit("eval-ingest", &report, &text)
            }
            Command::Summarize { sheet } => {
                let records = sheet.load(run)?;
                let summary = summarize(&records, sheet.range()?)?;
                let mut text = format!(
                    "{:<12} {:>9} {:>9} {:>9} {:>9} {:>9} {:>5}\n",
                    "system", "adequacy", "fluency", "kappa_a", "kappa_f", "entity", "n"
                );
                for (name, s) in &summary.systems {
                    writeln!(
                        text,
                        "{name:<12} {:>9.3} {:>9.3} {:>9} {:>9} {:>9} {:>5}",
                        s.adequacy,
                        s.fluency,
                        opt(s.kappa_adequacy),
                        opt(s.kappa_fluency),
                        opt(s.entity_accuracy),
                        s.n
                    )
                    .expect("string write");
                }
                run.emit("eval-summarize", &summary, &text)
            }
            Command::Correlate { sheet, bleu } => {
                let records = sheet.load(run)?;
                let summary = summarize(&records, sheet.range()?)?;
                let human = summary.human_metrics();
                let bleu = read_bleu(run, bleu)?;
                let report = correlate(&bleu, &human)?;
                run.write("bleu-vs-human.csv", plot_table(&bleu, &human))?;
                let mut text = format!("{} systems\n", report.systems.len());
                for (metric, m) in &report.metrics {
                    writeln!(
                        text,
                        "{metric}: pearson {}, spearman {}, best by BLEU {}, best by humans {}{}",
                        opt(m.pearson),
                        opt(m.spearman),
                        m.bleu_argmax,
                        m.human_argmax,
                        if m.argmax_disagrees { "  <- disagreement" } else { "" }
                    )
                    .expect("string write");
                }
                run.emit("eval-correlate", &report, &text)
            }
        }
    }
}
