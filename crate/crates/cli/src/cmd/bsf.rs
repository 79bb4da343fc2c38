use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use clap::Subcommand;
use serde::Serialize;
use serde_json::json;

use mtkit::bsf::{
    cross_language_report, evaluate_classifier, expand_seeds, match_sentences, read_terms, tokens,
    train_classifier, train_embeddings, write_candidates, AspectLexicon, BilingualPair, ClassifierConfig,
    Embeddings, FeatureSpec, HashedLinearClassifier, SgnsConfig,
};

use super::lines_to_text;
use crate::run::Run;

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Train skip-gram embeddings on monolingual text.
    Embed {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 50)]
        dim: usize,
        #[arg(long, default_value_t = 5)]
        window: usize,
        #[arg(long, default_value_t = 5)]
        negatives: usize,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 1)]
        min_count: u64,
        #[arg(long, default_value = "embeddings.txt")]
        output: String,
    },
    /// Propose lexicon candidates from the seeds' nearest neighbours.
    Expand {
        #[arg(long)]
        embeddings: PathBuf,
        /// One seed term per line.
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 0.0)]
        min_sim: f64,
        #[arg(long, default_value = "candidates.txt")]
        output: String,
    },
    /// Select the sentences mentioning any lexicon term.
    Match {
        #[arg(long)]
        input: PathBuf,
        /// Approved terms, one per line.
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long, default_value = "matched.txt")]
        output: String,
    },
    /// Train an aspect-value classifier on `text<TAB>label` lines.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 0.2)]
        learning_rate: f64,
        #[arg(long, default_value_t = 1e-6)]
        l2: f64,
        #[arg(long, default_value_t = 18)]
        bits: u32,
        /// Unigram features only.
        #[arg(long)]
        no_bigrams: bool,
        #[arg(long, default_value = "classifier.model")]
        output: String,
    },
    /// Per-label precision, recall and F1 on held-out `text<TAB>label` lines.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Source/translation label disagreement on `id<TAB>source<TAB>target` lines.
    Report {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        source_lexicon: PathBuf,
        #[arg(long)]
        target_lexicon: Option<PathBuf>,
        #[arg(long)]
        source_model: PathBuf,
        #[arg(long)]
        target_model: PathBuf,
        #[arg(long, default_value = "parking")]
        aspect: String,
        #[arg(long, default_value = "en")]
        src_lang: String,
        #[arg(long, default_value = "de")]
        tgt_lang: String,
    },
}

fn tsv(run: &mut Run, path: &Path, columns: usize) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for (i, line) in run.read_lines(path)?.into_iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<String> = line.split('\t').map(String::from).collect();
        if row.len() != columns {
            bail!("{}:{}: expected {columns} tab-separated columns, found {}", path.display(), i + 1, row.len());
        }
        rows.push(row);
    }
    Ok(rows)
}

fn labeled(run: &mut Run, path: &Path) -> Result<Vec<(String, String)>> {
    Ok(tsv(run, path, 2)?.into_iter().map(|mut r| (r.remove(0), r.remove(0))).collect())
}

fn lexicon(run: &mut Run, path: &Path, aspect: &str, lang: &str) -> Result<AspectLexicon> {
    let terms = read_terms(&run.read(path)?);
    let refs: Vec<&str> = terms.iter().map(String::as_str).collect();
    Ok(AspectLexicon::from_seeds(aspect, lang, &refs))
}

fn classifier(run: &mut Run, path: &Path) -> Result<HashedLinearClassifier> {
    Ok(HashedLinearClassifier::from_text(&run.read(path)?)?)
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Embed { .. } => "embed",
            Command::Expand { .. } => "expand",
            Command::Match { .. } => "match",
            Command::Train { .. } => "train",
            Command::Eval { .. } => "eval",
            Command::Report { .. } => "report",
        }
    }

    pub fn run(&self, run: &mut Run) -> Result<()> {
        match self {
            Command::Embed {
                input,
                dim,
                window,
                negatives,
                epochs,
                min_count,
                output,
            } => {
                let sentences: Vec<Vec<String>> = run.read_lines(input)?.iter().map(|l| tokens(l)).collect();
                let config = SgnsConfig {
                    dim: *dim,
                    window: *window,
                    negatives: *negatives,
                    epochs: *epochs,
                    min_count: *min_count,
                    seed: run.seed(),
                    ..SgnsConfig::default()
                };
                let emb = train_embeddings(&sentences, &config)?;
                run.write(output, emb.to_text())?;
                let report = json!({ "words": emb.len(), "dim": emb.dim(), "output": output });
                run.emit("bsf-embed", &report, &format!("{} words x {} dims -> {output}", emb.len(), emb.dim()))
            }
            Command::Expand {
                embeddings,
                seeds,
                k,
                min_sim,
                output,
            } => {
                let emb = Embeddings::from_text(&run.read(embeddings)?)?;
                let seeds = read_terms(&run.read(seeds)?);
                let expansion = expand_seeds(&emb, &seeds, *k, *min_sim);
                run.write(output, write_candidates(&expansion.candidates))?;
                let mut text = format!("{} seeds, {} candidates -> {output}\n", seeds.len(), expansion.candidates.len());
                if !expansion.missing.is_empty() {
                    writeln!(text, "not in the embeddings: {}", expansion.missing.join(", ")).expect("string write");
                }
                for (t, s) in expansion.candidates.iter().take(20) {
                    writeln!(text, "  {s:.4}  {t}").expect("string write");
                }
                run.emit("bsf-expand", &expansion, &text)
            }
            Command::Match { input, lexicon: lex, output } => {
                let lines = run.read_lines(input)?;
                let lex = lexicon(run, lex, "aspect", "")?;
                let hits = match_sentences(&lines, &lex)?;
                run.write(output, lines_to_text(hits.iter().map(|&i| lines[i].as_str())))?;
                run.write("matched.ids", lines_to_text(hits.iter().map(|i| (i + 1).to_string())))?;
                let report = json!({ "sentences": lines.len(), "matched": hits.len(), "lines": hits.iter().map(|i| i + 1).collect::<Vec<_>>() });
                run.emit("bsf-match", &report, &format!("{} of {} sentences matched -> {output}", hits.len(), lines.len()))
            }
            Command::Train {
                data,
                epochs,
                learning_rate,
                l2,
                bits,
                no_bigrams,
                output,
            } => {
                let examples = labeled(run, data)?;
                let config = ClassifierConfig {
                    features: FeatureSpec {
                        bits: *bits,
                        bigrams: !no_bigrams,
                    },
                    learning_rate: *learning_rate,
                    epochs: *epochs,
                    l2: *l2,
                    seed: run.seed(),
                };
                let clf = train_classifier(&examples, &config)?;
                run.write(output, clf.to_text())?;
                let report = json!({ "examples": examples.len(), "labels": clf.labels(), "output": output });
                run.emit(
                    "bsf-train",
                    &report,
                    &format!("{} examples, labels {} -> {output}", examples.len(), clf.labels().join(", ")),
                )
            }
            Command::Eval { model, data } => {
                let clf = classifier(run, model)?;
                let examples = labeled(run, data)?;
                let report = evaluate_classifier(&clf, &examples)?;
                run.emit("bsf-eval", &report, &report.to_table())
            }
            Command::Report {
                pairs,
                source_lexicon,
                target_lexicon,
                source_model,
                target_model,
                aspect,
                src_lang,
                tgt_lang,
            } => {
                let pairs: Vec<BilingualPair> = tsv(run, pairs, 3)?
                    .into_iter()
                    .map(|r| BilingualPair {
                        id: r[0].clone(),
                        source: r[1].clone(),
                        target: r[2].clone(),
                    })
                    .collect();
                let src_lex = lexicon(run, source_lexicon, aspect, src_lang)?;
                let tgt_lex = match target_lexicon {
                    Some(p) => Some(lexicon(run, p, aspect, tgt_lang)?),
                    None => None,
                };
                let src_clf = classifier(run, source_model)?;
                let tgt_clf = classifier(run, target_model)?;
                let report = cross_language_report(&pairs, &src_lex, tgt_lex.as_ref(), &src_clf, &tgt_clf)?;
                let mut flagged = String::from("id\tsource_label\ttarget_label\tsource\ttarget\n");
                for f in &report.flagged {
                    writeln!(flagged, "{}\t{}\t{}\t{}\t{}", f.id, f.source_label, f.target_label, f.source, f.target)
                        .expect("string write");
                }
                run.write("flagged.tsv", flagged)?;
                let mut text = report.to_table();
                if !report.target_unmatched.is_empty() {
                    writeln!(
                        text,
                        "{} translations miss the target lexicon: {}",
                        report.target_unmatched.len(),
                        report.target_unmatched.join(", ")
                    )
                    .expect("string write");
                }
                run.emit("bsf-report", &report, &text)
            }
        }
    }
}
