mod cmd;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand};

use run::Run;

/// Translation-pipeline toolkit: corpora, subwords, entities, BLEU,
/// optimizer lab, business-sensitivity checks and human evaluation.
#[derive(Parser)]
#[command(name = "mtkit", version)]
struct Cli {
    /// Seed for every random stream of the run.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Directory receiving all outputs and the run manifest.
    #[arg(long, global = true, env = "MTKIT_OUT_DIR", default_value = "mtkit-out")]
    out_dir: PathBuf,
    /// Print the JSON report instead of the text one.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Group,
}

#[derive(Subcommand)]
enum Group {
    /// Split and subsample parallel corpora.
    #[command(subcommand)]
    Corpus(cmd::corpus::Command),
    /// Train, apply and undo byte-pair encoding.
    #[command(subcommand)]
    Bpe(cmd::bpe::Command),
    /// Entity scanning, masking and validation.
    #[command(subcommand)]
    Ner(cmd::ner::Command),
    /// Corpus- and sentence-level BLEU.
    #[command(subcommand)]
    Bleu(cmd::bleu::Command),
    /// Optimizer and cluster simulations on the surrogate model.
    #[command(subcommand)]
    Optlab(cmd::optlab::Command),
    /// Business-sensitive-fragment checks.
    #[command(subcommand)]
    Bsf(cmd::bsf::Command),
    /// Human evaluation sheets and correlation with BLEU.
    #[command(subcommand)]
    Eval(cmd::eval::Command),
}

impl Group {
    fn name(&self) -> String {
        let (group, action) = match self {
            Group::Corpus(c) => ("corpus", c.name()),
            Group::Bpe(c) => ("bpe", c.name()),
            Group::Ner(c) => ("ner", c.name()),
            Group::Bleu(c) => ("bleu", c.name()),
            Group::Optlab(c) => ("optlab", c.name()),
            Group::Bsf(c) => ("bsf", c.name()),
            Group::Eval(c) => ("eval", c.name()),
        };
        format!("{group} {action}")
    }

    fn config(&self) -> serde_json::Result<serde_json::Value> {
        match self {
            Group::Corpus(c) => serde_json::to_value(c),
            Group::Bpe(c) => serde_json::to_value(c),
            Group::Ner(c) => serde_json::to_value(c),
            Group::Bleu(c) => serde_json::to_value(c),
            Group::Optlab(c) => serde_json::to_value(c),
            Group::Bsf(c) => serde_json::to_value(c),
            Group::Eval(c) => serde_json::to_value(c),
        }
    }

    fn execute(&self, run: &mut Run) -> anyhow::Result<()> {
        match self {
            Group::Corpus(c) => c.run(run),
            Group::Bpe(c) => c.run(run),
            Group::Ner(c) => c.run(run),
            Group::Bleu(c) => c.run(run),
            Group::Optlab(c) => c.run(run),
            Group::Bsf(c) => c.run(run),
            Group::Eval(c) => c.run(run),
        }
    }
}

/// Help of the deepest subcommand named on the command line.
fn subcommand_help(argv: &[String]) -> String {
    let mut cmd = Cli::command();
    for arg in argv.iter().skip(1).filter(|a| !a.starts_with('-')) {
        match cmd.find_subcommand(arg) {
            Some(sub) => cmd = sub.clone(),
            None => break,
        }
    }
    cmd.render_help().to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if matches!(e.kind(), ErrorKind::UnknownArgument | ErrorKind::InvalidSubcommand) {
                eprintln!("\n{}", subcommand_help(&argv));
            }
            return ExitCode::from(code as u8);
        }
    };
    let result = cli
        .command
        .config()
        .map_err(anyhow::Error::from)
        .and_then(|config| Run::new(&cli.out_dir, &cli.command.name(), argv, &config, cli.seed, cli.json))
        .and_then(|mut run| {
            cli.command.execute(&mut run)?;
            run.finish()
        });
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
