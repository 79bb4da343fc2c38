use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use mtkit::optlab::{
    check_gradients, corpus_size_sweep, fit_timing_model, hours_minutes, simulate, simulate_cluster, toy_corpus,
    train, ClusterConfig, ClusterMode, GradCheckConfig, LmCorpus, ModelDims, NullWorkload, OptimizerConfig,
    OptimizerKind, RunConfig, SurrogateModel, TimingFit, ToyCorpusConfig, TrainConfig, TrainingTrace,
    REFERENCE_CLUSTER_TIMES, REFERENCE_ITERATIONS,
};

use crate::run::{parse_seconds, Run};

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerArg {
    Sgd,
    Adam,
    Adagrad,
    Adadelta,
}

impl From<OptimizerArg> for OptimizerKind {
    fn from(o: OptimizerArg) -> Self {
        match o {
            OptimizerArg::Sgd => OptimizerKind::SgdDecay,
            OptimizerArg::Adam => OptimizerKind::Adam,
            OptimizerArg::Adagrad => OptimizerKind::Adagrad,
            OptimizerArg::Adadelta => OptimizerKind::Adadelta,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Sync,
    Async,
}

impl From<ModeArg> for ClusterMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sync => ClusterMode::Sync,
            ModeArg::Async => ClusterMode::Async,
        }
    }
}

/// Surrogate model, data and optimizer.
#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = OptimizerArg::Sgd)]
    optimizer: OptimizerArg,
    /// Initial learning rate; the optimizer's default when absent.
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, default_value_t = 4)]
    batch_size: usize,
    /// Training text, one sentence per line; the bundled toy corpus when absent.
    #[arg(long, requires = "valid")]
    train: Option<PathBuf>,
    #[arg(long, requires = "train")]
    valid: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    max_vocab: usize,
    #[arg(long, default_value_t = 16)]
    embed: usize,
    #[arg(long, default_value_t = 32)]
    hidden: usize,
}

impl ModelArgs {
    fn corpus(&self, run: &mut Run) -> Result<LmCorpus> {
        match (&self.train, &self.valid) {
            (Some(t), Some(v)) => {
                let train = run.read_lines(t)?;
                let valid = run.read_lines(v)?;
                let corpus = LmCorpus::from_text(
                    train.iter().map(String::as_str),
                    valid.iter().map(String::as_str),
                    self.max_vocab,
                );
                if corpus.train.is_empty() || corpus.valid.is_empty() {
                    bail!("training and validation text must both be non-empty");
                }
                Ok(corpus)
            }
            _ => Ok(toy_corpus(&ToyCorpusConfig::default())),
        }
    }

    fn dims(&self, corpus: &LmCorpus) -> ModelDims {
        ModelDims {
            vocab: corpus.vocab,
            embed: self.embed,
            hidden: self.hidden,
        }
    }

    fn config(&self, run: RunConfig) -> TrainConfig {
        let mut optimizer = OptimizerConfig::new(self.optimizer.into());
        if let Some(lr) = self.lr {
            optimizer = optimizer.with_lr(lr);
        }
        TrainConfig {
            optimizer,
            batch_size: self.batch_size,
            run,
        }
    }
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Train the surrogate model on one worker and write the trace.
    Train {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        /// Score next-token BLEU every this many epochs.
        #[arg(long)]
        bleu_every: Option<usize>,
    },
    /// Simulate a data-parallel cluster.
    Simulate {
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Sync)]
        cluster_mode: ModeArg,
        #[arg(long, default_value_t = 6000)]
        warmup_iters: u64,
        /// Single-worker epoch time the timing model is calibrated to.
        #[arg(long, value_parser = parse_seconds, default_value = "22260s")]
        calibrate_single: f64,
        /// Batches per epoch for timing-only runs.
        #[arg(long, default_value_t = REFERENCE_ITERATIONS)]
        iterations: u64,
        #[arg(long, default_value_t = 1)]
        epochs: usize,
        /// Relative spread of per-batch compute time.
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        /// Train the surrogate model instead of a timing-only run.
        #[arg(long)]
        with_model: bool,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Same iteration budget on nested subsets of the training data.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [300, 750, 1500])]
        sizes: Vec<usize>,
        /// Batches per run.
        #[arg(long, default_value_t = 4000)]
        budget: u64,
        #[arg(long, default_value_t = 250)]
        eval_every: u64,
    },
    /// Compare analytic and finite-difference gradients.
    Gradcheck {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Bigrams in the probe batch.
        #[arg(long, default_value_t = 64)]
        batch: usize,
    },
}

fn trace_text(trace: &TrainingTrace) -> String {
    let mut out = String::from("epoch  iterations  sim_time    val_ppl        lr\n");
    for r in &trace.rows {
        let ppl = r.val_ppl.map(|p| format!("{p:.3}")).unwrap_or_else(|| "-".into());
        writeln!(
            out,
            "{:>5}  {:>10}  {:>8}  {:>9}  {:>8.3e}",
            r.epoch,
            r.iterations,
            hours_minutes(r.sim_seconds),
            ppl,
            r.lr
        )
        .expect("string write");
    }
    if trace.divergent {
        out.push_str("training diverged\n");
    }
    out
}

fn timing(calibrate_single: f64, warmup: u64) -> TimingFit {
    fit_timing_model(
        calibrate_single,
        REFERENCE_ITERATIONS,
        warmup,
        &REFERENCE_CLUSTER_TIMES.map(|(k, s, _)| (k, s)),
        &REFERENCE_CLUSTER_TIMES.map(|(k, _, a)| (k, a)),
    )
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Train { .. } => "train",
            Command::Simulate { .. } => "simulate",
            Command::Sweep { .. } => "sweep",
            Command::Gradcheck { .. } => "gradcheck",
        }
    }

    pub fn run(&self, run: &mut Run) -> Result<()> {
        let seed = run.seed();
        match self {
            Command::Train {
                model,
                epochs,
                bleu_every,
            } => {
                let corpus = model.corpus(run)?;
                let dims = model.dims(&corpus);
                let cfg = model.config(RunConfig {
                    bleu_every: *bleu_every,
                    ..RunConfig::epochs(*epochs)
                });
                let trace = train(SurrogateModel::new(dims, seed), &corpus, &cfg, seed)?;
                run.write("trace.csv", trace.to_csv_string())?;
                run.emit("optlab-train", &trace, &trace_text(&trace))
            }
            Command::Simulate {
                workers,
                cluster_mode,
                warmup_iters,
                calibrate_single,
                iterations,
                epochs,
                jitter,
                with_model,
                model,
            } => {
                let fit = timing(*calibrate_single, *warmup_iters);
                let mode = ClusterMode::from(*cluster_mode);
                let mut cluster = ClusterConfig::from_timing(mode, *workers, &fit.model);
                cluster.async_warmup_iterations = *warmup_iters;
                cluster.compute_jitter = *jitter;
                let trace = if *with_model {
                    let corpus = model.corpus(run)?;
                    let dims = model.dims(&corpus);
                    let cfg = model.config(RunConfig::epochs(*epochs));
                    simulate_cluster(SurrogateModel::new(dims, seed), &corpus, &cfg, &cluster, seed)?
                } else {
                    let mut workload = NullWorkload {
                        batches_per_epoch: *iterations as usize,
                    };
                    simulate(&mut workload, &cluster, &RunConfig::epochs(*epochs), seed)?
                };
                let first = trace.rows.first().map_or(0.0, |r| r.sim_seconds);
                let reference = REFERENCE_CLUSTER_TIMES
                    .iter()
                    .find(|(k, _, _)| k == workers)
                    .map(|&(_, s, a)| if mode == ClusterMode::Sync { s } else { a })
                    .filter(|_| !with_model && *iterations == REFERENCE_ITERATIONS);
                let mut text = format!(
                    "{mode} cluster, {workers} workers ({} training), first epoch {first:.0}s ({})\n",
                    cluster.trainers(),
                    hours_minutes(first)
                );
                if let Some(r) = reference {
                    writeln!(text, "reference {r:.0}s ({}), relative error {:.3}", hours_minutes(r), (first - r).abs() / r)
                        .expect("string write");
                }
                writeln!(
                    text,
                    "timing model: compute {:.6}s/batch, sync overhead {:.6}s per extra worker, async comm {:.6}s",
                    fit.model.compute_per_batch, fit.model.sync_overhead_per_extra_worker, fit.model.async_comm
                )
                .expect("string write");
                text.push_str(&trace_text(&trace));
                run.write("trace.csv", trace.to_csv_string())?;
                let report = json!({
                    "mode": mode,
                    "workers": workers,
                    "trainers": cluster.trainers(),
                    "first_epoch_seconds": first,
                    "reference_seconds": reference,
                    "timing": fit,
                    "trace": trace,
                });
                run.emit("optlab-simulate", &report, &text)
            }
            Command::Sweep {
                model,
                sizes,
                budget,
                eval_every,
            } => {
                let corpus = model.corpus(run)?;
                let dims = model.dims(&corpus);
                let cfg = model.config(RunConfig::epochs(1));
                let traces = corpus_size_sweep(dims, &corpus, sizes, *budget, *eval_every, &cfg, seed)?;
                let mut csv = String::from("size,iterations,sim_seconds,val_ppl\n");
                let mut text = String::from("size  final_ppl\n");
                for t in &traces {
                    for c in &t.trace.checkpoints {
                        let ppl = c.val_ppl.map(|p| p.to_string()).unwrap_or_default();
                        writeln!(csv, "{},{},{},{ppl}", t.size, c.iterations, c.sim_seconds).expect("string write");
                    }
                    let last = t.trace.checkpoints.last().and_then(|c| c.val_ppl);
                    writeln!(text, "{:>4}  {}", t.size, last.map(|p| format!("{p:.3}")).unwrap_or_else(|| "-".into()))
                        .expect("string write");
                }
                run.write("sweep.csv", csv)?;
                run.emit("optlab-sweep", &traces, &text)
            }
            Command::Gradcheck { model, samples, batch } => {
                let corpus = model.corpus(run)?;
                let dims = model.dims(&corpus);
                let probe: Vec<_> = corpus.train_bigrams().into_iter().take(*batch).collect();
                let config = GradCheckConfig {
                    samples: *samples,
                    seed,
                    ..GradCheckConfig::default()
                };
                let report = check_gradients(&SurrogateModel::new(dims, seed), &probe, &config);
                let text = format!(
                    "{}: max relative error {:.3e} over {} coordinates ({} below the floor)",
                    if report.passed { "passed" } else { "FAILED" },
                    report.max_rel_error,
                    report.compared,
                    report.skipped
                );
                run.emit("optlab-gradcheck", &report, &text)?;
                if !report.passed {
                    bail!("gradient check failed");
                }
                Ok(())
            }
        }
    }
}
