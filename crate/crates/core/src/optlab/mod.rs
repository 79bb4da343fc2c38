//! Optimizer laboratory: update rules, a surrogate bigram language model,
//! gradient checking, and a discrete-event simulation of synchronous and
//! asynchronous data-parallel SGD.

mod cluster;
mod data;
mod gradcheck;
mod model;
mod optimizers;
mod params;
mod timing;
mod trace;
mod train;

use thiserror::Error;

pub use cluster::{
    simulate, simulate_epoch_time, ClusterConfig, ClusterMode, NullWorkload, RunConfig, Workload,
};
pub use data::{
    bigrams, deterministic_corpus, sentence_bigrams, toy_corpus, BatchPlan, LmCorpus, ToyCorpusConfig,
    BOUNDARY,
};
pub use gradcheck::{check_gradients, check_gradients_with, GradCheckConfig, GradCheckReport};
pub use model::{
    loss, loss_and_grad, perplexity, predict, Bigram, ModelDims, SurrogateModel, EMBEDDING, HIDDEN_B,
    HIDDEN_W, OUTPUT_B, OUTPUT_W,
};
pub use optimizers::{
    build_optimizer, Adadelta, Adagrad, Adam, Optimizer, OptimizerConfig, OptimizerFactory, OptimizerKind,
    OptimizerRegistry, SgdDecay,
};
pub use params::{ParamBlock, Params};
pub use timing::{
    fit_timing_model, hours_minutes, FitPoint, TimingFit, TimingModel, DEFAULT_WARMUP,
    REFERENCE_CLUSTER_TIMES, REFERENCE_ITERATIONS, REFERENCE_SINGLE_EPOCH,
};
pub use trace::{Checkpoint, TraceRow, TrainingTrace};
pub use train::{
    corpus_size_sweep, mean_gradient, next_token_bleu, simulate_cluster, train, ModelWorkload, SweepTrace,
    TrainConfig,
};

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite gradient in block {block} at index {index}")]
    Numeric { block: String, index: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}
