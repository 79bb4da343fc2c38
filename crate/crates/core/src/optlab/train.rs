use serde::{Deserialize, Serialize};

use super::cluster::{simulate, ClusterConfig, RunConfig, Workload};
use super::data::{bigrams, sentence_bigrams, BatchPlan, LmCorpus};
use super::model::{loss_and_grad, perplexity, predict, Bigram, ModelDims, SurrogateModel};
use super::optimizers::{build_optimizer, Optimizer, OptimizerConfig};
use super::params::Params;
use super::trace::TrainingTrace;
use super::OptimError;
use crate::bleu;
use crate::corpus::nested_indices;

/// Surrogate model training as seen by the cluster simulator.
pub struct ModelWorkload {
    dims: ModelDims,
    params: Params,
    optimizer: Box<dyn Optimizer>,
    plan: BatchPlan,
    valid: Vec<Bigram>,
    valid_sentences: Vec<Vec<u32>>,
}

impl ModelWorkload {
    pub fn new(
        model: SurrogateModel,
        corpus: &LmCorpus,
        optimizer: OptimizerConfig,
        batch_size: usize,
        seed: u64,
    ) -> Result<Self, OptimError> {
        if corpus.vocab > model.dims.vocab {
            return Err(OptimError::Config(format!(
                "corpus vocabulary {} exceeds model vocabulary {}",
                corpus.vocab, model.dims.vocab
            )));
        }
        Ok(Self {
            dims: model.dims,
            params: model.params,
            optimizer: build_optimizer(optimizer)?,
            plan: BatchPlan::new(corpus.train_bigrams(), batch_size, seed)?,
            valid: corpus.valid_bigrams(),
            valid_sentences: corpus.valid.clone(),
        })
    }

    pub fn plan(&self) -> &BatchPlan {
        &self.plan
    }
}

impl Workload for ModelWorkload {
    type Snapshot = Params;
    type Grad = Params;

    fn batches_per_epoch(&self) -> usize {
        self.plan.batches_per_epoch()
    }

    fn pull(&self) -> Params {
        self.params.clone()
    }

    fn gradient(&self, at: &Params, epoch: usize, batch: usize) -> Result<Params, OptimError> {
        Ok(loss_and_grad(self.dims, at, &self.plan.batch(epoch, batch)).1)
    }

    fn mean(&self, grads: Vec<Params>) -> Params {
        mean_gradient(grads)
    }

    fn apply(&mut self, grad: &Params) -> Result<(), OptimError> {
        self.optimizer.step(&mut self.params, grad)
    }

    fn lr(&self) -> f64 {
        self.optimizer.lr()
    }

    fn evaluate(&self) -> Option<f64> {
        (!self.valid.is_empty()).then(|| perplexity(self.dims, &self.params, &self.valid))
    }

    fn bleu(&self) -> Option<f64> {
        next_token_bleu(self.dims, &self.params, &self.valid_sentences)
    }

    fn end_of_epoch(&mut self, epoch: usize, val_ppl: Option<f64>) {
        if let Some(ppl) = val_ppl {
            self.optimizer.end_of_epoch(epoch, ppl);
        }
    }

    fn params(&self) -> Option<Params> {
        Some(self.params.clone())
    }
}

/// Sum in the given order, then one scaling by `1/len`.
pub fn mean_gradient(grads: Vec<Params>) -> Params {
    let n = grads.len();
    let mut iter = grads.into_iter();
    let mut acc = iter.next().expect("at least one gradient");
    for g in iter {
        acc.add_scaled(&g, 1.0);
    }
    acc.scale(1.0 / n as f64);
    acc
}

/// BLEU of teacher-forced greedy next-token predictions against the
/// validation sentences.
pub fn next_token_bleu(dims: ModelDims, params: &Params, sentences: &[Vec<u32>]) -> Option<f64> {
    if sentences.is_empty() {
        return None;
    }
    let render = |ids: &mut dyn Iterator<Item = u32>| ids.map(|t| t.to_string()).collect::<Vec<_>>().join(" ");
    let mut hyps = Vec::with_capacity(sentences.len());
    let mut refs = Vec::with_capacity(sentences.len());
    for s in sentences {
        let pairs: Vec<Bigram> = sentence_bigrams(s).collect();
        hyps.push(render(&mut pairs.iter().map(|&(x, _)| predict(dims, params, x))));
        refs.push(render(&mut pairs.iter().map(|&(_, y)| y)));
    }
    bleu::corpus_bleu(&hyps, &refs).ok().map(|r| r.score)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerConfig,
    pub batch_size: usize,
    pub run: RunConfig,
}

/// Single-worker training.
pub fn train(
    model: SurrogateModel,
    corpus: &LmCorpus,
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainingTrace, OptimError> {
    simulate_cluster(model, corpus, config, &ClusterConfig::single(), seed)
}

pub fn simulate_cluster(
    model: SurrogateModel,
    corpus: &LmCorpus,
    config: &TrainConfig,
    cluster: &ClusterConfig,
    seed: u64,
) -> Result<TrainingTrace, OptimError> {
    let mut workload = ModelWorkload::new(model, corpus, config.optimizer, config.batch_size, seed)?;
    simulate(&mut workload, cluster, &config.run, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTrace {
    pub size: usize,
    pub trace: TrainingTrace,
}

/// Trains on nested subsets of the training sentences for the same number
/// of iterations, evaluating every `eval_every` batches on the shared
/// validation set.
pub fn corpus_size_sweep(
    dims: ModelDims,
    corpus: &LmCorpus,
    sizes: &[usize],
    budget: u64,
    eval_every: u64,
    config: &TrainConfig,
    seed: u64,
) -> Result<Vec<SweepTrace>, OptimError> {
    let subsets = nested_indices(corpus.train.len(), sizes, seed)
        .map_err(|e| OptimError::Config(e.to_string()))?;
    let mut config = *config;
    config.run = RunConfig {
        epochs: usize::MAX,
        max_iterations: Some(budget),
        eval_every: Some(eval_every),
        ..config.run
    };
    subsets
        .into_iter()
        .zip(sizes)
        .map(|(indices, &size)| {
            let train = indices.iter().map(|&i| corpus.train[i].clone()).collect();
            let subset = corpus.with_train(train);
            let model = SurrogateModel::new(dims, seed);
            let trace = train_on(model, &subset, &config, seed)?;
            Ok(SweepTrace { size, trace })
        })
        .collect()
}

fn train_on(
    model: SurrogateModel,
    corpus: &LmCorpus,
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainingTrace, OptimError> {
    if bigrams(&corpus.train).is_empty() {
        return Err(OptimError::Config("empty subset".into()));
    }
    train(model, corpus, config, seed)
}

#[cfg(test)]
mod tests {
    use super::super::data::{deterministic_corpus, toy_corpus, ToyCorpusConfig};
    use super::super::optimizers::OptimizerKind;
    use super::*;

    fn small_dims(vocab: usize) -> ModelDims {
        ModelDims {
            vocab,
            embed: 8,
            hidden: 8,
        }
    }

    fn config(kind: OptimizerKind, epochs: usize) -> TrainConfig {
        TrainConfig {
            optimizer: OptimizerConfig::new(kind),
            batch_size: 8,
            run: RunConfig::epochs(epochs),
        }
    }

    #[test]
    fn zero_rate_freezes_everything() {
        let corpus = deterministic_corpus(20);
        let model = SurrogateModel::new(small_dims(3), 1);
        let mut cfg = config(OptimizerKind::SgdDecay, 4);
        cfg.optimizer.initial_lr = 0.0;
        let trace = train(model.clone(), &corpus, &cfg, 1).unwrap();
        assert_eq!(trace.final_params.as_ref(), Some(&model.params));
        let ppl = trace.initial_ppl.unwrap();
        assert!(trace.rows.iter().all(|r| r.val_ppl == Some(ppl)));
    }

    #[test]
    fn deterministic_language_is_learned() {
        let corpus = deterministic_corpus(100);
        let model = SurrogateModel::new(small_dims(3), 2);
        let trace = train(model, &corpus, &config(OptimizerKind::SgdDecay, 50), 2).unwrap();
        let last = trace.final_ppl().unwrap();
        assert!(last < 1.05, "final perplexity {last}");
        assert!(trace.rows.windows(2).all(|w| w[0].iterations < w[1].iterations));
        assert!(trace.rows.windows(2).all(|w| w[0].sim_seconds <= w[1].sim_seconds));
    }

    #[test]
    fn divergence_is_flagged() {
        let corpus = toy_corpus(&ToyCorpusConfig {
            vocab: 20,
            train_sentences: 50,
            valid_sentences: 20,
            ..Default::default()
        });
        let model = SurrogateModel::with_init_scale(small_dims(20), 1, 0.5);
        let mut cfg = config(OptimizerKind::SgdDecay, 10);
        cfg.optimizer.initial_lr = 1e12;
        let trace = train(model, &corpus, &cfg, 1).unwrap();
        assert!(trace.divergent);
        assert!(trace.rows.len() < 10);
    }

    #[test]
    fn bleu_every_five_epochs() {
        let corpus = deterministic_corpus(20);
        let mut cfg = config(OptimizerKind::Adam, 10);
        cfg.run.bleu_every = Some(5);
        let trace = train(SurrogateModel::new(small_dims(3), 1), &corpus, &cfg, 1).unwrap();
        let scored: Vec<usize> = trace.rows.iter().filter(|r| r.bleu.is_some()).map(|r| r.epoch).collect();
        assert_eq!(scored, vec![5, 10]);
    }

    #[test]
    fn vocabulary_must_fit() {
        let corpus = deterministic_corpus(5);
        let err = train(SurrogateModel::new(small_dims(2), 1), &corpus, &config(OptimizerKind::Adam, 1), 1);
        assert!(err.is_err());
    }
}
