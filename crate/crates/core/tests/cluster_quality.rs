use mtkit::optlab::{
    simulate_cluster, toy_corpus, train, ClusterConfig, ClusterMode, ModelDims, OptimizerConfig, OptimizerKind,
    RunConfig, SurrogateModel, TimingModel, ToyCorpusConfig, TrainConfig,
};

/// First-epoch perplexity: one worker beats async, async beats sync.
#[test]
fn first_epoch_quality_ordering() {
    let corpus = toy_corpus(&ToyCorpusConfig::default());
    let dims = ModelDims::default();
    let cfg = TrainConfig {
        optimizer: OptimizerConfig::new(OptimizerKind::SgdDecay),
        batch_size: 16,
        run: RunConfig::epochs(1),
    };
    let timing = TimingModel::calibrated().model;
    let single = train(SurrogateModel::new(dims, 3), &corpus, &cfg, 3).unwrap();
    let run = |mode| {
        let mut cluster = ClusterConfig::from_timing(mode, 8, &timing);
        // the toy epoch has about 1000 batches; keep warmup a small share of it
        cluster.async_warmup_iterations = 100;
        simulate_cluster(SurrogateModel::new(dims, 3), &corpus, &cfg, &cluster, 3).unwrap()
    };
    let (sync, asynch) = (run(ClusterMode::Sync), run(ClusterMode::Async));
    let ppl = |t: &mtkit::optlab::TrainingTrace| t.ppl_at(1).unwrap();
    assert!(ppl(&single) < ppl(&asynch), "single {} async {}", ppl(&single), ppl(&asynch));
    assert!(ppl(&asynch) < ppl(&sync), "async {} sync {}", ppl(&asynch), ppl(&sync));
    assert!(asynch.max_staleness > 0);
}
