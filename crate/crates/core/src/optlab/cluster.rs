use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::Params;
use super::timing::{TimingModel, DEFAULT_WARMUP};
use super::trace::{Checkpoint, TraceRow, TrainingTrace};
use super::OptimError;
use crate::rng::{stream_rng, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterMode {
    Sync,
    Async,
}

impl fmt::Display for ClusterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sync => "sync",
            Self::Async => "async",
        })
    }
}

impl FromStr for ClusterMode {
    type Err = OptimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sync" => Ok(Self::Sync),
            "async" => Ok(Self::Async),
            other => Err(OptimError::Config(format!("unknown cluster mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub workers: usize,
    pub mode: ClusterMode,
    pub per_batch_compute_time: f64,
    pub sync_overhead_per_batch: f64,
    pub async_comm_time: f64,
    pub async_warmup_iterations: u64,
    /// One worker holds the master copy and does not train.
    pub async_master_reserved: bool,
    /// Relative spread of per-batch compute time; 0 for a fixed cost.
    pub compute_jitter: f64,
}

impl ClusterConfig {
    pub fn single() -> Self {
        Self::from_timing(ClusterMode::Sync, 1, &TimingModel::calibrated().model)
    }

    pub fn from_timing(mode: ClusterMode, workers: usize, timing: &TimingModel) -> Self {
        Self {
            workers,
            mode,
            per_batch_compute_time: timing.compute_per_batch,
            sync_overhead_per_batch: timing.sync_overhead(workers),
            async_comm_time: timing.async_comm,
            async_warmup_iterations: DEFAULT_WARMUP,
            async_master_reserved: true,
            compute_jitter: 0.0,
        }
    }

    pub fn trainers(&self) -> usize {
        match self.mode {
            ClusterMode::Async if self.async_master_reserved => self.workers.saturating_sub(1),
            _ => self.workers,
        }
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        if self.workers == 0 {
            return Err(OptimError::Config("at least one worker is required".into()));
        }
        if self.mode == ClusterMode::Async && self.trainers() == 0 {
            return Err(OptimError::Config(
                "async mode needs a worker besides the master copy".into(),
            ));
        }
        let times = [
            self.per_batch_compute_time,
            self.sync_overhead_per_batch,
            self.async_comm_time,
            self.compute_jitter,
        ];
        if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(OptimError::Config("times must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Stopping and evaluation schedule of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub epochs: usize,
    /// Stop after this many batches even mid-epoch.
    pub max_iterations: Option<u64>,
    /// Evaluate every this many batches.
    pub eval_every: Option<u64>,
    /// Score next-token BLEU every this many epochs.
    pub bleu_every: Option<usize>,
    pub record_params: bool,
}

impl RunConfig {
    pub fn epochs(epochs: usize) -> Self {
        Self {
            epochs,
            max_iterations: None,
            eval_every: None,
            bleu_every: None,
            record_params: false,
        }
    }
}

/// What the simulated workers compute; the simulator only orders events.
pub trait Workload {
    type Snapshot;
    type Grad;

    fn batches_per_epoch(&self) -> usize;
    /// Copy of the master parameters as a worker would pull them.
    fn pull(&self) -> Self::Snapshot;
    fn gradient(&self, at: &Self::Snapshot, epoch: usize, batch: usize) -> Result<Self::Grad, OptimError>;
    /// Mean of gradients, accumulated in the order given.
    fn mean(&self, grads: Vec<Self::Grad>) -> Self::Grad;
    fn apply(&mut self, grad: &Self::Grad) -> Result<(), OptimError>;
    fn lr(&self) -> f64;
    fn evaluate(&self) -> Option<f64>;
    fn bleu(&self) -> Option<f64> {
        None
    }
    fn end_of_epoch(&mut self, epoch: usize, val_ppl: Option<f64>);
    fn params(&self) -> Option<Params> {
        None
    }
}

/// Timing-only workload with no model behind it.
pub struct NullWorkload {
    pub batches_per_epoch: usize,
}

impl Workload for NullWorkload {
    type Snapshot = ();
    type Grad = ();

    fn batches_per_epoch(&self) -> usize {
        self.batches_per_epoch
    }
    fn pull(&self) {}
    fn gradient(&self, _: &(), _: usize, _: usize) -> Result<(), OptimError> {
        Ok(())
    }
    fn mean(&self, _: Vec<()>) {}
    fn apply(&mut self, _: &()) -> Result<(), OptimError> {
        Ok(())
    }
    fn lr(&self) -> f64 {
        0.0
    }
    fn evaluate(&self) -> Option<f64> {
        None
    }
    fn end_of_epoch(&mut self, _: usize, _: Option<f64>) {}
}

const DIVERGENCE_PPL: f64 = 1e6;

struct Recorder<'a, W: Workload> {
    workload: &'a mut W,
    run: RunConfig,
    trace: TrainingTrace,
    clock: f64,
    iterations: u64,
    epoch_lr: f64,
    stop: bool,
}

impl<W: Workload> Recorder<'_, W> {
    /// Book-keeping after `count` batches were applied.
    fn advance(&mut self, count: u64) {
        let before = self.iterations;
        self.iterations += count;
        if let Some(every) = self.run.eval_every.filter(|&e| e > 0) {
            if self.iterations / every > before / every {
                let val_ppl = self.workload.evaluate();
                self.check(val_ppl);
                self.trace.checkpoints.push(Checkpoint {
                    iterations: self.iterations,
                    sim_seconds: self.clock,
                    val_ppl,
                });
            }
        }
        if self.run.max_iterations.is_some_and(|m| self.iterations >= m) {
            self.stop = true;
        }
    }

    fn check(&mut self, val_ppl: Option<f64>) {
        if let Some(p) = val_ppl {
            if !p.is_finite() || p > DIVERGENCE_PPL {
                self.trace.divergent = true;
                self.stop = true;
            }
        }
    }

    fn end_epoch(&mut self, epoch: usize) {
        let val_ppl = self.workload.evaluate();
        let bleu = match self.run.bleu_every {
            Some(every) if every > 0 && epoch % every == 0 => self.workload.bleu(),
            _ => None,
        };
        self.trace.rows.push(TraceRow {
            epoch,
            iterations: self.iterations,
            sim_seconds: self.clock,
            val_ppl,
            lr: self.epoch_lr,
            bleu,
        });
        if self.run.record_params {
            if let Some(p) = self.workload.params() {
                self.trace.snapshots.push(p);
            }
        }
        self.check(val_ppl);
        self.workload.end_of_epoch(epoch, val_ppl);
        self.epoch_lr = self.workload.lr();
        if epoch >= self.run.epochs {
            self.stop = true;
        }
    }
}

fn compute_time(config: &ClusterConfig, jitter: &mut StreamRng) -> f64 {
    if config.compute_jitter > 0.0 {
        let u: f64 = jitter.gen_range(-1.0..=1.0);
        config.per_batch_compute_time * (1.0 + config.compute_jitter * u)
    } else {
        config.per_batch_compute_time
    }
}

/// Runs the discrete-event simulation; deterministic for a given seed.
pub fn simulate<W: Workload>(
    workload: &mut W,
    cluster: &ClusterConfig,
    run: &RunConfig,
    seed: u64,
) -> Result<TrainingTrace, OptimError> {
    cluster.validate()?;
    if workload.batches_per_epoch() == 0 {
        return Err(OptimError::Config("training data yields no batches".into()));
    }
    let initial_ppl = workload.evaluate();
    let epoch_lr = workload.lr();
    let mut rec = Recorder {
        workload,
        run: *run,
        trace: TrainingTrace {
            initial_ppl,
            ..Default::default()
        },
        clock: 0.0,
        iterations: 0,
        epoch_lr,
        stop: run.epochs == 0,
    };
    let mut jitter = stream_rng(seed, "optlab.jitter");
    match cluster.mode {
        ClusterMode::Sync => run_sync(&mut rec, cluster, &mut jitter)?,
        ClusterMode::Async => run_async(&mut rec, cluster, &mut jitter)?,
    }
    let mut trace = rec.trace;
    trace.final_params = rec.workload.params();
    Ok(trace)
}

fn run_sync<W: Workload>(
    rec: &mut Recorder<'_, W>,
    cluster: &ClusterConfig,
    jitter: &mut StreamRng,
) -> Result<(), OptimError> {
    let nb = rec.workload.batches_per_epoch();
    let k = cluster.workers;
    let mut epoch = 1;
    while !rec.stop {
        let mut index = 0;
        while index < nb && !rec.stop {
            let group = k.min(nb - index);
            let snapshot = rec.workload.pull();
            let mut grads = Vec::with_capacity(group);
            let mut slowest: f64 = 0.0;
            for j in 0..group {
                grads.push(rec.workload.gradient(&snapshot, epoch, index + j)?);
                slowest = slowest.max(compute_time(cluster, jitter));
            }
            let mean = rec.workload.mean(grads);
            rec.workload.apply(&mean)?;
            rec.clock += slowest + cluster.sync_overhead_per_batch;
            index += group;
            rec.advance(group as u64);
        }
        if index == nb {
            rec.end_epoch(epoch);
        }
        epoch += 1;
    }
    Ok(())
}

#[derive(Debug, PartialEq)]
struct Event {
    time: f64,
    worker: usize,
}

impl Eq for Event {}

impl Ord for Event {
    // reversed: BinaryHeap pops the earliest time, then the lowest worker id
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.worker.cmp(&self.worker))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct InFlight<S> {
    snapshot: S,
    version: u64,
    epoch: usize,
    batch: usize,
}

fn run_async<W: Workload>(
    rec: &mut Recorder<'_, W>,
    cluster: &ClusterConfig,
    jitter: &mut StreamRng,
) -> Result<(), OptimError> {
    let nb = rec.workload.batches_per_epoch() as u64;
    let total = rec.run.epochs as u64 * nb;
    let budget = rec.run.max_iterations.map_or(total, |m| m.min(total));
    let mut assigned: u64 = 0;
    let mut version: u64 = 0;
    let position = |n: u64| ((n / nb) as usize + 1, (n % nb) as usize);

    let finish_push = |rec: &mut Recorder<'_, W>, version: u64| {
        rec.advance(1);
        if version % nb == 0 {
            rec.end_epoch((version / nb) as usize);
        }
    };

    // warm-up: a single trainer runs alone
    let warmup = cluster.async_warmup_iterations.min(budget);
    while assigned < warmup && !rec.stop {
        let (epoch, batch) = position(assigned);
        assigned += 1;
        let snapshot = rec.workload.pull();
        let grad = rec.workload.gradient(&snapshot, epoch, batch)?;
        rec.workload.apply(&grad)?;
        version += 1;
        rec.clock += compute_time(cluster, jitter) + cluster.async_comm_time;
        finish_push(rec, version);
    }

    let mut queue = BinaryHeap::new();
    let mut slots: Vec<Option<InFlight<W::Snapshot>>> = (0..cluster.trainers()).map(|_| None).collect();
    for worker in 0..slots.len() {
        if assigned >= budget || rec.stop {
            break;
        }
        let (epoch, batch) = position(assigned);
        assigned += 1;
        slots[worker] = Some(InFlight {
            snapshot: rec.workload.pull(),
            version,
            epoch,
            batch,
        });
        let done = rec.clock + compute_time(cluster, jitter) + cluster.async_comm_time;
        queue.push(Event { time: done, worker });
    }
    while let Some(Event { time, worker }) = queue.pop() {
        if rec.stop {
            break;
        }
        let job = slots[worker].take().expect("worker has a job in flight");
        let grad = rec.workload.gradient(&job.snapshot, job.epoch, job.batch)?;
        rec.workload.apply(&grad)?;
        rec.trace.max_staleness = rec.trace.max_staleness.max(version - job.version);
        version += 1;
        rec.clock = time;
        finish_push(rec, version);
        if assigned < budget && !rec.stop {
            let (epoch, batch) = position(assigned);
            assigned += 1;
            slots[worker] = Some(InFlight {
                snapshot: rec.workload.pull(),
                version,
                epoch,
                batch,
            });
            let done = time + compute_time(cluster, jitter) + cluster.async_comm_time;
            queue.push(Event { time: done, worker });
        }
    }
    Ok(())
}

/// Simulated first-epoch time of a timing-only run.
pub fn simulate_epoch_time(cluster: &ClusterConfig, iterations_per_epoch: usize) -> Result<f64, OptimError> {
    let mut workload = NullWorkload {
        batches_per_epoch: iterations_per_epoch,
    };
    let trace = simulate(&mut workload, cluster, &RunConfig::epochs(1), 0)?;
    Ok(trace.rows.first().map_or(0.0, |r| r.sim_seconds))
}

#[cfg(test)]
mod tests {
    use super::super::timing::{REFERENCE_CLUSTER_TIMES, REFERENCE_ITERATIONS, REFERENCE_SINGLE_EPOCH};
    use super::*;

    #[test]
    fn async_needs_two_workers() {
        let mut c = ClusterConfig::single();
        c.mode = ClusterMode::Async;
        assert!(c.validate().is_err());
        c.workers = 2;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn single_worker_epoch_is_calibrated() {
        let t = simulate_epoch_time(&ClusterConfig::single(), REFERENCE_ITERATIONS as usize).unwrap();
        assert!((t - REFERENCE_SINGLE_EPOCH).abs() < 1e-3, "{t}");
    }

    #[test]
    fn simulated_times_match_closed_form() {
        let fit = TimingModel::calibrated();
        let n = 100_000;
        for (k, _, _) in REFERENCE_CLUSTER_TIMES {
            for mode in [ClusterMode::Sync, ClusterMode::Async] {
                let cluster = ClusterConfig::from_timing(mode, k, &fit.model);
                let sim = simulate_epoch_time(&cluster, n).unwrap();
                let closed = fit.model.predict_epoch(mode, k, n as u64, DEFAULT_WARMUP);
                assert!((sim - closed).abs() / closed < 1e-3, "{mode} K={k}: {sim} vs {closed}");
            }
        }
    }

    #[test]
    fn staleness_is_bounded() {
        let fit = TimingModel::calibrated();
        for k in [2, 3, 5, 8] {
            let mut cluster = ClusterConfig::from_timing(ClusterMode::Async, k, &fit.model);
            cluster.async_warmup_iterations = 10;
            let mut w = NullWorkload { batches_per_epoch: 500 };
            let trace = simulate(&mut w, &cluster, &RunConfig::epochs(2), 0).unwrap();
            assert_eq!(trace.max_staleness, k as u64 - 2);
            assert_eq!(trace.rows.len(), 2);
            assert_eq!(trace.rows[1].iterations, 1000);
        }
    }

    #[test]
    fn event_order_breaks_ties_by_worker() {
        let mut heap = BinaryHeap::new();
        heap.push(Event { time: 1.0, worker: 2 });
        heap.push(Event { time: 1.0, worker: 0 });
        heap.push(Event { time: 0.5, worker: 3 });
        let order: Vec<usize> = std::iter::from_fn(|| heap.pop()).map(|e| e.worker).collect();
        assert_eq!(order, vec![3, 0, 2]);
    }
}
