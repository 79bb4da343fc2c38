use serde::{Deserialize, Serialize};

use super::cluster::ClusterMode;

/// Single-worker epoch of the reference system, in seconds (6h11m).
pub const REFERENCE_SINGLE_EPOCH: f64 = 22_260.0;
/// Iterations per reference epoch.
pub const REFERENCE_ITERATIONS: u64 = 1_000_000;
pub const DEFAULT_WARMUP: u64 = 6_000;

/// Reference per-epoch times by worker count: (K, sync seconds, async seconds).
pub const REFERENCE_CLUSTER_TIMES: [(usize, f64, f64); 4] = [
    (2, 12_660.0, 21_120.0),
    (4, 8_040.0, 7_500.0),
    (6, 5_940.0, 4_560.0),
    (8, 4_980.0, 3_360.0),
];

/// Additive cost model: compute per batch, a synchronization overhead that
/// grows linearly with the number of extra workers, and a per-push
/// communication cost for asynchronous updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingModel {
    pub compute_per_batch: f64,
    pub sync_overhead_per_extra_worker: f64,
    pub async_comm: f64,
}

impl TimingModel {
    pub fn sync_overhead(&self, workers: usize) -> f64 {
        self.sync_overhead_per_extra_worker * workers.saturating_sub(1) as f64
    }

    /// Closed-form first-epoch time for `iterations` batches.
    pub fn predict_epoch(&self, mode: ClusterMode, workers: usize, iterations: u64, warmup: u64) -> f64 {
        let n = iterations as f64;
        match mode {
            ClusterMode::Sync => {
                let steps = iterations.div_ceil(workers.max(1) as u64) as f64;
                steps * (self.compute_per_batch + self.sync_overhead(workers))
            }
            ClusterMode::Async => {
                let trainers = workers.saturating_sub(1).max(1) as f64;
                let w = warmup.min(iterations) as f64;
                (w + (n - w) / trainers) * (self.compute_per_batch + self.async_comm)
            }
        }
    }

    /// Fit against the reference table.
    pub fn calibrated() -> TimingFit {
        fit_timing_model(
            REFERENCE_SINGLE_EPOCH,
            REFERENCE_ITERATIONS,
            DEFAULT_WARMUP,
            &REFERENCE_CLUSTER_TIMES.map(|(k, s, _)| (k, s)),
            &REFERENCE_CLUSTER_TIMES.map(|(k, _, a)| (k, a)),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub mode: ClusterMode,
    pub workers: usize,
    pub target: f64,
    pub predicted: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingFit {
    pub model: TimingModel,
    pub points: Vec<FitPoint>,
    pub max_rel_error: f64,
}

/// Least-squares fit of the two overhead constants; compute time per batch
/// is pinned by the single-worker epoch. Async communication is clamped at
/// zero when the data would make it negative.
pub fn fit_timing_model(
    single_epoch: f64,
    iterations: u64,
    warmup: u64,
    sync_targets: &[(usize, f64)],
    async_targets: &[(usize, f64)],
) -> TimingFit {
    let n = iterations as f64;
    let c = single_epoch / n;

    // sync: T_K - steps*c = steps*(K-1)*beta
    let (mut num, mut den) = (0.0, 0.0);
    for &(k, t) in sync_targets {
        let steps = iterations.div_ceil(k as u64) as f64;
        let x = steps * (k as f64 - 1.0);
        num += (t - steps * c) * x;
        den += x * x;
    }
    let beta = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };

    // async: T_K = (c + a) * n_K with n_K the serialized iteration count
    let (mut num, mut den) = (0.0, 0.0);
    for &(k, t) in async_targets {
        let trainers = (k.saturating_sub(1)).max(1) as f64;
        let w = warmup.min(iterations) as f64;
        let nk = w + (n - w) / trainers;
        num += t * nk;
        den += nk * nk;
    }
    let a = if den > 0.0 { (num / den - c).max(0.0) } else { 0.0 };

    let model = TimingModel {
        compute_per_batch: c,
        sync_overhead_per_extra_worker: beta,
        async_comm: a,
    };
    let points: Vec<FitPoint> = sync_targets
        .iter()
        .map(|&(k, t)| (ClusterMode::Sync, k, t))
        .chain(async_targets.iter().map(|&(k, t)| (ClusterMode::Async, k, t)))
        .map(|(mode, workers, target)| {
            let predicted = model.predict_epoch(mode, workers, iterations, warmup);
            FitPoint {
                mode,
                workers,
                target,
                predicted,
                rel_error: (predicted - target).abs() / target,
            }
        })
        .collect();
    let max_rel_error = points.iter().map(|p| p.rel_error).fold(0.0, f64::max);
    TimingFit {
        model,
        points,
        max_rel_error,
    }
}

/// Renders seconds as `XhYYm`.
pub fn hours_minutes(seconds: f64) -> String {
    let minutes = (seconds / 60.0).round() as u64;
    format!("{}h{:02}m", minutes / 60, minutes % 60)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_fit_is_close() {
        let fit = TimingModel::calibrated();
        assert!((fit.model.compute_per_batch - 0.02226).abs() < 1e-12);
        assert!(fit.max_rel_error < 0.15, "{fit:?}");
        assert_eq!(fit.points.len(), 8);
    }

    #[test]
    fn single_worker_prediction() {
        let fit = TimingModel::calibrated();
        let t = fit.model.predict_epoch(ClusterMode::Sync, 1, REFERENCE_ITERATIONS, 0);
        assert!((t - REFERENCE_SINGLE_EPOCH).abs() < 1e-6);
    }

    #[test]
    fn formatting() {
        assert_eq!(hours_minutes(22_260.0), "6h11m");
        assert_eq!(hours_minutes(3_360.0), "0h56m");
    }
}
