use std::io::Write;

use serde::{Deserialize, Serialize};

use super::params::Params;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub epoch: usize,
    /// Batches processed so far.
    pub iterations: u64,
    pub sim_seconds: f64,
    /// Absent for timing-only runs.
    pub val_ppl: Option<f64>,
    /// Rate in effect during this epoch.
    pub lr: f64,
    pub bleu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iterations: u64,
    pub sim_seconds: f64,
    pub val_ppl: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub rows: Vec<TraceRow>,
    /// Evaluations at fixed iteration intervals, when requested.
    pub checkpoints: Vec<Checkpoint>,
    pub initial_ppl: Option<f64>,
    pub divergent: bool,
    /// Largest observed gap, in applied updates, between pull and push.
    pub max_staleness: u64,
    /// Parameters after each epoch, when recording is enabled.
    #[serde(skip)]
    pub snapshots: Vec<Params>,
    #[serde(skip)]
    pub final_params: Option<Params>,
}

impl TrainingTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn final_ppl(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.val_ppl)
    }

    pub fn ppl_at(&self, epoch: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.epoch == epoch).and_then(|r| r.val_ppl)
    }

    pub fn lrs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.lr).collect()
    }

    /// Plottable CSV; the `bleu` column appears when any row has a score.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let with_bleu = self.rows.iter().any(|r| r.bleu.is_some());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["epoch", "iterations", "sim_seconds", "val_ppl", "lr"];
        if with_bleu {
            header.push("bleu");
        }
        w.write_record(&header)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let mut record = vec![
                r.epoch.to_string(),
                r.iterations.to_string(),
                r.sim_seconds.to_string(),
                opt(r.val_ppl),
                r.lr.to_string(),
            ];
            if with_bleu {
                record.push(opt(r.bleu));
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory csv");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_columns() {
        let mut trace = TrainingTrace::default();
        trace.rows.push(TraceRow {
            epoch: 1,
            iterations: 10,
            sim_seconds: 2.5,
            val_ppl: Some(3.0),
            lr: 1.0,
            bleu: None,
        });
        assert_eq!(
            trace.to_csv_string(),
            "epoch,iterations,sim_seconds,val_ppl,lr\n1,10,2.5,3,1\n"
        );
        trace.rows[0].bleu = Some(12.5);
        assert!(trace.to_csv_string().starts_with("epoch,iterations,sim_seconds,val_ppl,lr,bleu\n"));
    }
}
