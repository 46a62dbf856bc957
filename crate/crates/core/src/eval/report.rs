use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, ConfusionMatrix};
use crate::error::Result;
use crate::fed::{FederationConfig, RoundReport, ServerRun};
use crate::gaf::GafImage;
use crate::ingest::BeatLabel;
use crate::nn::save_checkpoint;
use crate::transport::CommSnapshot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub class: BeatLabel,
    /// Recall; `None` when the test set has no beats of this class.
    pub accuracy: Option<f64>,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub aborted: bool,
    pub abort_reason: Option<String>,
    pub train_time_sec: f64,
    /// Server-side counters, frame headers included.
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub comm: CommSnapshot,
    /// Final global model on the union of the training shards.
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub per_class_accuracy: Vec<ClassAccuracy>,
    pub confusion: Option<ConfusionMatrix>,
    pub config: FederationConfig,
    pub rounds: Vec<RoundReport>,
}

/// Inputs for [`RunReport::build`].
pub struct RunData<'a> {
    pub config: &'a FederationConfig,
    pub run: &'a ServerRun,
    pub comm: CommSnapshot,
    pub elapsed: Duration,
    pub train: Option<&'a [GafImage]>,
    pub test: Option<&'a [GafImage]>,
    pub abort_reason: Option<String>,
}

impl RunReport {
    /// Evaluates the final model unless the run aborted.
    pub fn build(data: RunData<'_>) -> Result<Self> {
        let aborted = data.abort_reason.is_some();
        let spec = &data.config.model;
        let (mut train_accuracy, mut test_accuracy, mut confusion) = (None, None, None);
        if !aborted {
            if let Some(train) = data.train.filter(|t| !t.is_empty()) {
                train_accuracy = Some(evaluate(&data.run.params, spec, train)?.1);
            }
            if let Some(test) = data.test {
                let (m, acc) = evaluate(&data.run.params, spec, test)?;
                test_accuracy = Some(acc);
                confusion = Some(m);
            }
        }
        let per_class_accuracy = match &confusion {
            Some(m) => BeatLabel::ALL
                .iter()
                .zip(m.per_class_accuracy())
                .map(|(&class, accuracy)| ClassAccuracy { class, accuracy, support: m.row_sum(class.index()) })
                .collect(),
            None => Vec::new(),
        };
        Ok(Self {
            aborted,
            abort_reason: data.abort_reason,
            train_time_sec: data.elapsed.as_secs_f64(),
            bytes_sent: data.comm.bytes_sent,
            bytes_received: data.comm.bytes_received,
            comm: data.comm,
            train_accuracy,
            test_accuracy,
            per_class_accuracy,
            confusion,
            config: data.config.clone(),
            rounds: data.run.rounds.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_markdown(&self) -> String {
        let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{:.2}%", 100.0 * v));
        let mut s = String::new();
        let status = if self.aborted { "aborted" } else { "completed" };
        let _ = writeln!(s, "# Federated run report\n");
        let _ = writeln!(s, "Status: {status}");
        if let Some(r) = &self.abort_reason {
            let _ = writeln!(s, "Reason: {r}");
        }
        let _ = writeln!(
            s,
            "Clients: {} | rounds: {} | local epochs: {} | aggregation: {}\n",
            self.config.clients.iter().map(|c| c.id.as_str()).collect::<Vec<_>>().join(", "),
            self.config.rounds,
            self.config.local_epochs,
            self.config.aggregation
        );
        let _ = writeln!(s, "| Metric | Value |\n|---|---|");
        let _ = writeln!(s, "| Train Accuracy | {} |", pct(self.train_accuracy));
        let _ = writeln!(s, "| Test Accuracy | {} |", pct(self.test_accuracy));
        let _ = writeln!(s, "| Training Time | {:.2} s |", self.train_time_sec);
        let _ = writeln!(s, "| Total Send Size | {} bytes |", self.bytes_sent);
        let _ = writeln!(s, "| Total Receive Size | {} bytes |", self.bytes_received);
        if !self.per_class_accuracy.is_empty() {
            let names: Vec<&str> = self.per_class_accuracy.iter().map(|c| c.class.as_str()).collect();
            let values: Vec<String> = self.per_class_accuracy.iter().map(|c| pct(c.accuracy)).collect();
            let _ = writeln!(s, "| Accuracy by Class ({}) | {} |", names.join(", "), values.join(", "));
        }
        if !self.rounds.is_empty() {
            let _ = writeln!(s, "\n## Rounds\n\n| Round | Client | Samples | Loss | Accuracy | Test Accuracy | Sent | Received |");
            let _ = writeln!(s, "|---|---|---|---|---|---|---|---|");
            for r in &self.rounds {
                for c in &r.clients {
                    let _ = writeln!(
                        s,
                        "| {} | {} | {} | {:.4} | {} | {} | {} | {} |",
                        r.round,
                        c.client_id,
                        c.sample_count,
                        c.mean_loss,
                        pct(Some(f64::from(c.accuracy))),
                        pct(r.test_accuracy),
                        r.bytes_sent,
                        r.bytes_received
                    );
                }
            }
        }
        s
    }

    /// One JSON object per round.
    pub fn rounds_log(&self) -> String {
        self.rounds.iter().map(|r| serde_json::to_string(r).expect("round serializes") + "\n").collect()
    }

    /// Writes `config.json`, `report.json`, `report.md` and `rounds.log`
    /// into `dir`, plus `model_final.bin` for completed runs.
    pub fn write_run_dir(&self, dir: &Path, run: &ServerRun) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.json"), self.config.to_json() + "\n")?;
        fs::write(dir.join("report.json"), self.to_json())?;
        fs::write(dir.join("report.md"), self.to_markdown())?;
        fs::write(dir.join("rounds.log"), self.rounds_log())?;
        if !self.aborted {
            save_checkpoint(&dir.join("model_final.bin"), &self.config.model, &run.params)?;
        }
        Ok(())
    }
}
