//! Accuracy metrics and run reports.

mod metrics;
mod report;

pub use metrics::{evaluate, per_class_accuracy, ConfusionMatrix};
pub use report::{ClassAccuracy, RunData, RunReport};
