use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::descriptors::DescriptorId;
use crate::ensemble::EnsembleWeights;
use crate::error::{Error, Result};

pub const COMBINE: &str = "combine";

/// Accuracy figures of one prediction column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScores {
    pub name: String,
    pub accuracy: f64,
    pub mean_class_accuracy: f64,
    pub per_class_accuracy: Vec<f64>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

impl ColumnScores {
    pub fn from_predictions(name: &str, truth: &[usize], predicted: &[usize], m: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Dimension(format!(
                "{} predictions for {} labels",
                predicted.len(),
                truth.len()
            )));
        }
        let mut confusion = vec![vec![0usize; m]; m];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= m || p >= m {
                return Err(Error::Dimension(format!("class index outside 0..{m}")));
            }
            confusion[t][p] += 1;
        }
        let correct: usize = (0..m).map(|k| confusion[k][k]).sum();
        let accuracy = if truth.is_empty() {
            0.0
        } else {
            correct as f64 / truth.len() as f64
        };
        let per_class_accuracy: Vec<f64> = confusion
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let total: usize = row.iter().sum();
                if total == 0 {
                    0.0
                } else {
                    row[k] as f64 / total as f64
                }
            })
            .collect();
        let mean_class_accuracy = per_class_accuracy.iter().sum::<f64>() / m as f64;
        Ok(Self {
            name: name.to_string(),
            accuracy,
            mean_class_accuracy,
            per_class_accuracy,
            confusion,
        })
    }
}

/// Test-set evaluation of every single-descriptor classifier and the fused ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub class_names: Vec<String>,
    pub test_counts: Vec<usize>,
    /// Ensemble accuracy over all test images.
    pub accuracy: f64,
    pub mean_class_accuracy: f64,
    pub per_class_accuracy: Vec<f64>,
    pub confusion: Vec<Vec<usize>>,
    pub descriptors: Vec<ColumnScores>,
    pub weights: EnsembleWeights,
}

impl EvaluationReport {
    pub fn new(
        class_names: Vec<String>,
        descriptors: Vec<ColumnScores>,
        combined: ColumnScores,
        weights: EnsembleWeights,
    ) -> Self {
        let test_counts = combined.confusion.iter().map(|row| row.iter().sum()).collect();
        Self {
            class_names,
            test_counts,
            accuracy: combined.accuracy,
            mean_class_accuracy: combined.mean_class_accuracy,
            per_class_accuracy: combined.per_class_accuracy,
            confusion: combined.confusion,
            descriptors,
            weights,
        }
    }

    pub fn descriptor_accuracy(&self, d: DescriptorId) -> Option<f64> {
        self.descriptors
            .iter()
            .find(|c| c.name == d.as_str())
            .map(|c| c.accuracy)
    }

    pub fn best_single_accuracy(&self) -> f64 {
        self.descriptors.iter().map(|c| c.accuracy).fold(0.0, f64::max)
    }

    /// Per-class accuracies in percent, one column per descriptor plus the ensemble.
    pub fn to_table(&self) -> String {
        let mut headers: Vec<String> = self.descriptors.iter().map(|c| column_title(&c.name)).collect();
        headers.push(column_title(COMBINE));
        let name_width = self
            .class_names
            .iter()
            .map(String::len)
            .chain(["Mean per class".len()])
            .max()
            .unwrap_or(0);
        let col_width = headers.iter().map(String::len).max().unwrap_or(0).max(7);

        let mut out = String::new();
        let _ = write!(out, "{:<name_width$}", "Class");
        for h in &headers {
            let _ = write!(out, "  {h:>col_width$}");
        }
        out.push('\n');
        let mut row = |label: &str, values: Vec<f64>| {
            let _ = write!(out, "{label:<name_width$}");
            for v in values {
                let _ = write!(out, "  {:>col_width$.2}", 100.0 * v);
            }
            out.push('\n');
        };
        for (k, name) in self.class_names.iter().enumerate() {
            let mut values: Vec<f64> = self.descriptors.iter().map(|c| c.per_class_accuracy[k]).collect();
            values.push(self.per_class_accuracy[k]);
            row(name, values);
        }
        let mut overall: Vec<f64> = self.descriptors.iter().map(|c| c.accuracy).collect();
        overall.push(self.accuracy);
        row("Overall", overall);
        let mut mean: Vec<f64> = self.descriptors.iter().map(|c| c.mean_class_accuracy).collect();
        mean.push(self.mean_class_accuracy);
        row("Mean per class", mean);

        out.push_str("\nWeights:");
        for (id, w) in self.weights.classifiers.iter().zip(&self.weights.w) {
            let _ = write!(out, " {}={w:.4}", column_title(id));
        }
        out.push('\n');
        out
    }
}

fn column_title(name: &str) -> String {
    match name.parse::<DescriptorId>() {
        Ok(DescriptorId::Sift) => "SIFT".into(),
        Ok(DescriptorId::Gist) => "Gist".into(),
        Ok(DescriptorId::Centrist) => "Centrist".into(),
        Ok(DescriptorId::Gabor) => "Gabor".into(),
        Err(_) if name == COMBINE => "Combine".into(),
        Err(_) => name.to_string(),
    }
}
