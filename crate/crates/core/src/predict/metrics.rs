use serde::Serialize;

use crate::bag::MilDataset;
use crate::error::{MilError, Result};
use crate::vi::TrainedModel;

use super::{BagPrediction, PredictOptions, Predictor};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn add(&mut self, truth: bool, predicted: bool) {
        match (truth, predicted) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Accuracy, precision, recall and F1 for one level. Precision or recall
/// with a zero denominator is reported as 0 and flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelMetrics {
    pub confusion: Confusion,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

impl LevelMetrics {
    pub fn from_confusion(c: Confusion) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                (0.0, true)
            } else {
                (num as f64 / den as f64, false)
            }
        };
        let (accuracy, _) = ratio(c.tp + c.tn, c.total());
        let (precision, precision_undefined) = ratio(c.tp, c.tp + c.fp);
        let (recall, recall_undefined) = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            confusion: c,
            accuracy,
            precision,
            recall,
            f1,
            precision_undefined,
            recall_undefined,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    /// `None` when the dataset carries no instance ground truth.
    pub instance: Option<LevelMetrics>,
    /// `None` when bag probabilities were not computed.
    pub bag: Option<LevelMetrics>,
    /// Mean over bags of the population standard deviation of the bag's
    /// instance probabilities.
    pub variability: f64,
}

fn population_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Thresholds predictions (`p ≥ threshold` is positive) and scores them
/// against the dataset's labels. Predictions are matched to bags by id.
pub fn metrics_from_predictions(
    dataset: &MilDataset,
    predictions: &[BagPrediction],
    threshold: f64,
) -> Result<MetricsReport> {
    let mut inst = Confusion::default();
    let mut bag = Confusion::default();
    let mut any_instance_truth = false;
    let mut bag_level = true;
    let mut spread = 0.0;
    for b in &dataset.bags {
        let pred = predictions
            .iter()
            .find(|p| p.bag_id == b.id)
            .ok_or_else(|| MilError::input("metrics", format!("no prediction for bag '{}'", b.id)))?;
        if pred.instance_probs.len() != b.len() {
            return Err(MilError::input(
                "metrics",
                format!("prediction for bag '{}' has the wrong instance count", b.id),
            ));
        }
        for (truth, &p) in b.instance_labels.iter().zip(&pred.instance_probs) {
            if let Some(t) = truth {
                any_instance_truth = true;
                inst.add(*t, p >= threshold);
            }
        }
        if pred.bag_prob.is_nan() {
            bag_level = false;
        } else {
            bag.add(b.label, pred.bag_prob >= threshold);
        }
        spread += population_std(&pred.instance_probs);
    }
    Ok(MetricsReport {
        instance: any_instance_truth.then(|| LevelMetrics::from_confusion(inst)),
        bag: bag_level.then(|| LevelMetrics::from_confusion(bag)),
        variability: spread / dataset.bags.len() as f64,
    })
}

/// Predicts every bag and scores the predictions.
pub fn evaluate(
    model: &TrainedModel,
    dataset: &MilDataset,
    threshold: f64,
    opts: &PredictOptions,
) -> Result<MetricsReport> {
    let preds = Predictor::new(model)?.predict_dataset(dataset, opts)?;
    metrics_from_predictions(dataset, &preds, threshold)
}
