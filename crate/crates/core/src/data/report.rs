use std::io::Write;

use crate::bag::MilDataset;
use crate::error::{MilError, Result};
use crate::predict::{BagPrediction, LevelMetrics, MetricsReport};

const COMPONENT: &str = "report";

/// Fixed report columns, followed by the confusion counts.
pub const REPORT_COLUMNS: [&str; 19] = [
    "lambda",
    "inst_acc",
    "inst_prec",
    "inst_rec",
    "inst_f1",
    "bag_acc",
    "bag_prec",
    "bag_rec",
    "bag_f1",
    "bag_variability",
    "train_seconds",
    "inst_tp",
    "inst_fp",
    "inst_fn",
    "inst_tn",
    "bag_tp",
    "bag_fp",
    "bag_fn",
    "bag_tn",
];

pub const PREDICTION_COLUMNS: [&str; 6] = ["bag_id", "instance_id", "row", "col", "instance_prob", "bag_prob"];

#[derive(Debug, Clone)]
pub struct ReportRow {
    pub lambda: f64,
    pub metrics: MetricsReport,
    pub train_seconds: Option<f64>,
}

fn csv_error(e: csv::Error) -> MilError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => MilError::Io { component: COMPONENT, source: io },
        other => MilError::input(COMPONENT, format!("{other:?}")),
    }
}

fn level_scores(level: Option<&LevelMetrics>) -> [String; 4] {
    match level {
        Some(m) => [m.accuracy, m.precision, m.recall, m.f1].map(|v| v.to_string()),
        None => Default::default(),
    }
}

fn level_counts(level: Option<&LevelMetrics>) -> [String; 4] {
    match level {
        Some(m) => {
            let c = m.confusion;
            [c.tp, c.fp, c.fn_, c.tn].map(|v| v.to_string())
        }
        None => Default::default(),
    }
}

/// One row per entry. Metrics that could not be computed are left empty.
pub fn write_report<W: Write>(rows: &[ReportRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REPORT_COLUMNS).map_err(csv_error)?;
    for row in rows {
        let m = &row.metrics;
        let mut fields = vec![row.lambda.to_string()];
        fields.extend(level_scores(m.instance.as_ref()));
        fields.extend(level_scores(m.bag.as_ref()));
        fields.push(m.variability.to_string());
        fields.push(row.train_seconds.map_or(String::new(), |s| format!("{s:.3}")));
        fields.extend(level_counts(m.instance.as_ref()));
        fields.extend(level_counts(m.bag.as_ref()));
        w.write_record(&fields).map_err(csv_error)?;
    }
    w.flush().map_err(|e| MilError::Io { component: COMPONENT, source: e })
}

/// One row per instance; the bag probability is repeated on each of its rows.
pub fn write_predictions<W: Write>(dataset: &MilDataset, predictions: &[BagPrediction], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PREDICTION_COLUMNS).map_err(csv_error)?;
    for (bag, pred) in dataset.bags.iter().zip(predictions) {
        if bag.id != pred.bag_id || bag.len() != pred.instance_probs.len() {
            return Err(MilError::input(COMPONENT, format!("predictions do not match bag '{}'", bag.id)));
        }
        let bag_prob = if pred.bag_prob.is_nan() { String::new() } else { pred.bag_prob.to_string() };
        for (i, p) in pred.instance_probs.iter().enumerate() {
            let (row, col) = match &bag.coords {
                Some(c) => (c[i].row.to_string(), c[i].col.to_string()),
                None => (String::new(), String::new()),
            };
            w.write_record([
                bag.id.as_str(),
                bag.instance_ids[i].as_str(),
                &row,
                &col,
                &p.to_string(),
                &bag_prob,
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush().map_err(|e| MilError::Io { component: COMPONENT, source: e })
}
