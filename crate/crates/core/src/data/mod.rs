//! On-disk formats and the synthetic data generator.

mod dataset;
mod model_file;
mod report;
mod synth;

pub use dataset::{load_dataset, read_dataset, save_dataset, write_dataset, DATASET_HEADER_PREFIX};
pub use model_file::{load_model, model_from_json, model_to_json, save_model, ModelFile};
pub use report::{write_predictions, write_report, ReportRow, PREDICTION_COLUMNS, REPORT_COLUMNS};
pub use synth::{generate_synthetic, load_spec, SyntheticSpec};

use std::path::Path;

use crate::error::MilError;

pub(crate) fn io_error(component: &'static str, path: &Path, err: std::io::Error) -> MilError {
    MilError::Io {
        component,
        source: std::io::Error::new(err.kind(), format!("{}: {}", path.display(), err)),
    }
}
