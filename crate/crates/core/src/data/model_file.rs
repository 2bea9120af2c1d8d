use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{MilError, Result};
use crate::linalg::KernelConfig;
use crate::vi::{FitDiagnostics, TrainedModel, MODEL_FORMAT_VERSION};

use super::io_error;

const COMPONENT: &str = "model-file";

/// Serialized form of a trained model. Matrices are stored row by row.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub kernel: KernelConfig,
    pub lambda: f64,
    pub contiguity: String,
    pub n_inducing: usize,
    pub seed: u64,
    pub inducing: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub diagnostics: FitDiagnostics,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(name: &str, rows: &[Vec<f64>], ncols: Option<usize>) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let c = ncols.unwrap_or_else(|| rows.first().map_or(0, Vec::len));
    if rows.iter().any(|r| r.len() != c) {
        return Err(MilError::input(COMPONENT, format!("{name}: ragged matrix")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(n, c, &flat))
}

impl From<&TrainedModel> for ModelFile {
    fn from(m: &TrainedModel) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            kernel: m.kernel,
            lambda: m.lambda,
            contiguity: m.contiguity.clone(),
            n_inducing: m.n_inducing(),
            seed: m.seed,
            inducing: rows(&m.inducing),
            mean: m.mean.iter().copied().collect(),
            cov: rows(&m.cov),
            diagnostics: m.diagnostics.clone(),
        }
    }
}

impl ModelFile {
    pub fn into_model(self) -> Result<TrainedModel> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(MilError::input(
                COMPONENT,
                format!(
                    "unsupported format version {} (expected {})",
                    self.format_version, MODEL_FORMAT_VERSION
                ),
            ));
        }
        self.kernel.validate()?;
        let m = self.n_inducing;
        if m == 0 || self.inducing.len() != m || self.mean.len() != m || self.cov.len() != m {
            return Err(MilError::input(COMPONENT, "inducing, mean and covariance sizes disagree"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(MilError::input(COMPONENT, "λ must be finite and non-negative"));
        }
        let inducing = matrix("inducing", &self.inducing, None)?;
        if inducing.ncols() == 0 {
            return Err(MilError::input(COMPONENT, "inducing points have no features"));
        }
        let cov = matrix("cov", &self.cov, Some(m))?;
        Ok(TrainedModel {
            kernel: self.kernel,
            lambda: self.lambda,
            contiguity: self.contiguity,
            inducing,
            mean: DVector::from_vec(self.mean),
            cov,
            seed: self.seed,
            diagnostics: self.diagnostics,
        })
    }
}

pub fn model_to_json(model: &TrainedModel) -> Result<String> {
    serde_json::to_string_pretty(&ModelFile::from(model))
        .map_err(|e| MilError::numerical(COMPONENT, format!("cannot serialize model: {e}")))
}

pub fn model_from_json(text: &str) -> Result<TrainedModel> {
    let file: ModelFile = serde_json::from_str(text)
        .map_err(|e| MilError::input(COMPONENT, format!("malformed model file: {e}")))?;
    file.into_model()
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = model_to_json(model)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_error(COMPONENT, path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| io_error(COMPONENT, path, e))?;
    model_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> TrainedModel {
        TrainedModel {
            kernel: KernelConfig::new(1.0, 0.1f64.sqrt(), 1e-6).unwrap(),
            lambda: 0.1,
            contiguity: "4-neighbor".into(),
            inducing: DMatrix::from_row_slice(2, 3, &[0.1, 0.2, 1.0 / 3.0, -4.0, 5e-310, 6.0]),
            mean: DVector::from_vec(vec![std::f64::consts::PI, -1e-17]),
            cov: DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]),
            seed: u64::MAX,
            diagnostics: FitDiagnostics {
                mean_change: vec![0.5, 0.25],
                expectation_change: vec![1.0, 0.1],
                flagged_bags: vec!["b".into()],
            },
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let m = model();
        let back = model_from_json(&model_to_json(&m).unwrap()).unwrap();
        assert_eq!(m, back);
        assert_eq!(model_to_json(&back).unwrap(), model_to_json(&m).unwrap());
    }

    #[test]
    fn rejects_wrong_version_and_shapes() {
        let mut f = ModelFile::from(&model());
        f.format_version = 99;
        assert!(f.into_model().unwrap_err().to_string().contains("version"));
        let mut f = ModelFile::from(&model());
        f.cov.pop();
        assert!(f.into_model().is_err());
        assert!(model_from_json("{}").unwrap_err().is_input());
    }
}
