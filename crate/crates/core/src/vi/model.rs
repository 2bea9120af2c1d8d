use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bag::DEFAULT_CONTIGUITY;
use crate::error::{MilError, Result};
use crate::linalg::KernelConfig;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Coupling strength; zero disables coupling.
    pub lambda: f64,
    /// Requested inducing points, split evenly between the two bag classes.
    pub inducing: usize,
    pub iterations: usize,
    pub seed: u64,
    /// `None` selects unit variance, `sqrt(D)` lengthscale, `1e-6` jitter.
    pub kernel: Option<KernelConfig>,
    pub contiguity: String,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            inducing: 200,
            iterations: 200,
            seed: 0,
            kernel: None,
            contiguity: DEFAULT_CONTIGUITY.to_string(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(MilError::input(
                "vi",
                format!("λ must be finite and non-negative, got {}", self.lambda),
            ));
        }
        if self.inducing == 0 || self.inducing % 2 != 0 {
            return Err(MilError::input(
                "vi",
                format!("inducing count must be even and positive, got {}", self.inducing),
            ));
        }
        if let Some(k) = &self.kernel {
            k.validate()?;
        }
        Ok(())
    }
}

/// Per-iteration convergence traces.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// `‖μᵘ_t − μᵘ_{t−1}‖₂`, with `μᵘ_0 = 0`.
    pub mean_change: Vec<f64>,
    /// `‖E_t[m] − E_{t−1}[m]‖₂` over all instances.
    pub expectation_change: Vec<f64>,
    /// Ids of positive bags whose normalizer hit the floor at any iteration.
    pub flagged_bags: Vec<String>,
}

/// Everything prediction needs; holds no training data.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kernel: KernelConfig,
    pub lambda: f64,
    pub contiguity: String,
    /// `M × D`, one inducing location per row.
    pub inducing: DMatrix<f64>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub seed: u64,
    pub diagnostics: FitDiagnostics,
}

impl TrainedModel {
    pub fn n_inducing(&self) -> usize {
        self.inducing.nrows()
    }

    pub fn dim(&self) -> usize {
        self.inducing.ncols()
    }
}
