use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{MilError, Result};

/// Squared-exponential kernel hyperparameters plus the diagonal jitter used
/// whenever a Gram matrix is factorized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub variance: f64,
    pub lengthscale: f64,
    pub jitter: f64,
}

impl KernelConfig {
    pub fn new(variance: f64, lengthscale: f64, jitter: f64) -> Result<Self> {
        let cfg = Self {
            variance,
            lengthscale,
            jitter,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Unit variance, lengthscale `sqrt(dim)` and jitter `1e-6 * variance`.
    pub fn for_dim(dim: usize) -> Self {
        Self {
            variance: 1.0,
            lengthscale: (dim.max(1) as f64).sqrt(),
            jitter: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.variance) || !ok(self.lengthscale) || !ok(self.jitter) {
            return Err(MilError::input(
                "kernel",
                format!(
                    "variance, lengthscale and jitter must be positive (got {}, {}, {})",
                    self.variance, self.lengthscale, self.jitter
                ),
            ));
        }
        Ok(())
    }
}

/// `variance * exp(-|x - y|^2 / (2 lengthscale^2))`.
pub fn se_kernel(x: &[f64], y: &[f64], cfg: &KernelConfig) -> Result<f64> {
    if x.len() != y.len() {
        return Err(MilError::input(
            "kernel",
            format!("dimension mismatch: {} vs {}", x.len(), y.len()),
        ));
    }
    Ok(se_unchecked(x, y, cfg))
}

#[inline]
fn se_unchecked(x: &[f64], y: &[f64], cfg: &KernelConfig) -> f64 {
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    cfg.variance * (-sq / (2.0 * cfg.lengthscale * cfg.lengthscale)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramRole {
    /// Only the diagonal `k(x_i, x_i)` is ever needed for training inputs.
    DiagOnly,
    Cross,
    Inducing,
}

#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub values: DMatrix<f64>,
    pub role: GramRole,
}

impl GramMatrix {
    pub fn cross(a: &DMatrix<f64>, b: &DMatrix<f64>, cfg: &KernelConfig) -> Result<Self> {
        Ok(Self {
            values: gram(a, b, cfg)?,
            role: GramRole::Cross,
        })
    }

    pub fn inducing(z: &DMatrix<f64>, cfg: &KernelConfig) -> Result<Self> {
        Ok(Self {
            values: gram(z, z, cfg)?,
            role: GramRole::Inducing,
        })
    }

    /// Column vector of `k(x_i, x_i)`, which for this kernel is the variance.
    pub fn diag(x: &DMatrix<f64>, cfg: &KernelConfig) -> Self {
        Self {
            values: DMatrix::from_element(x.nrows(), 1, cfg.variance),
            role: GramRole::DiagOnly,
        }
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Dense kernel matrix between the rows of `a` and the rows of `b`.
///
/// Each entry is evaluated independently with a fixed summation order, so
/// `gram(a, a)` is exactly symmetric.
pub fn gram(a: &DMatrix<f64>, b: &DMatrix<f64>, cfg: &KernelConfig) -> Result<DMatrix<f64>> {
    if a.ncols() != b.ncols() {
        return Err(MilError::input(
            "kernel",
            format!("dimension mismatch: {} vs {}", a.ncols(), b.ncols()),
        ));
    }
    let ra = rows_of(a);
    let rb = rows_of(b);
    Ok(DMatrix::from_fn(ra.len(), rb.len(), |i, j| {
        se_unchecked(&ra[i], &rb[j], cfg)
    }))
}
