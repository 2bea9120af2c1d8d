use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{MilError, Result};
use crate::linalg::rng_stream;

pub const MIN_ORACLE_SAMPLES: usize = 10_000;
const MIN_ACCEPTANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `(−∞, 0)^d`
    NegativeOrthant,
    /// Everything outside the negative orthant.
    Complement,
}

/// Rejection-sampling estimates with their standard errors.
#[derive(Debug, Clone)]
pub struct OracleEstimate {
    pub prob: f64,
    pub prob_se: f64,
    pub expectation: DVector<f64>,
    pub expectation_se: DVector<f64>,
    pub accepted: usize,
}

/// Brute-force probability and conditional mean of `N(mean, cov)` restricted
/// to `region`.
pub fn mc_trunc_oracle(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    region: Region,
    samples: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    let d = mean.len();
    if samples < MIN_ORACLE_SAMPLES {
        return Err(MilError::input(
            "oracle",
            format!("need at least {MIN_ORACLE_SAMPLES} samples, got {samples}"),
        ));
    }
    if d == 0 || cov.nrows() != d || cov.ncols() != d {
        return Err(MilError::input("oracle", "mean/covariance shape mismatch"));
    }
    let l = Cholesky::new(cov.clone())
        .ok_or_else(|| MilError::numerical("oracle", "covariance is not positive definite"))?
        .l();
    let mut rng = rng_stream(seed, 0x6f72_636c);
    let mut z = vec![0.0; d];
    let mut x = vec![0.0; d];
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    let mut accepted = 0usize;
    for _ in 0..samples {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let mut all_negative = true;
        for i in 0..d {
            x[i] = mean[i] + (0..=i).map(|k| l[(i, k)] * z[k]).sum::<f64>();
            all_negative &= x[i] < 0.0;
        }
        let keep = match region {
            Region::NegativeOrthant => all_negative,
            Region::Complement => !all_negative,
        };
        if keep {
            accepted += 1;
            for i in 0..d {
                sum[i] += x[i];
                sum_sq[i] += x[i] * x[i];
            }
        }
    }
    let prob = accepted as f64 / samples as f64;
    if prob < MIN_ACCEPTANCE || accepted < 2 {
        return Err(MilError::input(
            "oracle",
            format!("acceptance rate {prob:e} too low: oracle infeasible for this region"),
        ));
    }
    let n = accepted as f64;
    let expectation = DVector::from_fn(d, |i, _| sum[i] / n);
    let expectation_se = DVector::from_fn(d, |i, _| {
        let m = sum[i] / n;
        let var = (sum_sq[i] / n - m * m).max(0.0) * n / (n - 1.0);
        (var / n).sqrt()
    });
    Ok(OracleEstimate {
        prob,
        prob_se: (prob * (1.0 - prob) / samples as f64).sqrt(),
        expectation,
        expectation_se,
        accepted,
    })
}
