use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{MilError, Result};
use crate::linalg::rng_stream;
use crate::registry::{Named, Registry};

use super::normal;

pub const DEFAULT_ORTHANT: &str = "genz-qmc";

/// Sample budget: `points` lattice points per randomization, `shifts`
/// independent randomizations. Plain Monte Carlo draws `points * shifts`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QmcBudget {
    pub points: usize,
    pub shifts: usize,
}

impl Default for QmcBudget {
    fn default() -> Self {
        Self {
            points: 1 << 14,
            shifts: 8,
        }
    }
}

/// `P(X ∈ (−∞, 0)^d)` for `X ~ N(mean, cov)` with its estimated standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthantProb {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub prob: f64,
    pub std_error: f64,
}

pub trait OrthantEstimator: Named + Send + Sync {
    fn negative_orthant(
        &self,
        mean: &DVector<f64>,
        cov: &DMatrix<f64>,
        budget: QmcBudget,
        seed: u64,
    ) -> Result<OrthantProb>;
}

fn check_inputs(mean: &DVector<f64>, cov: &DMatrix<f64>, budget: QmcBudget) -> Result<()> {
    let d = mean.len();
    if d == 0 || cov.nrows() != d || cov.ncols() != d {
        return Err(MilError::input(
            "orthant",
            format!("mean of length {} vs covariance {}x{}", d, cov.nrows(), cov.ncols()),
        ));
    }
    if budget.points == 0 || budget.shifts < 2 {
        return Err(MilError::input(
            "orthant",
            "budget needs at least one point and two randomizations",
        ));
    }
    if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
        return Err(MilError::numerical("orthant", "non-finite mean or covariance"));
    }
    Ok(())
}

fn exact_1d(mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<OrthantProb> {
    let var = cov[(0, 0)];
    if var <= 0.0 {
        return Err(MilError::numerical("orthant", format!("non-positive variance {var}")));
    }
    Ok(OrthantProb {
        mean: mean.clone(),
        cov: cov.clone(),
        prob: normal::sf(mean[0] / var.sqrt()),
        std_error: 0.0,
    })
}

/// Sequential conditioning (Genz) with randomized Richtmyer lattice points,
/// tent periodization, antithetic pairs and Genz–Bretz variable ordering.
pub struct GenzQmc;

impl Named for GenzQmc {
    fn name(&self) -> &'static str {
        DEFAULT_ORTHANT
    }
}

/// Pivoted Cholesky that places the most constraining variable first at
/// each step. Returns the lower factor and the permuted upper limits.
fn ordered_cholesky(cov: &DMatrix<f64>, upper: &[f64]) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let d = upper.len();
    let mut c = cov.clone();
    let mut b = upper.to_vec();
    let mut l = DMatrix::<f64>::zeros(d, d);
    let mut y = vec![0.0; d];
    let scale = (0..d).map(|i| cov[(i, i)]).fold(0.0, f64::max);
    for i in 0..d {
        let mut best = (i, f64::INFINITY);
        for j in i..d {
            let s: f64 = c[(j, j)] - (0..i).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
            if s <= 1e-14 * scale {
                continue;
            }
            let shift: f64 = (0..i).map(|k| l[(j, k)] * y[k]).sum();
            let p = normal::cdf((b[j] - shift) / s.sqrt());
            if p < best.1 {
                best = (j, p);
            }
        }
        if !best.1.is_finite() {
            return Err(MilError::numerical(
                "orthant",
                "covariance is numerically singular",
            ));
        }
        let j = best.0;
        if j != i {
            c.swap_rows(i, j);
            c.swap_columns(i, j);
            l.swap_rows(i, j);
            b.swap(i, j);
        }
        let s: f64 = c[(i, i)] - (0..i).map(|k| l[(i, k)] * l[(i, k)]).sum::<f64>();
        let lii = s.sqrt();
        l[(i, i)] = lii;
        for r in (i + 1)..d {
            let dot: f64 = (0..i).map(|k| l[(r, k)] * l[(i, k)]).sum();
            l[(r, i)] = (c[(r, i)] - dot) / lii;
        }
        let shift: f64 = (0..i).map(|k| l[(i, k)] * y[k]).sum();
        let u = (b[i] - shift) / lii;
        // mean of a standard normal truncated above at u
        y[i] = -(normal::ln_pdf(u) - normal::ln_cdf(u)).exp();
    }
    Ok((l, b))
}

fn first_primes(n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    let mut cand = 2u64;
    while out.len() < n {
        if out.iter().take_while(|&&p| p * p <= cand).all(|&p| cand % p != 0) {
            out.push(cand);
        }
        cand += 1;
    }
    out
}

struct GenzIntegrand {
    l: DMatrix<f64>,
    upper: Vec<f64>,
    first: f64,
    y: Vec<f64>,
}

impl GenzIntegrand {
    fn new(l: DMatrix<f64>, upper: Vec<f64>) -> Self {
        let first = normal::cdf(upper[0] / l[(0, 0)]);
        let d = upper.len();
        Self {
            l,
            upper,
            first,
            y: vec![0.0; d],
        }
    }

    fn eval(&mut self, w: &[f64]) -> f64 {
        let d = self.upper.len();
        let mut e = self.first;
        let mut f = e;
        for i in 1..d {
            if f == 0.0 {
                return 0.0;
            }
            self.y[i - 1] = normal::quantile(w[i - 1] * e);
            let shift: f64 = (0..i).map(|k| self.l[(i, k)] * self.y[k]).sum();
            e = normal::cdf((self.upper[i] - shift) / self.l[(i, i)]);
            f *= e;
        }
        f
    }
}

impl OrthantEstimator for GenzQmc {
    fn negative_orthant(
        &self,
        mean: &DVector<f64>,
        cov: &DMatrix<f64>,
        budget: QmcBudget,
        seed: u64,
    ) -> Result<OrthantProb> {
        check_inputs(mean, cov, budget)?;
        let d = mean.len();
        if d == 1 {
            return exact_1d(mean, cov);
        }
        let upper: Vec<f64> = mean.iter().map(|m| -m).collect();
        let (l, b) = ordered_cholesky(cov, &upper)?;
        let mut integrand = GenzIntegrand::new(l, b);

        let gen: Vec<f64> = first_primes(d - 1)
            .into_iter()
            .map(|p| (p as f64).sqrt().fract())
            .collect();
        let mut rng = rng_stream(seed, 0x6f72);
        let mut w = vec![0.0; d - 1];
        let mut w_anti = vec![0.0; d - 1];
        let mut shift_means = Vec::with_capacity(budget.shifts);
        for _ in 0..budget.shifts {
            let shift: Vec<f64> = (0..d - 1).map(|_| rng.random::<f64>()).collect();
            let mut acc = 0.0;
            for k in 1..=budget.points {
                for j in 0..d - 1 {
                    let x = (k as f64 * gen[j] + shift[j]).fract();
                    w[j] = (2.0 * x - 1.0).abs();
                    w_anti[j] = 1.0 - w[j];
                }
                acc += 0.5 * (integrand.eval(&w) + integrand.eval(&w_anti));
            }
            shift_means.push(acc / budget.points as f64);
        }
        let n = shift_means.len() as f64;
        let prob = shift_means.iter().sum::<f64>() / n;
        let var = shift_means.iter().map(|v| (v - prob).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(OrthantProb {
            mean: mean.clone(),
            cov: cov.clone(),
            prob: prob.clamp(0.0, 1.0),
            std_error: (var / n).sqrt(),
        })
    }
}

/// Counting estimator over `points * shifts` exact Gaussian draws.
pub struct PlainMonteCarlo;

impl Named for PlainMonteCarlo {
    fn name(&self) -> &'static str {
        "monte-carlo"
    }
}

impl OrthantEstimator for PlainMonteCarlo {
    fn negative_orthant(
        &self,
        mean: &DVector<f64>,
        cov: &DMatrix<f64>,
        budget: QmcBudget,
        seed: u64,
    ) -> Result<OrthantProb> {
        check_inputs(mean, cov, budget)?;
        let d = mean.len();
        let l = Cholesky::new(cov.clone())
            .ok_or_else(|| MilError::numerical("orthant", "covariance is not positive definite"))?
            .l();
        let n = budget.points * budget.shifts;
        let mut rng = rng_stream(seed, 0x6d63);
        let mut z = vec![0.0; d];
        let mut hits = 0usize;
        for _ in 0..n {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let inside = (0..d).all(|i| {
                let x: f64 = mean[i] + (0..=i).map(|k| l[(i, k)] * z[k]).sum::<f64>();
                x < 0.0
            });
            if inside {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        Ok(OrthantProb {
            mean: mean.clone(),
            cov: cov.clone(),
            prob: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
        })
    }
}

pub fn orthant_registry() -> Registry<dyn OrthantEstimator> {
    let mut reg: Registry<dyn OrthantEstimator> = Registry::new("orthant estimator");
    reg.register(Arc::new(GenzQmc));
    reg.register(Arc::new(PlainMonteCarlo));
    reg
}

/// Negative-orthant probability with the default estimator.
pub fn negative_orthant_prob(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    budget: QmcBudget,
    seed: u64,
) -> Result<OrthantProb> {
    GenzQmc.negative_orthant(mean, cov, budget, seed)
}
