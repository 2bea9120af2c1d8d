use nalgebra::{DMatrix, DVector};

use crate::bag::{CoupledCovariance, MilDataset};
use crate::error::{MilError, Result};
use crate::linalg::{gram, KernelConfig, PsdFactor};
use crate::trunc::{neg_trunc_mean, positive_bag_expectations};

/// Kernel matrices that stay fixed for a whole fit.
#[derive(Debug, Clone)]
pub struct GramCache {
    pub kernel: KernelConfig,
    pub inducing: DMatrix<f64>,
    /// `K_ZZ` with the jitter that made it factorizable already added.
    pub kzz: DMatrix<f64>,
    pub kzz_factor: PsdFactor,
    /// `K_bZ` for every bag, in dataset order.
    pub kbz: Vec<DMatrix<f64>>,
}

impl GramCache {
    pub fn new(dataset: &MilDataset, inducing: DMatrix<f64>, kernel: KernelConfig) -> Result<Self> {
        let (kzz, kzz_factor) = jittered_inducing_gram(&inducing, &kernel)?;
        let kbz = dataset
            .bags
            .iter()
            .map(|b| gram(&b.features, &inducing, &kernel))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kernel,
            inducing,
            kzz,
            kzz_factor,
            kbz,
        })
    }

    pub fn n_inducing(&self) -> usize {
        self.inducing.nrows()
    }
}

/// `K_ZZ + jitter·I` and its factor, with the jitter escalated as needed.
/// Training and prediction both go through here so they agree bitwise.
pub(crate) fn jittered_inducing_gram(
    inducing: &DMatrix<f64>,
    kernel: &KernelConfig,
) -> Result<(DMatrix<f64>, PsdFactor)> {
    let raw = gram(inducing, inducing, kernel)?;
    let factor = PsdFactor::new(&raw, kernel.jitter)?;
    let mut kzz = raw;
    for i in 0..kzz.nrows() {
        kzz[(i, i)] += factor.jitter();
    }
    Ok((kzz, factor))
}

/// `q(u) = N(mean, cov)` over the inducing values.
#[derive(Debug, Clone, PartialEq)]
pub struct InducingPosterior {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub inducing: DMatrix<f64>,
    /// `K_ZZ⁻¹ mean`, produced alongside the mean.
    pub projected_mean: DVector<f64>,
}

/// Latent-variable posterior after one `q(m)` update.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPosterior {
    /// Pre-truncation means `Σ_b K_bZ K_ZZ⁻¹ μᵘ`.
    pub means: Vec<DVector<f64>>,
    /// Marginal standard deviations `sqrt((Σ_b)_ii)`.
    pub std_devs: Vec<DVector<f64>>,
    /// Post-truncation expectations.
    pub expectations: Vec<DVector<f64>>,
    /// Indices of positive bags whose normalizer was floored.
    pub flagged: Vec<usize>,
}

/// Solves the `q(u)` update for any latent expectations.
///
/// With `P = Σ_b K_Zb Σ_b K_bZ`, the update is rewritten as
/// `Σᵘ = K (K + P)⁻¹ K` and `μᵘ = K (K + P)⁻¹ K_ZX E[m]`,
/// so `K_ZZ` itself is never inverted.
#[derive(Debug, Clone)]
pub struct QuSolver {
    system: PsdFactor,
    cov: DMatrix<f64>,
}

impl QuSolver {
    pub fn new(cache: &GramCache, blocks: &[CoupledCovariance]) -> Result<Self> {
        if blocks.len() != cache.kbz.len() {
            return Err(MilError::input("vi", "one coupled covariance per bag is required"));
        }
        let m = cache.n_inducing();
        let mut system = cache.kzz.clone();
        for (kbz, block) in cache.kbz.iter().zip(blocks) {
            if block.len() != kbz.nrows() {
                return Err(MilError::input("vi", "coupled covariance does not match bag size"));
            }
            let weighted = &block.sigma * kbz;
            system.gemm_tr(1.0, kbz, &weighted, 1.0);
        }
        let system = crate::linalg::symmetrize(&system);
        let system = PsdFactor::exact_or_jitter(&system, cache.kernel.jitter)?;
        let v = system.solve_lower(&cache.kzz);
        let cov = v.tr_mul(&v);
        debug_assert_eq!(cov.nrows(), m);
        Ok(Self { system, cov })
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn solve(&self, cache: &GramCache, expectations: &[DVector<f64>]) -> Result<InducingPosterior> {
        if expectations.len() != cache.kbz.len() {
            return Err(MilError::input("vi", "one expectation vector per bag is required"));
        }
        let mut rhs = DVector::zeros(cache.n_inducing());
        for (kbz, e) in cache.kbz.iter().zip(expectations) {
            rhs.gemv_tr(1.0, kbz, e, 1.0);
        }
        let projected_mean = self.system.solve_vec(&rhs);
        let mean = &cache.kzz * &projected_mean;
        Ok(InducingPosterior {
            mean,
            cov: self.cov.clone(),
            inducing: cache.inducing.clone(),
            projected_mean,
        })
    }
}

/// One `q(u)` update from scratch.
pub fn update_qu(
    cache: &GramCache,
    blocks: &[CoupledCovariance],
    expectations: &[DVector<f64>],
) -> Result<InducingPosterior> {
    QuSolver::new(cache, blocks)?.solve(cache, expectations)
}

/// One `q(m)` update: coupled means per bag, then truncated expectations
/// under the factorized approximation of each bag's Gaussian.
pub fn update_qm(
    dataset: &MilDataset,
    blocks: &[CoupledCovariance],
    q_u: &InducingPosterior,
    cache: &GramCache,
) -> Result<AugmentedPosterior> {
    let n_bags = dataset.bags.len();
    let mut out = AugmentedPosterior {
        means: Vec::with_capacity(n_bags),
        std_devs: Vec::with_capacity(n_bags),
        expectations: Vec::with_capacity(n_bags),
        flagged: Vec::new(),
    };
    for (b, ((bag, block), kbz)) in dataset.bags.iter().zip(blocks).zip(&cache.kbz).enumerate() {
        let latent = kbz * &q_u.projected_mean;
        let mean = &block.sigma * latent;
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(MilError::numerical(
                "vi",
                format!("non-finite latent mean in bag '{}'", bag.id),
            ));
        }
        let sd = DVector::from_vec(block.marginal_std());
        let expect = if bag.label {
            let moments = positive_bag_expectations(mean.as_slice(), sd.as_slice())?;
            if moments.floored {
                out.flagged.push(b);
            }
            DVector::from_vec(moments.expectations)
        } else {
            let vals = mean
                .iter()
                .zip(sd.iter())
                .map(|(&mu, &s)| neg_trunc_mean(mu, s))
                .collect::<Result<Vec<_>>>()?;
            DVector::from_vec(vals)
        };
        out.means.push(mean);
        out.std_devs.push(sd);
        out.expectations.push(expect);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bag::{block_sigma, Bag, FourNeighbor};
    use approx::assert_relative_eq;

    #[test]
    fn zero_expectations_give_zero_mean() {
        let bag = Bag::unlabelled_instances(
            "a",
            true,
            DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]),
            None,
        )
        .unwrap();
        let ds = MilDataset::new(vec![bag]).unwrap();
        let z = DMatrix::from_row_slice(2, 1, &[0.5, 1.5]);
        let cache = GramCache::new(&ds, z, KernelConfig::new(1.0, 1.0, 1e-6).unwrap()).unwrap();
        let blocks = block_sigma(&ds, 0.0, &FourNeighbor).unwrap();
        let q = update_qu(&cache, &blocks, &[DVector::zeros(3)]).unwrap();
        assert_eq!(q.mean, DVector::zeros(2));
    }

    #[test]
    fn scalar_case_matches_hand_formula() {
        // one instance at the single inducing location
        let x = 0.3;
        let gamma = 1.7;
        let jitter = 1e-6;
        let bag = Bag::unlabelled_instances("a", true, DMatrix::from_element(1, 1, x), None).unwrap();
        let ds = MilDataset::new(vec![bag]).unwrap();
        let cache = GramCache::new(
            &ds,
            DMatrix::from_element(1, 1, x),
            KernelConfig::new(gamma, 1.0, jitter).unwrap(),
        )
        .unwrap();
        let blocks = block_sigma(&ds, 0.0, &FourNeighbor).unwrap();
        let e = 0.8;
        let q = update_qu(&cache, &blocks, &[DVector::from_element(1, e)]).unwrap();

        let k = gamma + jitter;
        let c = gamma;
        let cov = 1.0 / (1.0 / k + c * c / (k * k));
        let mean = cov * c * e / k;
        assert_relative_eq!(q.cov[(0, 0)], cov, max_relative = 1e-12);
        assert_relative_eq!(q.mean[0], mean, max_relative = 1e-12);
    }
}
