//! Test-time inference: sparse-GP latent predictive, coupled predictive of
//! the augmented variables, per-instance and per-bag probabilities.

mod metrics;

pub use metrics::{evaluate, metrics_from_predictions, Confusion, LevelMetrics, MetricsReport};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::bag::{build_coupling, contiguity_registry, coupled_covariance, Bag, Contiguity, MilDataset};
use crate::error::{MilError, Result};
use crate::linalg::{floor_eigenvalues, gram, symmetrize, PsdFactor};
use crate::trunc::{normal, orthant_registry, OrthantEstimator, QmcBudget, DEFAULT_ORTHANT};
use crate::vi::TrainedModel;

/// Eigenvalue floor applied to predictive covariances.
pub const COV_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct PredictOptions {
    pub budget: QmcBudget,
    pub estimator: String,
    /// Skip the orthant integral and report `NaN` bag probabilities.
    pub bag_level: bool,
}

impl Default for PredictOptions {
    fn default() -> Self {
        Self {
            budget: QmcBudget::default(),
            estimator: DEFAULT_ORTHANT.to_string(),
            bag_level: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BagPrediction {
    pub bag_id: String,
    pub instance_probs: Vec<f64>,
    pub bag_prob: f64,
    pub bag_prob_se: f64,
    pub coupled_mean: DVector<f64>,
    pub coupled_var: DVector<f64>,
}

/// A trained model with its inducing Gram factorization ready.
pub struct Predictor<'m> {
    model: &'m TrainedModel,
    kzz_factor: PsdFactor,
    projected_mean: DVector<f64>,
    contiguity: Arc<dyn Contiguity>,
}

impl<'m> Predictor<'m> {
    pub fn new(model: &'m TrainedModel) -> Result<Self> {
        let (_, kzz_factor) =
            crate::vi::jittered_inducing_gram(&model.inducing, &model.kernel)?;
        let projected_mean = kzz_factor.solve_vec(&model.mean);
        let contiguity = contiguity_registry().get(&model.contiguity)?;
        Ok(Self {
            model,
            kzz_factor,
            projected_mean,
            contiguity,
        })
    }

    pub fn model(&self) -> &TrainedModel {
        self.model
    }

    /// Latent GP predictive `(μ*, S*)` at the bag's instances.
    pub fn predict_latent(&self, bag: &Bag) -> Result<(DVector<f64>, DMatrix<f64>)> {
        if bag.dim() != self.model.dim() {
            return Err(MilError::input(
                "predictor",
                format!(
                    "bag '{}' has dimension {} but the model expects {}",
                    bag.id,
                    bag.dim(),
                    self.model.dim()
                ),
            ));
        }
        let k_sz = gram(&bag.features, &self.model.inducing, &self.model.kernel)?;
        let k_ss = gram(&bag.features, &bag.features, &self.model.kernel)?;
        let mean = &k_sz * &self.projected_mean;
        let proj = self.kzz_factor.solve(&k_sz.transpose());
        let cov = k_ss - &k_sz * &proj + proj.tr_mul(&(&self.model.cov * &proj));
        Ok((mean, floor_eigenvalues(&cov, COV_FLOOR)))
    }

    /// Coupled predictive `(Σ* μ*, Σ* + Σ* S* Σ*ᵀ)` using the bag's own grid.
    pub fn predict_m(
        &self,
        bag: &Bag,
        latent: &(DVector<f64>, DMatrix<f64>),
    ) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let (mu, s) = latent;
        if mu.len() != bag.len() || s.nrows() != bag.len() {
            return Err(MilError::input("predictor", "latent predictive does not match bag size"));
        }
        if self.model.lambda > 0.0 && bag.coords.is_none() {
            return Err(MilError::input(
                "predictor",
                format!("bag '{}' has no grid coordinates but λ > 0", bag.id),
            ));
        }
        let sigma = coupled_covariance(
            &build_coupling(bag, self.contiguity.as_ref()),
            self.model.lambda,
        )?
        .sigma;
        let mean = &sigma * mu;
        let cov = &sigma + &sigma * s * sigma.transpose();
        Ok((mean, floor_eigenvalues(&symmetrize(&cov), COV_FLOOR)))
    }

    pub fn predict_bag(&self, bag: &Bag, opts: &PredictOptions) -> Result<BagPrediction> {
        let latent = self.predict_latent(bag)?;
        let (mean, cov) = self.predict_m(bag, &latent)?;
        let instance_probs = predict_instances(&mean, &cov)?;
        let (bag_prob, bag_prob_se) = if opts.bag_level {
            let est = orthant_registry().get(&opts.estimator)?;
            bag_probability(
                est.as_ref(),
                &mean,
                &cov,
                opts.budget,
                bag_seed(self.model.seed, &bag.id),
            )?
        } else {
            (f64::NAN, f64::NAN)
        };
        Ok(BagPrediction {
            bag_id: bag.id.clone(),
            instance_probs,
            bag_prob,
            bag_prob_se,
            coupled_var: cov.diagonal(),
            coupled_mean: mean,
        })
    }

    pub fn predict_dataset(&self, dataset: &MilDataset, opts: &PredictOptions) -> Result<Vec<BagPrediction>> {
        dataset.bags.iter().map(|b| self.predict_bag(b, opts)).collect()
    }
}

/// `(μ*, S*)` for one bag.
pub fn predict_latent(model: &TrainedModel, bag: &Bag) -> Result<(DVector<f64>, DMatrix<f64>)> {
    Predictor::new(model)?.predict_latent(bag)
}

/// `(μ_m*, S_m*)` for one bag given its latent predictive.
pub fn predict_m(
    model: &TrainedModel,
    bag: &Bag,
    latent: &(DVector<f64>, DMatrix<f64>),
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    Predictor::new(model)?.predict_m(bag, latent)
}

/// `Φ(μ_i / sqrt(S_ii))` for every instance.
pub fn predict_instances(mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    mean.iter()
        .enumerate()
        .map(|(i, &mu)| {
            let var = cov[(i, i)];
            if !(var > 0.0) {
                return Err(MilError::numerical(
                    "predictor",
                    format!("non-positive predictive variance {var} at instance {i}"),
                ));
            }
            Ok(normal::cdf(mu / var.sqrt()))
        })
        .collect()
}

fn bag_probability(
    estimator: &dyn OrthantEstimator,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    budget: QmcBudget,
    seed: u64,
) -> Result<(f64, f64)> {
    let p = estimator.negative_orthant(mean, cov, budget, seed)?;
    Ok(((1.0 - p.prob).clamp(0.0, 1.0), p.std_error))
}

/// `1 − P(all coupled variables negative)` under the full covariance.
pub fn predict_bag(mean: &DVector<f64>, cov: &DMatrix<f64>, budget: QmcBudget, seed: u64) -> Result<f64> {
    Ok(bag_probability(&crate::trunc::GenzQmc, mean, cov, budget, seed)?.0)
}

/// Stable per-bag seed: FNV-1a over the bag id mixed with the model seed.
pub fn bag_seed(model_seed: u64, bag_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in bag_id.as_bytes() {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ model_seed.rotate_left(32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bag::GridCoord;
    use crate::linalg::KernelConfig;
    use crate::vi::FitDiagnostics;
    use approx::assert_relative_eq;

    fn toy_model(lambda: f64, mean: Vec<f64>, cov_scale: f64) -> TrainedModel {
        let inducing = DMatrix::from_row_slice(2, 1, &[0.0, 2.0]);
        let m = mean.len();
        TrainedModel {
            kernel: KernelConfig::new(1.0, 1.0, 1e-6).unwrap(),
            lambda,
            contiguity: "4-neighbor".into(),
            inducing,
            mean: DVector::from_vec(mean),
            cov: DMatrix::identity(m, m) * cov_scale,
            seed: 1,
            diagnostics: FitDiagnostics::default(),
        }
    }

    fn pair_bag(x: [f64; 2]) -> Bag {
        Bag::unlabelled_instances(
            "p",
            false,
            DMatrix::from_row_slice(2, 1, &x),
            Some(vec![GridCoord::new(0, 0), GridCoord::new(0, 1)]),
        )
        .unwrap()
    }

    #[test]
    fn zero_mean_model_predicts_zero_latent_mean() {
        let model = toy_model(0.0, vec![0.0, 0.0], 0.5);
        let (mu, _) = predict_latent(&model, &pair_bag([0.3, 1.1])).unwrap();
        assert_eq!(mu, DVector::zeros(2));
    }

    #[test]
    fn variance_vanishes_at_inducing_point_when_posterior_collapses() {
        let model = toy_model(0.0, vec![1.0, -1.0], 1e-12);
        let bag = Bag::unlabelled_instances("a", false, DMatrix::from_element(1, 1, 0.0), None).unwrap();
        let (_, s) = predict_latent(&model, &bag).unwrap();
        assert!(s[(0, 0)] < 1e-5, "{}", s[(0, 0)]);
    }

    #[test]
    fn latent_matches_dense_formula() {
        let model = toy_model(0.0, vec![0.4, -0.9], 0.3);
        let bag = pair_bag([0.5, 1.7]);
        let (mu, s) = predict_latent(&model, &bag).unwrap();
        let cfg = model.kernel;
        let kzz = gram(&model.inducing, &model.inducing, &cfg).unwrap() + DMatrix::identity(2, 2) * 1e-6;
        let kinv = kzz.clone().try_inverse().unwrap();
        let ksz = gram(&bag.features, &model.inducing, &cfg).unwrap();
        let kss = gram(&bag.features, &bag.features, &cfg).unwrap();
        let mu_ref = &ksz * &kinv * &model.mean;
        let s_ref = &kss - &ksz * &kinv * (&kzz - &model.cov) * &kinv * ksz.transpose();
        assert_relative_eq!(mu, mu_ref, epsilon = 1e-8);
        assert_relative_eq!(s, s_ref, epsilon = 1e-8);
    }

    #[test]
    fn lambda_zero_coupled_is_identity_plus_latent() {
        let model = toy_model(0.0, vec![0.0, 0.0], 1.0);
        let bag = pair_bag([0.0, 1.0]);
        let latent = (DVector::from_vec(vec![0.7, -0.2]), DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.4]));
        let (m, s) = predict_m(&model, &bag, &latent).unwrap();
        assert_eq!(m, latent.0);
        assert_relative_eq!(s, DMatrix::identity(2, 2) + &latent.1, epsilon = 1e-15);
    }

    #[test]
    fn single_instance_ignores_lambda() {
        let model = toy_model(3.0, vec![0.0, 0.0], 1.0);
        let bag = Bag::unlabelled_instances("a", false, DMatrix::from_element(1, 1, 0.0), Some(vec![GridCoord::new(4, 4)]))
            .unwrap();
        let latent = (DVector::from_element(1, 1.3), DMatrix::from_element(1, 1, 0.2));
        let (m, s) = predict_m(&model, &bag, &latent).unwrap();
        assert_eq!(m[0], 1.3);
        assert_relative_eq!(s[(0, 0)], 1.2, epsilon = 1e-15);
    }

    #[test]
    fn adjacent_pair_hand_product() {
        let model = toy_model(1.0, vec![0.0, 0.0], 1.0);
        let latent = (DVector::from_vec(vec![3.0, -3.0]), DMatrix::identity(2, 2));
        let (m, _) = predict_m(&model, &pair_bag([0.0, 1.0]), &latent).unwrap();
        assert_relative_eq!(m[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(m[1], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn coords_required_when_coupled() {
        let model = toy_model(0.5, vec![0.0, 0.0], 1.0);
        let bag = Bag::unlabelled_instances("a", false, DMatrix::zeros(2, 1), None).unwrap();
        let latent = (DVector::zeros(2), DMatrix::identity(2, 2));
        assert!(predict_m(&model, &bag, &latent).unwrap_err().is_input());
    }

    #[test]
    fn instance_probabilities() {
        let p = predict_instances(&DVector::from_vec(vec![0.0, 8.0]), &DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0])))
            .unwrap();
        assert_eq!(p[0], 0.5);
        assert_relative_eq!(p[1], 0.999_968_328_758_166_9, max_relative = 1e-14);
        assert!(predict_instances(&DVector::zeros(1), &DMatrix::zeros(1, 1)).unwrap_err().is_numerical());
    }

    #[test]
    fn bag_probability_simple_cases() {
        let b = QmcBudget::default();
        assert_eq!(predict_bag(&DVector::zeros(1), &DMatrix::identity(1, 1), b, 0).unwrap(), 0.5);
        let p = predict_bag(&DVector::zeros(2), &DMatrix::identity(2, 2), b, 0).unwrap();
        assert_relative_eq!(p, 0.75, epsilon = 1e-6);
    }

    #[test]
    fn bag_seed_depends_on_both_inputs() {
        assert_ne!(bag_seed(1, "a"), bag_seed(2, "a"));
        assert_ne!(bag_seed(1, "a"), bag_seed(1, "b"));
        assert_eq!(bag_seed(7, "slide-3"), bag_seed(7, "slide-3"));
    }
}
