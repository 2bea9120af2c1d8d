use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};

use crate::bag::{block_sigma, contiguity_registry, CoupledCovariance, MilDataset};
use crate::error::{MilError, Result};
use crate::linalg::{kmeans::kmeans_per_class, rng_stream, KernelConfig};

use super::model::{FitConfig, FitDiagnostics, TrainedModel};
use super::updates::{update_qm, AugmentedPosterior, GramCache, InducingPosterior, QuSolver};

const STREAM_INIT: u64 = 0x696e_6974;

/// Training state that can be advanced one iteration at a time.
pub struct Trainer<'a> {
    dataset: &'a MilDataset,
    config: FitConfig,
    blocks: Vec<CoupledCovariance>,
    cache: GramCache,
    solver: QuSolver,
    expectations: Vec<DVector<f64>>,
    q_u: InducingPosterior,
    q_m: Option<AugmentedPosterior>,
    diagnostics: FitDiagnostics,
}

impl<'a> Trainer<'a> {
    /// Builds coupling blocks, inducing points and caches, and draws the
    /// initial latent expectations from a standard normal.
    pub fn new(dataset: &'a MilDataset, config: FitConfig) -> Result<Self> {
        config.validate()?;
        if dataset.bags.is_empty() {
            return Err(MilError::input("vi", "empty dataset"));
        }
        let contiguity = contiguity_registry().get(&config.contiguity)?;
        let blocks = block_sigma(dataset, config.lambda, contiguity.as_ref())?;

        let kernel = config.kernel.unwrap_or_else(|| KernelConfig::for_dim(dataset.dim));
        if let Some(k) = &config.kernel {
            k.validate()?;
        }
        let per_class = config.inducing / 2;
        let count = |label: bool| -> usize {
            dataset
                .bags
                .iter()
                .filter(|b| b.label == label)
                .map(|b| b.len())
                .sum()
        };
        let caps = (per_class.min(count(true)), per_class.min(count(false)));
        let inducing = kmeans_per_class(dataset, caps, config.seed)?;
        let cache = GramCache::new(dataset, inducing, kernel)?;
        let solver = QuSolver::new(&cache, &blocks)?;

        let mut rng = rng_stream(config.seed, STREAM_INIT);
        let expectations: Vec<DVector<f64>> = dataset
            .bags
            .iter()
            .map(|b| DVector::from_fn(b.len(), |_, _| StandardNormal.sample(&mut rng)))
            .collect();

        // prior q(u) = N(0, K_ZZ); only returned when zero iterations run
        let m = cache.n_inducing();
        let q_u = InducingPosterior {
            mean: DVector::zeros(m),
            cov: cache.kzz.clone(),
            inducing: cache.inducing.clone(),
            projected_mean: DVector::zeros(m),
        };
        Ok(Self {
            dataset,
            config,
            blocks,
            cache,
            solver,
            expectations,
            q_u,
            q_m: None,
            diagnostics: FitDiagnostics::default(),
        })
    }

    /// One `q(u)` update followed by one `q(m)` update.
    pub fn step(&mut self) -> Result<()> {
        let q_u = self.solver.solve(&self.cache, &self.expectations)?;
        let q_m = update_qm(self.dataset, &self.blocks, &q_u, &self.cache)?;

        self.diagnostics
            .mean_change
            .push((&q_u.mean - &self.q_u.mean).norm());
        let sq: f64 = q_m
            .expectations
            .iter()
            .zip(&self.expectations)
            .map(|(new, old)| (new - old).norm_squared())
            .sum();
        self.diagnostics.expectation_change.push(sq.sqrt());
        for &b in &q_m.flagged {
            let id = &self.dataset.bags[b].id;
            if !self.diagnostics.flagged_bags.contains(id) {
                self.diagnostics.flagged_bags.push(id.clone());
            }
        }

        self.expectations = q_m.expectations.clone();
        self.q_u = q_u;
        self.q_m = Some(q_m);
        Ok(())
    }

    pub fn inducing_posterior(&self) -> &InducingPosterior {
        &self.q_u
    }

    pub fn augmented_posterior(&self) -> Option<&AugmentedPosterior> {
        self.q_m.as_ref()
    }

    pub fn expectations(&self) -> &[DVector<f64>] {
        &self.expectations
    }

    pub fn blocks(&self) -> &[CoupledCovariance] {
        &self.blocks
    }

    pub fn cache(&self) -> &GramCache {
        &self.cache
    }

    pub fn diagnostics(&self) -> &FitDiagnostics {
        &self.diagnostics
    }

    pub fn run(mut self) -> Result<TrainedModel> {
        for _ in 0..self.config.iterations {
            self.step()?;
        }
        Ok(self.into_model())
    }

    pub fn into_model(self) -> TrainedModel {
        TrainedModel {
            kernel: self.cache.kernel,
            lambda: self.config.lambda,
            contiguity: self.config.contiguity,
            inducing: self.cache.inducing,
            mean: self.q_u.mean,
            cov: self.q_u.cov,
            seed: self.config.seed,
            diagnostics: self.diagnostics,
        }
    }
}

/// Runs the full training loop for `config.iterations` iterations.
pub fn fit(dataset: &MilDataset, config: &FitConfig) -> Result<TrainedModel> {
    Trainer::new(dataset, config.clone())?.run()
}
