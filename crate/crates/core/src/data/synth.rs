use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bag::{Bag, GridCoord, MilDataset};
use crate::error::{MilError, Result};
use crate::linalg::rng_stream;

use super::io_error;

const COMPONENT: &str = "synth";

/// Recipe for a synthetic dataset of grid-shaped bags with circular blobs
/// of positive instances planted in the positive bags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub bags: usize,
    pub height: usize,
    pub width: usize,
    pub positive_fraction: f64,
    pub blobs: usize,
    /// Euclidean radius in grid cells; the blob center is always positive.
    pub blob_radius: f64,
    pub dim: usize,
    /// Positives are centered at `+feature_mean·1`, negatives at `−feature_mean·1`.
    pub feature_mean: f64,
    pub noise_scale: f64,
    /// Probability that an instance's features come from the opposite class.
    /// Its ground-truth label is unchanged.
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            bags: 50,
            height: 8,
            width: 8,
            positive_fraction: 0.5,
            blobs: 1,
            blob_radius: 2.0,
            dim: 16,
            feature_mean: 0.5,
            noise_scale: 1.0,
            label_noise: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(MilError::input(COMPONENT, msg));
        if self.bags == 0 || self.height == 0 || self.width == 0 || self.dim == 0 {
            return fail("bags, height, width and dim must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.positive_fraction) {
            return fail(format!("positive_fraction {} outside [0, 1]", self.positive_fraction));
        }
        if !(0.0..=1.0).contains(&self.label_noise) {
            return fail(format!("label_noise {} outside [0, 1]", self.label_noise));
        }
        if self.blobs == 0 {
            return fail("at least one blob per positive bag is required".into());
        }
        let diag = (self.height as f64).hypot(self.width as f64);
        if !(self.blob_radius >= 0.0) || self.blob_radius > diag {
            return fail(format!(
                "blob radius {} exceeds the {}×{} grid (max {diag:.3})",
                self.blob_radius, self.height, self.width
            ));
        }
        if !(self.feature_mean.is_finite() && self.noise_scale.is_finite() && self.noise_scale > 0.0) {
            return fail("feature_mean must be finite and noise_scale positive".into());
        }
        Ok(())
    }
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<SyntheticSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| io_error(COMPONENT, path, e))?;
    let spec: SyntheticSpec = serde_json::from_str(&text)
        .map_err(|e| MilError::input(COMPONENT, format!("malformed spec file: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

/// Generates the dataset described by `spec`. Deterministic per seed.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<MilDataset> {
    spec.validate()?;
    let mut rng = rng_stream(spec.seed, 0x7379_6e74);
    let n_pos = (spec.bags as f64 * spec.positive_fraction).round() as usize;
    let mut labels: Vec<bool> = (0..spec.bags).map(|i| i < n_pos).collect();
    labels.shuffle(&mut rng);

    let noise = Normal::new(0.0, spec.noise_scale).expect("validated noise scale");
    let cells: Vec<GridCoord> = (0..spec.height)
        .flat_map(|r| (0..spec.width).map(move |c| GridCoord::new(r as i64, c as i64)))
        .collect();
    let n = cells.len();
    let width = (spec.bags - 1).to_string().len();

    let mut bags = Vec::with_capacity(spec.bags);
    for (b, &label) in labels.iter().enumerate() {
        let mut inst = vec![false; n];
        if label {
            for _ in 0..spec.blobs {
                let cr = rng.random_range(0..spec.height) as f64;
                let cc = rng.random_range(0..spec.width) as f64;
                for (flag, cell) in inst.iter_mut().zip(&cells) {
                    if (cell.row as f64 - cr).hypot(cell.col as f64 - cc) <= spec.blob_radius {
                        *flag = true;
                    }
                }
            }
        }
        let mut features = DMatrix::zeros(n, spec.dim);
        for (i, &positive) in inst.iter().enumerate() {
            let flipped = spec.label_noise > 0.0 && rng.random::<f64>() < spec.label_noise;
            let sign = if positive != flipped { 1.0 } else { -1.0 };
            for j in 0..spec.dim {
                features[(i, j)] = sign * spec.feature_mean + noise.sample(&mut rng);
            }
        }
        bags.push(Bag::new(
            format!("bag{b:0width$}"),
            label,
            features,
            cells.iter().map(|c| format!("r{}c{}", c.row, c.col)).collect(),
            Some(cells.clone()),
            inst.into_iter().map(Some).collect(),
        )?);
    }
    MilDataset::new(bags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_fraction_is_all_negative() {
        let ds = generate_synthetic(&SyntheticSpec { positive_fraction: 0.0, bags: 5, ..Default::default() }).unwrap();
        assert!(ds.bags.iter().all(|b| !b.label && b.instance_labels.iter().all(|l| *l == Some(false))));
    }

    #[test]
    fn covering_radius_makes_positive_bags_all_positive() {
        let spec = SyntheticSpec { bags: 6, height: 4, width: 5, blob_radius: 5.0, ..Default::default() };
        let ds = generate_synthetic(&spec).unwrap();
        assert_eq!(ds.bags.iter().filter(|b| b.label).count(), 3);
        for b in ds.bags.iter().filter(|b| b.label) {
            assert!(b.instance_labels.iter().all(|l| *l == Some(true)));
        }
    }

    #[test]
    fn oversized_radius_rejected() {
        let spec = SyntheticSpec { height: 3, width: 4, blob_radius: 5.01, ..Default::default() };
        assert!(generate_synthetic(&spec).unwrap_err().is_input());
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SyntheticSpec { seed: 11, ..Default::default() };
        let a = generate_synthetic(&spec).unwrap();
        assert_eq!(a, generate_synthetic(&spec).unwrap());
        assert_eq!(a.bags.len(), 50);
        assert_eq!(a.dim, 16);
        assert_ne!(a, generate_synthetic(&SyntheticSpec { seed: 12, ..spec }).unwrap());
    }

    #[test]
    fn spec_json_defaults() {
        let spec: SyntheticSpec = serde_json::from_str(r#"{"bags": 3, "seed": 4}"#).unwrap();
        assert_eq!(spec.height, 8);
        assert_eq!(spec.bags, 3);
        assert!(serde_json::from_str::<SyntheticSpec>(r#"{"bogus": 1}"#).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn generated_labels_are_max_consistent(
            seed in any::<u64>(),
            h in 1usize..6,
            w in 1usize..6,
            frac in 0.0f64..=1.0,
            radius_frac in 0.0f64..=1.0,
            noise in 0.0f64..0.3,
        ) {
            let radius = radius_frac * (h as f64).hypot(w as f64);
            let spec = SyntheticSpec {
                bags: 4, height: h, width: w, positive_fraction: frac, blob_radius: radius,
                dim: 2, label_noise: noise, seed, ..Default::default()
            };
            let ds = generate_synthetic(&spec).unwrap();
            for b in &ds.bags {
                let any = b.instance_labels.iter().any(|l| *l == Some(true));
                prop_assert_eq!(any, b.label);
                prop_assert_eq!(b.len(), h * w);
            }
        }
    }
}
