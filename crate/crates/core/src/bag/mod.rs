//! Bags of instances, their grid layout, and the per-bag coupling matrices.

mod adjacency;
mod coupling;

pub use adjacency::{contiguity_registry, Contiguity, EightNeighbor, FourNeighbor, DEFAULT_CONTIGUITY};
pub use coupling::{block_sigma, build_coupling, coupled_covariance, CoupledCovariance, CouplingMatrix};

use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{MilError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridCoord {
    pub row: i64,
    pub col: i64,
}

impl GridCoord {
    pub fn new(row: i64, col: i64) -> Self {
        Self { row, col }
    }
}

/// One labelled bag. Row `i` of `features` is instance `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bag {
    pub id: String,
    pub label: bool,
    pub features: DMatrix<f64>,
    pub instance_ids: Vec<String>,
    pub coords: Option<Vec<GridCoord>>,
    /// Ground truth, evaluation only. `None` where unknown.
    pub instance_labels: Vec<Option<bool>>,
}

impl Bag {
    pub fn new(
        id: impl Into<String>,
        label: bool,
        features: DMatrix<f64>,
        instance_ids: Vec<String>,
        coords: Option<Vec<GridCoord>>,
        instance_labels: Vec<Option<bool>>,
    ) -> Result<Self> {
        let bag = Self {
            id: id.into(),
            label,
            features,
            instance_ids,
            coords,
            instance_labels,
        };
        bag.validate()?;
        Ok(bag)
    }

    /// Bag with default instance ids, no ground truth.
    pub fn unlabelled_instances(
        id: impl Into<String>,
        label: bool,
        features: DMatrix<f64>,
        coords: Option<Vec<GridCoord>>,
    ) -> Result<Self> {
        let n = features.nrows();
        Self::new(
            id,
            label,
            features,
            (0..n).map(|i| i.to_string()).collect(),
            coords,
            vec![None; n],
        )
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn instance(&self, i: usize) -> Vec<f64> {
        self.features.row(i).iter().copied().collect()
    }

    fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(MilError::input("bag", format!("bag '{}': {}", self.id, msg)));
        let n = self.len();
        if n == 0 {
            return err("a bag needs at least one instance".into());
        }
        if self.instance_ids.len() != n || self.instance_labels.len() != n {
            return err("instance ids / labels do not match the instance count".into());
        }
        if self.features.iter().any(|v| !v.is_finite()) {
            return err("non-finite feature value".into());
        }
        if let Some(coords) = &self.coords {
            if coords.len() != n {
                return err("grid coordinates do not match the instance count".into());
            }
            let mut seen = HashSet::with_capacity(n);
            for c in coords {
                if !seen.insert(*c) {
                    return err(format!("duplicate grid position ({}, {})", c.row, c.col));
                }
            }
        }
        let any_positive = self.instance_labels.iter().any(|l| *l == Some(true));
        let all_known = self.instance_labels.iter().all(Option::is_some);
        if !self.label && any_positive {
            return err("bag label 0 but an instance label is 1".into());
        }
        if self.label && all_known && !any_positive {
            return err("bag label 1 but every instance label is 0".into());
        }
        Ok(())
    }
}

/// A collection of bags sharing one feature dimension, ordered by bag id.
#[derive(Debug, Clone, PartialEq)]
pub struct MilDataset {
    pub bags: Vec<Bag>,
    pub dim: usize,
}

impl MilDataset {
    pub fn new(mut bags: Vec<Bag>) -> Result<Self> {
        if bags.is_empty() {
            return Err(MilError::input("dataset", "no bags"));
        }
        let dim = bags[0].dim();
        if dim == 0 {
            return Err(MilError::input("dataset", "feature dimension is zero"));
        }
        let mut ids = HashSet::with_capacity(bags.len());
        for bag in &bags {
            bag.validate()?;
            if bag.dim() != dim {
                return Err(MilError::input(
                    "dataset",
                    format!("bag '{}' has dimension {} but expected {}", bag.id, bag.dim(), dim),
                ));
            }
            if !ids.insert(bag.id.as_str()) {
                return Err(MilError::input("dataset", format!("duplicate bag id '{}'", bag.id)));
            }
        }
        bags.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(Self { bags, dim })
    }

    pub fn n_instances(&self) -> usize {
        self.bags.iter().map(Bag::len).sum()
    }

    pub fn has_coords(&self) -> bool {
        self.bags.iter().all(|b| b.coords.is_some())
    }

    pub fn has_instance_labels(&self) -> bool {
        self.bags
            .iter()
            .any(|b| b.instance_labels.iter().any(Option::is_some))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feats(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, 2, |i, j| (i + j) as f64)
    }

    #[test]
    fn rejects_empty_bag_and_duplicate_coords() {
        assert!(Bag::unlabelled_instances("a", false, DMatrix::zeros(0, 2), None).is_err());
        let coords = vec![GridCoord::new(0, 0), GridCoord::new(0, 0)];
        assert!(Bag::unlabelled_instances("a", false, feats(2), Some(coords)).is_err());
    }

    #[test]
    fn max_consistency_enforced() {
        let ids = vec!["0".to_string(), "1".to_string()];
        let e = Bag::new("neg", false, feats(2), ids.clone(), None, vec![Some(false), Some(true)])
            .unwrap_err();
        assert!(e.to_string().contains("neg"));
        assert!(Bag::new("pos", true, feats(2), ids.clone(), None, vec![Some(false), Some(false)]).is_err());
        assert!(Bag::new("pos", true, feats(2), ids, None, vec![Some(false), None]).is_ok());
    }

    #[test]
    fn dataset_sorted_and_unique() {
        let b1 = Bag::unlabelled_instances("z", false, feats(1), None).unwrap();
        let b2 = Bag::unlabelled_instances("a", true, feats(2), None).unwrap();
        let ds = MilDataset::new(vec![b1.clone(), b2]).unwrap();
        assert_eq!(ds.bags[0].id, "a");
        assert_eq!(ds.n_instances(), 3);
        assert!(MilDataset::new(vec![b1.clone(), b1]).is_err());
        assert!(MilDataset::new(vec![]).is_err());
    }
}
