use std::collections::HashMap;

use nalgebra::{Cholesky, DMatrix};

use crate::error::{MilError, Result};
use crate::linalg::symmetrize;

use super::{Bag, Contiguity, MilDataset};

/// Graph Laplacian of a bag's contiguity graph: degree on the diagonal,
/// `-1` for each contiguous pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub matrix: DMatrix<f64>,
}

impl CouplingMatrix {
    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Contiguous pairs `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.matrix[(i, j)] != 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// `(λ C + I)⁻¹` for one bag.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledCovariance {
    pub sigma: DMatrix<f64>,
    pub lambda: f64,
}

impl CoupledCovariance {
    pub fn len(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Marginal standard deviations `sqrt(Σ_ii)`.
    pub fn marginal_std(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.sigma[(i, i)].sqrt()).collect()
    }
}

/// Builds the Laplacian from the bag's grid coordinates. A bag without
/// coordinates yields the zero matrix.
pub fn build_coupling(bag: &Bag, contiguity: &dyn Contiguity) -> CouplingMatrix {
    let n = bag.len();
    let mut matrix = DMatrix::zeros(n, n);
    if let Some(coords) = &bag.coords {
        let index: HashMap<_, _> = coords.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        for (i, c) in coords.iter().enumerate() {
            for &(dr, dc) in contiguity.offsets() {
                let key = super::GridCoord::new(c.row + dr, c.col + dc);
                if let Some(&j) = index.get(&key) {
                    matrix[(i, j)] = -1.0;
                    matrix[(i, i)] += 1.0;
                }
            }
        }
    }
    CouplingMatrix { matrix }
}

pub fn coupled_covariance(coupling: &CouplingMatrix, lambda: f64) -> Result<CoupledCovariance> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(MilError::input(
            "bag-graph",
            format!("coupling strength must be finite and non-negative, got {lambda}"),
        ));
    }
    let n = coupling.len();
    if lambda == 0.0 {
        return Ok(CoupledCovariance {
            sigma: DMatrix::identity(n, n),
            lambda,
        });
    }
    let precision = &coupling.matrix * lambda + DMatrix::identity(n, n);
    let chol = Cholesky::new(precision).ok_or_else(|| {
        MilError::numerical("bag-graph", "λC + I failed to factorize")
    })?;
    Ok(CoupledCovariance {
        sigma: symmetrize(&chol.inverse()),
        lambda,
    })
}

/// Per-bag coupled covariances, in dataset order. The block-diagonal
/// matrix over all instances is never assembled.
pub fn block_sigma(
    dataset: &MilDataset,
    lambda: f64,
    contiguity: &dyn Contiguity,
) -> Result<Vec<CoupledCovariance>> {
    if lambda > 0.0 {
        if let Some(bag) = dataset.bags.iter().find(|b| b.coords.is_none()) {
            return Err(MilError::input(
                "bag-graph",
                format!("bag '{}' has no grid coordinates but λ = {lambda} > 0", bag.id),
            ));
        }
    }
    dataset
        .bags
        .iter()
        .map(|bag| coupled_covariance(&build_coupling(bag, contiguity), lambda))
        .collect()
}
