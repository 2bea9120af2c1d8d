use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{MilError, Result};

/// Number of ×10 jitter increases tried after the initial attempt.
pub const JITTER_ESCALATIONS: u32 = 3;

/// Cholesky factor of `M + jitter·I`, remembering which jitter succeeded.
#[derive(Clone, Debug)]
pub struct PsdFactor {
    chol: Cholesky<f64, Dyn>,
    jitter: f64,
}

impl PsdFactor {
    /// Factorizes `m + jitter·I`, escalating the jitter ×10 up to
    /// [`JITTER_ESCALATIONS`] times.
    pub fn new(m: &DMatrix<f64>, jitter: f64) -> Result<Self> {
        let attempts: Vec<f64> = (0..=JITTER_ESCALATIONS)
            .map(|k| jitter * 10f64.powi(k as i32))
            .collect();
        Self::with_attempts(m, &attempts)
    }

    /// Tries the matrix as given first, then falls back to [`PsdFactor::new`].
    /// Used for matrices that already carry a regularized diagonal.
    pub fn exact_or_jitter(m: &DMatrix<f64>, jitter: f64) -> Result<Self> {
        let mut attempts = vec![0.0];
        attempts.extend((0..=JITTER_ESCALATIONS).map(|k| jitter * 10f64.powi(k as i32)));
        Self::with_attempts(m, &attempts)
    }

    fn with_attempts(m: &DMatrix<f64>, attempts: &[f64]) -> Result<Self> {
        if !m.is_square() {
            return Err(MilError::input(
                "linalg",
                format!("matrix must be square, got {}x{}", m.nrows(), m.ncols()),
            ));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(MilError::numerical("linalg", "matrix has non-finite entries"));
        }
        let n = m.nrows();
        for &jitter in attempts {
            let mut shifted = m.clone();
            for i in 0..n {
                shifted[(i, i)] += jitter;
            }
            if let Some(chol) = Cholesky::new(shifted) {
                return Ok(Self { chol, jitter });
            }
        }
        Err(MilError::numerical(
            "linalg",
            format!(
                "Cholesky factorization failed; final jitter tried {:e}",
                attempts.last().copied().unwrap_or(0.0)
            ),
        ))
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn l(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// `L⁻¹ b`, the forward substitution half of a solve.
    pub fn solve_lower(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = b.clone();
        self.chol.l_dirty().solve_lower_triangular_mut(&mut out);
        out
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        symmetrize(&self.chol.inverse())
    }
}

/// Solves `(m + jitter·I) X = b` through a Cholesky factorization.
pub fn psd_solve(m: &DMatrix<f64>, b: &DMatrix<f64>, jitter: f64) -> Result<DMatrix<f64>> {
    if m.nrows() != b.nrows() {
        return Err(MilError::input(
            "linalg",
            format!("row mismatch: {} vs {}", m.nrows(), b.nrows()),
        ));
    }
    Ok(PsdFactor::new(m, jitter)?.solve(b))
}

/// `(m + mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Symmetrizes `m` and raises every eigenvalue below `floor` to `floor`.
/// Matrices already comfortably positive definite are returned unchanged
/// apart from symmetrization.
pub fn floor_eigenvalues(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let sym = symmetrize(m);
    let mut shifted = sym.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] -= floor;
    }
    if Cholesky::new(shifted).is_some() {
        return sym;
    }
    let eig = sym.symmetric_eigen();
    let vals = eig.eigenvalues.map(|v| v.max(floor));
    let vecs = &eig.eigenvectors;
    symmetrize(&(vecs * DMatrix::from_diagonal(&vals) * vecs.transpose()))
}
