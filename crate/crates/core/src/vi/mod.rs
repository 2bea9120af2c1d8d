//! Coordinate-ascent mean-field variational inference.
//!
//! Each iteration updates `q(u)` from the current expectations of the
//! latent variables, then recomputes those expectations from `q(u)`.
//! Because the inducing covariance does not depend on the latent
//! expectations, its factorization is built once per fit.

mod model;
mod trainer;
mod updates;

pub use model::{FitConfig, FitDiagnostics, TrainedModel, MODEL_FORMAT_VERSION};
pub use trainer::{fit, Trainer};
pub use updates::{update_qm, update_qu, AugmentedPosterior, GramCache, InducingPosterior, QuSolver};

pub(crate) use updates::jittered_inducing_gram;
