//! Sparse Gaussian-process multiple-instance learning with a spatial
//! coupling prior on neighboring instance labels.
//!
//! Bags are collections of instances laid out on an integer grid. A graph
//! Laplacian over grid contiguity turns the latent per-instance variables
//! of each bag into a correlated Gaussian, and mean-field variational
//! inference alternates closed-form updates of the inducing-point
//! posterior and of the truncated latent variables. Setting the coupling
//! strength to zero gives the uncoupled probit model.

pub mod bag;
pub mod cli;
pub mod data;
pub mod error;
pub mod linalg;
pub mod predict;
pub mod registry;
pub mod trunc;
pub mod vi;

pub use bag::{Bag, GridCoord, MilDataset};
pub use error::{MilError, Result};
pub use predict::{evaluate, MetricsReport};
pub use vi::{fit, FitConfig, TrainedModel};
