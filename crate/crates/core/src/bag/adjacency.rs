use std::sync::Arc;

use crate::registry::{Named, Registry};

use super::GridCoord;

pub const DEFAULT_CONTIGUITY: &str = "4-neighbor";

/// Rule deciding which grid cells count as contiguous.
pub trait Contiguity: Named + Send + Sync {
    /// Offsets of the neighbors of a cell. Must be closed under negation.
    fn offsets(&self) -> &'static [(i64, i64)];

    fn contiguous(&self, a: GridCoord, b: GridCoord) -> bool {
        let d = (b.row - a.row, b.col - a.col);
        self.offsets().contains(&d)
    }
}

/// Edge-sharing cells.
pub struct FourNeighbor;

impl Named for FourNeighbor {
    fn name(&self) -> &'static str {
        DEFAULT_CONTIGUITY
    }
}

impl Contiguity for FourNeighbor {
    fn offsets(&self) -> &'static [(i64, i64)] {
        &[(-1, 0), (0, -1), (0, 1), (1, 0)]
    }
}

/// Edge- or corner-sharing cells.
pub struct EightNeighbor;

impl Named for EightNeighbor {
    fn name(&self) -> &'static str {
        "8-neighbor"
    }
}

impl Contiguity for EightNeighbor {
    fn offsets(&self) -> &'static [(i64, i64)] {
        &[
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, -1),
            (0, 1),
            (1, -1),
            (1, 0),
            (1, 1),
        ]
    }
}

pub fn contiguity_registry() -> Registry<dyn Contiguity> {
    let mut reg: Registry<dyn Contiguity> = Registry::new("contiguity");
    reg.register(Arc::new(FourNeighbor));
    reg.register(Arc::new(EightNeighbor));
    reg
}
