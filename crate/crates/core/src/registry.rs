//! Name-keyed lookup of interchangeable strategy implementations.
//!
//! Grid contiguity rules and negative-orthant estimators are both families
//! of strategies selected by name from configuration or the command line.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{MilError, Result};

/// Anything that can be registered under a stable name.
pub trait Named {
    fn name(&self) -> &'static str;
}

pub struct Registry<T: ?Sized + Named> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Arc<T>>,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, entry: Arc<T>) {
        self.entries.insert(entry.name(), entry);
    }

    pub fn get(&self, name: &str) -> Result<Arc<T>> {
        self.entries.get(name).cloned().ok_or_else(|| {
            MilError::input(
                "registry",
                format!(
                    "unknown {} '{}' (available: {})",
                    self.kind,
                    name,
                    self.names().join(", ")
                ),
            )
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}
