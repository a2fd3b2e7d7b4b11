use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::{compute_rmatrix, RMatrix, RMatrixError};
use crate::modules::{ModuleDescriptor, ModuleRealization};

type Slot = Arc<OnceLock<Result<Arc<RMatrix>, RMatrixError>>>;

/// Compute-once store of symbolic R-matrices keyed by the ordered pair of
/// module descriptors. Safe to share between threads; concurrent requests
/// for the same pair wait for a single computation.
#[derive(Default)]
pub struct RMatrixCache {
    slots: Mutex<HashMap<(ModuleDescriptor, ModuleDescriptor), Slot>>,
}

impl RMatrixCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(
        &self,
        v1: &Arc<ModuleRealization>,
        v2: &Arc<ModuleRealization>,
    ) -> Result<Arc<RMatrix>, RMatrixError> {
        let key = (v1.descriptor().clone(), v2.descriptor().clone());
        let slot = {
            let mut map = self.slots.lock().expect("cache lock poisoned");
            map.entry(key).or_default().clone()
        };
        slot.get_or_init(|| compute_rmatrix(v1, v2).map(Arc::new))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.slots.lock().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
