use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use krk_core::tablebase::{self, GenOptions, Tablebase, TablebaseError};
use krk_core::Dims;

type Slot = Arc<Mutex<Option<Arc<Tablebase>>>>;

/// Lazily generated tables keyed by board size. Concurrent requests for the
/// same size wait on that size's slot, so each table is built once while it
/// stays cached. Least recently used tables are dropped when the byte
/// budget is exceeded.
#[derive(Debug)]
pub struct TableCache {
    cap: usize,
    budget_bytes: u64,
    dir: Option<PathBuf>,
    inner: Mutex<Inner>,
}

#[derive(Debug, Default)]
struct Inner {
    slots: HashMap<Dims, Slot>,
    /// Finished tables, least recently used first.
    ready: Vec<Dims>,
}

impl TableCache {
    pub fn new(cap: usize, budget_bytes: u64, dir: Option<PathBuf>) -> Self {
        Self {
            cap,
            budget_bytes,
            dir,
            inner: Mutex::default(),
        }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Fetches or builds the table for `dims`. Blocks while generating.
    pub fn get(&self, dims: Dims) -> Result<Arc<Tablebase>, TablebaseError> {
        tablebase::check_cap(dims, self.cap)?;
        let slot = {
            let mut inner = self.inner.lock().unwrap();
            let slot = inner.slots.entry(dims).or_default().clone();
            if let Some(i) = inner.ready.iter().position(|d| *d == dims) {
                let d = inner.ready.remove(i);
                inner.ready.push(d);
            }
            slot
        };
        let mut guard = slot.lock().unwrap();
        if let Some(tb) = guard.as_ref() {
            return Ok(tb.clone());
        }
        let tb = match self.load_from_dir(dims) {
            Some(tb) => tb,
            None => tablebase::generate_with(dims, GenOptions { cap: self.cap, threads: 0 })?,
        };
        let tb = Arc::new(tb);
        *guard = Some(tb.clone());
        drop(guard);
        let mut inner = self.inner.lock().unwrap();
        inner.ready.retain(|d| *d != dims);
        inner.ready.push(dims);
        self.evict(&mut inner);
        Ok(tb)
    }

    fn load_from_dir(&self, dims: Dims) -> Option<Tablebase> {
        let path = self.dir.as_ref()?.join(tablebase::file_name(dims));
        if !path.exists() {
            return None;
        }
        match Tablebase::load(&path) {
            Ok(tb) if tb.dims() == dims => Some(tb),
            Ok(_) => None,
            Err(e) => {
                tracing::warn!("ignoring {}: {e}", path.display());
                None
            }
        }
    }

    // The newest table always stays, even if it alone exceeds the budget.
    fn evict(&self, inner: &mut Inner) {
        let mut total: u64 = inner.ready.iter().map(|d| tablebase::required_bytes(*d)).sum();
        while total > self.budget_bytes && inner.ready.len() > 1 {
            let d = inner.ready.remove(0);
            inner.slots.remove(&d);
            total -= tablebase::required_bytes(d);
        }
    }

    /// Board sizes with a finished table, sorted.
    pub fn cached(&self) -> Vec<Dims> {
        let mut out = self.inner.lock().unwrap().ready.clone();
        out.sort();
        out
    }
}
