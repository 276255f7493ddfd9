//! In-memory session store with least-recently-used eviction.

use std::sync::Arc;
use std::time::SystemTime;

use indexmap::IndexMap;
use pma_core::{Analysis, DataFrame};

pub const DEFAULT_MAX_DATASETS: usize = 16;
pub const DEFAULT_MAX_MODELS: usize = 64;

/// A fitted model together with the design it came from.
#[derive(Debug)]
pub struct StoredModel {
    pub dataset_id: String,
    pub frame: Arc<DataFrame>,
    pub analysis: Analysis,
    pub created: SystemTime,
}

/// Bounded LRU map; the front of the map is the least recently used entry.
#[derive(Debug)]
struct Lru<V> {
    entries: IndexMap<String, Arc<V>>,
    capacity: usize,
}

impl<V> Lru<V> {
    fn new(capacity: usize) -> Self {
        Lru {
            entries: IndexMap::new(),
            capacity: capacity.max(1),
        }
    }

    fn get(&mut self, id: &str) -> Option<Arc<V>> {
        let index = self.entries.get_index_of(id)?;
        let last = self.entries.len() - 1;
        self.entries.move_index(index, last);
        self.entries.get_index(last).map(|(_, v)| Arc::clone(v))
    }

    fn insert(&mut self, id: String, value: Arc<V>) {
        self.entries.insert(id, value);
        while self.entries.len() > self.capacity {
            self.entries.shift_remove_index(0);
        }
    }

    fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Datasets and models keyed by opaque ids.
///
/// Not synchronized itself; the service wraps it in a mutex.
#[derive(Debug)]
pub struct SessionStore {
    datasets: Lru<DataFrame>,
    models: Lru<StoredModel>,
}

impl SessionStore {
    pub fn new(max_datasets: usize, max_models: usize) -> Self {
        SessionStore {
            datasets: Lru::new(max_datasets),
            models: Lru::new(max_models),
        }
    }

    pub fn insert_dataset(&mut self, frame: DataFrame) -> (String, Arc<DataFrame>) {
        let id = new_id("ds");
        let frame = Arc::new(frame);
        self.datasets.insert(id.clone(), Arc::clone(&frame));
        (id, frame)
    }

    pub fn dataset(&mut self, id: &str) -> Option<Arc<DataFrame>> {
        self.datasets.get(id)
    }

    pub fn insert_model(&mut self, model: StoredModel) -> String {
        let id = new_id("m");
        self.models.insert(id.clone(), Arc::new(model));
        id
    }

    pub fn model(&mut self, id: &str) -> Option<Arc<StoredModel>> {
        self.models.get(id)
    }

    pub fn dataset_count(&self) -> usize {
        self.datasets.len()
    }

    pub fn model_count(&self) -> usize {
        self.models.len()
    }
}

impl Default for SessionStore {
    fn default() -> Self {
        SessionStore::new(DEFAULT_MAX_DATASETS, DEFAULT_MAX_MODELS)
    }
}

fn new_id(prefix: &str) -> String {
    format!("{prefix}-{}", uuid::Uuid::new_v4().simple())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> DataFrame {
        pma_core::parse_data("id,s1\ng,1", ',').unwrap()
    }

    #[test]
    fn lru_evicts_least_recently_used() {
        let mut lru = Lru::new(2);
        lru.insert("a".into(), Arc::new(1));
        lru.insert("b".into(), Arc::new(2));
        assert_eq!(lru.get("a").as_deref(), Some(&1));
        lru.insert("c".into(), Arc::new(3));
        assert!(lru.get("b").is_none());
        assert!(lru.get("a").is_some());
        assert!(lru.get("c").is_some());
        assert_eq!(lru.len(), 2);
    }

    #[test]
    fn dataset_ids_are_distinct() {
        let mut store = SessionStore::new(1, 1);
        let (a, _) = store.insert_dataset(tiny());
        let (b, _) = store.insert_dataset(tiny());
        assert_ne!(a, b);
        assert!(store.dataset(&a).is_none());
        assert!(store.dataset(&b).is_some());
        assert_eq!(store.dataset_count(), 1);
    }
}
