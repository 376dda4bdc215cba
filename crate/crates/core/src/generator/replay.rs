use std::collections::BTreeMap;

use crate::engine::SupportConfig;

/// Gate indices into the dictionary, one row per layer.
pub type Actions = Vec<Vec<usize>>;

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayEntry {
    pub actions: Actions,
    pub reward: f64,
}

/// Best circuits seen per support, deduplicated, highest reward first.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    entries: BTreeMap<SupportConfig, Vec<ReplayEntry>>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, entries: BTreeMap::new() }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Returns true if the entry was kept.
    pub fn insert(&mut self, q: SupportConfig, actions: &Actions, reward: f64) -> bool {
        if self.capacity == 0 || !reward.is_finite() {
            return false;
        }
        let list = self.entries.entry(q).or_default();
        if list.iter().any(|e| &e.actions == actions) {
            return false;
        }
        if list.len() == self.capacity && list.last().is_some_and(|worst| worst.reward >= reward) {
            return false;
        }
        let pos = list.partition_point(|e| e.reward >= reward);
        list.insert(pos, ReplayEntry { actions: actions.clone(), reward });
        list.truncate(self.capacity);
        true
    }

    pub fn get(&self, q: &SupportConfig) -> &[ReplayEntry] {
        self.entries.get(q).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn best(&self, q: &SupportConfig) -> Option<&ReplayEntry> {
        self.get(q).first()
    }

    /// Number of stored circuits.
    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn supports(&self) -> impl Iterator<Item = &SupportConfig> {
        self.entries.keys()
    }

    /// All `(support, entry)` pairs in support order, best first within each.
    pub fn iter(&self) -> impl Iterator<Item = (&SupportConfig, &ReplayEntry)> {
        self.entries.iter().flat_map(|(q, list)| list.iter().map(move |e| (q, e)))
    }
}
