//! Name-keyed registries of interchangeable strategies.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Strategies of one family, registered under a name and selected at runtime.
pub struct Registry<T: ?Sized> {
    entries: BTreeMap<String, Box<T>>,
    default: String,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(default: &str) -> Self {
        Registry {
            entries: BTreeMap::new(),
            default: default.to_string(),
        }
    }

    /// Registers `strategy` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &str, strategy: Box<T>) -> &mut Self {
        self.entries.insert(name.to_string(), strategy);
        self
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownStrategy(name.to_string()))
    }

    pub fn default_name(&self) -> &str {
        &self.default
    }

    pub fn get_default(&self) -> Result<&T> {
        self.get(&self.default)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }
}
