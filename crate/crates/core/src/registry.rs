//! Name-keyed registries of interchangeable strategies.
//!
//! Each pluggable stage (detection filtering, AP integration) defines a trait
//! and a parameter struct; a registry maps a stable name to a constructor that
//! builds a boxed trait object from those parameters. The CLI resolves
//! strategies by name through these registries.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub type Constructor<T, P> = fn(&P) -> Result<Box<T>>;

pub struct Registry<T: ?Sized, P> {
    kind: &'static str,
    entries: BTreeMap<&'static str, (&'static str, Constructor<T, P>)>,
}

impl<T: ?Sized, P> Registry<T, P> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `ctor` under `name`, replacing any previous entry.
    pub fn register(
        &mut self,
        name: &'static str,
        summary: &'static str,
        ctor: Constructor<T, P>,
    ) -> &mut Self {
        self.entries.insert(name, (summary, ctor));
        self
    }

    pub fn build(&self, name: &str, params: &P) -> Result<Box<T>> {
        match self.entries.get(name) {
            Some((_, ctor)) => ctor(params),
            None => Err(Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().collect::<Vec<_>>().join(", "),
            }),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    /// `(name, one-line summary)` pairs in name order.
    pub fn describe(&self) -> impl Iterator<Item = (&'static str, &'static str)> + '_ {
        self.entries
            .iter()
            .map(|(name, (summary, _))| (*name, *summary))
    }
}

impl<T: ?Sized, P> std::fmt::Debug for Registry<T, P> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("entries", &self.entries.keys().collect::<Vec<_>>())
            .finish()
    }
}
