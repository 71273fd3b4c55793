//! Name-keyed factories for interchangeable strategies.
//!
//! Each family (dispersion symbols, nonlinearities, descent preconditioners,
//! time integrators) registers constructors under a short name. A spec string
//! has the form `name` or `name:args`, e.g. `rational:0.5` or `modulus:2,-1`;
//! the part after the colon is handed to the factory unparsed.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub type Factory<T> = Box<dyn Fn(Option<&str>) -> Result<T> + Send + Sync>;

pub struct Registry<T> {
    kind: &'static str,
    factories: BTreeMap<String, Factory<T>>,
}

impl<T> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            factories: BTreeMap::new(),
        }
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(Option<&str>) -> Result<T> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(split_spec(name).0)
    }

    /// Builds the strategy named by `spec`.
    pub fn build(&self, spec: &str) -> Result<T> {
        let (name, args) = split_spec(spec);
        match self.factories.get(name) {
            Some(factory) => factory(args),
            None => Err(Error::UnknownName {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().join(", "),
            }),
        }
    }
}

fn split_spec(spec: &str) -> (&str, Option<&str>) {
    match spec.split_once(':') {
        Some((name, args)) => (name.trim(), Some(args.trim())),
        None => (spec.trim(), None),
    }
}

/// Parses a comma-separated list of reals from a factory argument.
pub fn parse_reals(args: Option<&str>, what: &str) -> Result<Vec<f64>> {
    let args = args.ok_or_else(|| Error::InvalidInput(format!("{what} needs arguments")))?;
    args.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("{what}: cannot parse `{s}` as a number")))
        })
        .collect()
}

pub fn no_args(args: Option<&str>, what: &str) -> Result<()> {
    match args {
        None => Ok(()),
        Some("") => Ok(()),
        Some(a) => Err(Error::InvalidInput(format!("{what} takes no arguments, got `{a}`"))),
    }
}
