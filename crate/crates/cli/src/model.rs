//! Model files.
//!
//! ```json
//! {
//!   "alphabet": 2,
//!   "transition": [[1, 1], [1, 1]],
//!   "labels": ["a", "b"],
//!   "functions": {
//!     "phi": { "depth": 1, "table": { "0": 0.0, "1": 0.0 } },
//!     "psi": { "depth": 1, "table": { "0": 1.0, "1": 0.0 } }
//!   }
//! }
//! ```
//!
//! Table keys are words over the symbols `0..alphabet`, written as digits, or
//! dot-separated (`"10.3"`) once the alphabet has more than ten symbols.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thermopress::sft::{LocallyConstantFn, SftModel, Word};
use thermopress::Error;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    alphabet: usize,
    transition: Vec<Vec<u8>>,
    #[serde(default)]
    labels: Option<Vec<String>>,
    #[serde(default)]
    functions: BTreeMap<String, RawFunction>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunction {
    depth: usize,
    table: BTreeMap<String, f64>,
}

#[derive(Debug)]
pub struct ModelFile {
    pub model: SftModel,
    pub functions: BTreeMap<String, LocallyConstantFn>,
    pub sha256: String,
}

fn semantic(message: String) -> Error {
    Error::ModelFile {
        message,
        line: None,
        column: None,
    }
}

fn parse_word(key: &str) -> Result<Word, String> {
    if key.contains('.') {
        key.split('.')
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|_| format!("bad symbol {s:?} in word {key:?}"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Word::new)
    } else {
        Word::parse_digits(key).map_err(|e| e.to_string())
    }
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let bytes = std::fs::read(path).map_err(|e| semantic(format!("{}: {e}", path.display())))?;
        Self::parse(&bytes)
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, Error> {
        let sha256 = hex::encode(Sha256::digest(bytes));
        let raw: RawModel = serde_json::from_slice(bytes).map_err(|e| Error::ModelFile {
            message: e.to_string(),
            line: Some(e.line()),
            column: Some(e.column()),
        })?;
        if raw.transition.len() != raw.alphabet {
            return Err(semantic(format!(
                "alphabet is {} but the transition matrix has {} rows",
                raw.alphabet,
                raw.transition.len()
            )));
        }
        let mut model = SftModel::new(raw.transition).map_err(|e| semantic(e.to_string()))?;
        if let Some(labels) = raw.labels {
            model = model.with_labels(labels).map_err(|e| semantic(e.to_string()))?;
        }
        let mut functions = BTreeMap::new();
        for (name, f) in raw.functions {
            let entries = f
                .table
                .iter()
                .map(|(k, v)| parse_word(k).map(|w| (w, *v)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| semantic(format!("function {name}: {e}")))?;
            if let Some((w, _)) = entries
                .iter()
                .find(|(w, _)| w.symbols().iter().any(|&s| s >= raw.alphabet))
            {
                return Err(semantic(format!(
                    "function {name}: word {w} uses a symbol outside the alphabet"
                )));
            }
            let lcf = LocallyConstantFn::from_table(&model, f.depth, entries)
                .map_err(|e| semantic(format!("function {name}: {e}")))?;
            functions.insert(name, lcf);
        }
        Ok(ModelFile {
            model,
            functions,
            sha256,
        })
    }

    pub fn function(&self, name: &str) -> Result<&LocallyConstantFn, Error> {
        self.functions.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.functions.keys().map(String::as_str).collect();
            Error::InvalidArgument(format!("no function named {name:?} (known: {})", known.join(", ")))
        })
    }

    /// Named potential, or zero.
    pub fn potential(&self, name: Option<&str>) -> Result<LocallyConstantFn, Error> {
        match name {
            Some(n) => self.function(n).cloned(),
            None => Ok(LocallyConstantFn::zero(&self.model)),
        }
    }
}
