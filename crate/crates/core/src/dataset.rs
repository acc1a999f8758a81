use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered list of event names with a name → id lookup.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(names: Vec<String>) -> Self {
        let mut vocab = Vocabulary::default();
        for n in names {
            vocab.insert(n);
        }
        vocab
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.names
    }
}

impl Vocabulary {
    pub fn new(names: impl IntoIterator<Item = impl Into<String>>) -> Result<Self> {
        let mut vocab = Vocabulary::default();
        for name in names {
            let name = name.into();
            if vocab.index.contains_key(&name) {
                return Err(Error::Data(format!("duplicate vocabulary entry {name:?}")));
            }
            vocab.insert(name);
        }
        Ok(vocab)
    }

    /// Id of `name`, adding it if missing.
    pub fn insert(&mut self, name: String) -> usize {
        if let Some(&id) = self.index.get(&name) {
            return id;
        }
        let id = self.names.len();
        self.index.insert(name.clone(), id);
        self.names.push(name);
        id
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Usage error for an unknown name, listing the closest entries.
    pub fn unknown(&self, name: &str) -> Error {
        let mut scored: Vec<(f64, &str)> = self
            .names
            .iter()
            .map(|n| (strsim::normalized_levenshtein(name, n), n.as_str()))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
        let near: Vec<&str> = scored.iter().take(3).map(|(_, n)| *n).collect();
        Error::usage(format!("unknown event {name:?}; closest matches: {}", near.join(", ")))
    }

    pub fn lookup(&self, name: &str) -> Result<usize> {
        self.id(name).ok_or_else(|| self.unknown(name))
    }
}

/// Vocabulary plus integer-encoded sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct EventDataset {
    pub vocab: Vocabulary,
    pub sequences: Vec<Vec<usize>>,
}

impl EventDataset {
    pub fn new(vocab: Vocabulary, sequences: Vec<Vec<usize>>) -> Result<Self> {
        let ds = EventDataset { vocab, sequences };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, seq) in self.sequences.iter().enumerate() {
            if seq.is_empty() {
                return Err(Error::Data(format!("sequence {i} is empty")));
            }
            if let Some(&bad) = seq.iter().find(|&&s| s >= self.vocab.len()) {
                return Err(Error::Data(format!(
                    "sequence {i} has event id {bad} outside vocabulary of size {}",
                    self.vocab.len()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn decode(&self, seq: &[usize]) -> Vec<&str> {
        seq.iter().map(|&s| self.vocab.name(s)).collect()
    }

    /// One JSON array of event names per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for seq in &self.sequences {
            out.push_str(&serde_json::to_string(&self.decode(seq)).expect("strings serialize"));
            out.push('\n');
        }
        out
    }

    /// Parse JSON-lines of event-name arrays. Without a base vocabulary, ids
    /// are assigned in order of first appearance.
    pub fn from_jsonl(text: &str, path: &Path, base: Option<Vocabulary>) -> Result<Self> {
        let mut vocab = base.unwrap_or_default();
        let mut sequences = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let names: Vec<String> = serde_json::from_str(line).map_err(|e| Error::Format {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("expected a JSON array of event names: {e}"),
            })?;
            if names.is_empty() {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: "empty sequence".into(),
                });
            }
            sequences.push(names.into_iter().map(|n| vocab.insert(n)).collect());
        }
        if sequences.is_empty() {
            return Err(Error::Format {
                path: path.to_path_buf(),
                line: 0,
                message: "no sequences found".into(),
            });
        }
        EventDataset::new(vocab, sequences)
    }

    pub fn load_jsonl(path: &Path) -> Result<Self> {
        let text = crate::io::read_to_string(path)?;
        EventDataset::from_jsonl(&text, path, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let vocab = Vocabulary::new(["a", "b", "c"]).unwrap();
        let ds = EventDataset::new(vocab.clone(), vec![vec![0, 2], vec![1]]).unwrap();
        let text = ds.to_jsonl();
        assert_eq!(text, "[\"a\",\"c\"]\n[\"b\"]\n");
        let back = EventDataset::from_jsonl(&text, Path::new("x"), Some(vocab)).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn bad_line_reports_line_number() {
        let err = EventDataset::from_jsonl("[\"a\"]\nnope\n", Path::new("f.jsonl"), None).unwrap_err();
        assert!(err.to_string().starts_with("f.jsonl:2:"), "{err}");
    }

    #[test]
    fn unknown_name_suggests() {
        let vocab = Vocabulary::new(["marriage", "engagement"]).unwrap();
        let msg = vocab.lookup("mariage").unwrap_err().to_string();
        assert!(msg.contains("marriage"));
    }

    #[test]
    fn rejects_empty_and_out_of_range() {
        let vocab = Vocabulary::new(["a"]).unwrap();
        assert!(EventDataset::new(vocab.clone(), vec![vec![]]).is_err());
        assert!(EventDataset::new(vocab, vec![vec![1]]).is_err());
    }
}
