//! Synthetic life-path sequences from a guided random walk.
//!
//! A walk starts at `start`. At every step, with probability `explore_prob`
//! the next event is drawn uniformly from all events; otherwise it is drawn
//! from the current event's weighted transitions (weights are normalised at
//! sample time). The walk stops at `terminal`; if `max_len` events have been
//! emitted without reaching it, `terminal` is appended.

use std::collections::BTreeMap;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{EventDataset, Vocabulary};
use crate::error::{Error, Result};
use crate::seed::{self, SeededRng};

/// The bundled default graph.
pub const DEFAULT_GRAPH_JSON: &str = include_str!("../data/default_graph.json");

pub const DEFAULT_EXPLORE_PROB: f64 = 0.1;
pub const DEFAULT_MAX_LEN: usize = 16;

fn default_explore() -> f64 {
    DEFAULT_EXPLORE_PROB
}

fn default_max_len() -> usize {
    DEFAULT_MAX_LEN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionGraph {
    /// Free-form documentation carried in the file; ignored by the generator.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub description: Vec<String>,
    pub events: Vec<String>,
    pub start: String,
    pub terminal: String,
    #[serde(default = "default_explore")]
    pub explore_prob: f64,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    /// source → list of (target, positive weight)
    pub transitions: BTreeMap<String, Vec<(String, f64)>>,
}

impl TransitionGraph {
    pub fn default_graph() -> Self {
        serde_json::from_str(DEFAULT_GRAPH_JSON).expect("bundled graph is valid JSON")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let graph: TransitionGraph = serde_json::from_str(text)?;
        graph.validate()?;
        Ok(graph)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_to_string(path)?;
        let graph: TransitionGraph = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        graph.validate()?;
        Ok(graph)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    /// Structural checks. Returns warnings for non-terminal events without
    /// outgoing transitions (reached only through exploration or the
    /// uniform fallback).
    pub fn validate(&self) -> Result<Vec<String>> {
        let vocab = Vocabulary::new(self.events.iter().cloned())?;
        if vocab.is_empty() {
            return Err(Error::Data("graph has no events".into()));
        }
        for (what, name) in [("start", &self.start), ("terminal", &self.terminal)] {
            if vocab.id(name).is_none() {
                return Err(Error::Data(format!("{what} event {name:?} is not listed in events")));
            }
        }
        if !(0.0..=1.0).contains(&self.explore_prob) {
            return Err(Error::Data(format!(
                "explore_prob must be in [0, 1], got {}",
                self.explore_prob
            )));
        }
        if self.max_len == 0 {
            return Err(Error::Data("max_len must be positive".into()));
        }
        for (src, targets) in &self.transitions {
            if vocab.id(src).is_none() {
                return Err(Error::Data(format!("transition source {src:?} is not an event")));
            }
            for (dst, w) in targets {
                if vocab.id(dst).is_none() {
                    return Err(Error::Data(format!(
                        "transition {src:?} -> {dst:?}: target is not an event"
                    )));
                }
                if !(*w > 0.0 && w.is_finite()) {
                    return Err(Error::Data(format!(
                        "transition {src:?} -> {dst:?}: weight must be positive, got {w}"
                    )));
                }
            }
        }
        let warnings: Vec<String> = self
            .events
            .iter()
            .filter(|e| **e != self.terminal)
            .filter(|e| self.transitions.get(*e).is_none_or(Vec::is_empty))
            .map(|e| format!("event {e:?} has no outgoing transitions; uniform fallback applies"))
            .collect();
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(warnings)
    }

    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary::from(self.events.clone())
    }

    /// Normalised transition probabilities of `source` under the exploration
    /// mixture: `(1 − ε)·w/Σw + ε/N`, or uniform for a dead end.
    pub fn next_event_distribution(&self, source: &str) -> Result<Vec<f64>> {
        let vocab = self.vocabulary();
        vocab.lookup(source)?;
        let n = vocab.len() as f64;
        let uniform = 1.0 / n;
        let mut probs = vec![self.explore_prob * uniform; vocab.len()];
        match self.transitions.get(source).filter(|t| !t.is_empty()) {
            Some(targets) => {
                let total: f64 = targets.iter().map(|(_, w)| w).sum();
                for (dst, w) in targets {
                    probs[vocab.lookup(dst)?] += (1.0 - self.explore_prob) * w / total;
                }
            }
            None => probs.iter_mut().for_each(|p| *p = uniform),
        }
        Ok(probs)
    }
}

/// Index-based form of a validated graph.
pub struct Walker {
    vocab: Vocabulary,
    start: usize,
    terminal: usize,
    explore_prob: f64,
    max_len: usize,
    targets: Vec<Option<(Vec<usize>, WeightedIndex<f64>)>>,
}

impl Walker {
    pub fn new(graph: &TransitionGraph) -> Result<Self> {
        graph.validate()?;
        let vocab = graph.vocabulary();
        let mut targets = Vec::with_capacity(vocab.len());
        for name in vocab.names() {
            let entry = match graph.transitions.get(name).filter(|t| !t.is_empty()) {
                Some(list) => {
                    let ids = list.iter().map(|(d, _)| vocab.lookup(d)).collect::<Result<_>>()?;
                    let dist = WeightedIndex::new(list.iter().map(|(_, w)| *w))
                        .map_err(|e| Error::Data(format!("transitions of {name:?}: {e}")))?;
                    Some((ids, dist))
                }
                None => None,
            };
            targets.push(entry);
        }
        Ok(Walker {
            start: vocab.lookup(&graph.start)?,
            terminal: vocab.lookup(&graph.terminal)?,
            explore_prob: graph.explore_prob,
            max_len: graph.max_len,
            vocab,
            targets,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn step(&self, current: usize, rng: &mut SeededRng) -> usize {
        let explore = rng.gen::<f64>() < self.explore_prob;
        match (&self.targets[current], explore) {
            (Some((ids, dist)), false) => ids[dist.sample(rng)],
            _ => rng.gen_range(0..self.vocab.len()),
        }
    }

    /// One walk as event ids; length is at most `max_len + 1`.
    pub fn walk(&self, rng: &mut SeededRng) -> Vec<usize> {
        let mut seq = vec![self.start];
        let mut current = self.start;
        while current != self.terminal {
            if seq.len() >= self.max_len {
                seq.push(self.terminal);
                break;
            }
            current = self.step(current, rng);
            seq.push(current);
        }
        seq
    }
}

pub fn generate_sequence(graph: &TransitionGraph, rng_seed: u64) -> Result<Vec<String>> {
    let walker = Walker::new(graph)?;
    let ids = walker.walk(&mut seed::rng(rng_seed));
    Ok(ids.iter().map(|&i| walker.vocab.name(i).to_string()).collect())
}

/// `n` walks from one seeded stream. Duplicate sequences are kept.
pub fn generate_dataset(graph: &TransitionGraph, n: usize, seed: u64) -> Result<EventDataset> {
    if n == 0 {
        return Err(Error::usage("number of sequences must be at least 1"));
    }
    let walker = Walker::new(graph)?;
    let mut rng = seed::rng(seed);
    let sequences = (0..n).map(|_| walker.walk(&mut rng)).collect();
    EventDataset::new(walker.vocab.clone(), sequences)
}
