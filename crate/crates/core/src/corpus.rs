//! Tagged-text ingestion and POS-pattern extraction.
//!
//! File format: one sentence per line, space-separated `token/TAG` pairs.
//! The last `/` in a pair separates token from tag, so `1/2/CD` is the
//! token `1/2`.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{EventDataset, Vocabulary};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::seed;

pub const UNK: &str = "<unk>";
pub const UNK_ID: usize = 0;
pub const DEFAULT_MAX_PER_PATTERN: usize = 200;
pub const DEFAULT_PATTERNS: &str = "AT-JJ-NN,IN-AT-NN,PPS-VBD,NN-NN";

/// The bundled 500-sentence sample.
pub const SAMPLE_CORPUS: &str = include_str!("../data/sample_corpus.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedCorpus {
    pub sentences: Vec<Vec<(String, String)>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternOccurrence {
    pub pattern: Vec<String>,
    pub tokens: Vec<String>,
    pub sentence_index: usize,
    pub start_index: usize,
}

impl PatternOccurrence {
    pub fn label(&self) -> String {
        self.pattern.join("-")
    }
}

/// Base form of a Brown tag: cut at the first `-` or `$`, uppercase.
/// Tags that would become empty (such as `--`) are kept whole.
pub fn normalize_tag(tag: &str) -> String {
    let base = tag.split(['-', '$']).next().unwrap_or("");
    if base.is_empty() {
        tag.to_uppercase()
    } else {
        base.to_uppercase()
    }
}

impl TaggedCorpus {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut sentences = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut sentence = Vec::new();
            for pair in line.split_whitespace() {
                let bad = |message: String| Error::Format {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message,
                };
                let (token, tag) = pair
                    .rsplit_once('/')
                    .ok_or_else(|| bad(format!("expected token/TAG, got {pair:?}")))?;
                if token.is_empty() || tag.is_empty() {
                    return Err(bad(format!("empty token or tag in {pair:?}")));
                }
                sentence.push((token.to_lowercase(), normalize_tag(tag)));
            }
            sentences.push(sentence);
        }
        if sentences.is_empty() {
            return Err(Error::Format {
                path: path.to_path_buf(),
                line: 0,
                message: "corpus has no sentences".into(),
            });
        }
        Ok(TaggedCorpus { sentences })
    }

    pub fn sample() -> Self {
        TaggedCorpus::parse(SAMPLE_CORPUS, Path::new("<bundled sample>")).expect("bundled sample parses")
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }
}

pub fn load_tagged_corpus(path: &Path) -> Result<TaggedCorpus> {
    TaggedCorpus::parse(&crate::io::read_to_string(path)?, path)
}

/// `<unk>` at id 0, then every token seen at least `min_count` times by
/// descending frequency, ties broken lexicographically.
pub fn build_vocab(corpus: &TaggedCorpus, min_count: usize) -> Result<Vocabulary> {
    if min_count == 0 {
        return Err(Error::usage("min_count must be at least 1"));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for (token, _) in corpus.sentences.iter().flatten() {
        *counts.entry(token.as_str()).or_default() += 1;
    }
    let mut kept: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(t, c)| c >= min_count && t != UNK)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    Vocabulary::new(std::iter::once(UNK).chain(kept.into_iter().map(|(t, _)| t)))
}

/// Id of `token`, or of `<unk>` wherever the vocabulary placed it.
pub fn token_id(vocab: &Vocabulary, token: &str) -> Result<usize> {
    vocab
        .id(token)
        .or_else(|| vocab.id(UNK))
        .ok_or_else(|| Error::Data(format!("token {token:?} is not in the vocabulary and there is no {UNK} entry")))
}

/// One sequence of word ids per sentence; tags are dropped.
pub fn to_sequences(corpus: &TaggedCorpus, vocab: &Vocabulary) -> Result<EventDataset> {
    if vocab.id(UNK) != Some(UNK_ID) {
        return Err(Error::usage("corpus vocabulary must reserve <unk> at id 0"));
    }
    let sequences = corpus
        .sentences
        .iter()
        .map(|s| s.iter().map(|(t, _)| token_id(vocab, t)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    EventDataset::new(vocab.clone(), sequences)
}

/// Parse `AT-JJ-NN,IN-AT-NN` into tag lists.
pub fn parse_patterns(spec: &str) -> Result<Vec<Vec<String>>> {
    let patterns: Vec<Vec<String>> = spec
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.split('-').map(|t| t.trim().to_uppercase()).collect::<Vec<_>>())
        .collect();
    if patterns.is_empty() || patterns.iter().flatten().any(String::is_empty) {
        return Err(Error::Usage(format!("bad pattern list {spec:?}; expected e.g. AT-JJ-NN,IN-AT-NN")));
    }
    Ok(patterns)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternMatches {
    pub occurrences: Vec<PatternOccurrence>,
    /// Patterns with no occurrence at all.
    pub missing: Vec<String>,
}

/// Every contiguous match of each pattern (overlaps included), reduced to
/// a seeded uniform subsample of `max_per_pattern` when there are more.
/// Output is grouped by pattern, in corpus order within each group.
pub fn find_pattern_occurrences(
    corpus: &TaggedCorpus,
    patterns: &[Vec<String>],
    max_per_pattern: usize,
    seed: u64,
) -> Result<PatternMatches> {
    if patterns.is_empty() || patterns.iter().any(Vec::is_empty) {
        return Err(Error::usage("patterns must be a nonempty list of nonempty tag lists"));
    }
    if max_per_pattern == 0 {
        return Err(Error::usage("max_per_pattern must be positive"));
    }
    let mut occurrences = Vec::new();
    let mut missing = Vec::new();
    for (pi, pattern) in patterns.iter().enumerate() {
        let mut found = Vec::new();
        for (si, sentence) in corpus.sentences.iter().enumerate() {
            if sentence.len() < pattern.len() {
                continue;
            }
            for start in 0..=sentence.len() - pattern.len() {
                let window = &sentence[start..start + pattern.len()];
                if window.iter().zip(pattern).all(|((_, tag), p)| tag == p) {
                    found.push(PatternOccurrence {
                        pattern: pattern.clone(),
                        tokens: window.iter().map(|(t, _)| t.clone()).collect(),
                        sentence_index: si,
                        start_index: start,
                    });
                }
            }
        }
        if found.is_empty() {
            log::warn!("pattern {} has no occurrences; excluded", pattern.join("-"));
            missing.push(pattern.join("-"));
            continue;
        }
        if found.len() > max_per_pattern {
            let mut rng = seed::rng(seed::derive(seed, pi as u64));
            let mut keep = rand::seq::index::sample(&mut rng, found.len(), max_per_pattern).into_vec();
            keep.sort_unstable();
            found = keep.into_iter().map(|i| found[i].clone()).collect();
        }
        occurrences.extend(found);
    }
    Ok(PatternMatches { occurrences, missing })
}

/// Composed vector of each occurrence with its pattern label: a sum of
/// word embeddings, or a left-to-right Möbius sum on the ball.
pub fn compose_vectors(
    params: &ModelParams,
    vocab: &Vocabulary,
    occurrences: &[PatternOccurrence],
) -> Result<Vec<(Vec<f64>, String)>> {
    if params.vocab_size() != vocab.len() {
        return Err(Error::Data(format!(
            "vocabulary has {} entries but the model has {}",
            vocab.len(),
            params.vocab_size()
        )));
    }
    occurrences
        .iter()
        .map(|occ| {
            let ids = occ.tokens.iter().map(|t| token_id(vocab, t)).collect::<Result<Vec<_>>>()?;
            let rows = ids.iter().map(|&i| params.embedding(i));
            Ok((params.geometry.compose(params.dim(), rows), occ.label()))
        })
        .collect()
}
