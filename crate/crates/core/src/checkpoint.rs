//! Single-document JSON checkpoints.
//!
//! ```text
//! {schema_version, geometry: {kind, c | max_norm}, dim, vocab: [...],
//!  embeddings: [[...]], decoder_weights: [[...]] | null, decoder_bias: [...] | null,
//!  trainer_state?: {epochs_completed, step, m, v}}
//! ```
//!
//! Every float is written with 17 significant digits, which round-trips
//! `f64` exactly.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Vocabulary;
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::matrix::Matrix;
use crate::model::ModelParams;
use crate::trainer::TrainerState;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub geometry: Geometry,
    pub dim: usize,
    pub vocab: Vec<String>,
    pub embeddings: Matrix,
    pub decoder_weights: Option<Matrix>,
    pub decoder_bias: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trainer_state: Option<TrainerState>,
}

impl Checkpoint {
    pub fn from_params(params: &ModelParams, vocab: &Vocabulary) -> Self {
        Checkpoint {
            schema_version: SCHEMA_VERSION,
            geometry: params.geometry,
            dim: params.dim(),
            vocab: vocab.names().to_vec(),
            embeddings: params.embeddings.clone(),
            decoder_weights: Some(params.decoder_weights.clone()),
            decoder_bias: Some(params.decoder_bias.clone()),
            trainer_state: None,
        }
    }

    /// Embedding-only checkpoint (decoder fields null), as written for the
    /// skip-gram baseline.
    pub fn from_embeddings(embeddings: &Matrix, vocab: &Vocabulary) -> Self {
        Checkpoint {
            schema_version: SCHEMA_VERSION,
            geometry: Geometry::Euclidean { max_norm: f64::MAX },
            dim: embeddings.cols(),
            vocab: vocab.names().to_vec(),
            embeddings: embeddings.clone(),
            decoder_weights: None,
            decoder_bias: None,
            trainer_state: None,
        }
    }

    pub fn with_trainer_state(mut self, state: TrainerState) -> Self {
        self.trainer_state = Some(state);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Data(format!(
                "unsupported checkpoint schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.embeddings.rows() != self.vocab.len() || self.embeddings.cols() != self.dim {
            return Err(Error::Data(format!(
                "embeddings are {}x{}, expected {}x{}",
                self.embeddings.rows(),
                self.embeddings.cols(),
                self.vocab.len(),
                self.dim
            )));
        }
        if self.decoder_weights.is_some() != self.decoder_bias.is_some() {
            return Err(Error::Data("decoder_weights and decoder_bias must both be present or both null".into()));
        }
        Vocabulary::new(self.vocab.iter().cloned())?;
        self.params().validate()
    }

    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary::from(self.vocab.clone())
    }

    /// Model parameters; a null decoder becomes a zero decoder.
    pub fn params(&self) -> ModelParams {
        let (v, d) = (self.vocab.len(), self.dim);
        ModelParams {
            geometry: self.geometry,
            embeddings: self.embeddings.clone(),
            decoder_weights: self
                .decoder_weights
                .clone()
                .unwrap_or_else(|| Matrix::zeros(v, d)),
            decoder_bias: self.decoder_bias.clone().unwrap_or_else(|| vec![0.0; v]),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let finite = self.embeddings.is_finite()
            && self.decoder_weights.as_ref().is_none_or(Matrix::is_finite)
            && self.decoder_bias.iter().flatten().all(|v| v.is_finite())
            && self.trainer_state.iter().all(|s| s.adam.m.iter().chain(&s.adam.v).all(|v| v.is_finite()));
        if !finite {
            return Err(Error::Numerical("non-finite parameter cannot be checkpointed".into()));
        }
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, SignificantDigits);
        self.serialize(&mut ser)?;
        out.push(b'\n');
        Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        ckpt.validate()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_to_string(path)?;
        let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        ckpt.validate()?;
        Ok(ckpt)
    }
}

/// Compact JSON with floats printed as `d.dddddddddddddddde±x`.
/// Non-finite values never reach it; serde_json writes those as null.
pub struct SignificantDigits;

impl serde_json::ser::Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}
