//! Minibatch Adam training for both geometries.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::EventDataset;
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::model::{self, DropoutSpec, Gradients, LossBreakdown, ModelParams};
use crate::seed;

const INIT_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;
const DROPOUT_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lambda_recon: f64,
    pub lambda_consist: f64,
    pub dropout_rate: f64,
    pub dim: usize,
    pub seed: u64,
    pub geometry: Geometry,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Save a checkpoint every this many epochs; 0 disables.
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 32,
            learning_rate: 0.01,
            lambda_recon: 1.0,
            lambda_consist: 1.0,
            dropout_rate: 0.1,
            dim: 32,
            seed: 0,
            geometry: Geometry::Euclidean {
                max_norm: crate::geometry::DEFAULT_MAX_NORM,
            },
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            checkpoint_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        let checks = [
            (self.batch_size > 0, "batch_size must be positive".to_string()),
            (self.dim > 0, "dim must be positive".to_string()),
            (
                self.learning_rate > 0.0 && self.learning_rate.is_finite(),
                format!("learning_rate must be positive, got {}", self.learning_rate),
            ),
            (
                (0.0..1.0).contains(&self.dropout_rate),
                format!("dropout_rate must be in [0, 1), got {}", self.dropout_rate),
            ),
            (
                self.adam_beta1 > 0.0 && self.adam_beta1 < 1.0,
                format!("adam_beta1 must be in (0, 1), got {}", self.adam_beta1),
            ),
            (
                self.adam_beta2 > 0.0 && self.adam_beta2 < 1.0,
                format!("adam_beta2 must be in (0, 1), got {}", self.adam_beta2),
            ),
            (self.adam_eps > 0.0, format!("adam_eps must be positive, got {}", self.adam_eps)),
            (
                self.lambda_recon.is_finite() && self.lambda_consist.is_finite(),
                "loss weights must be finite".to_string(),
            ),
        ];
        match checks.into_iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Usage(msg)),
            None => Ok(()),
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

/// First/second moment buffers and the step counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64], cfg: &AdamConfig) -> Result<()> {
    if params.len() != grads.len() || state.m.len() != grads.len() || state.v.len() != grads.len() {
        return Err(Error::Usage(format!(
            "adam shape mismatch: params {}, grads {}, moments {}/{}",
            params.len(),
            grads.len(),
            state.m.len(),
            state.v.len()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}

/// Everything needed to continue training exactly where it stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerState {
    pub epochs_completed: usize,
    #[serde(flatten)]
    pub adam: AdamState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_total: f64,
    pub mean_pred: f64,
    pub mean_recon: f64,
    pub mean_consist: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// JSON-lines, one record per epoch.
    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }

    /// Equality of everything except timings.
    pub fn same_losses(&self, other: &TrainLog) -> bool {
        self.records.len() == other.records.len()
            && self.records.iter().zip(&other.records).all(|(a, b)| {
                a.epoch == b.epoch
                    && a.mean_total.to_bits() == b.mean_total.to_bits()
                    && a.mean_pred.to_bits() == b.mean_pred.to_bits()
                    && a.mean_recon.to_bits() == b.mean_recon.to_bits()
                    && a.mean_consist.to_bits() == b.mean_consist.to_bits()
            })
    }
}

pub type EpochHook<'a> = dyn FnMut(&EpochRecord, &ModelParams, &TrainerState) -> Result<()> + 'a;

/// Knobs that do not change the result.
#[derive(Default)]
pub struct TrainOptions<'a> {
    /// Worker threads for per-sequence gradients; 0 or 1 runs inline.
    pub threads: usize,
    /// Parameters and optimizer state to continue from.
    pub resume: Option<(ModelParams, TrainerState)>,
    /// Called after every epoch.
    pub on_epoch: Option<&'a mut EpochHook<'a>>,
}

pub struct TrainOutcome {
    pub params: ModelParams,
    pub log: TrainLog,
    pub state: TrainerState,
}

pub fn train(dataset: &EventDataset, config: &TrainConfig) -> Result<(ModelParams, TrainLog)> {
    let out = train_with(dataset, config, TrainOptions::default())?;
    Ok((out.params, out.log))
}

fn param_count(p: &ModelParams) -> usize {
    p.embeddings.as_slice().len() + p.decoder_weights.as_slice().len() + p.decoder_bias.len()
}

fn flatten(p: &ModelParams) -> Vec<f64> {
    [p.embeddings.as_slice(), p.decoder_weights.as_slice(), &p.decoder_bias].concat()
}

fn unflatten(p: &mut ModelParams, flat: &[f64]) {
    let (e, rest) = flat.split_at(p.embeddings.as_slice().len());
    let (w, b) = rest.split_at(p.decoder_weights.as_slice().len());
    p.embeddings.as_mut_slice().copy_from_slice(e);
    p.decoder_weights.as_mut_slice().copy_from_slice(w);
    p.decoder_bias.copy_from_slice(b);
}

/// Dropout seed of sequence `index` in `epoch`.
pub fn dropout_seed(base: u64, epoch: usize, index: usize) -> u64 {
    seed::derive(seed::derive(seed::derive(base, DROPOUT_STREAM), epoch as u64), index as u64)
}

/// Visiting order of `n` sequences in `epoch`.
pub fn epoch_order(base: u64, epoch: usize, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seed::rng(seed::derive(seed::derive(base, SHUFFLE_STREAM), epoch as u64));
    order.shuffle(&mut rng);
    order
}

struct Pool {
    #[cfg(feature = "parallel")]
    inner: Option<rayon::ThreadPool>,
}

impl Pool {
    fn new(threads: usize) -> Result<Self> {
        #[cfg(feature = "parallel")]
        {
            let inner = if threads > 1 {
                Some(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(threads)
                        .build()
                        .map_err(|e| Error::Usage(format!("cannot start {threads} threads: {e}")))?,
                )
            } else {
                None
            };
            Ok(Pool { inner })
        }
        #[cfg(not(feature = "parallel"))]
        {
            if threads > 1 {
                log::warn!("built without parallel support; ignoring --threads {threads}");
            }
            Ok(Pool {})
        }
    }

    /// Results in input order regardless of scheduling.
    fn map<T, F>(&self, items: &[usize], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.inner {
            use rayon::prelude::*;
            return pool.install(|| items.par_iter().map(|&i| f(i)).collect());
        }
        items.iter().map(|&i| f(i)).collect()
    }
}

#[cfg(not(target_arch = "wasm32"))]
fn clock() -> impl Fn() -> f64 {
    let start = std::time::Instant::now();
    move || start.elapsed().as_secs_f64()
}

#[cfg(target_arch = "wasm32")]
fn clock() -> impl Fn() -> f64 {
    || 0.0
}

pub fn train_with(dataset: &EventDataset, config: &TrainConfig, options: TrainOptions<'_>) -> Result<TrainOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::usage("training dataset is empty"));
    }
    dataset.validate()?;
    let vocab_size = dataset.vocab.len();

    let (mut params, mut state) = match options.resume {
        Some((params, state)) => {
            if params.vocab_size() != vocab_size || params.dim() != config.dim {
                return Err(Error::Usage(format!(
                    "resumed model is {}x{}, dataset/config need {}x{}",
                    params.vocab_size(),
                    params.dim(),
                    vocab_size,
                    config.dim
                )));
            }
            if params.geometry != config.geometry {
                return Err(Error::usage("resumed model geometry differs from the config"));
            }
            if state.adam.m.len() != param_count(&params) || state.adam.v.len() != param_count(&params) {
                return Err(Error::usage("resumed optimizer state does not match the model"));
            }
            (params, state)
        }
        None => {
            let params = ModelParams::init(vocab_size, config.dim, config.geometry, seed::derive(config.seed, INIT_STREAM))?;
            let n = param_count(&params);
            (
                params,
                TrainerState {
                    epochs_completed: 0,
                    adam: AdamState::new(n),
                },
            )
        }
    };

    let pool = Pool::new(options.threads)?;
    let mut on_epoch = options.on_epoch;
    let adam = config.adam();
    let mut log = TrainLog::default();
    let elapsed = clock();

    for epoch in state.epochs_completed..config.epochs {
        let order = epoch_order(config.seed, epoch, dataset.len());
        let mut sums = [0.0f64; 4];
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            let results = pool.map(batch, |i| {
                let dropout = DropoutSpec {
                    rate: config.dropout_rate,
                    seed: dropout_seed(config.seed, epoch, i),
                };
                model::loss_and_gradients(
                    &params,
                    &dataset.sequences[i],
                    config.lambda_recon,
                    config.lambda_consist,
                    Some(&dropout),
                )
            });
            let mut grads = Gradients::zeros_like(&params);
            for (r, &i) in results.into_iter().zip(batch) {
                let (loss, g): (LossBreakdown, Gradients) = r?;
                if !loss.total.is_finite() || !g.is_finite() {
                    return Err(Error::Numerical(format!(
                        "non-finite loss in epoch {} batch {batch_idx} (sequence {i}, total {})",
                        epoch + 1,
                        loss.total
                    )));
                }
                grads.add_assign(&g);
                sums[0] += loss.total;
                sums[1] += loss.pred;
                sums[2] += loss.recon;
                sums[3] += loss.consist;
            }
            grads.scale(1.0 / batch.len() as f64);

            let mut flat = flatten(&params);
            adam_step(&mut state.adam, &mut flat, &grads.slices().concat(), &adam)?;
            unflatten(&mut params, &flat);
            if let Geometry::Hyperbolic { c } = params.geometry {
                params.project_embeddings(c);
            }
        }
        state.epochs_completed = epoch + 1;
        let n = dataset.len() as f64;
        let record = EpochRecord {
            epoch: epoch + 1,
            mean_total: sums[0] / n,
            mean_pred: sums[1] / n,
            mean_recon: sums[2] / n,
            mean_consist: sums[3] / n,
            wall_seconds: elapsed(),
        };
        log::info!(
            "epoch {} total {:.6} pred {:.6} recon {:.6} consist {:.6}",
            record.epoch,
            record.mean_total,
            record.mean_pred,
            record.mean_recon,
            record.mean_consist
        );
        if let Some(hook) = on_epoch.as_deref_mut() {
            hook(&record, &params, &state)?;
        }
        log.records.push(record);
    }
    Ok(TrainOutcome { params, log, state })
}
