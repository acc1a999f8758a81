//! Skip-gram with negative sampling, trained by plain SGD.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::EventDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::{self, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgnsConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub unigram_power: f64,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            dim: 64,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 0,
            unigram_power: 0.75,
        }
    }
}

impl SgnsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.window == 0 || self.negatives == 0 {
            return Err(Error::usage("dim, window and negatives must all be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Usage(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if !self.unigram_power.is_finite() || self.unigram_power < 0.0 {
            return Err(Error::Usage(format!("unigram_power must be nonnegative, got {}", self.unigram_power)));
        }
        Ok(())
    }
}

/// Input (published) and output vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsModel {
    pub input: Matrix,
    pub output: Matrix,
}

/// Draws ids with probability proportional to `count^power`.
pub struct NegativeSampler {
    dist: WeightedIndex<f64>,
    probs: Vec<f64>,
}

impl NegativeSampler {
    pub fn new(counts: &[u64], power: f64) -> Result<Self> {
        let weights: Vec<f64> = counts
            .iter()
            .map(|&c| if c == 0 { 0.0 } else { (c as f64).powf(power) })
            .collect();
        let total: f64 = weights.iter().sum();
        let dist = WeightedIndex::new(&weights).map_err(|e| Error::Data(format!("cannot build unigram table: {e}")))?;
        Ok(NegativeSampler {
            dist,
            probs: weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn sample(&self, rng: &mut SeededRng) -> usize {
        self.dist.sample(rng)
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub loss: f64,
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// `−log σ(w·c) − Σ log σ(−w·n)` and its gradients.
pub fn pair_loss_and_gradient(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> PairGradient {
    let s = dot(center, context);
    let gs = sigmoid(s) - 1.0;
    let mut loss = -sigmoid(s).ln();
    let mut g_center: Vec<f64> = context.iter().map(|c| gs * c).collect();
    let g_context = center.iter().map(|w| gs * w).collect();
    let mut g_neg = Vec::with_capacity(negatives.len());
    for n in negatives {
        let sn = dot(center, n);
        let p = sigmoid(sn);
        loss -= sigmoid(-sn).ln();
        for (g, v) in g_center.iter_mut().zip(n.iter()) {
            *g += p * v;
        }
        g_neg.push(center.iter().map(|w| p * w).collect());
    }
    PairGradient {
        loss,
        center: g_center,
        context: g_context,
        negatives: g_neg,
    }
}

pub fn init_sgns(vocab_size: usize, config: &SgnsConfig) -> SgnsModel {
    let mut rng = seed::rng(seed::derive(config.seed, 1));
    let bound = 0.5 / config.dim as f64;
    let mut input = Matrix::zeros(vocab_size, config.dim);
    for x in input.as_mut_slice() {
        *x = rng.gen_range(-bound..bound);
    }
    SgnsModel {
        input,
        output: Matrix::zeros(vocab_size, config.dim),
    }
}

/// Constant-rate SGD over every (center, context) pair within `window`
/// positions in the same sequence. Sequences are visited in a seeded
/// order that changes each epoch.
pub fn train_sgns(dataset: &EventDataset, config: &SgnsConfig) -> Result<SgnsModel> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::usage("training dataset is empty"));
    }
    let v = dataset.vocab.len();
    if v < config.negatives + 1 {
        return Err(Error::Usage(format!(
            "vocabulary of {v} is too small for {} negatives (needs at least {})",
            config.negatives,
            config.negatives + 1
        )));
    }
    let mut counts = vec![0u64; v];
    for &s in dataset.sequences.iter().flatten() {
        counts[s] += 1;
    }
    let sampler = NegativeSampler::new(&counts, config.unigram_power)?;
    let mut model = init_sgns(v, config);
    let mut neg_rng = seed::rng(seed::derive(config.seed, 2));
    let lr = config.learning_rate;
    let d = config.dim;
    let mut grad_center = vec![0.0; d];

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        order.shuffle(&mut seed::rng(seed::derive(seed::derive(config.seed, 3), epoch as u64)));
        for &si in &order {
            let seq = &dataset.sequences[si];
            for (i, &center) in seq.iter().enumerate() {
                let lo = i.saturating_sub(config.window);
                let hi = (i + config.window).min(seq.len() - 1);
                for (j, &context) in seq.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    grad_center.iter_mut().for_each(|g| *g = 0.0);
                    let w = model.input.row(center).to_vec();
                    let targets = std::iter::once((context, 1.0)).chain(
                        (0..config.negatives)
                            .map(|_| sampler.sample(&mut neg_rng))
                            .filter(|&n| n != context)
                            .map(|n| (n, 0.0))
                            .collect::<Vec<_>>(),
                    );
                    for (t, label) in targets {
                        let out = model.output.row_mut(t);
                        let g = sigmoid(dot(&w, out)) - label;
                        for k in 0..d {
                            grad_center[k] += g * out[k];
                            out[k] -= lr * g * w[k];
                        }
                    }
                    for (x, g) in model.input.row_mut(center).iter_mut().zip(&grad_center) {
                        *x -= lr * g;
                    }
                }
            }
        }
        if !model.input.is_finite() || !model.output.is_finite() {
            return Err(Error::Numerical(format!("skip-gram training diverged in epoch {}", epoch + 1)));
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Vocabulary;
    use crate::geometry::cosine;

    fn toy(names: &[&str], seqs: Vec<Vec<usize>>) -> EventDataset {
        EventDataset::new(Vocabulary::new(names.iter().copied()).unwrap(), seqs).unwrap()
    }

    #[test]
    fn zero_epochs_is_init() {
        let ds = toy(&["a", "b", "c"], vec![vec![0, 1, 2]]);
        let cfg = SgnsConfig {
            epochs: 0,
            dim: 4,
            negatives: 2,
            ..SgnsConfig::default()
        };
        assert_eq!(train_sgns(&ds, &cfg).unwrap(), init_sgns(3, &cfg));
    }

    #[test]
    fn too_few_words() {
        let ds = toy(&["a", "b"], vec![vec![0, 1]]);
        assert!(matches!(train_sgns(&ds, &SgnsConfig::default()), Err(Error::Usage(_))));
    }

    #[test]
    fn alternating_pair_aligns() {
        let names = ["a", "b", "c", "d"];
        let mut seqs = vec![[0, 1].repeat(20)];
        seqs.push(vec![2, 3, 2, 3]);
        let ds = toy(&names, seqs);
        let cfg = SgnsConfig {
            dim: 8,
            window: 1,
            negatives: 2,
            epochs: 20,
            seed: 5,
            ..SgnsConfig::default()
        };
        let init = init_sgns(4, &cfg);
        let trained = train_sgns(&ds, &cfg).unwrap();
        let before = cosine(init.input.row(0), init.output.row(1));
        let after = cosine(trained.input.row(0), trained.output.row(1));
        assert!(after > before && after > 0.5, "{before} -> {after}");
        assert_eq!(trained, train_sgns(&ds, &cfg).unwrap());
    }

    #[test]
    fn windows_stay_inside_sequences() {
        // With window 1, "a" is only ever next to "b" and "c" only next to "d";
        // the output vector of "c" is only touched as a negative.
        let ds = toy(&["a", "b", "c", "d", "e", "f", "g"], vec![vec![0, 1], vec![2, 3]]);
        let cfg = SgnsConfig {
            dim: 4,
            window: 1,
            negatives: 1,
            epochs: 1,
            unigram_power: 0.0,
            ..SgnsConfig::default()
        };
        let m = train_sgns(&ds, &cfg).unwrap();
        // e, f, g never occur so they have zero weight and stay untouched.
        for i in 4..7 {
            assert!(m.output.row(i).iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn sampler_probabilities() {
        let s = NegativeSampler::new(&[16, 1, 0, 81], 0.75).unwrap();
        let w = [8.0, 1.0, 0.0, 27.0];
        for (p, w) in s.probabilities().iter().zip(w) {
            assert!((p - w / 36.0).abs() < 1e-12);
        }
    }
}
