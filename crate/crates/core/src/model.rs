//! The additive recurrent event model.
//!
//! A sequence `s_1..s_T` is folded into hidden states `h_0 = 0`,
//! `h_t = h_{t-1} + e_{s_t}` (clipped to `max_norm`) in Euclidean space, or
//! `h_t = h_{t-1} ⊕_c e_{s_t}` on the Poincaré ball. A linear decoder reads
//! the next event from `h_t` (through the origin log map on the ball).
//!
//! Training minimises
//!
//! ```text
//! total = pred + λ_recon · recon + λ_consist · consist
//! ```
//!
//! where `pred` is next-event cross-entropy, `recon` penalises failure to
//! undo each update by subtracting (Möbius-subtracting) its embedding, and
//! `consist` compares two dropout-perturbed passes. All three are sums over
//! time steps of one sequence.
//!
//! Dropout masks the embedding fed into each update with inverted scaling.
//! On the ball the mask acts on the tangent vector `log_0(e)` and the result
//! is mapped back with `exp_0`, so masked embeddings stay inside the ball.
//! The prediction term sees the first dropout pass; the reconstruction term
//! always uses the clean pass.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Geometry, DEFAULT_BALL_MARGIN};
use crate::matrix::Matrix;
use crate::seed;

/// Learnable state: embedding table, linear decoder and the geometry they live in.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub geometry: Geometry,
    /// `V × d`, row `i` is the embedding of event `i`.
    pub embeddings: Matrix,
    /// `V × d`
    pub decoder_weights: Matrix,
    pub decoder_bias: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(vocab_size: usize, dim: usize, geometry: Geometry) -> Self {
        ModelParams {
            geometry,
            embeddings: Matrix::zeros(vocab_size, dim),
            decoder_weights: Matrix::zeros(vocab_size, dim),
            decoder_bias: vec![0.0; vocab_size],
        }
    }

    /// Embeddings uniform in `[-0.5/d, 0.5/d]`, decoder zero.
    pub fn init(vocab_size: usize, dim: usize, geometry: Geometry, seed: u64) -> Result<Self> {
        if vocab_size == 0 || dim == 0 {
            return Err(Error::usage("vocab_size and dim must be positive"));
        }
        geometry.validate()?;
        let mut params = ModelParams::zeros(vocab_size, dim, geometry);
        let mut rng = seed::rng(seed);
        let half = 0.5 / dim as f64;
        for v in params.embeddings.as_mut_slice() {
            *v = rng.gen_range(-half..=half);
        }
        if let Geometry::Hyperbolic { c } = geometry {
            params.project_embeddings(c);
        }
        Ok(params)
    }

    pub fn vocab_size(&self) -> usize {
        self.embeddings.rows()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.cols()
    }

    pub fn embedding(&self, id: usize) -> &[f64] {
        self.embeddings.row(id)
    }

    pub(crate) fn project_embeddings(&mut self, c: f64) {
        for i in 0..self.embeddings.rows() {
            let p = geometry::project_to_ball(self.embeddings.row(i), c, DEFAULT_BALL_MARGIN);
            self.embeddings.row_mut(i).copy_from_slice(&p);
        }
    }

    /// Shape, finiteness and (on the ball) containment checks.
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        let (v, d) = (self.vocab_size(), self.dim());
        if v == 0 || d == 0 {
            return Err(Error::Data("empty parameter set".into()));
        }
        if self.decoder_weights.rows() != v
            || self.decoder_weights.cols() != d
            || self.decoder_bias.len() != v
        {
            return Err(Error::Data(format!(
                "decoder shape mismatch: expected {v}x{d} weights and {v} biases"
            )));
        }
        if !self.embeddings.is_finite()
            || !self.decoder_weights.is_finite()
            || self.decoder_bias.iter().any(|b| !b.is_finite())
        {
            return Err(Error::Data("parameters contain non-finite values".into()));
        }
        if let Geometry::Hyperbolic { c } = self.geometry {
            if let Some(i) = (0..v).find(|&i| !geometry::in_ball(self.embedding(i), c)) {
                return Err(Error::Domain(format!("embedding row {i} lies outside the ball")));
            }
        }
        Ok(())
    }

    fn check_sequence(&self, seq: &[usize]) -> Result<()> {
        if seq.is_empty() {
            return Err(Error::usage("event sequence is empty"));
        }
        let v = self.vocab_size();
        if let Some(&bad) = seq.iter().find(|&&s| s >= v) {
            return Err(Error::usage(format!(
                "event id {bad} out of range for vocabulary of size {v}"
            )));
        }
        if let Geometry::Hyperbolic { c } = self.geometry {
            if let Some(&s) = seq.iter().find(|&&s| !geometry::in_ball(self.embedding(s), c)) {
                return Err(Error::Domain(format!("embedding of event {s} lies outside the ball")));
            }
        }
        Ok(())
    }
}

/// Hidden states `h_0 … h_T` produced by one forward pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HiddenTrajectory {
    pub states: Vec<Vec<f64>>,
    pub sequence: Vec<usize>,
}

impl HiddenTrajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory always holds h_0")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropoutSpec {
    pub rate: f64,
    pub seed: u64,
}

impl DropoutSpec {
    pub fn new(rate: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::usage(format!("dropout rate must be in [0, 1), got {rate}")));
        }
        Ok(DropoutSpec { rate, seed })
    }

    pub fn is_active(&self) -> bool {
        self.rate > 0.0
    }

    /// Seed of the second pass used by the consistency term of [`total_loss`].
    pub fn partner_seed(&self) -> u64 {
        seed::derive(self.seed, 0xC0_5157)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub pred: f64,
    pub recon: f64,
    pub consist: f64,
    pub total: f64,
    pub lambda_recon: f64,
    pub lambda_consist: f64,
    /// Number of next-event prediction terms; 0 flags a length-1 sequence.
    pub pred_steps: usize,
}

/// Parameter-shaped gradient set.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embeddings: Matrix,
    pub decoder_weights: Matrix,
    pub decoder_bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        let (v, d) = (params.vocab_size(), params.dim());
        Gradients {
            embeddings: Matrix::zeros(v, d),
            decoder_weights: Matrix::zeros(v, d),
            decoder_bias: vec![0.0; v],
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.slices_mut().into_iter().zip(other.slices()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for part in self.slices_mut() {
            part.iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|p| p.iter().all(|v| v.is_finite()))
    }

    /// Embeddings, decoder weights, decoder bias; the same order
    /// [`ModelParams`] flattens to in the optimizer.
    pub fn slices(&self) -> [&[f64]; 3] {
        [
            self.embeddings.as_slice(),
            self.decoder_weights.as_slice(),
            &self.decoder_bias,
        ]
    }

    fn slices_mut(&mut self) -> [&mut [f64]; 3] {
        [
            self.embeddings.as_mut_slice(),
            self.decoder_weights.as_mut_slice(),
            &mut self.decoder_bias,
        ]
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
}

// ---------------------------------------------------------------------------
// Forward

fn dropout_mask(spec: &DropoutSpec, steps: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = seed::rng(spec.seed);
    let keep = 1.0 / (1.0 - spec.rate);
    (0..steps)
        .map(|_| {
            (0..dim)
                .map(|_| if rng.gen::<f64>() < spec.rate { 0.0 } else { keep })
                .collect()
        })
        .collect()
}

/// Everything the backward pass needs from one forward pass.
struct Pass {
    /// h_0 … h_T
    states: Vec<Vec<f64>>,
    /// Update result before clipping / projection, one per step.
    pre: Vec<Vec<f64>>,
    /// Embedding actually fed into each update.
    inputs: Vec<Vec<f64>>,
    /// Masked tangent vectors (ball geometry with dropout only).
    tangents: Vec<Vec<f64>>,
    mask: Option<Vec<Vec<f64>>>,
}

fn run_pass(params: &ModelParams, seq: &[usize], mask: Option<Vec<Vec<f64>>>) -> Pass {
    let d = params.dim();
    let mut states = Vec::with_capacity(seq.len() + 1);
    states.push(vec![0.0; d]);
    let mut pre = Vec::with_capacity(seq.len());
    let mut inputs = Vec::with_capacity(seq.len());
    let mut tangents = Vec::new();

    for (t, &s) in seq.iter().enumerate() {
        let e = params.embedding(s);
        let h_prev = &states[t];
        let (input, u, h) = match params.geometry {
            Geometry::Euclidean { max_norm } => {
                let input: Vec<f64> = match &mask {
                    Some(m) => e.iter().zip(&m[t]).map(|(a, b)| a * b).collect(),
                    None => e.to_vec(),
                };
                let u: Vec<f64> = h_prev.iter().zip(&input).map(|(a, b)| a + b).collect();
                let h = geometry::clip_norm(&u, max_norm);
                (input, u, h)
            }
            Geometry::Hyperbolic { c } => {
                let input = match &mask {
                    Some(m) => {
                        let v: Vec<f64> = geometry::log_map_origin_unchecked(e, c)
                            .iter()
                            .zip(&m[t])
                            .map(|(a, b)| a * b)
                            .collect();
                        let input = geometry::exp_map_origin_unchecked(&v, c);
                        tangents.push(v);
                        input
                    }
                    None => e.to_vec(),
                };
                let u = geometry::mobius_add_unchecked(h_prev, &input, c);
                let h = geometry::project_to_ball(&u, c, DEFAULT_BALL_MARGIN);
                (input, u, h)
            }
        };
        inputs.push(input);
        pre.push(u);
        states.push(h);
    }
    Pass {
        states,
        pre,
        inputs,
        tangents,
        mask,
    }
}

fn masked_pass(params: &ModelParams, seq: &[usize], dropout: Option<&DropoutSpec>) -> Pass {
    let mask = dropout
        .filter(|d| d.is_active())
        .map(|d| dropout_mask(d, seq.len(), params.dim()));
    run_pass(params, seq, mask)
}

/// Fold `seq` into hidden states, optionally with a dropout mask on the embeddings.
pub fn forward(
    params: &ModelParams,
    seq: &[usize],
    dropout: Option<&DropoutSpec>,
) -> Result<HiddenTrajectory> {
    params.check_sequence(seq)?;
    let pass = masked_pass(params, seq, dropout);
    Ok(HiddenTrajectory {
        states: pass.states,
        sequence: seq.to_vec(),
    })
}

// ---------------------------------------------------------------------------
// Decoder and losses

fn decoder_input(geometry: &Geometry, h: &[f64]) -> Vec<f64> {
    match *geometry {
        Geometry::Euclidean { .. } => h.to_vec(),
        Geometry::Hyperbolic { c } => geometry::log_map_origin_unchecked(h, c),
    }
}

fn decoder_input_vjp(geometry: &Geometry, h: &[f64], g: &[f64]) -> Vec<f64> {
    match *geometry {
        Geometry::Euclidean { .. } => g.to_vec(),
        Geometry::Hyperbolic { c } => geometry::log_map_origin_vjp(h, c, g),
    }
}

fn logits_unchecked(params: &ModelParams, phi: &[f64]) -> Vec<f64> {
    let mut logits = params.decoder_weights.mul_vec(phi);
    for (l, b) in logits.iter_mut().zip(&params.decoder_bias) {
        *l += b;
    }
    logits
}

/// Unnormalised next-event scores `W_dec · φ(h) + b_dec`, with `φ` the
/// identity (Euclidean) or the origin log map (ball).
pub fn predict_logits(params: &ModelParams, h: &[f64]) -> Result<Vec<f64>> {
    if h.len() != params.dim() {
        return Err(Error::usage(format!(
            "hidden state has dimension {}, model expects {}",
            h.len(),
            params.dim()
        )));
    }
    let phi = match params.geometry {
        Geometry::Euclidean { .. } => h.to_vec(),
        Geometry::Hyperbolic { c } => geometry::log_map_origin(h, c)?,
    };
    Ok(logits_unchecked(params, &phi))
}

type StateGrads<'a> = Option<(&'a mut Gradients, &'a mut [Vec<f64>])>;

fn pred_loss_on(params: &ModelParams, states: &[Vec<f64>], seq: &[usize], mut g: StateGrads) -> f64 {
    let mut loss = 0.0;
    for t in 1..seq.len() {
        let target = seq[t];
        let phi = decoder_input(&params.geometry, &states[t]);
        let logits = logits_unchecked(params, &phi);
        loss += log_sum_exp(&logits) - logits[target];
        if let Some((grads, g_states)) = g.as_mut() {
            let mut r = softmax(&logits);
            r[target] -= 1.0;
            for (k, &rk) in r.iter().enumerate() {
                grads.decoder_weights.add_row(k, &phi, rk);
                grads.decoder_bias[k] += rk;
            }
            let g_phi = params.decoder_weights.mul_vec_transposed(&r);
            let g_h = decoder_input_vjp(&params.geometry, &states[t], &g_phi);
            add_into(&mut g_states[t], &g_h, 1.0);
        }
    }
    loss
}

fn recon_loss_on(
    params: &ModelParams,
    states: &[Vec<f64>],
    seq: &[usize],
    weight: f64,
    mut g: StateGrads,
) -> f64 {
    let mut loss = 0.0;
    for (t, &s) in seq.iter().enumerate().map(|(i, s)| (i + 1, s)) {
        let e = params.embedding(s);
        let (h, h_prev) = (&states[t], &states[t - 1]);
        match params.geometry {
            Geometry::Euclidean { .. } => {
                // (h_t − e) − h_{t−1}, grouped so an unclipped step cancels exactly
                let r: Vec<f64> = (0..e.len()).map(|i| h[i] - (h_prev[i] + e[i])).collect();
                loss += geometry::norm_sq(&r);
                if let Some((grads, g_states)) = g.as_mut() {
                    add_into(&mut g_states[t], &r, 2.0 * weight);
                    add_into(&mut g_states[t - 1], &r, -2.0 * weight);
                    grads.embeddings.add_row(s, &r, -2.0 * weight);
                }
            }
            Geometry::Hyperbolic { c } => {
                let neg_e = geometry::negate(e);
                let q = geometry::mobius_add_unchecked(h, &neg_e, c);
                let (d2, g_q, g_prev) = geometry::poincare_distance_sq_vjp(&q, h_prev, c, weight);
                loss += d2;
                if let Some((grads, g_states)) = g.as_mut() {
                    let (g_h, g_neg_e) = geometry::mobius_add_vjp(h, &neg_e, c, &g_q);
                    add_into(&mut g_states[t], &g_h, 1.0);
                    add_into(&mut g_states[t - 1], &g_prev, 1.0);
                    grads.embeddings.add_row(s, &g_neg_e, -1.0);
                }
            }
        }
    }
    loss
}

fn consist_loss_on(
    geometry: &Geometry,
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    weight: f64,
    g: Option<(&mut [Vec<f64>], &mut [Vec<f64>])>,
) -> f64 {
    let mut loss = 0.0;
    let mut g = g;
    for t in 1..a.len() {
        match *geometry {
            Geometry::Euclidean { .. } => {
                let diff: Vec<f64> = a[t].iter().zip(&b[t]).map(|(x, y)| x - y).collect();
                loss += geometry::norm_sq(&diff);
                if let Some((ga, gb)) = g.as_mut() {
                    add_into(&mut ga[t], &diff, 2.0 * weight);
                    add_into(&mut gb[t], &diff, -2.0 * weight);
                }
            }
            Geometry::Hyperbolic { c } => {
                let (d2, gx, gy) = geometry::poincare_distance_sq_vjp(&a[t], &b[t], c, weight);
                loss += d2;
                if let Some((ga, gb)) = g.as_mut() {
                    add_into(&mut ga[t], &gx, 1.0);
                    add_into(&mut gb[t], &gy, 1.0);
                }
            }
        }
    }
    loss
}

fn add_into(acc: &mut [f64], v: &[f64], scale: f64) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += scale * b;
    }
}

/// Next-event cross-entropy summed over `t = 1 … T−1`.
///
/// A length-1 trajectory has no prediction terms; the loss is 0 and
/// `pred_steps` in [`LossBreakdown`] reports it.
pub fn loss_pred(params: &ModelParams, traj: &HiddenTrajectory) -> Result<f64> {
    params.check_sequence(&traj.sequence)?;
    check_traj(params, traj)?;
    if traj.sequence.len() < 2 {
        log::warn!("length-1 sequence has no next-event targets; prediction loss is 0");
    }
    Ok(pred_loss_on(params, &traj.states, &traj.sequence, None))
}

/// Step-wise reversibility penalty against the clean embedding table.
pub fn loss_recon(params: &ModelParams, traj: &HiddenTrajectory) -> Result<f64> {
    params.check_sequence(&traj.sequence)?;
    check_traj(params, traj)?;
    Ok(recon_loss_on(params, &traj.states, &traj.sequence, 1.0, None))
}

/// Squared state differences (squared Poincaré distance on the ball) between
/// two dropout passes seeded with `dropout.seed` and `seed2`.
pub fn loss_consist(
    params: &ModelParams,
    seq: &[usize],
    dropout: &DropoutSpec,
    seed2: u64,
) -> Result<f64> {
    params.check_sequence(seq)?;
    let a = masked_pass(params, seq, Some(dropout));
    let b = masked_pass(params, seq, Some(&DropoutSpec { seed: seed2, ..*dropout }));
    Ok(consist_loss_on(&params.geometry, &a.states, &b.states, 1.0, None))
}

fn check_traj(params: &ModelParams, traj: &HiddenTrajectory) -> Result<()> {
    if traj.states.len() != traj.sequence.len() + 1
        || traj.states.iter().any(|h| h.len() != params.dim())
    {
        return Err(Error::usage("trajectory does not match its sequence or the model dimension"));
    }
    Ok(())
}

/// Weighted sum of the three losses for one sequence.
pub fn total_loss(
    params: &ModelParams,
    seq: &[usize],
    lambda_recon: f64,
    lambda_consist: f64,
    dropout: Option<&DropoutSpec>,
) -> Result<LossBreakdown> {
    params.check_sequence(seq)?;
    Ok(evaluate(params, seq, lambda_recon, lambda_consist, dropout, false).0)
}

/// Analytic gradient of [`total_loss`] with respect to every parameter.
pub fn gradients(
    params: &ModelParams,
    seq: &[usize],
    lambda_recon: f64,
    lambda_consist: f64,
    dropout: Option<&DropoutSpec>,
) -> Result<Gradients> {
    Ok(loss_and_gradients(params, seq, lambda_recon, lambda_consist, dropout)?.1)
}

pub fn loss_and_gradients(
    params: &ModelParams,
    seq: &[usize],
    lambda_recon: f64,
    lambda_consist: f64,
    dropout: Option<&DropoutSpec>,
) -> Result<(LossBreakdown, Gradients)> {
    params.check_sequence(seq)?;
    let (loss, grads) = evaluate(params, seq, lambda_recon, lambda_consist, dropout, true);
    Ok((loss, grads.expect("gradients requested")))
}

fn evaluate(
    params: &ModelParams,
    seq: &[usize],
    lambda_recon: f64,
    lambda_consist: f64,
    dropout: Option<&DropoutSpec>,
    want_grads: bool,
) -> (LossBreakdown, Option<Gradients>) {
    let dropout = dropout.filter(|d| d.is_active());
    let clean = run_pass(params, seq, None);
    let noisy = dropout.map(|d| {
        let partner = DropoutSpec {
            seed: d.partner_seed(),
            ..*d
        };
        (masked_pass(params, seq, Some(d)), masked_pass(params, seq, Some(&partner)))
    });

    let zero_states = || vec![vec![0.0; params.dim()]; seq.len() + 1];
    let mut grads = want_grads.then(|| Gradients::zeros_like(params));
    let mut g_clean = zero_states();
    let (mut g_a, mut g_b) = (zero_states(), zero_states());

    let pred_states = noisy.as_ref().map_or(&clean.states, |(a, _)| &a.states);
    let pred = {
        let target = if noisy.is_some() { &mut g_a } else { &mut g_clean };
        pred_loss_on(
            params,
            pred_states,
            seq,
            grads.as_mut().map(|g| (g, target.as_mut_slice())),
        )
    };
    let recon = recon_loss_on(
        params,
        &clean.states,
        seq,
        lambda_recon,
        grads.as_mut().map(|g| (g, g_clean.as_mut_slice())),
    );
    let consist = match &noisy {
        Some((a, b)) => consist_loss_on(
            &params.geometry,
            &a.states,
            &b.states,
            lambda_consist,
            want_grads.then_some((g_a.as_mut_slice(), g_b.as_mut_slice())),
        ),
        None => 0.0,
    };

    if let Some(grads) = grads.as_mut() {
        backprop_pass(params, &clean, seq, g_clean, grads);
        if let Some((a, b)) = &noisy {
            backprop_pass(params, a, seq, g_a, grads);
            backprop_pass(params, b, seq, g_b, grads);
        }
    }

    let breakdown = LossBreakdown {
        pred,
        recon,
        consist,
        total: pred + lambda_recon * recon + lambda_consist * consist,
        lambda_recon,
        lambda_consist,
        pred_steps: seq.len() - 1,
    };
    (breakdown, grads)
}

/// Reverse sweep through one forward pass. `g_states[t]` holds the direct
/// loss gradient with respect to `h_t`; it is accumulated in place.
fn backprop_pass(
    params: &ModelParams,
    pass: &Pass,
    seq: &[usize],
    mut g_states: Vec<Vec<f64>>,
    grads: &mut Gradients,
) {
    for t in (1..=seq.len()).rev() {
        let s = seq[t - 1];
        let u = &pass.pre[t - 1];
        let g_h = std::mem::take(&mut g_states[t]);
        let (g_prev, g_input) = match params.geometry {
            Geometry::Euclidean { max_norm } => {
                let g_u = geometry::clip_norm_vjp(u, max_norm, &g_h);
                (g_u.clone(), g_u)
            }
            Geometry::Hyperbolic { c } => {
                let g_u = geometry::project_to_ball_vjp(u, c, DEFAULT_BALL_MARGIN, &g_h);
                geometry::mobius_add_vjp(&pass.states[t - 1], &pass.inputs[t - 1], c, &g_u)
            }
        };
        add_into(&mut g_states[t - 1], &g_prev, 1.0);

        let g_e = match (&pass.mask, params.geometry) {
            (None, _) => g_input,
            (Some(m), Geometry::Euclidean { .. }) => {
                g_input.iter().zip(&m[t - 1]).map(|(g, k)| g * k).collect()
            }
            (Some(m), Geometry::Hyperbolic { c }) => {
                let g_v = geometry::exp_map_origin_vjp(&pass.tangents[t - 1], c, &g_input);
                let g_l: Vec<f64> = g_v.iter().zip(&m[t - 1]).map(|(g, k)| g * k).collect();
                geometry::log_map_origin_vjp(params.embedding(s), c, &g_l)
            }
        };
        grads.embeddings.add_row(s, &g_e, 1.0);
    }
}
