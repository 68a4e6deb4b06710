//! Binary sentiment classifier trained from scratch.
//!
//! Architecture (`mean-pool-v1`): token embeddings averaged over the
//! non-padding positions, dropout, one ReLU hidden layer, dropout, and a
//! single sigmoid output unit. Trained with mean binary cross-entropy and Adam.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annotate::Sentiment;
use crate::error::{Error, Result};
use crate::io::{read_to_string, write_atomic};
use crate::textprep::{normalize_case, word_tokenize};

pub const PAD_INDEX: usize = 0;
pub const OOV_INDEX: usize = 1;
pub const ARCHITECTURE: &str = "mean-pool-v1";
const INIT_SCALE: f64 = 0.05;
const PROB_FLOOR: f64 = 1e-15;

/// Token-to-index map. Index 0 is padding and 1 is out-of-vocabulary; real
/// tokens follow in descending frequency, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().skip(2).map(|(i, t)| (t.clone(), i)).collect();
        Self { tokens, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

fn tokens_of(text: &str) -> Vec<String> {
    word_tokenize(&normalize_case(text)).into_iter().map(|t| t.text).collect()
}

impl Vocabulary {
    pub fn build<S: AsRef<str>>(texts: &[S]) -> Self {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for text in texts {
            for tok in tokens_of(text.as_ref()) {
                *counts.entry(tok).or_default() += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut tokens = vec!["<pad>".to_string(), "<oov>".to_string()];
        tokens.extend(ranked.into_iter().map(|(t, _)| t));
        Self::from(tokens)
    }

    /// Number of rows in the embedding table, padding and OOV included.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn index_of(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(OOV_INDEX)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SentimentConfig {
    pub architecture: String,
    pub max_sequence_length: usize,
    pub embedding_dropout: f64,
    pub hidden_dropout: f64,
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for SentimentConfig {
    fn default() -> Self {
        Self {
            architecture: ARCHITECTURE.into(),
            max_sequence_length: 300,
            embedding_dropout: 0.25,
            hidden_dropout: 0.5,
            embedding_dim: 32,
            hidden_dim: 32,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            epochs: 30,
            batch_size: 8,
            seed: 42,
        }
    }
}

impl SentimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.architecture != ARCHITECTURE {
            return bad("unsupported sentiment architecture");
        }
        if self.max_sequence_length == 0 {
            return bad("max_sequence_length must be at least 1");
        }
        for p in [self.embedding_dropout, self.hidden_dropout] {
            if !(0.0..1.0).contains(&p) {
                return bad("dropout rates must lie in [0, 1)");
            }
        }
        if self.embedding_dim == 0 || self.hidden_dim == 0 || self.batch_size == 0 {
            return bad("embedding_dim, hidden_dim and batch_size must be positive");
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }
}

/// Trainable weights. Matrices are row-major: `embedding` is
/// `vocab x embedding_dim`, `hidden_weights` is `hidden_dim x embedding_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub embedding: Vec<f64>,
    pub hidden_weights: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
}

impl Parameters {
    pub fn zeros(vocab: usize, embedding_dim: usize, hidden_dim: usize) -> Self {
        Self {
            embedding_dim,
            hidden_dim,
            embedding: vec![0.0; vocab * embedding_dim],
            hidden_weights: vec![0.0; hidden_dim * embedding_dim],
            hidden_bias: vec![0.0; hidden_dim],
            output_weights: vec![0.0; hidden_dim],
            output_bias: 0.0,
        }
    }

    pub fn uniform(vocab: usize, embedding_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(vocab, embedding_dim, hidden_dim);
        let mut flat = p.to_flat();
        for w in flat.iter_mut() {
            *w = rng.random_range(-INIT_SCALE..=INIT_SCALE);
        }
        p.set_flat(&flat);
        p
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.len() / self.embedding_dim
    }

    /// All weights in one vector, in field order.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.num_weights());
        flat.extend_from_slice(&self.embedding);
        flat.extend_from_slice(&self.hidden_weights);
        flat.extend_from_slice(&self.hidden_bias);
        flat.extend_from_slice(&self.output_weights);
        flat.push(self.output_bias);
        flat
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut rest = flat;
        for part in [
            &mut self.embedding,
            &mut self.hidden_weights,
            &mut self.hidden_bias,
            &mut self.output_weights,
        ] {
            let (head, tail) = rest.split_at(part.len());
            part.copy_from_slice(head);
            rest = tail;
        }
        self.output_bias = rest[0];
    }

    pub fn num_weights(&self) -> usize {
        self.embedding.len() + self.hidden_weights.len() + self.hidden_bias.len() + self.output_weights.len() + 1
    }

    fn all_finite(&self) -> bool {
        self.to_flat().iter().all(|w| w.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentModel {
    pub config: SentimentConfig,
    pub vocabulary: Vocabulary,
    pub parameters: Parameters,
    pub decision_threshold: f64,
}

/// Inverted-dropout masks for one forward pass.
struct Masks {
    pooled: Vec<f64>,
    hidden: Vec<f64>,
}

fn dropout_mask(len: usize, rate: f64, rng: &mut impl Rng) -> Vec<f64> {
    let keep = 1.0 / (1.0 - rate);
    (0..len).map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep }).collect()
}

fn masks_for(params: &Parameters, cfg: &SentimentConfig, seed: u64) -> Masks {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Masks {
        pooled: dropout_mask(params.embedding_dim, cfg.embedding_dropout, &mut rng),
        hidden: dropout_mask(params.hidden_dim, cfg.hidden_dropout, &mut rng),
    }
}

/// Intermediate values of one forward pass, kept for backpropagation.
struct Activations {
    tokens: Vec<usize>,
    pooled: Vec<f64>,
    pre_hidden: Vec<f64>,
    hidden: Vec<f64>,
    logit: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `-[y ln p + (1 - y) ln(1 - p)]` evaluated from the logit.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - y * z + (-z.abs()).exp().ln_1p()
}

fn run(params: &Parameters, sequence: &[usize], masks: Option<&Masks>) -> Activations {
    let d = params.embedding_dim;
    let h = params.hidden_dim;
    let tokens: Vec<usize> = sequence.iter().copied().filter(|&t| t != PAD_INDEX).collect();

    let mut pooled = vec![0.0; d];
    if !tokens.is_empty() {
        for &t in &tokens {
            for (acc, w) in pooled.iter_mut().zip(&params.embedding[t * d..(t + 1) * d]) {
                *acc += w;
            }
        }
        let n = tokens.len() as f64;
        pooled.iter_mut().for_each(|v| *v /= n);
    }
    if let Some(m) = masks {
        pooled.iter_mut().zip(&m.pooled).for_each(|(v, k)| *v *= k);
    }

    let mut pre_hidden = params.hidden_bias.clone();
    for (j, z) in pre_hidden.iter_mut().enumerate() {
        let row = &params.hidden_weights[j * d..(j + 1) * d];
        *z += row.iter().zip(&pooled).map(|(w, x)| w * x).sum::<f64>();
    }
    let mut hidden: Vec<f64> = pre_hidden.iter().map(|&z| z.max(0.0)).collect();
    if let Some(m) = masks {
        hidden.iter_mut().zip(&m.hidden).for_each(|(v, k)| *v *= k);
    }
    debug_assert_eq!(hidden.len(), h);
    let logit = params.output_bias + params.output_weights.iter().zip(&hidden).map(|(w, a)| w * a).sum::<f64>();
    Activations {
        tokens,
        pooled,
        pre_hidden,
        hidden,
        logit,
    }
}

/// Adds `scale * dLoss/dParams` for one example into `grads`.
#[allow(clippy::needless_range_loop)]
fn backprop(params: &Parameters, act: &Activations, masks: Option<&Masks>, target: f64, scale: f64, grads: &mut Parameters) {
    let d = params.embedding_dim;
    let dlogit = (sigmoid(act.logit) - target) * scale;

    grads.output_bias += dlogit;
    let mut dpre = vec![0.0; params.hidden_dim];
    for j in 0..params.hidden_dim {
        grads.output_weights[j] += dlogit * act.hidden[j];
        let mut da = dlogit * params.output_weights[j];
        if let Some(m) = masks {
            da *= m.hidden[j];
        }
        dpre[j] = if act.pre_hidden[j] > 0.0 { da } else { 0.0 };
    }

    let mut dpooled = vec![0.0; d];
    for (j, &g) in dpre.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        grads.hidden_bias[j] += g;
        let row = &params.hidden_weights[j * d..(j + 1) * d];
        let grow = &mut grads.hidden_weights[j * d..(j + 1) * d];
        for k in 0..d {
            grow[k] += g * act.pooled[k];
            dpooled[k] += g * row[k];
        }
    }
    if act.tokens.is_empty() {
        return;
    }
    if let Some(m) = masks {
        dpooled.iter_mut().zip(&m.pooled).for_each(|(v, k)| *v *= k);
    }
    let share = 1.0 / act.tokens.len() as f64;
    for &t in &act.tokens {
        let grow = &mut grads.embedding[t * d..(t + 1) * d];
        for k in 0..d {
            grow[k] += dpooled[k] * share;
        }
    }
}

/// Mean loss and its gradient over `batch` with dropout disabled.
pub fn batch_loss_and_gradient(params: &Parameters, batch: &[(Vec<usize>, f64)]) -> (f64, Parameters) {
    let mut grads = Parameters::zeros(params.vocab_size(), params.embedding_dim, params.hidden_dim);
    let scale = 1.0 / batch.len().max(1) as f64;
    let mut loss = 0.0;
    for (seq, y) in batch {
        let act = run(params, seq, None);
        loss += bce_from_logit(act.logit, *y) * scale;
        backprop(params, &act, None, *y, scale, &mut grads);
    }
    (loss, grads)
}

/// Mean loss over `batch` with dropout disabled.
pub fn batch_loss(params: &Parameters, batch: &[(Vec<usize>, f64)]) -> f64 {
    let scale = 1.0 / batch.len().max(1) as f64;
    batch.iter().map(|(seq, y)| bce_from_logit(run(params, seq, None).logit, *y) * scale).sum()
}

/// Case-folds, tokenizes and maps `text` to exactly `max_len` indices
/// (truncated from the end, right-padded with [`PAD_INDEX`]).
pub fn encode(text: &str, vocab: &Vocabulary, max_len: usize) -> Vec<usize> {
    let mut seq: Vec<usize> = tokens_of(text).iter().take(max_len).map(|t| vocab.index_of(t)).collect();
    seq.resize(max_len, PAD_INDEX);
    seq
}

/// Positive-class probability. With `train_mode` set, dropout masks are
/// drawn from `dropout_seed`; otherwise the seed is ignored.
pub fn forward(model: &SentimentModel, sequence: &[usize], train_mode: bool, dropout_seed: u64) -> f64 {
    let masks = train_mode.then(|| masks_for(&model.parameters, &model.config, dropout_seed));
    let act = run(&model.parameters, sequence, masks.as_ref());
    sigmoid(act.logit).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

pub fn predict_proba(model: &SentimentModel, text: &str) -> f64 {
    let seq = encode(text, &model.vocabulary, model.config.max_sequence_length);
    forward(model, &seq, false, 0)
}

/// `Positive` iff the probability reaches the decision threshold.
pub fn classify(model: &SentimentModel, text: &str) -> (Sentiment, f64) {
    let p = predict_proba(model, text);
    (label_for(p, model.decision_threshold), p)
}

pub fn label_for(p: f64, threshold: f64) -> Sentiment {
    if p >= threshold {
        Sentiment::Positive
    } else {
        Sentiment::Negative
    }
}

fn target(label: Sentiment) -> f64 {
    match label {
        Sentiment::Positive => 1.0,
        Sentiment::Negative => 0.0,
    }
}

#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub model: SentimentModel,
    /// Mean training loss of each epoch, dropout active.
    pub epoch_losses: Vec<f64>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    fn update(&mut self, weights: &mut [f64], grads: &[f64], cfg: &SentimentConfig) {
        self.step += 1;
        let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
        let c1 = 1.0 - b1.powi(self.step);
        let c2 = 1.0 - b2.powi(self.step);
        for i in 0..weights.len() {
            let g = grads[i];
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g;
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            weights[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
        }
    }
}

pub fn train(data: &[(String, Sentiment)], cfg: &SentimentConfig) -> Result<TrainingRun> {
    cfg.validate()?;
    let has = |s| data.iter().any(|(_, l)| *l == s);
    if !has(Sentiment::Positive) || !has(Sentiment::Negative) {
        return Err(Error::SingleClass);
    }

    let texts: Vec<&str> = data.iter().map(|(t, _)| t.as_str()).collect();
    let vocabulary = Vocabulary::build(&texts);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = Parameters::uniform(vocabulary.len(), cfg.embedding_dim, cfg.hidden_dim, &mut rng);

    let examples: Vec<(Vec<usize>, f64)> = data
        .iter()
        .map(|(text, label)| (encode(text, &vocabulary, cfg.max_sequence_length), target(*label)))
        .collect();

    let mut adam = Adam::new(params.num_weights());
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = Parameters::zeros(vocabulary.len(), cfg.embedding_dim, cfg.hidden_dim);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let (seq, y) = &examples[i];
                let masks = masks_for(&params, cfg, rng.random());
                let act = run(&params, seq, Some(&masks));
                epoch_loss += bce_from_logit(act.logit, *y);
                backprop(&params, &act, Some(&masks), *y, scale, &mut grads);
            }
            let mut flat = params.to_flat();
            adam.update(&mut flat, &grads.to_flat(), cfg);
            params.set_flat(&flat);
        }
        epoch_loss /= examples.len() as f64;
        if !epoch_loss.is_finite() || !params.all_finite() {
            return Err(Error::Data(format!("training diverged at epoch {}", epoch + 1)));
        }
        epoch_losses.push(epoch_loss);
    }

    Ok(TrainingRun {
        model: SentimentModel {
            config: cfg.clone(),
            vocabulary,
            parameters: params,
            decision_threshold: 0.5,
        },
        epoch_losses,
    })
}

/// Threshold among the observed probabilities (and 0.5) with the best
/// accuracy; ties go to the candidate closest to 0.5, then the lower one.
pub fn best_threshold(predictions: &[(f64, Sentiment)]) -> f64 {
    let has = |s| predictions.iter().any(|(_, l)| *l == s);
    if !has(Sentiment::Positive) || !has(Sentiment::Negative) {
        return 0.5;
    }
    let mut candidates: Vec<f64> = predictions.iter().map(|(p, _)| *p).collect();
    candidates.push(0.5);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let accuracy = |t: f64| predictions.iter().filter(|(p, l)| label_for(*p, t) == *l).count();
    let mut best: f64 = 0.5;
    let mut best_correct = accuracy(0.5);
    for t in candidates {
        let correct = accuracy(t);
        let closer = (t - 0.5).abs() < (best - 0.5).abs();
        if correct > best_correct || (correct == best_correct && closer) {
            best = t;
            best_correct = correct;
        }
    }
    best
}

/// Picks the decision threshold on held-out data and stores it on the model.
pub fn calibrate_threshold(model: &mut SentimentModel, validation: &[(String, Sentiment)]) -> f64 {
    let predictions: Vec<(f64, Sentiment)> = validation.iter().map(|(t, l)| (predict_proba(model, t), *l)).collect();
    model.decision_threshold = best_threshold(&predictions);
    model.decision_threshold
}

pub fn accuracy(model: &SentimentModel, data: &[(String, Sentiment)]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let correct = data.iter().filter(|(t, l)| classify(model, t).0 == *l).count();
    correct as f64 / data.len() as f64
}

impl SentimentModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, |out| {
            serde_json::to_writer(&mut *out, self)?;
            out.write_all(b"\n")
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        let model: SentimentModel = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        model.config.validate()?;
        let p = &model.parameters;
        let consistent = p.embedding_dim > 0
            && p.embedding.len() == model.vocabulary.len() * p.embedding_dim
            && p.hidden_weights.len() == p.hidden_dim * p.embedding_dim
            && p.hidden_bias.len() == p.hidden_dim
            && p.output_weights.len() == p.hidden_dim
            && p.all_finite();
        if !consistent {
            return Err(Error::Data(format!("inconsistent model parameters in {}", path.display())));
        }
        Ok(model)
    }
}
