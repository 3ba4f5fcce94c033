use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ToyMlmConfig;
use crate::mlm::{Encoding, MlmError, MlmScorer, SpecialTokens, Tokenizer, WordPieceTokenizer};
use crate::optim::{AdamW, AdamWConfig};

/// Offsets of each parameter block inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Layout {
    pub vocab: usize,
    pub dim: usize,
    pub context: usize,
    pub layers: usize,
    pub embed: usize,
    pub position: usize,
    pub hidden: usize,
    pub output: usize,
    pub output_bias: usize,
    pub total: usize,
}

impl Layout {
    pub fn new(vocab: usize, dim: usize, context: usize, layers: usize) -> Self {
        let embed = 0;
        let position = embed + vocab * dim;
        let hidden = position + context * dim;
        let output = hidden + layers * (dim * dim + dim);
        let output_bias = output + vocab * dim;
        let total = output_bias + vocab;
        Self { vocab, dim, context, layers, embed, position, hidden, output, output_bias, total }
    }

    fn weight(&self, layer: usize) -> usize {
        self.hidden + layer * (self.dim * self.dim + self.dim)
    }

    fn bias(&self, layer: usize) -> usize {
        self.weight(layer) + self.dim * self.dim
    }
}

/// One training target: predict `target` at `position` of `ids`.
pub(crate) struct Example<'a> {
    pub ids: &'a [u32],
    pub attention: &'a [u8],
    pub position: usize,
    pub target: u32,
}

struct Forward {
    context: Vec<usize>,
    /// Activations: `acts[0]` is the pooled context, `acts[k+1]` the output of layer k.
    acts: Vec<Vec<f64>>,
    log_probs: Vec<f64>,
}

/// Bag-of-context masked language model.
///
/// The prediction at a position mixes the embeddings (token + absolute
/// position) of every other attended position by averaging, passes the result
/// through `layers` tanh layers and projects onto the vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyMlm {
    pub(crate) config: ToyMlmConfig,
    pub(crate) tokenizer: WordPieceTokenizer,
    pub(crate) params: Vec<f64>,
    #[serde(skip)]
    pub(crate) optimizer: Option<AdamW>,
}

impl ToyMlm {
    /// Fresh model with seeded uniform initialisation.
    pub fn init(tokenizer: WordPieceTokenizer, config: ToyMlmConfig) -> Self {
        let layout = Layout::new(tokenizer.vocab_size(), config.dim, config.context, config.layers);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = vec![0.0; layout.total];
        let emb_scale = 0.1;
        let mat_scale = 1.0 / (config.dim as f64).sqrt();
        for p in &mut params[layout.embed..layout.hidden] {
            *p = rng.gen_range(-emb_scale..emb_scale);
        }
        for l in 0..layout.layers {
            let w = layout.weight(l);
            for p in &mut params[w..w + layout.dim * layout.dim] {
                *p = rng.gen_range(-mat_scale..mat_scale);
            }
        }
        for p in &mut params[layout.output..layout.output_bias] {
            *p = rng.gen_range(-mat_scale..mat_scale);
        }
        Self { config, tokenizer, params, optimizer: None }
    }

    pub(crate) fn layout(&self) -> Layout {
        Layout::new(self.tokenizer.vocab_size(), self.config.dim, self.config.context, self.config.layers)
    }

    pub fn config(&self) -> &ToyMlmConfig {
        &self.config
    }

    pub fn tokenizer(&self) -> &WordPieceTokenizer {
        &self.tokenizer
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub(crate) fn reset_optimizer(&mut self, config: AdamWConfig) {
        self.optimizer = Some(AdamW::new(config, self.params.len()));
    }

    pub(crate) fn optimizer_step(&mut self, grad: &mut [f64], lr: f64) {
        let n = self.params.len();
        let opt = self.optimizer.get_or_insert_with(|| AdamW::new(AdamWConfig::default(), n));
        opt.step(&mut self.params, grad, lr);
    }

    fn forward(&self, ids: &[u32], attention: &[u8], position: usize) -> Result<Forward, MlmError> {
        let l = self.layout();
        if position >= ids.len() {
            return Err(MlmError::PositionOutOfRange { position, len: ids.len() });
        }
        let context: Vec<usize> = (0..ids.len()).filter(|&j| j != position && attention.get(j) == Some(&1)).collect();
        if let Some(&last) = context.last() {
            if last >= l.context {
                return Err(MlmError::SequenceTooLong { len: last + 1, max: l.context });
            }
        }
        let d = l.dim;
        let mut pooled = vec![0.0; d];
        for &j in &context {
            let tok = ids[j] as usize;
            if tok >= l.vocab {
                return Err(MlmError::TokenNotInVocabulary(ids[j].to_string()));
            }
            let e = &self.params[l.embed + tok * d..l.embed + (tok + 1) * d];
            let p = &self.params[l.position + j * d..l.position + (j + 1) * d];
            for k in 0..d {
                pooled[k] += e[k] + p[k];
            }
        }
        if !context.is_empty() {
            let inv = 1.0 / context.len() as f64;
            pooled.iter_mut().for_each(|x| *x *= inv);
        }
        let mut acts = vec![pooled];
        for layer in 0..l.layers {
            let w = &self.params[l.weight(layer)..l.weight(layer) + d * d];
            let b = &self.params[l.bias(layer)..l.bias(layer) + d];
            let input = acts.last().expect("non-empty");
            let out: Vec<f64> =
                (0..d).map(|r| (b[r] + (0..d).map(|c| w[r * d + c] * input[c]).sum::<f64>()).tanh()).collect();
            acts.push(out);
        }
        let h = acts.last().expect("non-empty");
        let u = &self.params[l.output..l.output_bias];
        let bo = &self.params[l.output_bias..l.total];
        let logits: Vec<f64> =
            (0..l.vocab).map(|v| bo[v] + (0..d).map(|k| u[v * d + k] * h[k]).sum::<f64>()).collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        let log_probs = logits.iter().map(|z| z - lse).collect();
        Ok(Forward { context, acts, log_probs })
    }

    /// Mean cross-entropy over `examples`, accumulating its gradient into `grad`.
    pub(crate) fn loss_and_grad(&self, examples: &[Example<'_>], grad: &mut [f64]) -> Result<f64, MlmError> {
        if examples.is_empty() {
            return Ok(0.0);
        }
        let l = self.layout();
        let d = l.dim;
        let scale = 1.0 / examples.len() as f64;
        let mut loss = 0.0;
        for ex in examples {
            let fwd = self.forward(ex.ids, ex.attention, ex.position)?;
            let target = ex.target as usize;
            if target >= l.vocab {
                return Err(MlmError::TokenNotInVocabulary(ex.target.to_string()));
            }
            loss -= fwd.log_probs[target];
            let mut dlogits: Vec<f64> = fwd.log_probs.iter().map(|lp| lp.exp() * scale).collect();
            dlogits[target] -= scale;

            let h = fwd.acts.last().expect("non-empty");
            let mut dh = vec![0.0; d];
            for v in 0..l.vocab {
                let g = dlogits[v];
                if g == 0.0 {
                    continue;
                }
                grad[l.output_bias + v] += g;
                let row = l.output + v * d;
                for k in 0..d {
                    grad[row + k] += g * h[k];
                    dh[k] += g * self.params[row + k];
                }
            }
            for layer in (0..l.layers).rev() {
                let out = &fwd.acts[layer + 1];
                let input = &fwd.acts[layer];
                let w = l.weight(layer);
                let b = l.bias(layer);
                let da: Vec<f64> = (0..d).map(|r| dh[r] * (1.0 - out[r] * out[r])).collect();
                let mut dinput = vec![0.0; d];
                for r in 0..d {
                    grad[b + r] += da[r];
                    for c in 0..d {
                        grad[w + r * d + c] += da[r] * input[c];
                        dinput[c] += da[r] * self.params[w + r * d + c];
                    }
                }
                dh = dinput;
            }
            if !fwd.context.is_empty() {
                let inv = 1.0 / fwd.context.len() as f64;
                for &j in &fwd.context {
                    let tok = ex.ids[j] as usize;
                    for k in 0..d {
                        grad[l.embed + tok * d + k] += dh[k] * inv;
                        grad[l.position + j * d + k] += dh[k] * inv;
                    }
                }
            }
        }
        Ok(loss * scale)
    }

    /// Mean cross-entropy without touching gradients.
    pub(crate) fn loss(&self, examples: &[Example<'_>]) -> Result<f64, MlmError> {
        if examples.is_empty() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for ex in examples {
            total -= self.forward(ex.ids, ex.attention, ex.position)?.log_probs[ex.target as usize];
        }
        Ok(total / examples.len() as f64)
    }
}

impl Tokenizer for ToyMlm {
    fn tokenize(&self, text: &str) -> Result<Encoding, MlmError> {
        Ok(self.tokenizer.tokenize(text))
    }

    fn special_tokens(&self) -> SpecialTokens {
        self.tokenizer.special_tokens()
    }

    fn vocab_index(&self, token: &str) -> Option<u32> {
        self.tokenizer.token_id(token)
    }

    fn vocab_size(&self) -> usize {
        self.tokenizer.vocab_size()
    }
}

impl MlmScorer for ToyMlm {
    fn distribution(&self, ids: &[u32], attention: &[u8], position: usize) -> Result<Vec<f64>, MlmError> {
        Ok(self.forward(ids, attention, position)?.log_probs.into_iter().map(f64::exp).collect())
    }

    fn probability(&self, ids: &[u32], attention: &[u8], position: usize, token: u32) -> Result<f64, MlmError> {
        let fwd = self.forward(ids, attention, position)?;
        fwd.log_probs.get(token as usize).map(|lp| lp.exp()).ok_or_else(|| MlmError::TokenNotInVocabulary(token.to_string()))
    }

    fn describe(&self) -> String {
        format!(
            "toy-mlm(vocab={}, dim={}, layers={}, seed={})",
            self.tokenizer.vocab_size(),
            self.config.dim,
            self.config.layers,
            self.config.seed
        )
    }
}
