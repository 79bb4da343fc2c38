use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{ParamBlock, Params};
use crate::rng::stream_rng;

pub const EMBEDDING: usize = 0;
pub const HIDDEN_W: usize = 1;
pub const HIDDEN_B: usize = 2;
pub const OUTPUT_W: usize = 3;
pub const OUTPUT_B: usize = 4;

/// A (previous token, next token) training example.
pub type Bigram = (u32, u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub vocab: usize,
    pub embed: usize,
    pub hidden: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        Self {
            vocab: 200,
            embed: 16,
            hidden: 32,
        }
    }
}

/// Bigram neural language model: embedding, one tanh layer, softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    pub dims: ModelDims,
    pub params: Params,
}

impl SurrogateModel {
    /// Uniform initialization in `[-0.1, 0.1]`.
    pub fn new(dims: ModelDims, seed: u64) -> Self {
        Self::with_init_scale(dims, seed, 0.1)
    }

    pub fn with_init_scale(dims: ModelDims, seed: u64, scale: f64) -> Self {
        let ModelDims { vocab, embed, hidden } = dims;
        let mut params = Params::new(vec![
            ParamBlock::zeros("embedding", vocab, embed),
            ParamBlock::zeros("hidden_w", embed, hidden),
            ParamBlock::zeros("hidden_b", 1, hidden),
            ParamBlock::zeros("output_w", hidden, vocab),
            ParamBlock::zeros("output_b", 1, vocab),
        ]);
        let mut rng = stream_rng(seed, "optlab.init");
        if scale > 0.0 {
            for block in &mut params.blocks {
                for v in &mut block.values {
                    *v = rng.gen_range(-scale..=scale);
                }
            }
        }
        Self { dims, params }
    }

    pub fn loss(&self, batch: &[Bigram]) -> f64 {
        loss(self.dims, &self.params, batch)
    }

    pub fn loss_and_grad(&self, batch: &[Bigram]) -> (f64, Params) {
        loss_and_grad(self.dims, &self.params, batch)
    }

    pub fn perplexity(&self, data: &[Bigram]) -> f64 {
        perplexity(self.dims, &self.params, data)
    }
}

struct Forward {
    hidden: Vec<f64>,
    probs: Vec<f64>,
}

fn forward(dims: ModelDims, p: &Params, x: u32, out: &mut Forward) -> f64 {
    let ModelDims { vocab, embed, hidden } = dims;
    let e = &p.blocks[EMBEDDING].values[x as usize * embed..(x as usize + 1) * embed];
    let w1 = &p.blocks[HIDDEN_W].values;
    let b1 = &p.blocks[HIDDEN_B].values;
    let w2 = &p.blocks[OUTPUT_W].values;
    let b2 = &p.blocks[OUTPUT_B].values;
    out.hidden.copy_from_slice(b1);
    for (i, &ei) in e.iter().enumerate() {
        let row = &w1[i * hidden..(i + 1) * hidden];
        for (z, &w) in out.hidden.iter_mut().zip(row) {
            *z += ei * w;
        }
    }
    for z in &mut out.hidden {
        *z = z.tanh();
    }
    out.probs.copy_from_slice(b2);
    for (j, &a) in out.hidden.iter().enumerate() {
        let row = &w2[j * vocab..(j + 1) * vocab];
        for (l, &w) in out.probs.iter_mut().zip(row) {
            *l += a * w;
        }
    }
    let max = out.probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for l in &mut out.probs {
        *l = (*l - max).exp();
        sum += *l;
    }
    for l in &mut out.probs {
        *l /= sum;
    }
    // log-sum-exp, returned for an exact NLL
    max + sum.ln()
}

fn buffers(dims: ModelDims) -> Forward {
    Forward {
        hidden: vec![0.0; dims.hidden],
        probs: vec![0.0; dims.vocab],
    }
}

fn logit(dims: ModelDims, p: &Params, hidden: &[f64], y: usize) -> f64 {
    let w2 = &p.blocks[OUTPUT_W].values;
    let mut l = p.blocks[OUTPUT_B].values[y];
    for (j, &a) in hidden.iter().enumerate() {
        l += a * w2[j * dims.vocab + y];
    }
    l
}

/// Mean negative log-likelihood of the next tokens.
pub fn loss(dims: ModelDims, p: &Params, batch: &[Bigram]) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let mut buf = buffers(dims);
    let mut total = 0.0;
    for &(x, y) in batch {
        let lse = forward(dims, p, x, &mut buf);
        total += lse - logit(dims, p, &buf.hidden, y as usize);
    }
    total / batch.len() as f64
}

pub fn perplexity(dims: ModelDims, p: &Params, data: &[Bigram]) -> f64 {
    loss(dims, p, data).exp()
}

/// Mean NLL and its analytic gradient.
pub fn loss_and_grad(dims: ModelDims, p: &Params, batch: &[Bigram]) -> (f64, Params) {
    let ModelDims { vocab, embed, hidden } = dims;
    let mut g = p.zeros_like();
    if batch.is_empty() {
        return (0.0, g);
    }
    let scale = 1.0 / batch.len() as f64;
    let mut buf = buffers(dims);
    let mut dz = vec![0.0; hidden];
    let mut total = 0.0;
    let w1 = &p.blocks[HIDDEN_W].values;
    let w2 = &p.blocks[OUTPUT_W].values;
    for &(x, y) in batch {
        let (x, y) = (x as usize, y as usize);
        let lse = forward(dims, p, x as u32, &mut buf);
        total += lse - logit(dims, p, &buf.hidden, y);
        let dlogits = &mut buf.probs;
        dlogits[y] -= 1.0;
        for d in dlogits.iter_mut() {
            *d *= scale;
        }
        {
            let gb2 = &mut g.blocks[OUTPUT_B].values;
            for (gb, &d) in gb2.iter_mut().zip(dlogits.iter()) {
                *gb += d;
            }
        }
        for j in 0..hidden {
            let a = buf.hidden[j];
            let w_row = &w2[j * vocab..(j + 1) * vocab];
            let g_row = &mut g.blocks[OUTPUT_W].values[j * vocab..(j + 1) * vocab];
            let mut da = 0.0;
            for k in 0..vocab {
                g_row[k] += a * dlogits[k];
                da += w_row[k] * dlogits[k];
            }
            dz[j] = da * (1.0 - a * a);
        }
        for (gb, &d) in g.blocks[HIDDEN_B].values.iter_mut().zip(&dz) {
            *gb += d;
        }
        for i in 0..embed {
            let ei = p.blocks[EMBEDDING].values[x * embed + i];
            let w_row = &w1[i * hidden..(i + 1) * hidden];
            let g_row = &mut g.blocks[HIDDEN_W].values[i * hidden..(i + 1) * hidden];
            let mut de = 0.0;
            for j in 0..hidden {
                g_row[j] += ei * dz[j];
                de += w_row[j] * dz[j];
            }
            g.blocks[EMBEDDING].values[x * embed + i] += de;
        }
    }
    (total * scale, g)
}

/// Most likely next token after `x`.
pub fn predict(dims: ModelDims, p: &Params, x: u32) -> u32 {
    let mut buf = buffers(dims);
    forward(dims, p, x, &mut buf);
    let mut best = 0;
    for (k, &pr) in buf.probs.iter().enumerate() {
        if pr > buf.probs[best] {
            best = k;
        }
    }
    best as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_model_has_vocab_perplexity() {
        let dims = ModelDims {
            vocab: 7,
            embed: 3,
            hidden: 4,
        };
        let model = SurrogateModel::with_init_scale(dims, 1, 0.0);
        let ppl = model.perplexity(&[(0, 1), (2, 3), (6, 6)]);
        assert!((ppl - 7.0).abs() < 1e-12);
    }

    #[test]
    fn loss_matches_gradient_pass() {
        let model = SurrogateModel::new(ModelDims::default(), 3);
        let batch = [(0, 5), (5, 9), (9, 0), (17, 199)];
        let (l, g) = model.loss_and_grad(&batch);
        assert!((l - model.loss(&batch)).abs() < 1e-12);
        assert_eq!(g.len(), model.params.len());
        assert!(model.perplexity(&batch) >= 1.0);
    }

    #[test]
    fn init_is_seeded() {
        let a = SurrogateModel::new(ModelDims::default(), 9);
        let b = SurrogateModel::new(ModelDims::default(), 9);
        let c = SurrogateModel::new(ModelDims::default(), 10);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.params.blocks.iter().flat_map(|b| &b.values).all(|v| v.abs() <= 0.1));
    }
}
