//! LSTM stack: parameters, batched forward with cache, masked
//! cross-entropy, and exact backpropagation through time.
//!
//! Gate layout is i|f|g|o. Per timestep: i, f, o pass through the logistic
//! function, the cell candidate g through tanh, then
//! `c' = f (*) c + i (*) g` and `h = o (*) tanh(c')`. Dropout (inverted
//! scaling) applies after the embedding and after the last LSTM layer.
//! Batches are stored time-major: row `t * batch + b` of every cached
//! matrix belongs to timestep t of sequence b, so each timestep is a
//! contiguous block and the big input/output projections run as single
//! matrix products over all timesteps at once.

use ndarray::{linalg::general_mat_mul, s, Array1, Array2};

use super::{GeneratorConfig, SeqModelError};
use crate::embeddings::{EmbeddingMode, HybridEmbedding, Vocabulary, BOS, EOS, PAD};
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    pub w_x: Array2<f64>, // (in_dim, 4H)
    pub w_h: Array2<f64>, // (H, 4H)
    pub b: Array1<f64>,   // (4H)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParameters {
    pub embedding: HybridEmbedding,
    pub layers: Vec<LstmLayer>,
    pub w_out: Array2<f64>, // (H, V)
    pub b_out: Array1<f64>, // (V)
}

impl LstmParameters {
    /// Initialize from the config: LSTM and decoder weights uniform on
    /// +-1/sqrt(hidden), biases zero except the forget gate at +1.
    pub fn init(config: &GeneratorConfig, vocab_size: usize) -> Result<Self, SeqModelError> {
        config.validate()?;
        let embedding = match config.mode {
            EmbeddingMode::TrainableOnly => {
                HybridEmbedding::trainable_only(vocab_size, config.d, derive_seed(config.seed, "emb"))
            }
            EmbeddingMode::RandomFixed => HybridEmbedding::random_fixed(
                vocab_size,
                config.d,
                config.d_t,
                derive_seed(config.seed, "emb"),
            )?,
            EmbeddingMode::ShaFixed => HybridEmbedding::sha_fixed(
                vocab_size,
                config.d,
                config.d_t,
                derive_seed(config.seed, "emb"),
            )?,
        };
        let h = config.hidden_size;
        let bound = 1.0 / (h as f64).sqrt();
        let mut rng = SplitMix64::new(derive_seed(config.seed, "init"));
        let mut layers = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let in_dim = if l == 0 { config.d } else { h };
            let w_x = Array2::from_shape_fn((in_dim, 4 * h), |_| rng.uniform(-bound, bound));
            let w_h = Array2::from_shape_fn((h, 4 * h), |_| rng.uniform(-bound, bound));
            let mut b = Array1::zeros(4 * h);
            b.slice_mut(s![h..2 * h]).fill(1.0);
            layers.push(LstmLayer { w_x, w_h, b });
        }
        let w_out = Array2::from_shape_fn((h, vocab_size), |_| rng.uniform(-bound, bound));
        let b_out = Array1::zeros(vocab_size);
        Ok(Self {
            embedding,
            layers,
            w_out,
            b_out,
        })
    }

    pub fn hidden_size(&self) -> usize {
        self.layers[0].w_h.nrows()
    }

    pub fn vocab_size(&self) -> usize {
        self.w_out.ncols()
    }

    /// Trainable tensors as (name, flat slice) pairs in a fixed order.
    /// The fixed embedding block is deliberately absent.
    pub fn trainable_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out: Vec<(String, &mut [f64])> = Vec::new();
        out.push((
            "embedding.e_t".into(),
            self.embedding
                .e_t_mut()
                .as_slice_mut()
                .expect("standard layout"),
        ));
        for (l, layer) in self.layers.iter_mut().enumerate() {
            out.push((format!("layer{l}.w_x"), layer.w_x.as_slice_mut().unwrap()));
            out.push((format!("layer{l}.w_h"), layer.w_h.as_slice_mut().unwrap()));
            out.push((format!("layer{l}.b"), layer.b.as_slice_mut().unwrap()));
        }
        out.push(("decoder.w".into(), self.w_out.as_slice_mut().unwrap()));
        out.push(("decoder.b".into(), self.b_out.as_slice_mut().unwrap()));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub e_t: Array2<f64>,
    pub layers: Vec<LayerGradients>,
    pub w_out: Array2<f64>,
    pub b_out: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub w_x: Array2<f64>,
    pub w_h: Array2<f64>,
    pub b: Array1<f64>,
}

impl Gradients {
    /// Flat views in the same order as `LstmParameters::trainable_mut`.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = Vec::new();
        out.push(("embedding.e_t".into(), self.e_t.as_slice().unwrap()));
        for (l, layer) in self.layers.iter().enumerate() {
            out.push((format!("layer{l}.w_x"), layer.w_x.as_slice().unwrap()));
            out.push((format!("layer{l}.w_h"), layer.w_h.as_slice().unwrap()));
            out.push((format!("layer{l}.b"), layer.b.as_slice().unwrap()));
        }
        out.push(("decoder.w".into(), self.w_out.as_slice().unwrap()));
        out.push(("decoder.b".into(), self.b_out.as_slice().unwrap()));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out: Vec<(String, &mut [f64])> = Vec::new();
        out.push(("embedding.e_t".into(), self.e_t.as_slice_mut().unwrap()));
        for (l, layer) in self.layers.iter_mut().enumerate() {
            out.push((format!("layer{l}.w_x"), layer.w_x.as_slice_mut().unwrap()));
            out.push((format!("layer{l}.w_h"), layer.w_h.as_slice_mut().unwrap()));
            out.push((format!("layer{l}.b"), layer.b.as_slice_mut().unwrap()));
        }
        out.push(("decoder.w".into(), self.w_out.as_slice_mut().unwrap()));
        out.push(("decoder.b".into(), self.b_out.as_slice_mut().unwrap()));
        out
    }
}

/// A padded teacher-forcing batch in time-major layout.
#[derive(Debug, Clone)]
pub struct Batch {
    pub batch: usize,
    pub t_steps: usize,
    /// input[t * batch + b]: BOS then the sequence tokens, PAD-filled.
    pub input: Vec<u32>,
    /// target[t * batch + b]: sequence tokens then EOS, PAD-filled.
    pub target: Vec<u32>,
    /// mask[t * batch + b]: true where target is a real token or EOS.
    pub mask: Vec<bool>,
}

impl Batch {
    /// Wrap raw id sequences with BOS/EOS and pad to the longest length.
    pub fn from_sequences(seqs: &[Vec<u32>]) -> Batch {
        let batch = seqs.len();
        let t_steps = seqs.iter().map(|s| s.len()).max().unwrap_or(0) + 1;
        let mut input = vec![PAD; t_steps * batch];
        let mut target = vec![PAD; t_steps * batch];
        let mut mask = vec![false; t_steps * batch];
        for (b, seq) in seqs.iter().enumerate() {
            for t in 0..=seq.len() {
                let idx = t * batch + b;
                input[idx] = if t == 0 { BOS } else { seq[t - 1] };
                target[idx] = if t == seq.len() { EOS } else { seq[t] };
                mask[idx] = true;
            }
        }
        Batch {
            batch,
            t_steps,
            input,
            target,
            mask,
        }
    }

    pub fn token_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

struct LayerCache {
    gates: Array2<f64>,  // (T*B, 4H), post-activation
    c: Array2<f64>,      // (T*B, H)
    tanh_c: Array2<f64>, // (T*B, H)
    h: Array2<f64>,      // (T*B, H)
}

/// Forward result: logits plus everything backward needs.
pub struct Forward {
    pub logits: Array2<f64>, // (T*B, V)
    t_steps: usize,
    batch: usize,
    ids: Vec<u32>,
    x_dropped: Array2<f64>,
    emb_mask: Option<Array2<f64>>,
    layer_caches: Vec<LayerCache>,
    h_top_dropped: Array2<f64>,
    out_mask: Option<Array2<f64>>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dropout_mask(rows: usize, cols: usize, p: f64, rng: &mut SplitMix64) -> Array2<f64> {
    let keep = 1.0 - p;
    Array2::from_shape_fn((rows, cols), |_| {
        if rng.bernoulli(p) {
            0.0
        } else {
            1.0 / keep
        }
    })
}

/// Run the LSTM stack over a padded batch.
pub fn forward(
    params: &LstmParameters,
    batch: &Batch,
    dropout: f64,
    dropout_on: bool,
    seed: u64,
) -> Result<Forward, SeqModelError> {
    let (t_steps, b_size) = (batch.t_steps, batch.batch);
    let rows = t_steps * b_size;
    let h_size = params.hidden_size();
    let mut rng = SplitMix64::new(derive_seed(seed, "dropout"));
    let use_dropout = dropout_on && dropout > 0.0;

    // Embedding + input dropout.
    let mut x = params.embedding.lookup(&batch.input)?;
    let emb_mask = if use_dropout {
        let m = dropout_mask(rows, x.ncols(), dropout, &mut rng);
        x *= &m;
        Some(m)
    } else {
        None
    };
    let x_dropped = x;

    let mut layer_caches: Vec<LayerCache> = Vec::with_capacity(params.layers.len());
    for (l, layer) in params.layers.iter().enumerate() {
        let input: &Array2<f64> = if l == 0 {
            &x_dropped
        } else {
            &layer_caches[l - 1].h
        };
        // One big input projection for all timesteps, then the recurrent
        // part timestep by timestep.
        let mut gates = input.dot(&layer.w_x);
        for t in 0..t_steps {
            let row0 = t * b_size;
            gates
                .slice_mut(s![row0..row0 + b_size, ..])
                .rows_mut()
                .into_iter()
                .for_each(|mut r| r += &layer.b);
        }
        let mut c = Array2::zeros((rows, h_size));
        let mut tanh_c = Array2::zeros((rows, h_size));
        let mut h = Array2::zeros((rows, h_size));
        for t in 0..t_steps {
            let row0 = t * b_size;
            if t > 0 {
                let h_prev = h.slice(s![row0 - b_size..row0, ..]);
                let mut g_t = gates.slice_mut(s![row0..row0 + b_size, ..]);
                general_mat_mul(1.0, &h_prev, &layer.w_h, 1.0, &mut g_t);
            }
            let gs = gates.as_slice_mut().expect("standard layout");
            let cs = c.as_slice_mut().expect("standard layout");
            let tcs = tanh_c.as_slice_mut().expect("standard layout");
            let hs = h.as_slice_mut().expect("standard layout");
            for bi in 0..b_size {
                let r = row0 + bi;
                let g_row = &mut gs[r * 4 * h_size..(r + 1) * 4 * h_size];
                let (gi, rest) = g_row.split_at_mut(h_size);
                let (gf, rest) = rest.split_at_mut(h_size);
                let (gg, go) = rest.split_at_mut(h_size);
                let off = r * h_size;
                for k in 0..h_size {
                    let i = sigmoid(gi[k]);
                    let f = sigmoid(gf[k]);
                    let g = gg[k].tanh();
                    let o = sigmoid(go[k]);
                    gi[k] = i;
                    gf[k] = f;
                    gg[k] = g;
                    go[k] = o;
                    let c_prev = if t > 0 { cs[off - b_size * h_size + k] } else { 0.0 };
                    let c_new = f * c_prev + i * g;
                    let tc = c_new.tanh();
                    cs[off + k] = c_new;
                    tcs[off + k] = tc;
                    hs[off + k] = o * tc;
                }
            }
        }
        layer_caches.push(LayerCache {
            gates,
            c,
            tanh_c,
            h,
        });
    }

    // Output dropout + decoder.
    let mut h_top = layer_caches.last().unwrap().h.clone();
    let out_mask = if use_dropout {
        let m = dropout_mask(rows, h_size, dropout, &mut rng);
        h_top *= &m;
        Some(m)
    } else {
        None
    };
    let mut logits = h_top.dot(&params.w_out);
    logits
        .rows_mut()
        .into_iter()
        .for_each(|mut r| r += &params.b_out);
    // Non-finite activations surface through the loss, which checks its
    // accumulated total.

    Ok(Forward {
        logits,
        t_steps,
        batch: b_size,
        ids: batch.input.clone(),
        x_dropped,
        emb_mask,
        layer_caches,
        h_top_dropped: h_top,
        out_mask,
    })
}

/// Masked mean cross-entropy in nats/token plus the logits gradient.
/// Stabilized by max subtraction; masked rows contribute nothing.
pub fn loss_and_dlogits(
    logits: &Array2<f64>,
    targets: &[u32],
    mask: &[bool],
) -> Result<(f64, Array2<f64>), SeqModelError> {
    let n_rows = logits.nrows();
    if targets.len() != n_rows || mask.len() != n_rows {
        return Err(SeqModelError::ShapeMismatch(format!(
            "logits rows {n_rows} vs targets {} / mask {}",
            targets.len(),
            mask.len()
        )));
    }
    let n_unmasked = mask.iter().filter(|&&m| m).count();
    if n_unmasked == 0 {
        return Err(SeqModelError::AllPositionsMasked);
    }
    let inv_n = 1.0 / n_unmasked as f64;
    let mut total = 0.0;
    let mut dlogits = Array2::zeros(logits.raw_dim());
    for r in 0..n_rows {
        if !mask[r] {
            continue;
        }
        let row = logits.row(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for &v in row.iter() {
            z += (v - max).exp();
        }
        let log_z = max + z.ln();
        let target = targets[r] as usize;
        total += log_z - row[target];
        for (k, &v) in row.iter().enumerate() {
            let softmax = (v - max).exp() / z;
            dlogits[(r, k)] = (softmax - f64::from(k == target)) * inv_n;
        }
        if !total.is_finite() {
            return Err(SeqModelError::NonFiniteActivation(format!(
                "loss at row {r}"
            )));
        }
    }
    Ok((total * inv_n, dlogits))
}

/// Exact gradients of the masked loss for every trainable tensor. The
/// fixed embedding block receives no gradient by construction.
pub fn backward(params: &LstmParameters, fwd: &Forward, dlogits: &Array2<f64>) -> Gradients {
    let (t_steps, b_size) = (fwd.t_steps, fwd.batch);
    let rows = t_steps * b_size;
    let h_size = params.hidden_size();

    // Decoder.
    let w_out_grad = fwd.h_top_dropped.t().dot(dlogits);
    let b_out_grad = dlogits.sum_axis(ndarray::Axis(0));
    let mut d_h_top = dlogits.dot(&params.w_out.t());
    if let Some(m) = &fwd.out_mask {
        d_h_top *= m;
    }

    let mut layer_grads: Vec<LayerGradients> = Vec::with_capacity(params.layers.len());
    let mut d_upper = d_h_top; // gradient flowing into layer l's h output

    for l in (0..params.layers.len()).rev() {
        let layer = &params.layers[l];
        let cache = &fwd.layer_caches[l];
        let mut d_gates = Array2::zeros((rows, 4 * h_size));
        let mut dh_carry: Array2<f64> = Array2::zeros((b_size, h_size));
        let mut dc_carry: Array2<f64> = Array2::zeros((b_size, h_size));

        let gates_s = cache.gates.as_slice().expect("standard layout");
        let c_s = cache.c.as_slice().expect("standard layout");
        let tanh_s = cache.tanh_c.as_slice().expect("standard layout");
        let upper_s = d_upper.as_slice().expect("standard layout");
        for t in (0..t_steps).rev() {
            let row0 = t * b_size;
            {
                let dg_s = d_gates.as_slice_mut().expect("standard layout");
                let dhc = dh_carry.as_slice_mut().expect("standard layout");
                let dcc = dc_carry.as_slice_mut().expect("standard layout");
                for bi in 0..b_size {
                    let r = row0 + bi;
                    let g_row = &gates_s[r * 4 * h_size..(r + 1) * 4 * h_size];
                    let (gi, rest) = g_row.split_at(h_size);
                    let (gf, rest) = rest.split_at(h_size);
                    let (gg, go) = rest.split_at(h_size);
                    let dg_row = &mut dg_s[r * 4 * h_size..(r + 1) * 4 * h_size];
                    let (dgi, rest) = dg_row.split_at_mut(h_size);
                    let (dgf, rest) = rest.split_at_mut(h_size);
                    let (dgg, dgo) = rest.split_at_mut(h_size);
                    let off = r * h_size;
                    let boff = bi * h_size;
                    for k in 0..h_size {
                        let dh = upper_s[off + k] + dhc[boff + k];
                        let i = gi[k];
                        let f = gf[k];
                        let g = gg[k];
                        let o = go[k];
                        let tc = tanh_s[off + k];
                        let c_prev = if t > 0 { c_s[off - b_size * h_size + k] } else { 0.0 };

                        let d_o = dh * tc;
                        let dc = dh * o * (1.0 - tc * tc) + dcc[boff + k];
                        let d_i = dc * g;
                        let d_g = dc * i;
                        let d_f = dc * c_prev;

                        dgi[k] = d_i * i * (1.0 - i);
                        dgf[k] = d_f * f * (1.0 - f);
                        dgg[k] = d_g * (1.0 - g * g);
                        dgo[k] = d_o * o * (1.0 - o);
                        dcc[boff + k] = dc * f;
                    }
                }
            }
            // dh_{t-1} = dG_t . W_h^T
            let dg_t = d_gates.slice(s![row0..row0 + b_size, ..]);
            dh_carry = dg_t.dot(&layer.w_h.t());
        }

        // Weight gradients in single products over all timesteps.
        let input: &Array2<f64> = if l == 0 {
            &fwd.x_dropped
        } else {
            &fwd.layer_caches[l - 1].h
        };
        let w_x_grad = input.t().dot(&d_gates);
        // H_prev stacks h_{t-1} rows (zeros for t = 0).
        let mut h_prev = Array2::zeros((rows, h_size));
        if t_steps > 1 {
            h_prev
                .slice_mut(s![b_size.., ..])
                .assign(&cache.h.slice(s![..rows - b_size, ..]));
        }
        let w_h_grad = h_prev.t().dot(&d_gates);
        let b_grad = d_gates.sum_axis(ndarray::Axis(0));

        d_upper = d_gates.dot(&layer.w_x.t());
        layer_grads.push(LayerGradients {
            w_x: w_x_grad,
            w_h: w_h_grad,
            b: b_grad,
        });
    }
    layer_grads.reverse();

    // Embedding gradient: scatter-add the trainable columns.
    let mut d_x = d_upper;
    if let Some(m) = &fwd.emb_mask {
        d_x *= m;
    }
    let d_t = params.embedding.d_t();
    let mut e_t_grad = Array2::zeros((params.embedding.vocab_size(), d_t));
    for r in 0..rows {
        let id = fwd.ids[r] as usize;
        for j in 0..d_t {
            e_t_grad[(id, j)] += d_x[(r, j)];
        }
    }

    Gradients {
        e_t: e_t_grad,
        layers: layer_grads,
        w_out: w_out_grad,
        b_out: b_out_grad,
    }
}

/// A generator bundles config, vocabulary, and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub config: GeneratorConfig,
    pub vocab: Vocabulary,
    pub params: LstmParameters,
}

impl Generator {
    pub fn new(config: GeneratorConfig, vocab: Vocabulary) -> Result<Self, SeqModelError> {
        let params = LstmParameters::init(&config, vocab.size())?;
        Ok(Self {
            config,
            vocab,
            params,
        })
    }
}
