//! Autoregressive sampling from a trained generator.
//!
//! Generation starts from BOS and draws the next token from
//! softmax(logits / temperature) until EOS or the length cap. Each of the
//! n sequences consumes its own PRNG stream derived from (seed, index), so
//! results are independent of batching and fully reproducible.

use ndarray::{s, Array2};

use super::checkpoint::GeneratorCheckpoint;
use super::SeqModelError;
use crate::embeddings::BOS;
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, Clone)]
pub struct SampleOptions {
    pub n: usize,
    pub temperature: f64,
    pub seed: u64,
    /// Argmax decoding (the temperature -> 0 limit); ignores `temperature`.
    pub greedy: bool,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            n: 1,
            temperature: 1.0,
            seed: 0,
            greedy: false,
        }
    }
}

/// Draw `opts.n` strings from the checkpointed model.
pub fn sample(ckpt: &GeneratorCheckpoint, opts: &SampleOptions) -> Result<Vec<String>, SeqModelError> {
    if opts.n < 1 {
        return Err(SeqModelError::BadConfig("sample count must be >= 1".into()));
    }
    if !opts.greedy && !(opts.temperature > 0.0 && opts.temperature.is_finite()) {
        return Err(SeqModelError::BadTemperature(opts.temperature));
    }
    let params = &ckpt.params;
    let h_size = params.hidden_size();
    let v_size = params.vocab_size();
    let n_layers = params.layers.len();
    let max_len = ckpt.config.max_sample_len;

    let mut streams: Vec<SplitMix64> = (0..opts.n)
        .map(|i| SplitMix64::new(derive_seed(opts.seed, &format!("sample/{i}"))))
        .collect();

    // Active-set state; rows are repacked as sequences finish.
    let mut active: Vec<usize> = (0..opts.n).collect();
    let mut h: Vec<Array2<f64>> = (0..n_layers)
        .map(|_| Array2::zeros((opts.n, h_size)))
        .collect();
    let mut c: Vec<Array2<f64>> = h.clone();
    let mut inputs: Vec<u32> = vec![BOS; opts.n];
    let mut outputs: Vec<Vec<u32>> = vec![Vec::new(); opts.n];

    for _ in 0..max_len {
        if active.is_empty() {
            break;
        }
        let n_act = active.len();
        let x = params.embedding.lookup(&inputs)?;
        let mut layer_in = x;
        for l in 0..n_layers {
            let layer = &params.layers[l];
            let mut gates = layer_in.dot(&layer.w_x) + h[l].dot(&layer.w_h);
            gates.rows_mut().into_iter().for_each(|mut r| r += &layer.b);
            let mut new_h = Array2::zeros((n_act, h_size));
            let gs = gates.as_slice_mut().expect("standard layout");
            let cs = c[l].as_slice_mut().expect("standard layout");
            let hs = new_h.as_slice_mut().expect("standard layout");
            for r in 0..n_act {
                let g_row = &mut gs[r * 4 * h_size..(r + 1) * 4 * h_size];
                let (gi, rest) = g_row.split_at_mut(h_size);
                let (gf, rest) = rest.split_at_mut(h_size);
                let (gg, go) = rest.split_at_mut(h_size);
                let off = r * h_size;
                for k in 0..h_size {
                    let i = 1.0 / (1.0 + (-gi[k]).exp());
                    let f = 1.0 / (1.0 + (-gf[k]).exp());
                    let g = gg[k].tanh();
                    let o = 1.0 / (1.0 + (-go[k]).exp());
                    let c_new = f * cs[off + k] + i * g;
                    cs[off + k] = c_new;
                    hs[off + k] = o * c_new.tanh();
                }
            }
            h[l] = new_h.clone();
            layer_in = new_h;
        }
        let mut logits = layer_in.dot(&params.w_out);
        logits
            .rows_mut()
            .into_iter()
            .for_each(|mut r| r += &params.b_out);

        // Draw next tokens; collect survivors.
        let mut keep: Vec<usize> = Vec::with_capacity(n_act);
        let mut next_inputs: Vec<u32> = Vec::with_capacity(n_act);
        for r in 0..n_act {
            let seq_idx = active[r];
            let row = logits.row(r);
            let token = if opts.greedy {
                let mut best = 0usize;
                for k in 1..v_size {
                    if row[k] > row[best] {
                        best = k;
                    }
                }
                best as u32
            } else {
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = row
                    .iter()
                    .map(|&v| ((v - max) / opts.temperature).exp())
                    .collect();
                streams[seq_idx].categorical(&weights) as u32
            };
            if token == crate::embeddings::EOS {
                continue; // finished; drop from the active set
            }
            outputs[seq_idx].push(token);
            keep.push(r);
            next_inputs.push(token);
        }

        if keep.len() < n_act {
            let new_active: Vec<usize> = keep.iter().map(|&r| active[r]).collect();
            for l in 0..n_layers {
                let mut nh = Array2::zeros((keep.len(), h_size));
                let mut nc = Array2::zeros((keep.len(), h_size));
                for (new_r, &old_r) in keep.iter().enumerate() {
                    nh.slice_mut(s![new_r, ..]).assign(&h[l].slice(s![old_r, ..]));
                    nc.slice_mut(s![new_r, ..]).assign(&c[l].slice(s![old_r, ..]));
                }
                h[l] = nh;
                c[l] = nc;
            }
            active = new_active;
        }
        inputs = next_inputs;
    }

    Ok(outputs
        .into_iter()
        .map(|ids| ckpt.vocab.decode(&ids))
        .collect())
}
