//! Teacher-forced training loop.
//!
//! The validation split is by molecule: corpus strings are grouped by
//! canonical form before splitting, so augmented rewritings of one
//! molecule never straddle the train/validation boundary. Each epoch the
//! training set is shuffled with the seeded generator, grouped into pools
//! of eight batches that are sorted by length (dynamic per-batch padding
//! with less waste), and the resulting batch order is shuffled again.

use std::time::Instant;

use super::adam::{AdamState, GRAD_CLIP_NORM};
use super::checkpoint::GeneratorCheckpoint;
use super::model::{backward, forward, loss_and_dlogits, Batch, Generator};
use super::{GeneratorConfig, SeqModelError};
use crate::embeddings::Vocabulary;
use crate::rng::{derive_seed, SplitMix64};
use crate::smiles::{canonical_form, is_valid, tokenize};

/// Per-epoch training curves. Wall time is informational only: equality
/// compares the loss curves.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TrainingHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<Option<f64>>,
    pub wall_time_s: Vec<f64>,
}

impl PartialEq for TrainingHistory {
    fn eq(&self, other: &Self) -> bool {
        self.train_loss == other.train_loss && self.val_loss == other.val_loss
    }
}

/// Train a generator on a SMILES corpus. `val_fraction` (0 to 0.5) of the
/// distinct molecules are held out for validation loss.
pub fn train(
    config: &GeneratorConfig,
    corpus: &[String],
    val_fraction: f64,
) -> Result<(GeneratorCheckpoint, TrainingHistory), SeqModelError> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(SeqModelError::EmptyCorpus);
    }
    if !(0.0..=0.5).contains(&val_fraction) {
        return Err(SeqModelError::BadConfig(format!(
            "val_fraction {val_fraction} outside [0, 0.5]"
        )));
    }

    // Tokenize and validate the corpus.
    let mut token_seqs = Vec::with_capacity(corpus.len());
    let mut canon = Vec::with_capacity(corpus.len());
    for (index, s) in corpus.iter().enumerate() {
        if !is_valid(s) {
            return Err(SeqModelError::InvalidSmiles {
                index,
                reason: "failed parse or valence check".into(),
            });
        }
        token_seqs.push(tokenize(s).map_err(|e| SeqModelError::InvalidSmiles {
            index,
            reason: e.to_string(),
        })?);
        canon.push(canonical_form(s).expect("validated above"));
    }
    let vocab = Vocabulary::build(&token_seqs)?;
    let encoded: Vec<Vec<u32>> = token_seqs
        .iter()
        .map(|seq| vocab.encode(seq).expect("vocabulary built from corpus"))
        .collect();

    // Group indices by molecule and split groups.
    let mut groups: std::collections::BTreeMap<String, Vec<usize>> = Default::default();
    for (i, c) in canon.iter().enumerate() {
        groups.entry(c.clone()).or_default().push(i);
    }
    let mut group_list: Vec<Vec<usize>> = groups.into_values().collect();
    let mut split_rng = SplitMix64::new(derive_seed(config.seed, "split"));
    split_rng.shuffle(&mut group_list);
    let n_val_groups = (val_fraction * group_list.len() as f64).floor() as usize;
    let mut val_idx: Vec<usize> = Vec::new();
    let mut train_idx: Vec<usize> = Vec::new();
    for (gi, group) in group_list.iter().enumerate() {
        if gi < n_val_groups {
            val_idx.extend(group);
        } else {
            train_idx.extend(group);
        }
    }
    if train_idx.is_empty() {
        return Err(SeqModelError::BadConfig(
            "validation split consumed the whole corpus".into(),
        ));
    }

    let generator = Generator::new(config.clone(), vocab)?;
    let mut params = generator.params;
    let vocab = generator.vocab;
    let mut adam = AdamState::default();
    let mut master = SplitMix64::new(derive_seed(config.seed, "train"));

    let mut history = TrainingHistory {
        train_loss: Vec::with_capacity(config.epochs),
        val_loss: Vec::with_capacity(config.epochs),
        wall_time_s: Vec::with_capacity(config.epochs),
    };

    let val_batches: Vec<Batch> = batches_of(&val_idx, &encoded, config.batch_size);

    for _epoch in 0..config.epochs {
        let started = Instant::now();
        let epoch_seed = master.next_u64();
        let mut order = train_idx.clone();
        SplitMix64::new(derive_seed(epoch_seed, "shuffle")).shuffle(&mut order);

        // Pool-sort for padding efficiency, then shuffle batch order.
        let pool = 8 * config.batch_size;
        let mut batches: Vec<Vec<usize>> = Vec::new();
        for chunk in order.chunks(pool) {
            let mut chunk: Vec<usize> = chunk.to_vec();
            chunk.sort_by_key(|&i| encoded[i].len());
            for b in chunk.chunks(config.batch_size) {
                batches.push(b.to_vec());
            }
        }
        SplitMix64::new(derive_seed(epoch_seed, "batches")).shuffle(&mut batches);

        let mut nats = 0.0;
        let mut tokens = 0usize;
        for (bi, batch_idx) in batches.iter().enumerate() {
            let seqs: Vec<Vec<u32>> = batch_idx.iter().map(|&i| encoded[i].clone()).collect();
            let batch = Batch::from_sequences(&seqs);
            let dropout_seed = derive_seed(epoch_seed, &format!("drop/{bi}"));
            let fwd = forward(&params, &batch, config.dropout, true, dropout_seed)?;
            let (loss, dlogits) = loss_and_dlogits(&fwd.logits, &batch.target, &batch.mask)?;
            if !loss.is_finite() {
                return Err(SeqModelError::NonFiniteActivation("training loss".into()));
            }
            let mut grads = backward(&params, &fwd, &dlogits);
            {
                let mut slices = grads.tensors_mut();
                let mut view: Vec<(&str, &mut [f64])> = slices
                    .iter_mut()
                    .map(|(n, s)| (n.as_str(), &mut **s))
                    .collect();
                AdamState::clip(&mut view, GRAD_CLIP_NORM);
            }
            let grad_tensors = grads.tensors();
            let mut param_tensors = params.trainable_mut();
            let mut triples: Vec<(&str, &mut [f64], &[f64])> = param_tensors
                .iter_mut()
                .zip(grad_tensors.iter())
                .map(|((pn, p), (gn, g))| {
                    debug_assert_eq!(pn, gn);
                    (pn.as_str(), &mut **p, *g)
                })
                .collect();
            adam.update(&mut triples, config.learning_rate, 0.0);

            let n_tok = batch.token_count();
            nats += loss * n_tok as f64;
            tokens += n_tok;
        }
        history.train_loss.push(nats / tokens as f64);

        let val = if val_batches.is_empty() {
            None
        } else {
            let mut nats = 0.0;
            let mut tokens = 0usize;
            for batch in &val_batches {
                let fwd = forward(&params, batch, 0.0, false, 0)?;
                let (loss, _) = loss_and_dlogits(&fwd.logits, &batch.target, &batch.mask)?;
                nats += loss * batch.token_count() as f64;
                tokens += batch.token_count();
            }
            Some(nats / tokens as f64)
        };
        history.val_loss.push(val);
        history.wall_time_s.push(started.elapsed().as_secs_f64());
    }

    let checkpoint = GeneratorCheckpoint {
        config: config.clone(),
        vocab,
        params,
        adam,
        rng_state: master.state(),
    };
    Ok((checkpoint, history))
}

fn batches_of(indices: &[usize], encoded: &[Vec<u32>], batch_size: usize) -> Vec<Batch> {
    let mut sorted: Vec<usize> = indices.to_vec();
    sorted.sort_by_key(|&i| encoded[i].len());
    sorted
        .chunks(batch_size)
        .map(|chunk| {
            let seqs: Vec<Vec<u32>> = chunk.iter().map(|&i| encoded[i].clone()).collect();
            Batch::from_sequences(&seqs)
        })
        .collect()
}
