//! Predictor training: target standardization, MSE objective with Adam and
//! decoupled weight decay, per-epoch train/test RMSE, regression metrics,
//! and bit-exact checkpoints (same container conventions as the generator,
//! magic `HEMGPRD1`).

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::featurize::{featurize, GraphTensors};
use super::model::{predictor_backward, predictor_forward_steps, PredictorParams};
use crate::dataset::{MoleculeRecord, N_TARGETS, TARGET_NAMES};
use crate::rng::SplitMix64;
use crate::seqmodel::AdamState;
use crate::smiles::{is_valid, parse};

const MAGIC: &[u8; 8] = b"HEMGPRD1";
const FORMAT_VERSION: u32 = 1;
/// Index of h50(obs) in the target order.
const H50: usize = 8;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("need at least two records, got {0}")]
    TooFewRecords(usize),
    #[error("invalid SMILES at record {index}: {smiles}")]
    InvalidSmiles { index: usize, smiles: String },
    #[error("record {index} is missing property values")]
    MissingProperty { index: usize },
    #[error("target '{0}' has zero variance on the training split")]
    DegenerateTarget(String),
    #[error("h50(obs) must be positive for the log transform (record {0})")]
    NonPositiveH50(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    BadCheckpoint(String),
}

/// Predictor hyperparameters. Defaults follow the reference setup:
/// 118 hidden channels, 3 message-passing layers, 3 readout steps, 9
/// outputs, Adam at 1e-4 with decoupled weight decay 1e-3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorConfig {
    pub hidden: usize,
    pub layers: usize,
    pub readout_steps: usize,
    pub outputs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Train h50(obs) on log10 values.
    pub log_h50: bool,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            hidden: 118,
            layers: 3,
            readout_steps: 3,
            outputs: N_TARGETS,
            learning_rate: 1e-4,
            weight_decay: 1e-3,
            epochs: 400,
            batch_size: 8,
            seed: 42,
            log_h50: true,
        }
    }
}

impl PredictorConfig {
    fn validate(&self) -> Result<(), PredictorError> {
        for (name, v) in [
            ("hidden", self.hidden),
            ("layers", self.layers),
            ("readout_steps", self.readout_steps),
            ("outputs", self.outputs),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
        ] {
            if v < 1 {
                return Err(PredictorError::BadConfig(format!("{name} must be >= 1")));
            }
        }
        if self.learning_rate <= 0.0 || self.weight_decay < 0.0 {
            return Err(PredictorError::BadConfig(
                "learning rate must be positive, weight decay non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Per-target standardization fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler {
    pub mean: [f64; N_TARGETS],
    pub std: [f64; N_TARGETS],
}

impl TargetScaler {
    pub fn fit(targets: &[[f64; N_TARGETS]]) -> Result<Self, PredictorError> {
        let n = targets.len() as f64;
        let mut mean = [0.0; N_TARGETS];
        let mut std = [0.0; N_TARGETS];
        for t in 0..N_TARGETS {
            let m = targets.iter().map(|row| row[t]).sum::<f64>() / n;
            let var = targets.iter().map(|row| (row[t] - m) * (row[t] - m)).sum::<f64>() / n;
            if var <= 0.0 {
                return Err(PredictorError::DegenerateTarget(TARGET_NAMES[t].into()));
            }
            mean[t] = m;
            std[t] = var.sqrt();
        }
        Ok(Self { mean, std })
    }

    pub fn transform(&self, row: &[f64; N_TARGETS]) -> [f64; N_TARGETS] {
        std::array::from_fn(|t| (row[t] - self.mean[t]) / self.std[t])
    }

    pub fn inverse(&self, row: &[f64; N_TARGETS]) -> [f64; N_TARGETS] {
        std::array::from_fn(|t| row[t] * self.std[t] + self.mean[t])
    }
}

/// Per-target regression metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetMetrics {
    pub target: String,
    pub r2: f64,
    pub mae: f64,
    pub rmse: f64,
}

/// R^2, MAE, RMSE per target column.
pub fn regression_metrics(
    y_true: &Array2<f64>,
    y_pred: &Array2<f64>,
) -> Result<Vec<TargetMetrics>, PredictorError> {
    if y_true.dim() != y_pred.dim() {
        return Err(PredictorError::LengthMismatch(
            y_true.nrows(),
            y_pred.nrows(),
        ));
    }
    let n = y_true.nrows();
    if n < 2 {
        return Err(PredictorError::TooFewRecords(n));
    }
    let mut out = Vec::with_capacity(y_true.ncols());
    for t in 0..y_true.ncols() {
        let mean = y_true.column(t).sum() / n as f64;
        let mut ss_res = 0.0;
        let mut ss_tot = 0.0;
        let mut abs = 0.0;
        for i in 0..n {
            let d = y_true[(i, t)] - y_pred[(i, t)];
            ss_res += d * d;
            abs += d.abs();
            let c = y_true[(i, t)] - mean;
            ss_tot += c * c;
        }
        if ss_tot == 0.0 {
            return Err(PredictorError::DegenerateTarget(
                TARGET_NAMES.get(t).copied().unwrap_or("?").into(),
            ));
        }
        out.push(TargetMetrics {
            target: TARGET_NAMES.get(t).copied().unwrap_or("?").into(),
            r2: 1.0 - ss_res / ss_tot,
            mae: abs / n as f64,
            rmse: (ss_res / n as f64).sqrt(),
        });
    }
    Ok(out)
}

/// Per-epoch RMSE curves in standardized space.
#[derive(Debug, Clone, Serialize)]
pub struct PredictorHistory {
    pub train_rmse: Vec<f64>,
    pub test_rmse: Vec<f64>,
}

impl PartialEq for PredictorHistory {
    fn eq(&self, other: &Self) -> bool {
        self.train_rmse == other.train_rmse && self.test_rmse == other.test_rmse
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorCheckpoint {
    pub config: PredictorConfig,
    pub scaler: TargetScaler,
    pub params: PredictorParams,
    pub adam: AdamState,
    /// Record indices of the held-out test split.
    pub test_indices: Vec<usize>,
}

fn prepared_targets(
    records: &[MoleculeRecord],
    log_h50: bool,
) -> Result<Vec<[f64; N_TARGETS]>, PredictorError> {
    records
        .iter()
        .enumerate()
        .map(|(index, r)| {
            let mut row = r
                .property_vector()
                .ok_or(PredictorError::MissingProperty { index })?;
            if log_h50 {
                if row[H50] <= 0.0 {
                    return Err(PredictorError::NonPositiveH50(index));
                }
                row[H50] = row[H50].log10();
            }
            Ok(row)
        })
        .collect()
}

/// Train on a record list; 80/20 train/test split by seeded shuffle.
pub fn train_predictor(
    config: &PredictorConfig,
    records: &[MoleculeRecord],
    split_seed: u64,
) -> Result<(PredictorCheckpoint, PredictorHistory), PredictorError> {
    config.validate()?;
    if records.len() < 2 {
        return Err(PredictorError::TooFewRecords(records.len()));
    }
    let mut graphs = Vec::with_capacity(records.len());
    for (index, r) in records.iter().enumerate() {
        if !is_valid(&r.smiles) {
            return Err(PredictorError::InvalidSmiles {
                index,
                smiles: r.smiles.clone(),
            });
        }
        graphs.push(featurize(&parse(&r.smiles).unwrap()).expect("valid molecule"));
    }
    let targets = prepared_targets(records, config.log_h50)?;

    // Split by molecule.
    let mut order: Vec<usize> = (0..records.len()).collect();
    SplitMix64::new(split_seed).shuffle(&mut order);
    let n_test = ((records.len() as f64) * 0.2).floor() as usize;
    let test_idx: Vec<usize> = order[..n_test].to_vec();
    let train_idx: Vec<usize> = order[n_test..].to_vec();

    let train_targets: Vec<[f64; N_TARGETS]> = train_idx.iter().map(|&i| targets[i]).collect();
    let scaler = TargetScaler::fit(&train_targets)?;
    let standardized: Vec<[f64; N_TARGETS]> =
        targets.iter().map(|row| scaler.transform(row)).collect();

    let mut params = PredictorParams::init(config.hidden, config.layers, config.outputs, config.seed);
    let mut adam = AdamState::default();
    let mut epoch_rng = SplitMix64::new(config.seed ^ 0x9E37);

    let mut history = PredictorHistory {
        train_rmse: Vec::with_capacity(config.epochs),
        test_rmse: Vec::with_capacity(config.epochs),
    };

    let eval_rmse = |params: &PredictorParams, idx: &[usize]| -> f64 {
        if idx.is_empty() {
            return f64::NAN;
        }
        let mut ss = 0.0;
        let mut count = 0usize;
        for &i in idx {
            let (out, _) = predictor_forward_steps(params, &graphs[i], config.readout_steps);
            for t in 0..config.outputs {
                let d = out[(0, t)] - standardized[i][t];
                ss += d * d;
                count += 1;
            }
        }
        (ss / count as f64).sqrt()
    };

    for _epoch in 0..config.epochs {
        let mut shuffled = train_idx.clone();
        epoch_rng.shuffle(&mut shuffled);
        for chunk in shuffled.chunks(config.batch_size) {
            let batch_graphs: Vec<GraphTensors> =
                chunk.iter().map(|&i| graphs[i].clone()).collect();
            let batch = GraphTensors::batch(&batch_graphs);
            let (out, cache) = predictor_forward_steps(&params, &batch, config.readout_steps);
            // MSE over all outputs of the batch.
            let m = chunk.len();
            let mut dout = Array2::zeros((m, config.outputs));
            for (row, &i) in chunk.iter().enumerate() {
                for t in 0..config.outputs {
                    let diff = out[(row, t)] - standardized[i][t];
                    dout[(row, t)] = 2.0 * diff / (m * config.outputs) as f64;
                }
            }
            let mut grads = predictor_backward(&params, &batch, &cache, &dout);
            let grad_slices = grads.trainable_mut();
            let grad_copy: Vec<(String, Vec<f64>)> = grad_slices
                .iter()
                .map(|(n, s)| (n.clone(), s.to_vec()))
                .collect();
            let mut param_slices = params.trainable_mut();
            let mut triples: Vec<(&str, &mut [f64], &[f64])> = param_slices
                .iter_mut()
                .zip(grad_copy.iter())
                .map(|((pn, p), (gn, g))| {
                    debug_assert_eq!(pn, gn);
                    (pn.as_str(), &mut **p, g.as_slice())
                })
                .collect();
            adam.update(&mut triples, config.learning_rate, config.weight_decay);
        }
        history.train_rmse.push(eval_rmse(&params, &train_idx));
        history.test_rmse.push(eval_rmse(&params, &test_idx));
    }

    Ok((
        PredictorCheckpoint {
            config: config.clone(),
            scaler,
            params,
            adam,
            test_indices: test_idx,
        },
        history,
    ))
}

/// Standardized-space predictions for a list of SMILES.
pub fn predict_standardized(
    ckpt: &PredictorCheckpoint,
    smiles: &[String],
) -> Result<Vec<[f64; N_TARGETS]>, PredictorError> {
    let mut out = Vec::with_capacity(smiles.len());
    for (index, s) in smiles.iter().enumerate() {
        if !is_valid(s) {
            return Err(PredictorError::InvalidSmiles {
                index,
                smiles: s.clone(),
            });
        }
        let graph = featurize(&parse(s).unwrap()).expect("valid molecule");
        let (pred, _) = predictor_forward_steps(&ckpt.params, &graph, ckpt.config.readout_steps);
        out.push(std::array::from_fn(|t| pred[(0, t)]));
    }
    Ok(out)
}

/// Predictions in original units (inverse standardization; h50 is
/// exponentiated back when it was trained in log10 space).
pub fn predict(
    ckpt: &PredictorCheckpoint,
    smiles: &[String],
) -> Result<Vec<[f64; N_TARGETS]>, PredictorError> {
    let standardized = predict_standardized(ckpt, smiles)?;
    Ok(standardized
        .into_iter()
        .map(|row| {
            let mut orig = ckpt.scaler.inverse(&row);
            if ckpt.config.log_h50 {
                orig[H50] = 10f64.powf(orig[H50]);
            }
            orig
        })
        .collect())
}

impl PredictorCheckpoint {
    pub fn save(&self, path: &Path) -> Result<(), PredictorError> {
        #[derive(Serialize)]
        struct Header<'a> {
            format_version: u32,
            config: &'a PredictorConfig,
            scaler: &'a TargetScaler,
            adam_step: u64,
            test_indices: &'a [usize],
            tensors: Vec<(String, usize)>,
        }
        let mut params = self.params.clone();
        let tensor_data: Vec<(String, Vec<f64>)> = params
            .trainable_mut()
            .into_iter()
            .map(|(n, s)| (n, s.to_vec()))
            .collect();
        let mut tensors: Vec<(String, usize)> = tensor_data
            .iter()
            .map(|(n, v)| (n.clone(), v.len()))
            .collect();
        for (name, m) in &self.adam.m {
            tensors.push((format!("adam_m/{name}"), m.len()));
        }
        for (name, v) in &self.adam.v {
            tensors.push((format!("adam_v/{name}"), v.len()));
        }
        let header = Header {
            format_version: FORMAT_VERSION,
            config: &self.config,
            scaler: &self.scaler,
            adam_step: self.adam.step,
            test_indices: &self.test_indices,
            tensors,
        };
        let header_bytes =
            serde_json::to_vec(&header).map_err(|e| PredictorError::BadCheckpoint(e.to_string()))?;
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        file.write_all(MAGIC)?;
        file.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
        file.write_all(&header_bytes)?;
        for (_, values) in &tensor_data {
            for v in values {
                file.write_all(&v.to_le_bytes())?;
            }
        }
        for (_, m) in &self.adam.m {
            for v in m {
                file.write_all(&v.to_le_bytes())?;
            }
        }
        for (_, vv) in &self.adam.v {
            for v in vv {
                file.write_all(&v.to_le_bytes())?;
            }
        }
        file.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PredictorError> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
            config: PredictorConfig,
            scaler: TargetScaler,
            adam_step: u64,
            test_indices: Vec<usize>,
            tensors: Vec<(String, usize)>,
        }
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        file.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(PredictorError::BadCheckpoint(
                "not a predictor checkpoint".into(),
            ));
        }
        let mut len_bytes = [0u8; 8];
        file.read_exact(&mut len_bytes)?;
        let header_len = u64::from_le_bytes(len_bytes) as usize;
        let mut header_bytes = vec![0u8; header_len];
        file.read_exact(&mut header_bytes)?;
        let header: Header = serde_json::from_slice(&header_bytes)
            .map_err(|e| PredictorError::BadCheckpoint(e.to_string()))?;
        if header.format_version != FORMAT_VERSION {
            return Err(PredictorError::BadCheckpoint(format!(
                "unsupported format version {}",
                header.format_version
            )));
        }
        let mut values: std::collections::HashMap<String, Vec<f64>> = Default::default();
        for (name, len) in &header.tensors {
            let mut buf = vec![0u8; len * 8];
            file.read_exact(&mut buf)?;
            values.insert(
                name.clone(),
                buf.chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            );
        }
        // Rebuild parameters by name into a freshly shaped container.
        let mut params = PredictorParams::init(
            header.config.hidden,
            header.config.layers,
            header.config.outputs,
            header.config.seed,
        );
        for (name, slice) in params.trainable_mut() {
            let stored = values
                .remove(&name)
                .ok_or_else(|| PredictorError::BadCheckpoint(format!("missing tensor {name}")))?;
            if stored.len() != slice.len() {
                return Err(PredictorError::BadCheckpoint(format!(
                    "tensor {name} length {} != expected {}",
                    stored.len(),
                    slice.len()
                )));
            }
            slice.copy_from_slice(&stored);
        }
        let mut adam = AdamState {
            step: header.adam_step,
            ..Default::default()
        };
        let names: Vec<String> = values.keys().cloned().collect();
        for name in names {
            let vals = values.remove(&name).unwrap();
            if let Some(stripped) = name.strip_prefix("adam_m/") {
                adam.m.insert(stripped.to_string(), vals);
            } else if let Some(stripped) = name.strip_prefix("adam_v/") {
                adam.v.insert(stripped.to_string(), vals);
            } else {
                return Err(PredictorError::BadCheckpoint(format!(
                    "unexpected tensor {name}"
                )));
            }
        }
        Ok(PredictorCheckpoint {
            config: header.config,
            scaler: header.scaler,
            params,
            adam,
            test_indices: header.test_indices,
        })
    }
}
