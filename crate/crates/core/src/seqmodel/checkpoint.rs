//! Bit-exact generator checkpoints.
//!
//! File layout:
//! - bytes 0..8   magic `HEMGCKP1`
//! - bytes 8..16  header length, u64 little-endian
//! - header       UTF-8 JSON: format version, config, vocabulary tokens,
//!                tensor directory (name, rows, cols), Adam step, PRNG state
//! - data         all tensor values as IEEE-754 doubles, little-endian,
//!                concatenated in directory order
//!
//! The tensor directory lists the parameter tensors (including the fixed
//! embedding block) followed by the Adam first/second moments under
//! `adam_m/...` / `adam_v/...` names. Save -> load -> save reproduces the
//! file byte for byte.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::model::{LstmLayer, LstmParameters};
use super::{GeneratorConfig, SeqModelError};
use crate::embeddings::{HybridEmbedding, Vocabulary};

const MAGIC: &[u8; 8] = b"HEMGCKP1";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorMeta {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    config: GeneratorConfig,
    vocab: Vec<String>,
    tensors: Vec<TensorMeta>,
    adam_step: u64,
    rng_state: u64,
}

/// Everything needed to resume training or sample: config, vocabulary,
/// parameters, optimizer state, and the training PRNG state.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorCheckpoint {
    pub config: GeneratorConfig,
    pub vocab: Vocabulary,
    pub params: LstmParameters,
    pub adam: AdamState,
    pub rng_state: u64,
}

impl GeneratorCheckpoint {
    pub fn save(&self, path: &Path) -> Result<(), SeqModelError> {
        let mut tensors: Vec<(String, Vec<f64>, usize, usize)> = Vec::new();
        let emb = &self.params.embedding;
        tensors.push((
            "embedding.e_t".into(),
            emb.e_t().iter().copied().collect(),
            emb.vocab_size(),
            emb.d_t(),
        ));
        tensors.push((
            "embedding.e_f".into(),
            emb.e_f().iter().copied().collect(),
            emb.vocab_size(),
            emb.d_f(),
        ));
        for (l, layer) in self.params.layers.iter().enumerate() {
            tensors.push((
                format!("layer{l}.w_x"),
                layer.w_x.iter().copied().collect(),
                layer.w_x.nrows(),
                layer.w_x.ncols(),
            ));
            tensors.push((
                format!("layer{l}.w_h"),
                layer.w_h.iter().copied().collect(),
                layer.w_h.nrows(),
                layer.w_h.ncols(),
            ));
            tensors.push((
                format!("layer{l}.b"),
                layer.b.iter().copied().collect(),
                1,
                layer.b.len(),
            ));
        }
        tensors.push((
            "decoder.w".into(),
            self.params.w_out.iter().copied().collect(),
            self.params.w_out.nrows(),
            self.params.w_out.ncols(),
        ));
        tensors.push((
            "decoder.b".into(),
            self.params.b_out.iter().copied().collect(),
            1,
            self.params.b_out.len(),
        ));
        for (name, m) in &self.adam.m {
            tensors.push((format!("adam_m/{name}"), m.clone(), 1, m.len()));
        }
        for (name, v) in &self.adam.v {
            tensors.push((format!("adam_v/{name}"), v.clone(), 1, v.len()));
        }

        let header = Header {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            vocab: self.vocab.tokens().to_vec(),
            tensors: tensors
                .iter()
                .map(|(name, _, rows, cols)| TensorMeta {
                    name: name.clone(),
                    rows: *rows,
                    cols: *cols,
                })
                .collect(),
            adam_step: self.adam.step,
            rng_state: self.rng_state,
        };
        let header_bytes = serde_json::to_vec(&header)
            .map_err(|e| SeqModelError::BadCheckpoint(e.to_string()))?;

        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        file.write_all(MAGIC)?;
        file.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
        file.write_all(&header_bytes)?;
        for (_, values, _, _) in &tensors {
            for v in values {
                file.write_all(&v.to_le_bytes())?;
            }
        }
        file.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, SeqModelError> {
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        file.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(SeqModelError::BadCheckpoint(format!(
                "bad magic {magic:?}; not a generator checkpoint"
            )));
        }
        let mut len_bytes = [0u8; 8];
        file.read_exact(&mut len_bytes)?;
        let header_len = u64::from_le_bytes(len_bytes) as usize;
        let mut header_bytes = vec![0u8; header_len];
        file.read_exact(&mut header_bytes)?;
        let header: Header = serde_json::from_slice(&header_bytes)
            .map_err(|e| SeqModelError::BadCheckpoint(e.to_string()))?;
        if header.format_version != FORMAT_VERSION {
            return Err(SeqModelError::BadCheckpoint(format!(
                "unsupported format version {}",
                header.format_version
            )));
        }

        let mut data: std::collections::HashMap<String, (Vec<f64>, usize, usize)> =
            std::collections::HashMap::new();
        for meta in &header.tensors {
            let count = meta.rows * meta.cols;
            let mut buf = vec![0u8; count * 8];
            file.read_exact(&mut buf)?;
            let values: Vec<f64> = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            data.insert(meta.name.clone(), (values, meta.rows, meta.cols));
        }

        let take_mat = |data: &mut std::collections::HashMap<String, (Vec<f64>, usize, usize)>,
                        name: &str|
         -> Result<Array2<f64>, SeqModelError> {
            let (values, rows, cols) = data
                .remove(name)
                .ok_or_else(|| SeqModelError::BadCheckpoint(format!("missing tensor {name}")))?;
            Array2::from_shape_vec((rows, cols), values)
                .map_err(|e| SeqModelError::BadCheckpoint(e.to_string()))
        };

        let e_t = take_mat(&mut data, "embedding.e_t")?;
        let e_f = take_mat(&mut data, "embedding.e_f")?;
        let embedding = HybridEmbedding::from_parts(e_t, e_f, header.config.mode);
        let mut layers = Vec::with_capacity(header.config.layers);
        for l in 0..header.config.layers {
            let w_x = take_mat(&mut data, &format!("layer{l}.w_x"))?;
            let w_h = take_mat(&mut data, &format!("layer{l}.w_h"))?;
            let b_mat = take_mat(&mut data, &format!("layer{l}.b"))?;
            layers.push(LstmLayer {
                w_x,
                w_h,
                b: Array1::from_vec(b_mat.into_raw_vec_and_offset().0),
            });
        }
        let w_out = take_mat(&mut data, "decoder.w")?;
        let b_out = Array1::from_vec(take_mat(&mut data, "decoder.b")?.into_raw_vec_and_offset().0);

        let mut adam = AdamState {
            step: header.adam_step,
            ..Default::default()
        };
        let names: Vec<String> = data.keys().cloned().collect();
        for name in names {
            let (values, _, _) = data.remove(&name).unwrap();
            if let Some(stripped) = name.strip_prefix("adam_m/") {
                adam.m.insert(stripped.to_string(), values);
            } else if let Some(stripped) = name.strip_prefix("adam_v/") {
                adam.v.insert(stripped.to_string(), values);
            } else {
                return Err(SeqModelError::BadCheckpoint(format!(
                    "unexpected tensor {name}"
                )));
            }
        }

        Ok(GeneratorCheckpoint {
            config: header.config,
            vocab: Vocabulary::from_tokens(header.vocab),
            params: LstmParameters {
                embedding,
                layers,
                w_out,
                b_out,
            },
            adam,
            rng_state: header.rng_state,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::EmbeddingMode;
    use crate::seqmodel::train::train;

    fn trained_checkpoint() -> GeneratorCheckpoint {
        let config = GeneratorConfig {
            hidden_size: 12,
            layers: 2,
            d: 10,
            d_t: 4,
            mode: EmbeddingMode::ShaFixed,
            dropout: 0.1,
            learning_rate: 1e-3,
            batch_size: 3,
            epochs: 2,
            max_sample_len: 30,
            seed: 5,
        };
        let corpus: Vec<String> = ["CCO", "CCC", "OCC", "CCN", "NCC"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        train(&config, &corpus, 0.0).unwrap().0
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let ckpt = trained_checkpoint();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.ckpt");
        let p2 = dir.path().join("b.ckpt");
        ckpt.save(&p1).unwrap();
        let loaded = GeneratorCheckpoint::load(&p1).unwrap();
        loaded.save(&p2).unwrap();
        let b1 = std::fs::read(&p1).unwrap();
        let b2 = std::fs::read(&p2).unwrap();
        assert_eq!(b1, b2);
        assert_eq!(ckpt, loaded);
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("junk.ckpt");
        std::fs::write(&p, b"NOTACKPTxxxxxxxxxxx").unwrap();
        assert!(matches!(
            GeneratorCheckpoint::load(&p),
            Err(SeqModelError::BadCheckpoint(_))
        ));
    }

    #[test]
    fn version_mismatch_rejected() {
        let ckpt = trained_checkpoint();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.ckpt");
        ckpt.save(&p).unwrap();
        // Corrupt the version field inside the JSON header.
        let mut bytes = std::fs::read(&p).unwrap();
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let header = String::from_utf8(bytes[16..16 + header_len].to_vec()).unwrap();
        let corrupted = header.replace("\"format_version\":1", "\"format_version\":9");
        assert_ne!(header, corrupted);
        bytes.splice(16..16 + header_len, corrupted.into_bytes());
        std::fs::write(&p, &bytes).unwrap();
        assert!(matches!(
            GeneratorCheckpoint::load(&p),
            Err(SeqModelError::BadCheckpoint(_))
        ));
    }
}
