//! Versioned binary model checkpoints with integrity checking.

use std::path::Path;

use anyhow::{bail, Context, Result};
use faeval_core::models::{Layer, ModelKind, ScoringModel};
use faeval_core::numerics::Matrix;
use sha2::{Digest, Sha256};

use crate::bytes::{atomic_write, ByteReader, ByteWriter};
use crate::heloc::hex;

const MAGIC: &[u8; 4] = b"FAMC";
const VERSION: u16 = 1;

/// Training provenance stored next to the weights.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointMeta {
    /// Training seed.
    pub seed: u64,
    /// Epoch whose weights were kept.
    pub best_epoch: u32,
    /// Epochs actually run before stopping.
    pub epochs_run: u32,
    /// Final training accuracy.
    pub train_accuracy: f64,
    /// Final training AUROC.
    pub train_auroc: f64,
    /// Validation accuracy at the kept epoch.
    pub val_accuracy: f64,
    /// Validation AUROC at the kept epoch.
    pub val_auroc: f64,
    /// Which dataset (and split convention) the model was trained on.
    pub dataset_tag: String,
}

fn layer_bytes(model: &ScoringModel) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.u8(match model.kind() {
        ModelKind::Linear => 0,
        ModelKind::Mlp => 1,
    });
    w.u16(model.layers().len() as u16);
    for layer in model.layers() {
        w.u32(layer.weight.rows() as u32);
        w.u32(layer.weight.cols() as u32);
        for &v in layer.weight.data() {
            w.f64(v);
        }
        for &v in &layer.bias {
            w.f64(v);
        }
    }
    w.into_inner()
}

/// Short content hash identifying a model's exact weights; cache keys use
/// it so retrained models never collide with stale attributions.
pub fn model_hash(model: &ScoringModel) -> String {
    let digest = Sha256::digest(layer_bytes(model));
    hex(&digest[..8])
}

/// Serialize the model and its metadata to `path`.
pub fn save_model(path: &Path, model: &ScoringModel, meta: &CheckpointMeta) -> Result<()> {
    let mut w = ByteWriter::new();
    w.magic(MAGIC);
    w.u16(VERSION);
    w.u64(meta.seed);
    w.u32(meta.best_epoch);
    w.u32(meta.epochs_run);
    w.f64(meta.train_accuracy);
    w.f64(meta.train_auroc);
    w.f64(meta.val_accuracy);
    w.f64(meta.val_auroc);
    w.str(&meta.dataset_tag);
    w.raw(&layer_bytes(model));
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    atomic_write(path, &w.finish_with_checksum())
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Load a checkpoint written by [`save_model`], verifying its checksum.
pub fn load_model(path: &Path) -> Result<(ScoringModel, CheckpointMeta)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut r = ByteReader::new_checked(&bytes)
        .with_context(|| format!("decoding {}", path.display()))?;
    r.magic("FAMC")?;
    let version = r.u16()?;
    if version != VERSION {
        bail!("unsupported checkpoint version {version}");
    }
    let meta = CheckpointMeta {
        seed: r.u64()?,
        best_epoch: r.u32()?,
        epochs_run: r.u32()?,
        train_accuracy: r.f64()?,
        train_auroc: r.f64()?,
        val_accuracy: r.f64()?,
        val_auroc: r.f64()?,
        dataset_tag: r.str()?,
    };
    let kind = r.u8()?;
    let n_layers = r.u16()? as usize;
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(r.f64()?);
        }
        let weight = Matrix::from_flat(rows, cols, data)?;
        let mut bias = Vec::with_capacity(rows);
        for _ in 0..rows {
            bias.push(r.f64()?);
        }
        layers.push(Layer::new(weight, bias)?);
    }
    r.done()?;
    let model = match kind {
        0 => {
            if layers.len() != 1 || layers[0].weight.rows() != 1 {
                bail!("linear checkpoint must hold one single-output layer");
            }
            let layer = layers.pop().unwrap();
            ScoringModel::linear(layer.weight.data().to_vec(), layer.bias[0])?
        }
        1 => ScoringModel::mlp(layers)?,
        other => bail!("unknown model kind byte {other}"),
    };
    Ok((model, meta))
}
