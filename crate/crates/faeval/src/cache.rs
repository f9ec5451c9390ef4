//! Content-addressed file cache for attribution vectors and infidelity
//! regression pairs.

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

use crate::bytes::{atomic_write, ByteReader, ByteWriter};
use crate::heloc::hex;

/// Sample id used for run-level entries that are shared across samples.
pub const RUN_LEVEL_SAMPLE: u64 = u64::MAX;

/// Everything that pins a cached vector to one exact computation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CacheKey {
    /// Weight hash of the explained model.
    pub model_hash: String,
    /// Attribution method id.
    pub method: String,
    /// Canonical `key=value;...` hyperparameter string.
    pub params: String,
    /// Row index of the explained sample, or [`RUN_LEVEL_SAMPLE`].
    pub sample_id: u64,
    /// Sweep seed.
    pub seed: u64,
}

impl CacheKey {
    /// Key for one (model, method, params, sample, seed) computation.
    pub fn new(model_hash: &str, method: &str, params: &str, sample_id: u64, seed: u64) -> Self {
        CacheKey {
            model_hash: model_hash.to_string(),
            method: method.to_string(),
            params: params.to_string(),
            sample_id,
            seed,
        }
    }

    fn canonical(&self) -> String {
        format!(
            "model={}|method={}|params={}|sample={}|seed={}",
            self.model_hash, self.method, self.params, self.sample_id, self.seed
        )
    }

    fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.canonical().as_bytes()).into()
    }

    /// Hex file stem derived from the canonical key.
    pub fn file_stem(&self) -> String {
        hex(&self.digest())
    }
}

const VECTOR_MAGIC: &[u8; 4] = b"FAAT";
const PAIRS_MAGIC: &[u8; 4] = b"FAPR";
const VERSION: u16 = 1;

/// File-per-key cache with hit/miss accounting. Writes are atomic
/// (temp file + rename), so concurrent writers of the same key are safe;
/// unreadable or mismatched entries are treated as misses and rebuilt.
pub struct AttributionCache {
    dir: PathBuf,
    hits: AtomicU64,
    misses: AtomicU64,
}

fn encode(magic: &[u8; 4], key_digest: &[u8; 32], values: &[f64]) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.magic(magic);
    w.u16(VERSION);
    w.raw(key_digest);
    w.u64(values.len() as u64);
    for &v in values {
        w.f64(v);
    }
    w.finish_with_checksum()
}

fn decode(bytes: &[u8], magic: &'static str, key_digest: &[u8; 32]) -> Result<Vec<f64>> {
    let mut r = ByteReader::new_checked(bytes)?;
    r.magic(magic)?;
    let version = r.u16()?;
    if version != VERSION {
        anyhow::bail!("unsupported cache version {version}");
    }
    let mut stored = [0u8; 32];
    for b in &mut stored {
        *b = r.u8()?;
    }
    if &stored != key_digest {
        anyhow::bail!("entry belongs to a different key");
    }
    let len = r.u64()? as usize;
    let mut values = Vec::with_capacity(len);
    for _ in 0..len {
        values.push(r.f64()?);
    }
    r.done()?;
    Ok(values)
}

impl AttributionCache {
    /// Open (and create if needed) a cache directory.
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(AttributionCache { dir, hits: AtomicU64::new(0), misses: AtomicU64::new(0) })
    }

    /// Served-from-disk count.
    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    /// Computed-fresh count.
    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    fn path(&self, key: &CacheKey, ext: &str) -> PathBuf {
        self.dir.join(format!("{}.{ext}", key.file_stem()))
    }

    fn read(&self, key: &CacheKey, ext: &str, magic: &'static str) -> Option<Vec<f64>> {
        let path = self.path(key, ext);
        let bytes = std::fs::read(&path).ok()?;
        match decode(&bytes, magic, &key.digest()) {
            Ok(values) => Some(values),
            Err(e) => {
                eprintln!("warning: cache entry {} unreadable ({e}); recomputing", path.display());
                None
            }
        }
    }

    /// Cached attribution vector, or compute, store, and return it.
    pub fn vector_or_compute(
        &self,
        key: &CacheKey,
        compute: impl FnOnce() -> Result<Vec<f64>>,
    ) -> Result<Vec<f64>> {
        if let Some(v) = self.read(key, "attr", "FAAT") {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let values = compute()?;
        let bytes = encode(VECTOR_MAGIC, &key.digest(), &values);
        atomic_write(&self.path(key, "attr"), &bytes)
            .with_context(|| format!("writing cache entry {}", key.file_stem()))?;
        Ok(values)
    }

    /// Cached `(predicted, observed)` pairs, or compute, store, return.
    pub fn pairs_or_compute(
        &self,
        key: &CacheKey,
        compute: impl FnOnce() -> Result<Vec<(f64, f64)>>,
    ) -> Result<Vec<(f64, f64)>> {
        if let Some(flat) = self.read(key, "pairs", "FAPR") {
            if flat.len() % 2 == 0 {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return Ok(flat.chunks_exact(2).map(|c| (c[0], c[1])).collect());
            }
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let pairs = compute()?;
        let flat: Vec<f64> = pairs.iter().flat_map(|&(p, s)| [p, s]).collect();
        let bytes = encode(PAIRS_MAGIC, &key.digest(), &flat);
        atomic_write(&self.path(key, "pairs"), &bytes)
            .with_context(|| format!("writing cache entry {}", key.file_stem()))?;
        Ok(pairs)
    }
}
