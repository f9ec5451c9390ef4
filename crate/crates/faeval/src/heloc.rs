//! HELOC-format CSV ingestion: label mapping, missing-value cleanup, a
//! deterministic stand-in generator, and a binary dataset cache.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use faeval_core::data::TabularDataset;
use faeval_core::numerics::{Matrix, RandomStream};
use sha2::{Digest, Sha256};

use crate::bytes::{atomic_write, ByteReader, ByteWriter};

/// Sentinel codes that mark a missing entry.
pub const MISSING_CODES: [f64; 3] = [-7.0, -8.0, -9.0];
/// Name of the label column.
pub const LABEL_COLUMN: &str = "RiskPerformance";

fn is_missing(v: f64) -> bool {
    MISSING_CODES.contains(&v)
}

struct RawTable {
    feature_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

fn parse_csv(path: &Path) -> Result<RawTable> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers().context("reading header row")?.clone();
    let label_col = headers
        .iter()
        .position(|h| h == LABEL_COLUMN)
        .with_context(|| format!("no '{LABEL_COLUMN}' column in {}", path.display()))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_col)
        .map(|(_, h)| h.to_string())
        .collect();
    if feature_names.is_empty() {
        bail!("no feature columns");
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("reading data row {}", line + 2))?;
        if record.len() != headers.len() {
            bail!("row {} has {} fields, expected {}", line + 2, record.len(), headers.len());
        }
        let mut row = Vec::with_capacity(feature_names.len());
        for (i, field) in record.iter().enumerate() {
            if i == label_col {
                labels.push(match field {
                    "Bad" => 1,
                    "Good" => 0,
                    other => bail!("row {}: unknown label value '{other}'", line + 2),
                });
            } else {
                let v: f64 = field
                    .trim()
                    .parse()
                    .with_context(|| format!("row {}: non-numeric value '{field}'", line + 2))?;
                row.push(v);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("no data rows in {}", path.display());
    }
    Ok(RawTable { feature_names, rows, labels })
}

fn clean(raw: RawTable) -> Result<TabularDataset> {
    let d = raw.feature_names.len();
    let mut missing_counts = vec![0usize; d];
    for row in &raw.rows {
        for (j, &v) in row.iter().enumerate() {
            if is_missing(v) {
                missing_counts[j] += 1;
            }
        }
    }
    // Up to three features go: the highest missing rates first, ties by
    // column order, and only features that actually have missing entries.
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        missing_counts[b].cmp(&missing_counts[a]).then(a.cmp(&b))
    });
    let dropped: Vec<usize> =
        order.into_iter().filter(|&j| missing_counts[j] > 0).take(3).collect();
    let kept: Vec<usize> = (0..d).filter(|j| !dropped.contains(j)).collect();

    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (row, &label) in raw.rows.iter().zip(&raw.labels) {
        if kept.iter().any(|&j| is_missing(row[j])) {
            continue;
        }
        data.extend(kept.iter().map(|&j| row[j]));
        labels.push(label);
    }
    if labels.is_empty() {
        bail!("all rows dropped during cleaning");
    }
    let features = Matrix::from_flat(labels.len(), kept.len(), data)?;
    let feature_names = kept.iter().map(|&j| raw.feature_names[j].clone()).collect();
    Ok(TabularDataset::new(features, labels, feature_names)?)
}

/// Load a HELOC-format CSV: map the `RiskPerformance` label (`Bad` is
/// class 1), drop the up-to-three features with the highest missing-value
/// rates, then drop every remaining row with a missing entry.
pub fn load_heloc(path: &Path) -> Result<TabularDataset> {
    clean(parse_csv(path)?)
}

const DS_MAGIC: &[u8; 4] = b"FADS";
const DS_VERSION: u16 = 1;

fn encode_dataset(ds: &TabularDataset) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.magic(DS_MAGIC);
    w.u16(DS_VERSION);
    w.u64(ds.n() as u64);
    w.u64(ds.dim() as u64);
    for name in &ds.feature_names {
        w.str(name);
    }
    for &y in &ds.labels {
        w.u8(y);
    }
    // Column-major so per-feature scans stay contiguous.
    for j in 0..ds.dim() {
        for i in 0..ds.n() {
            w.f64(ds.features.get(i, j));
        }
    }
    w.finish_with_checksum()
}

fn decode_dataset(bytes: &[u8]) -> Result<TabularDataset> {
    let mut r = ByteReader::new_checked(bytes)?;
    r.magic(std::str::from_utf8(DS_MAGIC).unwrap())?;
    let version = r.u16()?;
    if version != DS_VERSION {
        bail!("unsupported dataset cache version {version}");
    }
    let n = r.u64()? as usize;
    let d = r.u64()? as usize;
    let mut feature_names = Vec::with_capacity(d);
    for _ in 0..d {
        feature_names.push(r.str()?);
    }
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        labels.push(r.u8()?);
    }
    let mut features = Matrix::zeros(n, d);
    for j in 0..d {
        for i in 0..n {
            features.set(i, j, r.f64()?);
        }
    }
    r.done()?;
    Ok(TabularDataset::new(features, labels, feature_names)?)
}

/// [`load_heloc`] behind a binary cache keyed by the raw file's content
/// hash. Returns the dataset and whether it came from the cache; a
/// corrupt cache entry is rebuilt with a warning.
pub fn load_heloc_cached(csv: &Path, cache_dir: &Path) -> Result<(TabularDataset, bool)> {
    let raw = std::fs::read(csv).with_context(|| format!("reading {}", csv.display()))?;
    let digest = Sha256::digest(&raw);
    let key = hex(&digest[..8]);
    std::fs::create_dir_all(cache_dir)
        .with_context(|| format!("creating {}", cache_dir.display()))?;
    let cache_path = cache_dir.join(format!("heloc-{key}.ds"));

    if let Ok(bytes) = std::fs::read(&cache_path) {
        match decode_dataset(&bytes) {
            Ok(ds) => return Ok((ds, true)),
            Err(e) => eprintln!(
                "warning: dataset cache {} unreadable ({e}); rebuilding",
                cache_path.display()
            ),
        }
    }
    let ds = load_heloc(csv)?;
    atomic_write(&cache_path, &encode_dataset(&ds))
        .with_context(|| format!("writing {}", cache_path.display()))?;
    Ok((ds, false))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// How many rows the stand-in generator emits by default (about two
/// thirds survive cleaning).
pub const STAND_IN_ROWS: usize = 12_000;

/// Write a deterministic stand-in file in the HELOC format: 23 integer
/// features, labels from a planted logistic model over the first eight,
/// three features with heavy missing rates (so cleaning drops exactly
/// those) and a 2% sprinkle elsewhere.
pub fn write_synthetic_heloc_csv(path: &Path, rows: usize, seed: u64) -> Result<()> {
    if rows == 0 {
        bail!("rows must be positive");
    }
    let d = 23;
    let planted = [1.2, -1.0, 0.8, -0.6, 0.5, -0.4, 0.3, 0.2];
    let heavy_rates = [(20, 0.25), (21, 0.18), (22, 0.12)];
    let sprinkle = 0.02;

    let mut out = String::new();
    out.push_str(LABEL_COLUMN);
    for j in 1..=d {
        out.push_str(&format!(",feat_{j:02}"));
    }
    out.push('\n');

    let root = RandomStream::new(seed).fork_str("heloc-stand-in");
    for i in 0..rows {
        let mut s = root.fork(i as u64);
        let mut z = 0.0;
        let mut values = Vec::with_capacity(d);
        for j in 0..d {
            let x = s.next_gaussian();
            if let Some(w) = planted.get(j) {
                z += w * x;
            }
            values.push((50.0 + 10.0 * x).round().max(0.0));
        }
        let label = if s.next_f64() < faeval_core::math::sigmoid(z) { "Bad" } else { "Good" };
        for (j, v) in values.iter_mut().enumerate() {
            let rate = heavy_rates
                .iter()
                .find(|(col, _)| *col == j)
                .map(|(_, r)| *r)
                .unwrap_or(sprinkle);
            if s.next_f64() < rate {
                *v = MISSING_CODES[s.next_index(3)];
            }
        }
        out.push_str(label);
        for v in values {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    atomic_write(path, out.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Where the HELOC data comes from, in priority order: the
/// `FAEVAL_HELOC_CSV` environment variable, `./data/heloc_dataset.csv`,
/// or a generated stand-in under `fallback_dir`. The flag reports whether
/// the source is an official file rather than the stand-in.
pub fn resolve_heloc_source(fallback_dir: &Path, seed: u64) -> Result<(PathBuf, bool)> {
    if let Ok(path) = std::env::var("FAEVAL_HELOC_CSV") {
        let path = PathBuf::from(path);
        if !path.is_file() {
            bail!("FAEVAL_HELOC_CSV points at {}, which is not a file", path.display());
        }
        return Ok((path, true));
    }
    let local = Path::new("data/heloc_dataset.csv");
    if local.is_file() {
        return Ok((local.to_path_buf(), true));
    }
    let path = fallback_dir.join("synthetic_heloc.csv");
    if !path.is_file() {
        write_synthetic_heloc_csv(&path, STAND_IN_ROWS, seed)?;
    }
    Ok((path, false))
}
