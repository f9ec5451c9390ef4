//! In-memory datasets, synthetic generators, and split/standardize
//! plumbing.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{dim, invalid, Error, Result};
use crate::math;
use crate::numerics::rng::RandomStream;
use crate::numerics::Matrix;

/// A binary-labeled tabular dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularDataset {
    /// One row per sample.
    pub features: Matrix,
    /// Class labels, 0 or 1, one per row.
    pub labels: Vec<u8>,
    /// Column names, one per feature.
    pub feature_names: Vec<String>,
}

impl TabularDataset {
    /// Bundle features, labels, and names, validating their shapes agree
    /// and labels are binary.
    pub fn new(features: Matrix, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(dim("labels", features.rows(), labels.len()));
        }
        if feature_names.len() != features.cols() {
            return Err(dim("feature names", features.cols(), feature_names.len()));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(invalid("labels", "must be 0 or 1"));
        }
        Ok(TabularDataset { features, labels, feature_names })
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.features.rows()
    }

    /// Number of features.
    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// `(negatives, positives)` label counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&y| y == 1).count();
        (self.labels.len() - pos, pos)
    }

    /// The subset at the given row indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<TabularDataset> {
        let features = self.features.select_rows(indices)?;
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Ok(TabularDataset { features, labels, feature_names: self.feature_names.clone() })
    }
}

/// Per-feature affine transform fitted on training data.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardization {
    /// Training means.
    pub mean: Vec<f64>,
    /// Training standard deviations (population form); features with
    /// spread below `1e-12` keep a divisor of 1.
    pub std: Vec<f64>,
}

impl Standardization {
    /// Fit means and deviations on the rows of `features`.
    pub fn fit(features: &Matrix) -> Result<Self> {
        let (n, d) = (features.rows(), features.cols());
        if n == 0 {
            return Err(Error::Empty { what: "standardization input" });
        }
        let mut mean = alloc::vec![0.0; d];
        for i in 0..n {
            for (j, &v) in features.row(i).iter().enumerate() {
                mean[j] += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut var = alloc::vec![0.0; d];
        for i in 0..n {
            for (j, &v) in features.row(i).iter().enumerate() {
                let c = v - mean[j];
                var[j] += c * c;
            }
        }
        let std = var
            .iter()
            .map(|&v| {
                let s = math::sqrt(v / n as f64);
                if s < 1e-12 {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Ok(Standardization { mean, std })
    }

    /// Transform one row in place.
    pub fn apply_row(&self, row: &mut [f64]) -> Result<()> {
        if row.len() != self.mean.len() {
            return Err(dim("row", self.mean.len(), row.len()));
        }
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - self.mean[j]) / self.std[j];
        }
        Ok(())
    }

    /// A transformed copy of a whole feature matrix.
    pub fn apply(&self, features: &Matrix) -> Result<Matrix> {
        let mut out = features.clone();
        for i in 0..out.rows() {
            self.apply_row(out.row_mut(i))?;
        }
        Ok(out)
    }
}

/// Stratified train/val/test split plus the transform fitted on train.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitDataset {
    /// Training split, standardized.
    pub train: TabularDataset,
    /// Validation split, standardized with training statistics.
    pub val: TabularDataset,
    /// Test split, standardized with training statistics.
    pub test: TabularDataset,
    /// The fitted transform, for standardizing new points.
    pub standardization: Standardization,
}

/// Split a dataset into train/val/test with per-class proportions and
/// standardize all three parts with statistics fitted on train only.
///
/// Within each class the rows are shuffled by the stream, then cut by the
/// fractions (floored per class; the remainder lands in test).
pub fn split_and_standardize(
    dataset: &TabularDataset,
    fractions: (f64, f64, f64),
    stream: &mut RandomStream,
) -> Result<SplitDataset> {
    let (ft, fv, fe) = fractions;
    for f in [ft, fv, fe] {
        if !(f > 0.0) || !f.is_finite() {
            return Err(invalid("fractions", "each must be positive and finite"));
        }
    }
    if math::abs(ft + fv + fe - 1.0) > 1e-9 {
        return Err(invalid("fractions", "must sum to 1"));
    }

    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    let mut test_idx = Vec::new();
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = (0..dataset.n()).filter(|&i| dataset.labels[i] == class).collect();
        stream.shuffle(&mut idx);
        let n_tr = (ft * idx.len() as f64) as usize;
        let n_val = (fv * idx.len() as f64) as usize;
        train_idx.extend_from_slice(&idx[..n_tr]);
        val_idx.extend_from_slice(&idx[n_tr..n_tr + n_val]);
        test_idx.extend_from_slice(&idx[n_tr + n_val..]);
    }
    if train_idx.is_empty() || val_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::Degenerate { what: "a split ended up empty" });
    }

    let mut train = dataset.subset(&train_idx)?;
    let mut val = dataset.subset(&val_idx)?;
    let mut test = dataset.subset(&test_idx)?;
    let standardization = Standardization::fit(&train.features)?;
    train.features = standardization.apply(&train.features)?;
    val.features = standardization.apply(&val.features)?;
    test.features = standardization.apply(&test.features)?;
    Ok(SplitDataset { train, val, test, standardization })
}

/// Labels drawn from a logistic model with the given coefficients.
///
/// Features are independent standard normals; each label is Bernoulli with
/// probability `sigmoid(w . x / noise)`. `noise = 0` degenerates to the
/// hard threshold `y = 1[w . x > 0]`.
pub fn synth_linear_weighted(
    true_w: &[f64],
    n: usize,
    noise: f64,
    stream: &mut RandomStream,
) -> Result<TabularDataset> {
    let d = true_w.len();
    if d == 0 {
        return Err(Error::Empty { what: "true weights" });
    }
    if n == 0 {
        return Err(invalid("n", "need at least one sample"));
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(invalid("noise", "must be nonnegative and finite"));
    }
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut z = 0.0;
        for &w in true_w {
            let x = stream.next_gaussian();
            data.push(x);
            z += w * x;
        }
        let y = if noise == 0.0 {
            u8::from(z > 0.0)
        } else {
            u8::from(stream.next_f64() < math::sigmoid(z / noise))
        };
        labels.push(y);
    }
    let features = Matrix::from_flat(n, d, data)?;
    let feature_names = (1..=d).map(|j| format!("x{j}")).collect();
    TabularDataset::new(features, labels, feature_names)
}

/// [`synth_linear_weighted`] with coefficients drawn as standard normals;
/// returns the dataset together with the drawn truth.
pub fn synth_linear(
    n: usize,
    d: usize,
    noise: f64,
    stream: &mut RandomStream,
) -> Result<(TabularDataset, Vec<f64>)> {
    if d == 0 {
        return Err(invalid("d", "need at least one feature"));
    }
    let mut w_stream = stream.fork_str("weights");
    let true_w: Vec<f64> = (0..d).map(|_| w_stream.next_gaussian()).collect();
    let dataset = synth_linear_weighted(&true_w, n, noise, stream)?;
    Ok((dataset, true_w))
}

/// Square grayscale images where class 1 carries a planted bright blob.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageDataset {
    /// Image side length; every image is `side * side` pixels, row-major.
    pub side: usize,
    /// One flattened image per row.
    pub images: Matrix,
    /// 1 when the image contains a blob; alternating, so balanced.
    pub labels: Vec<u8>,
    /// Blob center `(row, col)` for class-1 images, `None` otherwise.
    pub centers: Vec<Option<(usize, usize)>>,
}

impl ImageDataset {
    /// Number of images.
    pub fn n(&self) -> usize {
        self.images.rows()
    }

    /// Pixel-wise mean over the dataset.
    pub fn mean_image(&self) -> Vec<f64> {
        let d = self.side * self.side;
        let mut mean = alloc::vec![0.0; d];
        for i in 0..self.n() {
            for (j, &v) in self.images.row(i).iter().enumerate() {
                mean[j] += v;
            }
        }
        for m in &mut mean {
            *m /= self.n() as f64;
        }
        mean
    }
}

/// Generate blob images. Class-1 images get a Gaussian bump of peak
/// height `contrast` centered somewhere in the middle half of the frame;
/// class-0 images are noise only. Every pixel carries noise of deviation
/// 0.05, labels alternate so the classes stay balanced, and `contrast = 0`
/// removes the signal entirely.
pub fn synth_blob_images(
    n: usize,
    side: usize,
    contrast: f64,
    stream: &mut RandomStream,
) -> Result<ImageDataset> {
    if n == 0 {
        return Err(invalid("n", "need at least one image"));
    }
    if side < 4 {
        return Err(invalid("side", "need side >= 4"));
    }
    if !(contrast >= 0.0) || !contrast.is_finite() {
        return Err(invalid("contrast", "must be nonnegative and finite"));
    }
    let d = side * side;
    let width = side as f64 / 6.0;
    let lo = side / 4;
    let span = side - 2 * lo;
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    let mut centers = Vec::with_capacity(n);
    for idx in 0..n {
        let label = u8::from(idx % 2 == 0);
        labels.push(label);
        let center = if label == 1 {
            Some((lo + stream.next_index(span), lo + stream.next_index(span)))
        } else {
            None
        };
        centers.push(center);
        for i in 0..side {
            for j in 0..side {
                let bump = match center {
                    Some((r, c)) => {
                        let dr = i as f64 - r as f64;
                        let dc = j as f64 - c as f64;
                        contrast * math::exp(-(dr * dr + dc * dc) / (2.0 * width * width))
                    }
                    None => 0.0,
                };
                data.push(bump + 0.05 * stream.next_gaussian());
            }
        }
    }
    let images = Matrix::from_flat(n, d, data)?;
    Ok(ImageDataset { side, images, labels, centers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn agreement_with_sign(ds: &TabularDataset, w: &[f64]) -> f64 {
        let mut hits = 0usize;
        for i in 0..ds.n() {
            let z: f64 = ds.features.row(i).iter().zip(w).map(|(x, w)| x * w).sum();
            if ds.labels[i] == u8::from(z > 0.0) {
                hits += 1;
            }
        }
        hits as f64 / ds.n() as f64
    }

    /// Frozen one-dimensional oracles: with unit noise the labels agree
    /// with sign(w x) at rate E[sigmoid(|w| |x|)], which Gauss-Hermite
    /// quadrature puts at 0.89452 for w = 5 and 0.77799 for w = 2.
    #[test]
    fn label_noise_matches_quadrature_oracles() {
        let mut stream = RandomStream::new(42);
        let ds = synth_linear_weighted(&[5.0], 200_000, 1.0, &mut stream).unwrap();
        let got = agreement_with_sign(&ds, &[5.0]);
        assert!((got - 0.89452).abs() < 0.0035, "w=5 agreement {got}");

        let mut stream = RandomStream::new(43);
        let ds = synth_linear_weighted(&[2.0], 200_000, 1.0, &mut stream).unwrap();
        let got = agreement_with_sign(&ds, &[2.0]);
        assert!((got - 0.77799).abs() < 0.004, "w=2 agreement {got}");
    }

    #[test]
    fn zero_noise_gives_a_hard_threshold() {
        let mut stream = RandomStream::new(7);
        let (ds, w) = synth_linear(5_000, 4, 0.0, &mut stream).unwrap();
        assert_eq!(agreement_with_sign(&ds, &w), 1.0);
    }

    #[test]
    fn generator_is_deterministic_in_the_stream() {
        let a = synth_linear(500, 3, 1.0, &mut RandomStream::new(9)).unwrap();
        let b = synth_linear(500, 3, 1.0, &mut RandomStream::new(9)).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        let c = synth_linear(500, 3, 1.0, &mut RandomStream::new(10)).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn split_is_stratified_disjoint_and_exhaustive() {
        let mut stream = RandomStream::new(3);
        let (ds, _) = synth_linear(1_000, 5, 1.0, &mut stream).unwrap();
        let split = split_and_standardize(&ds, (0.6, 0.2, 0.2), &mut stream).unwrap();
        let n_total = split.train.n() + split.val.n() + split.test.n();
        assert_eq!(n_total, ds.n());

        let (neg, pos) = ds.class_counts();
        let (tr_neg, tr_pos) = split.train.class_counts();
        assert_eq!(tr_neg, (0.6 * neg as f64) as usize);
        assert_eq!(tr_pos, (0.6 * pos as f64) as usize);

        // Standardized train columns have zero mean and unit spread.
        let d = ds.dim();
        for j in 0..d {
            let col: Vec<f64> = (0..split.train.n()).map(|i| split.train.features.get(i, j)).collect();
            let m = crate::numerics::mean(&col);
            assert!(m.abs() < 1e-12, "train mean {m}");
            let var: f64 =
                col.iter().map(|&v| (v - m) * (v - m)).sum::<f64>() / col.len() as f64;
            assert!((var - 1.0).abs() < 1e-9, "train variance {var}");
        }

        // Val standardized with train statistics, not its own.
        let raw_val_mean: f64 = {
            let mut s = 0.0;
            for i in 0..split.val.n() {
                s += split.val.features.get(i, 0);
            }
            s / split.val.n() as f64
        };
        assert!(raw_val_mean.abs() > 1e-13);
        assert!(split.val.features.all_finite());
    }

    #[test]
    fn constant_feature_survives_standardization() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![1.0, 3.0 + i as f64]).collect();
        let features = Matrix::from_rows(&rows).unwrap();
        let ds = TabularDataset::new(
            features,
            vec![0, 1, 0, 1, 0, 1, 0, 1],
            vec!["a".to_string(), "b".to_string()],
        )
        .unwrap();
        let split =
            split_and_standardize(&ds, (0.5, 0.25, 0.25), &mut RandomStream::new(0)).unwrap();
        assert!(split.train.features.all_finite());
        assert_eq!(split.standardization.std[0], 1.0);
    }

    #[test]
    fn blob_images_are_balanced_and_peak_at_their_centers() {
        let mut stream = RandomStream::new(5);
        let ds = synth_blob_images(64, 8, 5.0, &mut stream).unwrap();
        assert_eq!(ds.images.cols(), 64);
        let (neg, pos) = {
            let p = ds.labels.iter().filter(|&&y| y == 1).count();
            (ds.n() - p, p)
        };
        assert_eq!(neg, 32);
        assert_eq!(pos, 32);
        for i in 0..ds.n() {
            match ds.centers[i] {
                Some((r, c)) => {
                    assert_eq!(ds.labels[i], 1);
                    assert!((2..6).contains(&r) && (2..6).contains(&c));
                    let row = ds.images.row(i);
                    let argmax = row
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                        .unwrap()
                        .0;
                    assert_eq!(argmax, r * 8 + c, "image {i}");
                }
                None => assert_eq!(ds.labels[i], 0),
            }
        }
        let mean = ds.mean_image();
        assert_eq!(mean.len(), 64);
        assert!(mean.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn linear_model_separates_blobs_and_concentrates_weight_centrally() {
        use crate::models::train::{train_classifier, ArchSpec, TrainConfig};
        let mut stream = RandomStream::new(17);
        let train = synth_blob_images(256, 8, 2.0, &mut stream).unwrap();
        let val = synth_blob_images(128, 8, 2.0, &mut stream).unwrap();
        let cfg = TrainConfig { epochs: 60, augment_sigma: 0.0, ..TrainConfig::default() };
        let report = train_classifier(
            &train.images,
            &train.labels,
            &val.images,
            &val.labels,
            &ArchSpec::Linear,
            &cfg,
        )
        .unwrap();
        assert!(report.val_accuracy > 0.9, "val accuracy {}", report.val_accuracy);

        // Blob centers live in the middle half, so that is where the
        // weight mass concentrates.
        let w = &report.model.layers()[0].weight;
        let mut inner = 0.0;
        let mut outer = 0.0;
        let (mut n_in, mut n_out) = (0, 0);
        for i in 0..8 {
            for j in 0..8 {
                let v = w.get(0, i * 8 + j);
                if (2..6).contains(&i) && (2..6).contains(&j) {
                    inner += v;
                    n_in += 1;
                } else {
                    outer += v;
                    n_out += 1;
                }
            }
        }
        assert!(
            inner / n_in as f64 > 2.0 * (outer / n_out as f64).abs(),
            "inner {inner} outer {outer}"
        );

        let flat = synth_blob_images(256, 8, 0.0, &mut stream).unwrap();
        let flat_val = synth_blob_images(128, 8, 0.0, &mut stream).unwrap();
        let chance = train_classifier(
            &flat.images,
            &flat.labels,
            &flat_val.images,
            &flat_val.labels,
            &ArchSpec::Linear,
            &cfg,
        )
        .unwrap();
        assert!(
            (chance.val_accuracy - 0.5).abs() < 0.2,
            "zero-contrast accuracy {}",
            chance.val_accuracy
        );
    }

    #[test]
    fn validation_errors() {
        let mut s = RandomStream::new(0);
        assert!(synth_linear_weighted(&[], 10, 1.0, &mut s).is_err());
        assert!(synth_linear_weighted(&[1.0], 0, 1.0, &mut s).is_err());
        assert!(synth_linear_weighted(&[1.0], 10, -1.0, &mut s).is_err());
        assert!(synth_linear(10, 0, 1.0, &mut s).is_err());
        assert!(synth_blob_images(0, 8, 1.0, &mut s).is_err());
        assert!(synth_blob_images(4, 3, 1.0, &mut s).is_err());
        assert!(synth_blob_images(4, 8, -1.0, &mut s).is_err());
        assert!(synth_blob_images(4, 8, f64::NAN, &mut s).is_err());

        let features = Matrix::zeros(3, 2);
        assert!(TabularDataset::new(features.clone(), vec![0, 1], vec![]).is_err());
        assert!(TabularDataset::new(
            features.clone(),
            vec![0, 1, 2],
            vec!["a".to_string(), "b".to_string()]
        )
        .is_err());
        let ds = TabularDataset::new(
            features,
            vec![0, 1, 0],
            vec!["a".to_string(), "b".to_string()],
        )
        .unwrap();
        assert!(split_and_standardize(&ds, (0.5, 0.5, 0.5), &mut s).is_err());
        assert!(split_and_standardize(&ds, (1.0, 0.0, 0.0), &mut s).is_err());
        // Too small to fill three nonempty splits.
        assert!(split_and_standardize(&ds, (0.6, 0.2, 0.2), &mut s).is_err());
    }
}
