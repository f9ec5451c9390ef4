//! Weighted ridge regression with an unpenalized intercept.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{dim, invalid, Error, Result};
use crate::numerics::Matrix;

/// Solution of a weighted ridge fit.
#[derive(Clone, Debug, PartialEq)]
pub struct RidgeFit {
    /// One coefficient per design column.
    pub weights: Vec<f64>,
    /// Unpenalized intercept.
    pub intercept: f64,
}

/// Solve `min_w sum_i sw_i (x_i . w + c - y_i)^2 + alpha ||w||^2`.
///
/// The intercept `c` is never penalized. Sample weights must be
/// non-negative with at least one positive entry. A singular normal system
/// at `alpha = 0` is reported as [`Error::IllPosedFit`]; any positive
/// `alpha` makes the system positive definite.
pub fn ridge_fit(
    designs: &Matrix,
    targets: &[f64],
    sample_weights: &[f64],
    alpha: f64,
) -> Result<RidgeFit> {
    let n = designs.rows();
    let p = designs.cols();
    if n == 0 || p == 0 {
        return Err(Error::Empty { what: "design matrix" });
    }
    if targets.len() != n {
        return Err(dim("targets", n, targets.len()));
    }
    if sample_weights.len() != n {
        return Err(dim("sample weights", n, sample_weights.len()));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(invalid("alpha", "must be finite and non-negative"));
    }
    let mut weight_sum = 0.0;
    for &w in sample_weights {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(invalid("sample weights", "must be finite and non-negative"));
        }
        weight_sum += w;
    }
    if weight_sum <= 0.0 {
        return Err(invalid("sample weights", "need at least one positive weight"));
    }

    // Normal equations on the design augmented with a constant column;
    // the intercept occupies index p and gets no ridge term.
    let q = p + 1;
    let mut a = Matrix::zeros(q, q);
    let mut b = vec![0.0; q];
    for i in 0..n {
        let sw = sample_weights[i];
        if sw == 0.0 {
            continue;
        }
        let row = designs.row(i);
        for j in 0..p {
            let xj = sw * row[j];
            for k in j..p {
                let v = a.get(j, k) + xj * row[k];
                a.set(j, k, v);
            }
            let v = a.get(j, p) + xj;
            a.set(j, p, v);
            b[j] += xj * targets[i];
        }
        let v = a.get(p, p) + sw;
        a.set(p, p, v);
        b[p] += sw * targets[i];
    }
    for j in 0..q {
        for k in 0..j {
            let v = a.get(k, j);
            a.set(j, k, v);
        }
    }
    for j in 0..p {
        let v = a.get(j, j) + alpha;
        a.set(j, j, v);
    }

    let solution = solve_in_place(a, b).ok_or(Error::IllPosedFit)?;
    if !solution.iter().all(|v| v.is_finite()) {
        return Err(Error::IllPosedFit);
    }
    let intercept = solution[p];
    let mut weights = solution;
    weights.truncate(p);
    Ok(RidgeFit { weights, intercept })
}

/// Gaussian elimination with partial pivoting; `None` when singular.
///
/// The system is symmetrically equilibrated first (`D A D z = D b`,
/// `D = diag(a_jj^-1/2)`), so rows of wildly different magnitude, such as a
/// huge ridge diagonal next to a collapsed kernel-weight sum, do not trip
/// the singularity test. A non-positive diagonal entry marks a column with
/// no usable scale and is treated as singular.
fn solve_in_place(mut a: Matrix, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let mut inv_scale = vec![0.0; n];
    for j in 0..n {
        let d = a.get(j, j);
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        inv_scale[j] = 1.0 / crate::math::sqrt(d);
    }
    for j in 0..n {
        for k in 0..n {
            let v = a.get(j, k) * inv_scale[j] * inv_scale[k];
            a.set(j, k, v);
        }
        b[j] *= inv_scale[j];
    }
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_abs = a.get(col, col).abs();
        for r in (col + 1)..n {
            let v = a.get(r, col).abs();
            if v > pivot_abs {
                pivot_abs = v;
                pivot_row = r;
            }
        }
        if pivot_abs <= 1e-13 {
            return None;
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = a.get(col, j);
                a.set(col, j, a.get(pivot_row, j));
                a.set(pivot_row, j, tmp);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a.get(col, col);
        for r in (col + 1)..n {
            let factor = a.get(r, col) / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                let v = a.get(r, j) - factor * a.get(col, j);
                a.set(r, j, v);
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for j in (col + 1)..n {
            acc -= a.get(col, j) * x[j];
        }
        x[col] = acc / a.get(col, col);
    }
    for (xi, s) in x.iter_mut().zip(&inv_scale) {
        *xi *= s;
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::RandomStream;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn random_problem(
        seed: u64,
        n: usize,
        p: usize,
    ) -> (Matrix, Vec<f64>, Vec<f64>) {
        let mut s = RandomStream::new(seed);
        let mut x = Matrix::zeros(n, p);
        for i in 0..n {
            for j in 0..p {
                x.set(i, j, s.next_gaussian());
            }
        }
        let y: Vec<f64> = (0..n).map(|_| s.next_gaussian()).collect();
        let w: Vec<f64> = (0..n).map(|_| 0.1 + s.next_f64()).collect();
        (x, y, w)
    }

    /// Independent oracle: Cholesky factorization of the same normal
    /// equations, assembled by a separate code path.
    fn cholesky_oracle(x: &Matrix, y: &[f64], sw: &[f64], alpha: f64) -> Vec<f64> {
        let n = x.rows();
        let p = x.cols();
        let q = p + 1;
        let aug = |i: usize, j: usize| if j == p { 1.0 } else { x.get(i, j) };
        let mut a = alloc::vec![0.0; q * q];
        let mut b = alloc::vec![0.0; q];
        for j in 0..q {
            for k in 0..q {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += sw[i] * aug(i, j) * aug(i, k);
                }
                if j == k && j < p {
                    acc += alpha;
                }
                a[j * q + k] = acc;
            }
            let mut acc = 0.0;
            for i in 0..n {
                acc += sw[i] * aug(i, j) * y[i];
            }
            b[j] = acc;
        }
        // Cholesky: A = L L^T.
        let mut l = alloc::vec![0.0; q * q];
        for i in 0..q {
            for j in 0..=i {
                let mut acc = a[i * q + j];
                for k in 0..j {
                    acc -= l[i * q + k] * l[j * q + k];
                }
                if i == j {
                    l[i * q + j] = acc.sqrt();
                } else {
                    l[i * q + j] = acc / l[j * q + j];
                }
            }
        }
        let mut z = alloc::vec![0.0; q];
        for i in 0..q {
            let mut acc = b[i];
            for k in 0..i {
                acc -= l[i * q + k] * z[k];
            }
            z[i] = acc / l[i * q + i];
        }
        let mut out = alloc::vec![0.0; q];
        for i in (0..q).rev() {
            let mut acc = z[i];
            for k in (i + 1)..q {
                acc -= l[k * q + i] * out[k];
            }
            out[i] = acc / l[i * q + i];
        }
        out
    }

    #[test]
    fn matches_cholesky_oracle_on_random_problems() {
        for seed in 0..20u64 {
            let (x, y, w) = random_problem(seed, 20, 5);
            let fit = ridge_fit(&x, &y, &w, 0.1).unwrap();
            let oracle = cholesky_oracle(&x, &y, &w, 0.1);
            for j in 0..5 {
                assert!(
                    (fit.weights[j] - oracle[j]).abs() < 1e-8,
                    "seed {seed} coefficient {j}: {} vs {}",
                    fit.weights[j],
                    oracle[j]
                );
            }
            assert!((fit.intercept - oracle[5]).abs() < 1e-8);
        }
    }

    /// First-order optimality of the penalized objective:
    /// `2 X^T W (X w + c 1 - y) + 2 alpha w = 0` and the intercept
    /// equation `2 1^T W (X w + c 1 - y) = 0`.
    #[test]
    fn solution_zeroes_the_objective_gradient() {
        let (x, y, w) = random_problem(77, 30, 6);
        let alpha = 0.37;
        let fit = ridge_fit(&x, &y, &w, alpha).unwrap();
        let n = x.rows();
        let p = x.cols();
        let mut resid = alloc::vec![0.0; n];
        for i in 0..n {
            let mut pred = fit.intercept;
            for j in 0..p {
                pred += x.get(i, j) * fit.weights[j];
            }
            resid[i] = pred - y[i];
        }
        for j in 0..p {
            let mut g = alpha * fit.weights[j];
            for i in 0..n {
                g += w[i] * x.get(i, j) * resid[i];
            }
            assert!(g.abs() < 1e-8, "gradient component {j} = {g}");
        }
        let g0: f64 = (0..n).map(|i| w[i] * resid[i]).sum();
        assert!(g0.abs() < 1e-8, "intercept gradient {g0}");
    }

    #[test]
    fn recovers_exact_linear_relation_without_penalty() {
        let mut s = RandomStream::new(5);
        let n = 40;
        let p = 4;
        let truth = [2.0, -1.0, 0.5, 3.0];
        let mut x = Matrix::zeros(n, p);
        let mut y = alloc::vec![0.0; n];
        for i in 0..n {
            let mut acc = -0.7;
            for j in 0..p {
                let v = s.next_gaussian();
                x.set(i, j, v);
                acc += truth[j] * v;
            }
            y[i] = acc;
        }
        let w = alloc::vec![1.0; n];
        let fit = ridge_fit(&x, &y, &w, 0.0).unwrap();
        for j in 0..p {
            assert!((fit.weights[j] - truth[j]).abs() < 1e-9);
        }
        assert!((fit.intercept - (-0.7)).abs() < 1e-9);
    }

    #[test]
    fn singular_system_without_penalty_is_ill_posed() {
        // Two identical columns make X^T X singular.
        let mut x = Matrix::zeros(10, 2);
        let mut s = RandomStream::new(8);
        let mut y = alloc::vec![0.0; 10];
        for i in 0..10 {
            let v = s.next_gaussian();
            x.set(i, 0, v);
            x.set(i, 1, v);
            y[i] = s.next_gaussian();
        }
        let w = alloc::vec![1.0; 10];
        assert_eq!(ridge_fit(&x, &y, &w, 0.0), Err(Error::IllPosedFit));
        // Any positive penalty regularizes it.
        assert!(ridge_fit(&x, &y, &w, 1e-9).is_ok());
    }

    /// Collapsed kernel weights next to a huge penalty give a badly scaled
    /// but positive-definite system. It must solve, and the slopes must
    /// match the large-alpha limit `w_j ~ sum_i sw_i x_ij (y_i - ybar_w) / alpha`
    /// where `ybar_w` is the weighted target mean.
    #[test]
    fn tiny_weights_with_huge_penalty_solve_to_the_covariance_limit() {
        let (x, y, raw_w) = random_problem(42, 32, 4);
        let w: Vec<f64> = raw_w.iter().map(|v| v * 1e-80).collect();
        let alpha = 1e9;
        let fit = ridge_fit(&x, &y, &w, alpha).unwrap();

        let wsum: f64 = w.iter().sum();
        let ybar: f64 = (0..32).map(|i| w[i] * y[i]).sum::<f64>() / wsum;
        for j in 0..4 {
            let cov: f64 = (0..32).map(|i| w[i] * x.get(i, j) * (y[i] - ybar)).sum();
            let limit = cov / alpha;
            assert!(
                (fit.weights[j] - limit).abs() <= 1e-2 * limit.abs(),
                "coefficient {j}: {} vs limit {limit}",
                fit.weights[j]
            );
        }
        assert!((fit.intercept - ybar).abs() < 1e-6 * ybar.abs().max(1.0));
    }

    #[test]
    fn zero_weight_rows_do_not_influence_the_fit() {
        let (x, y, _) = random_problem(13, 25, 3);
        let keep: Vec<usize> = (0..20).collect();
        let x_sub = x.select_rows(&keep).unwrap();
        let y_sub = &y[..20];
        let mut w = alloc::vec![1.0; 25];
        for wi in w.iter_mut().skip(20) {
            *wi = 0.0;
        }
        let full = ridge_fit(&x, &y, &w, 0.05).unwrap();
        let sub = ridge_fit(&x_sub, y_sub, &alloc::vec![1.0; 20], 0.05).unwrap();
        for j in 0..3 {
            assert!((full.weights[j] - sub.weights[j]).abs() < 1e-10);
        }
        assert!((full.intercept - sub.intercept).abs() < 1e-10);
    }

    #[test]
    fn intercept_absorbs_target_shifts_unpenalized() {
        let (x, y, w) = random_problem(21, 30, 4);
        let shifted: Vec<f64> = y.iter().map(|v| v + 100.0).collect();
        let base = ridge_fit(&x, &y, &w, 5.0).unwrap();
        let moved = ridge_fit(&x, &shifted, &w, 5.0).unwrap();
        for j in 0..4 {
            assert!((base.weights[j] - moved.weights[j]).abs() < 1e-7);
        }
        assert!((moved.intercept - base.intercept - 100.0).abs() < 1e-7);
    }

    #[test]
    fn parameter_validation() {
        let (x, y, w) = random_problem(1, 10, 2);
        assert!(ridge_fit(&x, &y[..5], &w, 0.1).is_err());
        assert!(ridge_fit(&x, &y, &w[..5], 0.1).is_err());
        assert!(ridge_fit(&x, &y, &w, -0.1).is_err());
        assert!(ridge_fit(&x, &y, &w, f64::NAN).is_err());
        let neg = alloc::vec![-1.0; 10];
        assert!(ridge_fit(&x, &y, &neg, 0.1).is_err());
        let zeros = alloc::vec![0.0; 10];
        assert!(ridge_fit(&x, &y, &zeros, 0.1).is_err());
    }

    proptest! {
        /// Growing the penalty never grows the coefficient norm.
        #[test]
        fn penalty_monotonically_shrinks_coefficients(seed in 0u64..200) {
            let (x, y, w) = random_problem(seed, 15, 3);
            let mut prev = f64::INFINITY;
            for &alpha in &[0.0, 0.01, 0.1, 1.0, 10.0, 100.0] {
                if let Ok(fit) = ridge_fit(&x, &y, &w, alpha) {
                    let norm: f64 = fit.weights.iter().map(|v| v * v).sum::<f64>().sqrt();
                    prop_assert!(norm <= prev + 1e-9, "alpha {} norm {} prev {}", alpha, norm, prev);
                    prev = norm;
                }
            }
        }
    }
}
