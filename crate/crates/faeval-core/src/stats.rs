//! Rank correlation and Pareto-front extraction.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{dim, Error, Result};

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(core::cmp::Ordering::Equal));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share the average of ranks i+1..=j+1.
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = shared;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        dx += (x - mx) * (x - mx);
        dy += (y - my) * (y - my);
    }
    if dx == 0.0 || dy == 0.0 {
        return Err(Error::Degenerate { what: "constant sequence has no rank correlation" });
    }
    Ok(num / (crate::math::sqrt(dx) * crate::math::sqrt(dy)))
}

/// Spearman rank correlation: average-rank ties, then Pearson on the ranks.
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(dim("paired sequences", xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(Error::Empty { what: "rank correlation needs at least two pairs" });
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Optimization sense for one Pareto axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Smaller is better.
    Minimize,
    /// Bigger is better.
    Maximize,
}

/// Indices of the non-dominated points under the per-axis directions.
///
/// Point `a` dominates `b` when it is at least as good on both axes and
/// strictly better on at least one; identical points never dominate each
/// other, so duplicates of a front point are all kept.
pub fn pareto_front(points: &[(f64, f64)], directions: (Direction, Direction)) -> Vec<usize> {
    let better_eq = |a: f64, b: f64, d: Direction| match d {
        Direction::Minimize => a <= b,
        Direction::Maximize => a >= b,
    };
    let strictly = |a: f64, b: f64, d: Direction| match d {
        Direction::Minimize => a < b,
        Direction::Maximize => a > b,
    };
    let mut front = Vec::new();
    'outer: for (i, p) in points.iter().enumerate() {
        for (j, q) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let weakly = better_eq(q.0, p.0, directions.0) && better_eq(q.1, p.1, directions.1);
            let strict = strictly(q.0, p.0, directions.0) || strictly(q.1, p.1, directions.1);
            if weakly && strict {
                continue 'outer;
            }
        }
        front.push(i);
    }
    front
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::RandomStream;
    use alloc::vec::Vec;

    #[test]
    fn ranks_with_ties_by_hand() {
        // values 10, 20, 20, 30 -> ranks 1, 2.5, 2.5, 4
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 30.0]), alloc::vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(average_ranks(&[5.0, 5.0, 5.0]), alloc::vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn spearman_known_values() {
        // Perfect monotone increasing / decreasing.
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman_rho(&xs, &[10.0, 20.0, 30.0, 40.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman_rho(&xs, &[4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        // Hand value: x = 1..5, y = (1,3,2,5,4): d = (0,1,1,1,1), sum d^2 = 4,
        // rho = 1 - 6*4/(5*24) = 0.8.
        let rho = spearman_rho(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 3.0, 2.0, 5.0, 4.0]).unwrap();
        assert!((rho - 0.8).abs() < 1e-12);
    }

    /// Against the textbook formula on tie-free data: the average-rank
    /// route must agree with `1 - 6 sum d^2 / (n(n^2-1))` exactly.
    #[test]
    fn spearman_matches_displacement_formula_without_ties() {
        let mut s = RandomStream::new(50);
        for _ in 0..200 {
            let n = 3 + s.next_index(12);
            let xs: Vec<f64> = (0..n).map(|_| s.next_gaussian()).collect();
            let ys: Vec<f64> = (0..n).map(|_| s.next_gaussian()).collect();
            let rx = average_ranks(&xs);
            let ry = average_ranks(&ys);
            let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
            let nf = n as f64;
            let formula = 1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0));
            let rho = spearman_rho(&xs, &ys).unwrap();
            assert!((rho - formula).abs() < 1e-10, "rho {rho} vs formula {formula}");
        }
    }

    #[test]
    fn spearman_degenerate_and_mismatch() {
        assert!(spearman_rho(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(spearman_rho(&[1.0, 2.0], &[1.0]).is_err());
        assert!(spearman_rho(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn pareto_front_by_hand() {
        // Minimize x, maximize y.
        let pts = [(1.0, 5.0), (2.0, 6.0), (3.0, 4.0), (1.0, 5.0), (0.5, 1.0)];
        let mut front = pareto_front(&pts, (Direction::Minimize, Direction::Maximize));
        front.sort_unstable();
        // (3,4) is dominated by (2,6) and (1,5); the duplicate (1,5) points
        // survive together; (0.5,1) is best on x alone; (2,6) best on y alone.
        assert_eq!(front, alloc::vec![0, 1, 3, 4]);
    }

    /// Brute-force oracle agreement on random point sets.
    #[test]
    fn pareto_front_matches_quadratic_oracle() {
        let mut s = RandomStream::new(77);
        for _ in 0..100 {
            let n = 2 + s.next_index(40);
            let pts: Vec<(f64, f64)> = (0..n)
                .map(|_| {
                    // Coarse grid to force ties and duplicates.
                    let x = (s.next_index(6)) as f64;
                    let y = (s.next_index(6)) as f64;
                    (x, y)
                })
                .collect();
            let dirs = (Direction::Minimize, Direction::Maximize);
            let front = pareto_front(&pts, dirs);
            for (i, p) in pts.iter().enumerate() {
                let dominated = pts.iter().enumerate().any(|(j, q)| {
                    j != i && q.0 <= p.0 && q.1 >= p.1 && (q.0 < p.0 || q.1 > p.1)
                });
                assert_eq!(!dominated, front.contains(&i), "point {i} of {pts:?}");
            }
        }
    }

    #[test]
    fn pareto_single_point_and_direction_flip() {
        assert_eq!(pareto_front(&[(3.0, 3.0)], (Direction::Minimize, Direction::Minimize)), alloc::vec![0]);
        let pts = [(1.0, 1.0), (2.0, 2.0)];
        assert_eq!(pareto_front(&pts, (Direction::Minimize, Direction::Minimize)), alloc::vec![0]);
        assert_eq!(pareto_front(&pts, (Direction::Maximize, Direction::Maximize)), alloc::vec![1]);
    }
}
