//! Goodness-of-fit, independence and distance statistics for the verification suites.

mod special;

use std::collections::BTreeMap;

pub use special::{chi_square_sf, gamma_p, gamma_q, ln_gamma};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Minimum expected count per cell before pooling.
pub const MIN_EXPECTED: f64 = 5.0;

/// Labelled counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTable<L> {
    pub labels: Vec<L>,
    pub counts: Vec<u64>,
}

impl<L: Ord + Clone> CountTable<L> {
    /// Tallies samples; labels come out sorted.
    pub fn from_samples(samples: impl IntoIterator<Item = L>) -> Self {
        let mut map: BTreeMap<L, u64> = BTreeMap::new();
        for s in samples {
            *map.entry(s).or_insert(0) += 1;
        }
        let (labels, counts) = map.into_iter().unzip();
        Self { labels, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn get(&self, label: &L) -> u64 {
        self.labels.iter().position(|l| l == label).map_or(0, |i| self.counts[i])
    }

    /// Counts of `self` and `other` over the union of their labels.
    pub fn aligned(&self, other: &Self) -> (Vec<L>, Vec<u64>, Vec<u64>) {
        let mut labels: Vec<L> = self.labels.iter().chain(&other.labels).cloned().collect();
        labels.sort();
        labels.dedup();
        let a = labels.iter().map(|l| self.get(l)).collect();
        let b = labels.iter().map(|l| other.get(l)).collect();
        (labels, a, b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquare<T> {
    pub stat: T,
    pub dof: usize,
    pub pvalue: T,
    /// Number of original cells merged into a pooled cell (0 when nothing was pooled).
    pub pooled: usize,
}

impl<T: Scalar> ChiSquare<T> {
    pub fn rejects(&self, alpha: T) -> bool {
        self.pvalue < alpha
    }
}

/// Groups cell indices so every group's expected count reaches [`MIN_EXPECTED`]:
/// all small cells form one pool, which absorbs the smallest remaining cells
/// while it is still short.
fn pool_cells<T: Scalar>(expected: &[T]) -> (Vec<Vec<usize>>, usize) {
    let min = T::lit(MIN_EXPECTED);
    let mut large: Vec<usize> = (0..expected.len()).filter(|&i| expected[i] >= min).collect();
    let mut pool: Vec<usize> = (0..expected.len()).filter(|&i| expected[i] < min).collect();
    if pool.is_empty() {
        return (large.into_iter().map(|i| vec![i]).collect(), 0);
    }
    large.sort_by(|&a, &b| expected[a].partial_cmp(&expected[b]).expect("finite").then(a.cmp(&b)));
    let mut pool_mass: T = pool.iter().map(|&i| expected[i]).sum();
    while pool_mass < min && !large.is_empty() {
        let i = large.remove(0);
        pool_mass = pool_mass + expected[i];
        pool.push(i);
    }
    let pooled = pool.len();
    let mut groups: Vec<Vec<usize>> = large.into_iter().map(|i| vec![i]).collect();
    groups.push(pool);
    (groups, pooled)
}

/// Pearson goodness-of-fit of `observed` against `expected_probs`.
pub fn chisq_gof<T: Scalar, L>(observed: &CountTable<L>, expected_probs: &[T]) -> Result<ChiSquare<T>> {
    if observed.counts.len() != expected_probs.len() {
        return Err(Error::Domain(format!(
            "{} cells but {} expected probabilities",
            observed.counts.len(),
            expected_probs.len()
        )));
    }
    let sum: T = expected_probs.iter().copied().sum();
    if (sum - T::one()).abs() > T::lit(1e-9) || expected_probs.iter().any(|p| *p < T::zero()) {
        return Err(Error::Domain("expected probabilities must be a distribution".into()));
    }
    let n = T::count(observed.counts.iter().sum());
    let expected: Vec<T> = expected_probs.iter().map(|&p| p * n).collect();
    let (groups, pooled) = pool_cells(&expected);
    if groups.len() < 2 {
        return Err(Error::Degenerate("fewer than two cells after pooling".into()));
    }
    let stat = groups
        .iter()
        .map(|g| {
            let o: T = g.iter().map(|&i| T::count(observed.counts[i])).sum();
            let e: T = g.iter().map(|&i| expected[i]).sum();
            if e > T::zero() {
                (o - e) * (o - e) / e
            } else {
                T::zero()
            }
        })
        .sum();
    let dof = groups.len() - 1;
    Ok(ChiSquare { stat, dof, pvalue: chi_square_sf(stat, dof)?, pooled })
}

/// Pearson test of independence for an `r x c` contingency table.
pub fn chisq_independence<T: Scalar>(joint: &[Vec<u64>]) -> Result<ChiSquare<T>> {
    let rows = joint.len();
    let cols = joint.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 || joint.iter().any(|r| r.len() != cols) {
        return Err(Error::Degenerate(format!("need a rectangular table of at least 2x2, got {rows} rows")));
    }
    let row_sums: Vec<u64> = joint.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<u64> = (0..cols).map(|j| joint.iter().map(|r| r[j]).sum()).collect();
    if row_sums.contains(&0) || col_sums.contains(&0) {
        return Err(Error::Degenerate("a row or column sums to zero".into()));
    }
    let total = T::count(row_sums.iter().sum());
    let mut stat = T::zero();
    for (i, row) in joint.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = T::count(row_sums[i]) * T::count(col_sums[j]) / total;
            let d = T::count(o) - e;
            stat = stat + d * d / e;
        }
    }
    let dof = (rows - 1) * (cols - 1);
    Ok(ChiSquare { stat, dof, pvalue: chi_square_sf(stat, dof)?, pooled: 0 })
}

/// Two-sample homogeneity test: do `a` and `b` (counts over the same cells)
/// come from one distribution? Columns with small expected counts are pooled.
pub fn chisq_homogeneity<T: Scalar>(a: &[u64], b: &[u64]) -> Result<ChiSquare<T>> {
    if a.len() != b.len() {
        return Err(Error::Domain("samples must be aligned over the same cells".into()));
    }
    let na = T::count(a.iter().sum());
    let nb = T::count(b.iter().sum());
    let total = na + nb;
    if na == T::zero() || nb == T::zero() {
        return Err(Error::Degenerate("an empty sample".into()));
    }
    // Smaller of the two expected counts in each column.
    let expected: Vec<T> =
        a.iter().zip(b).map(|(&x, &y)| T::count(x + y) * na.min(nb) / total).collect();
    let (groups, pooled) = pool_cells(&expected);
    let collapse = |v: &[u64]| groups.iter().map(|g| g.iter().map(|&i| v[i]).sum()).collect::<Vec<u64>>();
    let table = vec![collapse(a), collapse(b)];
    let mut res = chisq_independence(&table)?;
    res.pooled = pooled;
    Ok(res)
}

/// Total variation distance `½ Σ |p_i - q_i|`.
pub fn tv_distance<T: Scalar>(p: &[T], q: &[T]) -> Result<T> {
    if p.len() != q.len() {
        return Err(Error::Domain(format!("length mismatch: {} vs {}", p.len(), q.len())));
    }
    Ok(p.iter().zip(q).map(|(&a, &b)| (a - b).abs()).sum::<T>() / T::lit(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{indexed_seed, rng_from_seed};
    use rand::Rng;

    fn table(counts: &[u64]) -> CountTable<usize> {
        CountTable { labels: (0..counts.len()).collect(), counts: counts.to_vec() }
    }

    #[test]
    fn gof_examples() {
        let r: ChiSquare<f64> = chisq_gof(&table(&[15, 15]), &[0.5, 0.5]).unwrap();
        assert_eq!((r.stat, r.dof, r.pvalue), (0.0, 1, 1.0));
        let r: ChiSquare<f64> = chisq_gof(&table(&[10, 20]), &[0.5, 0.5]).unwrap();
        assert!((r.stat - 10.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.dof, 1);
        let r: ChiSquare<f64> = chisq_gof(&table(&[0, 30]), &[0.5, 0.5]).unwrap();
        assert!((r.stat - 30.0).abs() < 1e-12);
    }

    #[test]
    fn gof_pools_sparse_cells() {
        // Expected counts 48, 1, 1: the two small cells pool to 2 and then absorb the 48.
        let r = chisq_gof::<f64, _>(&table(&[48, 1, 1]), &[0.96, 0.02, 0.02]);
        assert!(matches!(r, Err(Error::Degenerate(_))));
        let r: ChiSquare<f64> = chisq_gof(&table(&[50, 40, 6, 4]), &[0.5, 0.4, 0.06, 0.04]).unwrap();
        assert_eq!((r.dof, r.pooled), (2, 2));
        assert!(r.stat.abs() < 1e-12);
    }

    #[test]
    fn gof_rejects_bad_input() {
        assert!(chisq_gof::<f64, _>(&table(&[1, 2]), &[0.5]).is_err());
        assert!(chisq_gof::<f64, _>(&table(&[1, 2]), &[0.5, 0.6]).is_err());
        assert!(chisq_gof::<f64, _>(&table(&[10]), &[1.0]).is_err());
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_distance(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(tv_distance(&[0.5, 0.5], &[0.75, 0.25]).unwrap(), 0.25);
        assert!(tv_distance(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn independence_examples() {
        let r: ChiSquare<f64> = chisq_independence(&[vec![10, 10], vec![10, 10]]).unwrap();
        assert_eq!(r.stat, 0.0);
        let r: ChiSquare<f64> = chisq_independence(&[vec![20, 0], vec![0, 20]]).unwrap();
        assert_eq!((r.stat, r.dof), (40.0, 1));
        assert!(chisq_independence::<f64>(&[vec![1, 0], vec![2, 0]]).is_err());
        assert!(chisq_independence::<f64>(&[vec![1, 2]]).is_err());
    }

    #[test]
    fn independence_calibration() {
        // iid uniform pairs on 3x3 cells: rejection rate at 5% should be nominal.
        let mut rejections = 0;
        for seed in 0..1000 {
            let mut rng = rng_from_seed(indexed_seed(77, seed));
            let mut joint = vec![vec![0u64; 3]; 3];
            for _ in 0..300 {
                joint[rng.random_range(0..3)][rng.random_range(0..3)] += 1;
            }
            rejections += usize::from(chisq_independence::<f64>(&joint).unwrap().rejects(0.05));
        }
        let rate = rejections as f64 / 1000.0;
        assert!((rate - 0.05).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn homogeneity_detects_shift() {
        let same: ChiSquare<f64> = chisq_homogeneity(&[100, 200, 300], &[100, 200, 300]).unwrap();
        assert_eq!(same.stat, 0.0);
        let shifted: ChiSquare<f64> = chisq_homogeneity(&[300, 200, 100], &[100, 200, 300]).unwrap();
        assert!(shifted.rejects(0.001));
        let sparse: ChiSquare<f64> = chisq_homogeneity(&[100, 200, 1, 0], &[100, 200, 0, 2]).unwrap();
        assert_eq!(sparse.pooled, 3);
    }

    #[test]
    fn count_tables_align() {
        let a = CountTable::from_samples(["x", "y", "x"]);
        let b = CountTable::from_samples(["z", "x"]);
        assert_eq!(a.total(), 3);
        let (labels, ca, cb) = a.aligned(&b);
        assert_eq!(labels, vec!["x", "y", "z"]);
        assert_eq!((ca, cb), (vec![2, 1, 0], vec![1, 0, 1]));
    }

    #[test]
    fn statistics_are_in_range() {
        let r: ChiSquare<f64> = chisq_independence(&[vec![5, 9, 30], vec![41, 3, 7]]).unwrap();
        assert!(r.stat >= 0.0 && (0.0..=1.0).contains(&r.pvalue));
    }
}
