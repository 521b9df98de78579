//! Markov transition field.
//!
//! Samples are placed into `Q` quantile bins, first-order transitions
//! between consecutive samples are counted into a `Q x Q` matrix, and pixel
//! `(k, l)` of the field is the transition probability linking the bin of
//! sample `k` and the bin of sample `l`.
//!
//! Bins are numbered from zero in this module.

use ndarray::Array2;

use super::{check_series, EncodedImage, Method};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BinAssignment {
    /// Bin of each sample, in `0..Q`.
    pub bin_of: Vec<usize>,
    /// `Q - 1` non-decreasing upper bin edges.
    pub boundaries: Vec<f64>,
}

impl BinAssignment {
    pub fn n_bins(&self) -> usize {
        self.boundaries.len() + 1
    }
}

/// Column-stochastic transition statistics.
///
/// `counts[[i, j]]` is the number of steps from bin `j` to bin `i`;
/// `w` is `counts` with every non-empty column scaled to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub w: Array2<f64>,
    pub counts: Array2<u64>,
}

/// Linear-interpolation empirical quantile of sorted data at level
/// `k / q`, with the position computed from integers so exact grid points
/// never pick up rounding.
fn quantile_at(sorted: &[f64], k: usize, q: usize) -> f64 {
    let pos = (k * (sorted.len() - 1)) as f64 / q as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if frac == 0.0 || lo + 1 >= sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Quantile binning into `q` bins. A sample goes to the first bin whose
/// upper edge is `>=` the sample, so ties fall into the lower bin.
pub fn assign_bins(v: &[f64], q: usize) -> Result<BinAssignment> {
    if q < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 bins, got {q}"
        )));
    }
    check_series(v, 2)?;
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    let boundaries: Vec<f64> = (1..q).map(|k| quantile_at(&sorted, k, q)).collect();
    let bin_of = v
        .iter()
        .map(|&x| boundaries.partition_point(|&b| b < x))
        .collect();
    Ok(BinAssignment { bin_of, boundaries })
}

pub fn transition_matrix(bins: &BinAssignment) -> Result<TransitionMatrix> {
    let q = bins.n_bins();
    if bins.bin_of.len() < 2 {
        return Err(Error::InvalidArgument(
            "transition matrix needs at least 2 samples".into(),
        ));
    }
    let mut counts = Array2::<u64>::zeros((q, q));
    for pair in bins.bin_of.windows(2) {
        counts[[pair[1], pair[0]]] += 1;
    }
    let mut w = counts.mapv(|c| c as f64);
    for mut col in w.columns_mut() {
        let total = col.sum();
        if total > 0.0 {
            col /= total;
        }
    }
    Ok(TransitionMatrix { w, counts })
}

/// Markov transition field with `q` quantile bins.
pub fn mtf_encode(v: &[f64], q: usize) -> Result<EncodedImage> {
    let bins = assign_bins(v, q)?;
    let tm = transition_matrix(&bins)?;
    let b = &bins.bin_of;
    let pixels = Array2::from_shape_fn((v.len(), v.len()), |(k, l)| tm.w[[b[k], b[l]]]);
    Ok(EncodedImage::new(pixels, Method::Mtf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn bins_small_example() {
        let b = assign_bins(&[1.0, 1.0, 2.0, 2.0], 2).unwrap();
        assert_eq!(b.bin_of, vec![0, 0, 1, 1]);
        assert_eq!(b.boundaries, vec![1.5]);
    }

    #[test]
    fn constant_series_lands_in_first_bin() {
        let b = assign_bins(&[3.0; 9], 4).unwrap();
        assert_eq!(b.bin_of, vec![0; 9]);
        assert_eq!(b.boundaries, vec![3.0; 3]);
    }

    #[test]
    fn rejects_too_few_bins_or_samples() {
        assert!(assign_bins(&[1.0, 2.0], 1).is_err());
        assert!(assign_bins(&[1.0], 2).is_err());
        assert!(mtf_encode(&[1.0, f64::INFINITY, 2.0], 2).is_err());
    }

    #[test]
    fn occupancy_matches_sorted_rank_counts() {
        // With distinct values, the number of samples at or below the k-th
        // edge is floor(k (n-1) / Q) + 1.
        let n = 97usize;
        let q = 8usize;
        let v: Vec<f64> = (0..n).map(|i| ((i * 37 + 11) % n) as f64 * 1.3 + (i as f64).sin()).collect();
        let b = assign_bins(&v, q).unwrap();
        let mut occ = vec![0usize; q];
        for &x in &b.bin_of {
            occ[x] += 1;
        }
        let below = |k: usize| if k == 0 { 0 } else if k == q { n } else { k * (n - 1) / q + 1 };
        for k in 0..q {
            assert_eq!(occ[k], below(k + 1) - below(k), "bin {k}");
        }
    }

    #[test]
    fn transitions_small_example() {
        let b = assign_bins(&[1.0, 1.0, 2.0, 2.0], 2).unwrap();
        let tm = transition_matrix(&b).unwrap();
        assert_eq!(tm.counts, array![[1, 0], [1, 1]]);
        assert_eq!(tm.w, array![[0.5, 0.0], [0.5, 1.0]]);
    }

    #[test]
    fn alternating_and_single_bin_transitions() {
        let alt = BinAssignment {
            bin_of: vec![0, 1, 0, 1],
            boundaries: vec![0.5],
        };
        assert_eq!(transition_matrix(&alt).unwrap().w, array![[0.0, 1.0], [1.0, 0.0]]);
        let single = BinAssignment {
            bin_of: vec![0; 5],
            boundaries: vec![0.0, 0.0],
        };
        let w = transition_matrix(&single).unwrap().w;
        assert_eq!(w, array![[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
    }

    #[test]
    fn mtf_small_example_and_constant() {
        let im = mtf_encode(&[1.0, 1.0, 2.0, 2.0], 2).unwrap();
        assert_eq!(
            im.pixels(),
            array![
                [0.5, 0.5, 0.0, 0.0],
                [0.5, 0.5, 0.0, 0.0],
                [0.5, 0.5, 1.0, 1.0],
                [0.5, 0.5, 1.0, 1.0]
            ]
        );
        let im = mtf_encode(&[7.0; 12], 8).unwrap();
        assert!(im.pixels().iter().all(|&p| p == 1.0));
    }
}
