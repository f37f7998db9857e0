use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Sparse feature vector: sorted `(index, value)` pairs without explicit zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SparseVector<F: Scalar> {
    dimension: usize,
    entries: Vec<(usize, F)>,
}

impl<F: Scalar> SparseVector<F> {
    pub fn zeros(dimension: usize) -> Self {
        SparseVector {
            dimension,
            entries: Vec::new(),
        }
    }

    /// Builds from arbitrary pairs: duplicates are summed, zeros dropped.
    ///
    /// Panics if an index is out of range.
    pub fn from_pairs(dimension: usize, pairs: impl IntoIterator<Item = (usize, F)>) -> Self {
        let mut entries: Vec<(usize, F)> = pairs.into_iter().collect();
        entries.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, F)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            assert!(i < dimension, "index {i} out of range for dimension {dimension}");
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|&(_, v)| v != F::zero());
        SparseVector {
            dimension,
            entries: merged,
        }
    }

    pub fn from_dense(values: &[F]) -> Self {
        SparseVector {
            dimension: values.len(),
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != F::zero())
                .map(|(i, &v)| (i, v))
                .collect(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn entries(&self) -> &[(usize, F)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: usize) -> F {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(F::zero(), |pos| self.entries[pos].1)
    }

    pub fn to_dense(&self) -> Vec<F> {
        let mut out = vec![F::zero(); self.dimension];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    pub fn sum(&self) -> F {
        self.entries.iter().map(|&(_, v)| v).sum()
    }

    /// Dot product with a dense weight slice (only the first `dimension` weights are read).
    pub fn dot_dense(&self, weights: &[F]) -> F {
        self.entries.iter().map(|&(i, v)| v * weights[i]).sum()
    }

    /// `target += scale * self`.
    pub fn add_scaled_to(&self, scale: F, target: &mut [F]) {
        for &(i, v) in &self.entries {
            target[i] += scale * v;
        }
    }

    pub fn squared_norm(&self) -> F {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }

    /// Merges two sorted entry lists, calling `f(a_i, b_i)` on every index
    /// present in either vector.
    fn fold_union<A>(&self, other: &Self, init: A, mut f: impl FnMut(A, F, F) -> A) -> A {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut acc = init;
        while i < a.len() || j < b.len() {
            let take_a = j >= b.len() || (i < a.len() && a[i].0 < b[j].0);
            let take_b = i >= a.len() || (j < b.len() && b[j].0 < a[i].0);
            if take_a {
                acc = f(acc, a[i].1, F::zero());
                i += 1;
            } else if take_b {
                acc = f(acc, F::zero(), b[j].1);
                j += 1;
            } else {
                acc = f(acc, a[i].1, b[j].1);
                i += 1;
                j += 1;
            }
        }
        acc
    }

    pub fn euclidean_distance(&self, other: &Self) -> F {
        self.fold_union(other, F::zero(), |acc, x, y| acc + (x - y) * (x - y))
            .sqrt()
    }

    pub fn manhattan_distance(&self, other: &Self) -> F {
        self.fold_union(other, F::zero(), |acc, x, y| acc + (x - y).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_pairs_merges_and_drops_zeros() {
        let v = SparseVector::<f64>::from_pairs(5, [(3, 1.0), (1, 2.0), (3, -1.0), (0, 0.0)]);
        assert_eq!(v.entries(), &[(1, 2.0)]);
        assert_eq!(v.get(1), 2.0);
        assert_eq!(v.get(3), 0.0);
    }

    #[test]
    fn distances() {
        let a = SparseVector::<f64>::from_dense(&[1.0, 0.0, 3.0]);
        let b = SparseVector::<f64>::from_dense(&[0.0, 4.0, 3.0]);
        assert!((a.euclidean_distance(&b) - 17f64.sqrt()).abs() < 1e-12);
        assert_eq!(a.manhattan_distance(&b), 5.0);
        assert_eq!(a.euclidean_distance(&a), 0.0);
    }

    #[test]
    #[should_panic]
    fn out_of_range_index_panics() {
        let _ = SparseVector::<f32>::from_pairs(2, [(2, 1.0)]);
    }
}
