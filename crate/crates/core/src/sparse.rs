use crate::counters::CostCounters;
use crate::error::{Error, Result};

/// One `(dimension, weight)` entry of a sparse vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feature {
    pub dim: u32,
    pub weight: f32,
}

/// A sparse vector: an id plus features sorted by strictly increasing
/// dimension, stored as parallel arrays.
///
/// The parallel layout keeps the dimension stream contiguous, which is what
/// the merge-based dot product and the inverted-index kernels iterate over;
/// weights are only touched on a dimension match. Weights are kept in `f32`
/// (the on-disk width); all score arithmetic widens to `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    id: u64,
    dims: Vec<u32>,
    weights: Vec<f32>,
}

impl SparseVector {
    /// Builds a vector from `(dim, weight)` pairs, enforcing the format
    /// invariants: dimensions strictly increasing, weights positive and
    /// finite.
    pub fn new(id: u64, features: Vec<Feature>) -> Result<Self> {
        let mut dims = Vec::with_capacity(features.len());
        let mut weights = Vec::with_capacity(features.len());
        for f in &features {
            if let Some(&prev) = dims.last() {
                if f.dim <= prev {
                    return Err(Error::UnsortedFeatures { id });
                }
            }
            if !(f.weight > 0.0 && f.weight.is_finite()) {
                return Err(Error::NonPositiveWeight {
                    id,
                    dim: f.dim,
                    weight: f.weight,
                });
            }
            dims.push(f.dim);
            weights.push(f.weight);
        }
        Ok(Self { id, dims, weights })
    }

    /// As `new`, but additionally rejects dimensions at or above `dims`.
    pub fn new_bounded(id: u64, features: Vec<Feature>, dims: u32) -> Result<Self> {
        let v = Self::new(id, features)?;
        if let Some(&max) = v.dims.last() {
            if max >= dims {
                return Err(Error::DimensionOutOfRange { id, dim: max, dims });
            }
        }
        Ok(v)
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// Number of non-zero features.
    pub fn nnz(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn features(&self) -> impl Iterator<Item = Feature> + '_ {
        self.dims
            .iter()
            .zip(&self.weights)
            .map(|(&dim, &weight)| Feature { dim, weight })
    }

    /// Bytes this vector occupies in the on-disk format: an 8-byte id, a
    /// 4-byte feature count, and 8 bytes per feature.
    pub fn serialized_size(&self) -> u64 {
        12 + 8 * self.dims.len() as u64
    }
}

/// Dot product of two sparse vectors via a linear merge over the two sorted
/// dimension arrays, charging the advances actually performed to
/// `feature_visits` and `merge_advances`.
///
/// Matching weights are widened to `f64` before multiplying and the products
/// are accumulated in `f64`, in ascending dimension order. The merge makes at
/// most `|r| + |s|` advances; it stops as soon as either side is exhausted.
pub fn dot(r: &SparseVector, s: &SparseVector, counters: &mut CostCounters) -> f64 {
    let (score, advances) = merge_dot(&r.dims, &r.weights, &s.dims, &s.weights);
    counters.feature_visits += advances;
    counters.merge_advances += advances;
    score
}

/// The merge loop behind [`dot`], shared with the brute-force kernel (which
/// charges its own feature budget). Returns `(score, advances)` where one
/// advance moves one side's cursor forward one position.
pub(crate) fn merge_dot(
    r_dims: &[u32],
    r_weights: &[f32],
    s_dims: &[u32],
    s_weights: &[f32],
) -> (f64, u64) {
    let mut i = 0usize;
    let mut j = 0usize;
    let mut acc = 0.0f64;
    while i < r_dims.len() && j < s_dims.len() {
        let rd = r_dims[i];
        let sd = s_dims[j];
        if rd == sd {
            acc += r_weights[i] as f64 * s_weights[j] as f64;
            i += 1;
            j += 1;
        } else {
            // Branchless advance of whichever cursor trails.
            i += (rd < sd) as usize;
            j += (sd < rd) as usize;
        }
    }
    (acc, (i + j) as u64)
}
