//! Exhaustive reference join, kept deliberately independent of the block
//! kernels: scores come from a dense scatter/gather rather than the merge
//! or inverted-index paths, so agreement between the two is meaningful.

use crate::sparse::SparseVector;
use crate::state::Neighbor;

/// Computes, for every vector of `r_vecs`, its `k` highest-dot-product
/// neighbors among `s_vecs`, sorted by descending score with ties broken by
/// ascending id. Only strictly positive scores qualify, and fewer than `k`
/// neighbors are returned when fewer qualify — mirroring the join contract.
pub fn exhaustive_knn(
    r_vecs: &[SparseVector],
    s_vecs: &[SparseVector],
    dims: u32,
    k: usize,
) -> Vec<(u64, Vec<Neighbor>)> {
    let mut dense = vec![0.0f64; dims as usize];
    let mut out = Vec::with_capacity(r_vecs.len());
    for r in r_vecs {
        for f in r.features() {
            dense[f.dim as usize] = f.weight as f64;
        }
        let mut scored: Vec<Neighbor> = Vec::new();
        for s in s_vecs {
            let mut score = 0.0f64;
            for f in s.features() {
                score += dense[f.dim as usize] * f.weight as f64;
            }
            if score > 0.0 {
                scored.push(Neighbor {
                    s_id: s.id(),
                    score,
                });
            }
        }
        scored.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap()
                .then(a.s_id.cmp(&b.s_id))
        });
        scored.truncate(k);
        out.push((r.id(), scored));
        for f in r.features() {
            dense[f.dim as usize] = 0.0;
        }
    }
    out
}
