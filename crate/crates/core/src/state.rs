/// One result pair: a neighbor id from S and its dot-product score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub s_id: u64,
    pub score: f64,
}

/// The running k-best list for a single outer vector.
///
/// Entries are kept sorted by descending score. Admission is strict: a
/// candidate enters only if its score exceeds the current prune score, which
/// is 0 while the list is under-filled and the k-th best score once full.
/// A candidate that merely ties the boundary is rejected, and among equal
/// scores already admitted, the earlier-scanned entry keeps the better rank.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    r_id: u64,
    k: usize,
    entries: Vec<Neighbor>,
}

impl CandidateSet {
    pub fn new(r_id: u64, k: usize) -> Self {
        Self {
            r_id,
            k,
            entries: Vec::with_capacity(k.min(1024)),
        }
    }

    pub fn r_id(&self) -> u64 {
        self.r_id
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn entries(&self) -> &[Neighbor] {
        &self.entries
    }

    /// Score a new candidate must strictly beat to be admitted: 0 until the
    /// set holds k entries, then the k-th best score.
    pub fn prune_score(&self) -> f64 {
        if self.entries.len() < self.k {
            0.0
        } else {
            self.entries[self.k - 1].score
        }
    }

    /// Offers a candidate; returns whether it was admitted. Inserting keeps
    /// descending score order, placing new entries after existing equal
    /// scores, and evicts the now (k+1)-th entry when the set overflows.
    pub fn offer(&mut self, s_id: u64, score: f64) -> bool {
        if !(score > self.prune_score()) {
            return false;
        }
        let at = self.entries.partition_point(|e| e.score >= score);
        self.entries.insert(at, Neighbor { s_id, score });
        self.entries.truncate(self.k);
        true
    }

    pub fn into_neighbors(self) -> Vec<Neighbor> {
        self.entries
    }
}

/// Per-R-block join state: one candidate set per outer vector plus the
/// cached minimum prune score used by the threshold index builder.
#[derive(Debug)]
pub struct JoinState {
    sets: Vec<CandidateSet>,
    min_prune_score: f64,
}

impl JoinState {
    pub fn new(r_ids: impl IntoIterator<Item = u64>, k: usize) -> Self {
        Self {
            sets: r_ids
                .into_iter()
                .map(|id| CandidateSet::new(id, k))
                .collect(),
            min_prune_score: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> &[CandidateSet] {
        &self.sets
    }

    pub fn set_mut(&mut self, r_index: usize) -> &mut CandidateSet {
        &mut self.sets[r_index]
    }

    /// The weakest prune score across the block, as of the last refresh.
    /// Zero whenever any set is still under-filled.
    pub fn min_prune_score(&self) -> f64 {
        self.min_prune_score
    }

    /// Recomputes the cached minimum. Called after each inner block so the
    /// next index build sees the tightest bound justified so far.
    pub fn refresh_min_prune_score(&mut self) {
        self.min_prune_score = self
            .sets
            .iter()
            .map(CandidateSet::prune_score)
            .fold(f64::INFINITY, f64::min);
        if !self.min_prune_score.is_finite() {
            self.min_prune_score = 0.0;
        }
    }

    pub fn into_sets(self) -> Vec<CandidateSet> {
        self.sets
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prune_score_is_zero_until_full() {
        let mut set = CandidateSet::new(1, 3);
        assert_eq!(set.prune_score(), 0.0);
        assert!(set.offer(10, 5.0));
        assert!(set.offer(11, 1.0));
        assert_eq!(set.prune_score(), 0.0);
        assert!(set.offer(12, 3.0));
        assert_eq!(set.prune_score(), 1.0);
    }

    #[test]
    fn zero_scores_are_never_admitted() {
        let mut set = CandidateSet::new(1, 2);
        assert!(!set.offer(10, 0.0));
        assert!(set.entries().is_empty());
    }

    #[test]
    fn boundary_ties_are_rejected() {
        let mut set = CandidateSet::new(1, 2);
        assert!(set.offer(10, 5.0));
        assert!(set.offer(11, 3.0));
        // Ties the current 2nd-best: not admitted.
        assert!(!set.offer(12, 3.0));
        assert_eq!(set.entries()[1].s_id, 11);
        // Strictly better: admitted, evicting the old 2nd-best.
        assert!(set.offer(13, 4.0));
        assert_eq!(set.prune_score(), 4.0);
        assert_eq!(
            set.entries().iter().map(|e| e.s_id).collect::<Vec<_>>(),
            vec![10, 13]
        );
    }

    #[test]
    fn equal_scores_keep_scan_order_above_the_boundary() {
        let mut set = CandidateSet::new(1, 3);
        assert!(set.offer(10, 2.0));
        assert!(set.offer(11, 2.0)); // equal, set not full: admitted after 10
        assert!(set.offer(12, 7.0));
        let ids: Vec<u64> = set.entries().iter().map(|e| e.s_id).collect();
        assert_eq!(ids, vec![12, 10, 11]);
    }

    #[test]
    fn min_prune_tracks_weakest_set() {
        let mut state = JoinState::new([100, 101], 2);
        state.set_mut(0).offer(1, 4.0);
        state.set_mut(0).offer(2, 3.0);
        state.refresh_min_prune_score();
        // Second set still empty.
        assert_eq!(state.min_prune_score(), 0.0);
        state.set_mut(1).offer(1, 9.0);
        state.set_mut(1).offer(3, 5.0);
        state.refresh_min_prune_score();
        assert_eq!(state.min_prune_score(), 3.0);
    }
}
