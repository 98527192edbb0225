//! Block-pair join kernels.
//!
//! Each kernel takes one outer block `B_r` and one inner block `B_s` and
//! folds the best matches it finds into the caller's [`JoinState`]. Three
//! strategies are provided:
//!
//! * [`kernel_bf`] — brute force: a merge dot product for every pair.
//! * [`kernel_iib`] — builds an inverted index over `B_s`, then scores each
//!   `r` by probing only the lists of dimensions `r` actually has.
//! * [`kernel_iiib`] — like `kernel_iib`, but consults the prune scores
//!   already established: per inner vector, features are fed to the index in
//!   decreasing order of how often their dimension occurs in `B_r`, and the
//!   leading features whose best-possible contribution cannot lift a score
//!   past the weakest current prune score are withheld from the index. The
//!   withheld (residual) features are folded back in exactly during a
//!   completion pass, so results are identical to the other kernels: a
//!   vector whose indexed features never touch the accumulator cannot beat
//!   the prune score, because the residual features alone are bounded by it.
//!
//! Kernels charge work to [`CostCounters`] but never touch its clocks; the
//! driver owns timing.

use crate::counters::CostCounters;
use crate::format::Block;
use crate::sparse::{merge_dot, Feature, SparseVector};
use crate::state::JoinState;

/// One inverted-list entry: the position of the inner vector within its
/// block, and the feature weight for the listed dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posting {
    pub s_ref: u32,
    pub weight: f32,
}

/// Per-dimension posting lists over one inner block. Within each list,
/// postings appear in block scan order.
#[derive(Debug)]
pub struct InvertedLists {
    lists: Vec<Vec<Posting>>,
}

impl InvertedLists {
    fn new(dims: u32) -> Self {
        Self {
            lists: vec![Vec::new(); dims as usize],
        }
    }

    pub fn list(&self, dim: u32) -> &[Posting] {
        &self.lists[dim as usize]
    }

    pub fn total_postings(&self) -> u64 {
        self.lists.iter().map(|l| l.len() as u64).sum()
    }
}

/// Dimension statistics of an outer block, shared by every inner block the
/// threshold kernel sees while that outer block is loaded.
#[derive(Debug)]
pub struct FrequencyProfile {
    /// How many vectors of the block carry each dimension.
    counts: Vec<u32>,
    /// Largest weight any vector of the block has at each dimension; 0 where
    /// the dimension is absent.
    max_weights: Vec<f32>,
    /// Rank of each dimension when ordered by descending count, ties broken
    /// by ascending dimension. Rank 0 is the most frequent dimension.
    ranks: Vec<u32>,
}

impl FrequencyProfile {
    pub fn build(b_r: &Block, dims: u32) -> Self {
        let n = dims as usize;
        let mut counts = vec![0u32; n];
        let mut max_weights = vec![0.0f32; n];
        for r in &b_r.vectors {
            for f in r.features() {
                let d = f.dim as usize;
                counts[d] += 1;
                if f.weight > max_weights[d] {
                    max_weights[d] = f.weight;
                }
            }
        }
        let mut order: Vec<u32> = (0..dims).collect();
        order.sort_unstable_by_key(|&d| (u32::MAX - counts[d as usize], d));
        let mut ranks = vec![0u32; n];
        for (rank, &d) in order.iter().enumerate() {
            ranks[d as usize] = rank as u32;
        }
        Self {
            counts,
            max_weights,
            ranks,
        }
    }

    pub fn count(&self, dim: u32) -> u32 {
        self.counts[dim as usize]
    }

    pub fn max_weight(&self, dim: u32) -> f32 {
        self.max_weights[dim as usize]
    }

    pub fn rank(&self, dim: u32) -> u32 {
        self.ranks[dim as usize]
    }

    pub fn dims(&self) -> u32 {
        self.counts.len() as u32
    }
}

/// How one inner vector was split by the threshold index builder: a flag per
/// feature (true = indexed) plus the residual features themselves, in
/// ascending dimension order.
#[derive(Debug)]
pub struct SplitVector {
    indexed: Box<[bool]>,
    residual: Vec<Feature>,
}

impl SplitVector {
    pub fn indexed_flags(&self) -> &[bool] {
        &self.indexed
    }

    pub fn residual_features(&self) -> &[Feature] {
        &self.residual
    }
}

/// Threshold index over one inner block: partial posting lists plus, per
/// inner vector, the residual features the lists omit.
#[derive(Debug)]
pub struct IiibIndex {
    pub lists: InvertedLists,
    pub splits: Vec<SplitVector>,
}

/// Flat score accumulator over the vectors of one inner block, with a
/// touched-list so only entries actually hit are visited afterwards.
/// Clearing is O(1): entries are stamped with a generation and stale stamps
/// read as zero.
#[derive(Debug, Default)]
pub struct Accumulator {
    scores: Vec<f64>,
    stamps: Vec<u32>,
    generation: u32,
    touched: Vec<u32>,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Clears the accumulator and makes it cover `len` entries.
    pub fn begin(&mut self, len: usize) {
        if self.scores.len() < len {
            self.scores.resize(len, 0.0);
            self.stamps.resize(len, 0);
        }
        self.touched.clear();
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamps.fill(0);
            self.generation = 1;
        }
    }

    #[inline]
    pub fn add(&mut self, s_ref: u32, value: f64) {
        let i = s_ref as usize;
        if self.stamps[i] == self.generation {
            self.scores[i] += value;
        } else {
            self.stamps[i] = self.generation;
            self.scores[i] = value;
            self.touched.push(s_ref);
        }
    }

    /// Entries hit since `begin`, in first-touch order.
    pub fn touched(&self) -> &[u32] {
        &self.touched
    }

    #[inline]
    pub fn score(&self, s_ref: u32) -> f64 {
        let i = s_ref as usize;
        if self.stamps[i] == self.generation {
            self.scores[i]
        } else {
            0.0
        }
    }
}

/// Brute force: every pair gets a full merge dot product. Charges the pair's
/// whole feature budget `|r| + |s|` to `feature_visits`; the advances the
/// merge actually performed go to `merge_advances`.
pub fn kernel_bf(b_r: &Block, b_s: &Block, state: &mut JoinState, counters: &mut CostCounters) {
    for (ri, r) in b_r.vectors.iter().enumerate() {
        let set = state.set_mut(ri);
        let mut visits = 0u64;
        let mut advances = 0u64;
        for s in &b_s.vectors {
            visits += (r.nnz() + s.nnz()) as u64;
            let (score, adv) = merge_dot(r.dims(), r.weights(), s.dims(), s.weights());
            advances += adv;
            set.offer(s.id(), score);
        }
        counters.feature_visits += visits;
        counters.merge_advances += advances;
    }
}

/// Builds full per-dimension posting lists over `b_s`, one posting per
/// feature, in block scan order.
pub fn build_inverted_lists_iib(
    b_s: &Block,
    dims: u32,
    counters: &mut CostCounters,
) -> InvertedLists {
    let mut index = InvertedLists::new(dims);
    for (si, s) in b_s.vectors.iter().enumerate() {
        for f in s.features() {
            index.lists[f.dim as usize].push(Posting {
                s_ref: si as u32,
                weight: f.weight,
            });
        }
    }
    counters.postings_built += index.total_postings();
    index
}

/// Scores one outer vector against an inner block through its inverted
/// lists, then offers every touched entry to the vector's candidate set.
pub fn find_matches_iib(
    r_index: usize,
    r: &SparseVector,
    b_s: &Block,
    lists: &InvertedLists,
    acc: &mut Accumulator,
    state: &mut JoinState,
    counters: &mut CostCounters,
) {
    acc.begin(b_s.len());
    let mut visited = 0u64;
    for f in r.features() {
        let rw = f.weight as f64;
        let list = lists.list(f.dim);
        visited += list.len() as u64;
        for p in list {
            acc.add(p.s_ref, rw * p.weight as f64);
        }
    }
    counters.postings_visited += visited;
    let set = state.set_mut(r_index);
    for &t in acc.touched() {
        set.offer(b_s.vectors[t as usize].id(), acc.score(t));
    }
}

/// Inverted-index kernel: one index build per block pair, then a probe per
/// outer vector.
pub fn kernel_iib(
    b_r: &Block,
    b_s: &Block,
    dims: u32,
    state: &mut JoinState,
    counters: &mut CostCounters,
) {
    let lists = build_inverted_lists_iib(b_s, dims, counters);
    let mut acc = Accumulator::new();
    for (ri, r) in b_r.vectors.iter().enumerate() {
        find_matches_iib(ri, r, b_s, &lists, &mut acc, state, counters);
    }
}

/// Builds the threshold index over `b_s`.
///
/// Each inner vector's features are visited in ascending rank of their
/// dimension (most frequent in the outer block first) while accumulating
/// `t`, the best score the features seen so far could contribute against
/// any outer vector: `Σ max_weight(dim) * weight`. Features are withheld
/// from the lists until `t` strictly exceeds `min_prune`; from the first
/// feature that pushes `t` past the bound onward, everything is indexed.
/// The withheld prefix becomes the vector's residual.
pub fn build_inverted_lists_iiib(
    b_s: &Block,
    profile: &FrequencyProfile,
    min_prune: f64,
    counters: &mut CostCounters,
) -> IiibIndex {
    let mut lists = InvertedLists::new(profile.dims());
    let mut splits = Vec::with_capacity(b_s.len());
    let mut by_rank: Vec<u32> = Vec::new();
    for (si, s) in b_s.vectors.iter().enumerate() {
        let dims = s.dims();
        let weights = s.weights();
        by_rank.clear();
        by_rank.extend(0..dims.len() as u32);
        by_rank.sort_unstable_by_key(|&i| profile.rank(dims[i as usize]));

        let mut indexed = vec![false; dims.len()].into_boxed_slice();
        let mut t = 0.0f64;
        for &i in &by_rank {
            let d = dims[i as usize];
            t += profile.max_weight(d) as f64 * weights[i as usize] as f64;
            if t > min_prune {
                lists.lists[d as usize].push(Posting {
                    s_ref: si as u32,
                    weight: weights[i as usize],
                });
                indexed[i as usize] = true;
            }
        }
        let residual: Vec<Feature> = (0..dims.len())
            .filter(|&i| !indexed[i])
            .map(|i| Feature {
                dim: dims[i],
                weight: weights[i],
            })
            .collect();
        splits.push(SplitVector { indexed, residual });
    }
    counters.postings_built += lists.total_postings();
    IiibIndex { lists, splits }
}

/// Scores one outer vector through the threshold index: probe the partial
/// lists, then complete every touched entry with the exact contribution of
/// that entry's residual features. `r_dense` must hold `r`'s weights at its
/// dimensions and zero elsewhere; completions look weights up directly
/// instead of re-merging, which changes nothing about the result.
pub fn find_matches_iiib(
    r_index: usize,
    r: &SparseVector,
    b_s: &Block,
    index: &IiibIndex,
    acc: &mut Accumulator,
    r_dense: &[f64],
    state: &mut JoinState,
    counters: &mut CostCounters,
) {
    acc.begin(b_s.len());
    let mut visited = 0u64;
    for f in r.features() {
        let rw = f.weight as f64;
        let list = index.lists.list(f.dim);
        visited += list.len() as u64;
        for p in list {
            acc.add(p.s_ref, rw * p.weight as f64);
        }
    }
    counters.postings_visited += visited;

    let mut residual_visits = 0u64;
    let set = state.set_mut(r_index);
    for &t in acc.touched() {
        let mut score = acc.score(t);
        let residual = index.splits[t as usize].residual_features();
        residual_visits += residual.len() as u64;
        for f in residual {
            score += r_dense[f.dim as usize] * f.weight as f64;
        }
        set.offer(b_s.vectors[t as usize].id(), score);
    }
    counters.residual_visits += residual_visits;
}

/// Threshold-index kernel: consults `state.min_prune_score()` for the build,
/// so the caller must refresh it between inner blocks.
pub fn kernel_iiib(
    b_r: &Block,
    b_s: &Block,
    profile: &FrequencyProfile,
    state: &mut JoinState,
    counters: &mut CostCounters,
) {
    let index = build_inverted_lists_iiib(b_s, profile, state.min_prune_score(), counters);
    let mut acc = Accumulator::new();
    let mut r_dense = vec![0.0f64; profile.dims() as usize];
    for (ri, r) in b_r.vectors.iter().enumerate() {
        for f in r.features() {
            r_dense[f.dim as usize] = f.weight as f64;
        }
        find_matches_iiib(ri, r, b_s, &index, &mut acc, &r_dense, state, counters);
        for &d in r.dims() {
            r_dense[d as usize] = 0.0;
        }
    }
}
