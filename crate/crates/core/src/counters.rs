use std::ops::AddAssign;
use std::time::Duration;

/// Work and i/o accounting for a join run.
///
/// Every kernel charges its dominant operations here so that runs can be
/// compared by work performed rather than by wall clock alone. All counts
/// are monotone; merging two counter sets is element-wise addition.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct CostCounters {
    /// Features charged by similarity computations. The brute-force kernel
    /// charges `|r| + |s|` per pair (its budget), while standalone dot
    /// products charge the merge advances actually performed.
    pub feature_visits: u64,
    /// Merge-iterator advances actually performed across all dot products.
    pub merge_advances: u64,
    /// Postings inserted into inverted lists during index construction.
    pub postings_built: u64,
    /// Postings scanned while probing inverted lists.
    pub postings_visited: u64,
    /// Residual features examined during threshold-index score completion.
    pub residual_visits: u64,
    /// Blocks of the outer (R) dataset loaded from disk.
    pub r_blocks_read: u64,
    /// Blocks of the inner (S) dataset loaded from disk.
    pub s_blocks_read: u64,
    /// Time spent reading blocks from disk.
    pub io_time: Duration,
    /// Time spent inside join kernels (index builds, probes, completions).
    pub cpu_time: Duration,
}

impl CostCounters {
    pub fn new() -> Self {
        Self::default()
    }
}

impl AddAssign<&CostCounters> for CostCounters {
    fn add_assign(&mut self, rhs: &CostCounters) {
        self.feature_visits += rhs.feature_visits;
        self.merge_advances += rhs.merge_advances;
        self.postings_built += rhs.postings_built;
        self.postings_visited += rhs.postings_visited;
        self.residual_visits += rhs.residual_visits;
        self.r_blocks_read += rhs.r_blocks_read;
        self.s_blocks_read += rhs.s_blocks_read;
        self.io_time += rhs.io_time;
        self.cpu_time += rhs.cpu_time;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_is_elementwise_addition() {
        let mut a = CostCounters::new();
        a.feature_visits = 3;
        a.s_blocks_read = 1;
        a.io_time = Duration::from_millis(5);

        let mut b = CostCounters::new();
        b.feature_visits = 4;
        b.postings_built = 7;
        b.io_time = Duration::from_millis(6);

        a += &b;
        assert_eq!(a.feature_visits, 7);
        assert_eq!(a.postings_built, 7);
        assert_eq!(a.s_blocks_read, 1);
        assert_eq!(a.io_time, Duration::from_millis(11));
    }
}
