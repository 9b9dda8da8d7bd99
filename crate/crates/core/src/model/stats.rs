use std::collections::BTreeMap;

use crate::error::{invalid, Result};

/// Positive and negative sample counts of one ordered `(target, context)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairCount {
    pub w: usize,
    pub v: usize,
    pub n_pos: u64,
    pub n_neg: u64,
}

impl PairCount {
    pub fn total(&self) -> u64 {
        self.n_pos + self.n_neg
    }
}

/// Sparse sufficient statistics of SGNS data.
///
/// Entries are kept sorted by `(w, v)`, unique, and never all-zero.
#[derive(Clone, Debug, PartialEq)]
pub struct PairStats {
    vocab_size: usize,
    total_tokens: u64,
    entries: Vec<PairCount>,
}

impl PairStats {
    /// Build from explicit entries. Duplicated pairs are rejected; zero entries dropped.
    pub fn new(
        vocab_size: usize,
        total_tokens: u64,
        entries: impl IntoIterator<Item = PairCount>,
    ) -> Result<Self> {
        if vocab_size == 0 {
            return invalid("vocabulary size must be positive");
        }
        let mut entries: Vec<PairCount> = entries.into_iter().filter(|e| e.total() > 0).collect();
        for e in &entries {
            if e.w >= vocab_size || e.v >= vocab_size {
                return invalid(format!(
                    "pair ({}, {}) out of range for V={vocab_size}",
                    e.w, e.v
                ));
            }
        }
        entries.sort_unstable_by_key(|e| (e.w, e.v));
        if let Some(d) = entries.windows(2).find(|p| (p[0].w, p[0].v) == (p[1].w, p[1].v)) {
            return invalid(format!("duplicate pair ({}, {})", d[0].w, d[0].v));
        }
        Ok(Self { vocab_size, total_tokens, entries })
    }

    pub fn empty(vocab_size: usize) -> Self {
        assert!(vocab_size > 0);
        Self { vocab_size, total_tokens: 0, entries: Vec::new() }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn entries(&self) -> &[PairCount] {
        &self.entries
    }

    /// Number of stored (distinct) pairs.
    pub fn num_unique(&self) -> usize {
        self.entries.len()
    }

    pub fn total_positive(&self) -> u64 {
        self.entries.iter().map(|e| e.n_pos).sum()
    }

    pub fn total_negative(&self) -> u64 {
        self.entries.iter().map(|e| e.n_neg).sum()
    }

    pub fn total_observations(&self) -> u64 {
        self.entries.iter().map(PairCount::total).sum()
    }

    pub fn get(&self, w: usize, v: usize) -> Option<&PairCount> {
        self.entries
            .binary_search_by_key(&(w, v), |e| (e.w, e.v))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Accumulates counts before freezing them into a [`PairStats`].
#[derive(Clone, Debug, Default)]
pub struct PairStatsBuilder {
    vocab_size: usize,
    total_tokens: u64,
    counts: BTreeMap<(usize, usize), (u64, u64)>,
}

impl PairStatsBuilder {
    pub fn new(vocab_size: usize) -> Self {
        Self { vocab_size, total_tokens: 0, counts: BTreeMap::new() }
    }

    pub fn set_total_tokens(&mut self, n: u64) -> &mut Self {
        self.total_tokens = n;
        self
    }

    pub fn add_positive(&mut self, w: usize, v: usize, n: u64) {
        self.counts.entry((w, v)).or_default().0 += n;
    }

    pub fn add_negative(&mut self, w: usize, v: usize, n: u64) {
        self.counts.entry((w, v)).or_default().1 += n;
    }

    pub fn build(self) -> Result<PairStats> {
        PairStats::new(
            self.vocab_size,
            self.total_tokens,
            self.counts
                .into_iter()
                .map(|((w, v), (n_pos, n_neg))| PairCount { w, v, n_pos, n_neg }),
        )
    }
}
