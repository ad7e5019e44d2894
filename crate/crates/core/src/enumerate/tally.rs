use std::collections::BTreeMap;

use crate::bits::BitString;

use super::explore::{Branch, ExploreStats, Sink};
use super::filter::OutputTrie;
use super::first_phase;

/// Programs sharing one `(|p|, t)` pair for a given output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TallyEntry {
    pub program_len: u32,
    pub time: u64,
    pub count: u64,
}

impl TallyEntry {
    pub fn first_phase(&self) -> u32 {
        first_phase(self.program_len, self.time)
    }
}

/// Computation events for a prefix-closed family of outputs, aggregated to
/// counts per `(|p|, t)`.
///
/// For every wanted member of the family, holds exactly the records with
/// first phase at most `max_phase`, without their program text.
#[derive(Clone, Debug)]
pub struct Tally {
    max_phase: u32,
    trie: OutputTrie,
    entries: Vec<BTreeMap<(u32, u64), u64>>,
    stats: ExploreStats,
}

impl Tally {
    pub(crate) fn new(max_phase: u32, trie: OutputTrie, entries: Vec<BTreeMap<(u32, u64), u64>>, stats: ExploreStats) -> Self {
        Self { max_phase, trie, entries, stats }
    }

    pub fn max_phase(&self) -> u32 {
        self.max_phase
    }

    pub fn family(&self) -> &OutputTrie {
        &self.trie
    }

    pub fn stats(&self) -> ExploreStats {
        self.stats
    }

    /// Whether `x` is a wanted member, so its records are complete.
    pub fn covers(&self, x: &BitString) -> bool {
        self.trie.find(x).is_some_and(|n| self.trie.is_wanted(n))
    }

    /// Entries for `x`, or `None` when `x` is not covered.
    pub fn entries(&self, x: &BitString) -> Option<Vec<TallyEntry>> {
        let node = self.trie.find(x).filter(|&n| self.trie.is_wanted(n))?;
        Some(
            self.entries[node as usize]
                .iter()
                .map(|(&(program_len, time), &count)| TallyEntry { program_len, time, count })
                .collect(),
        )
    }

    /// Number of records for `x` (counting multiplicity).
    pub fn record_count(&self, x: &BitString) -> u64 {
        self.entries(x).map_or(0, |es| es.iter().map(|e| e.count).sum())
    }
}

pub(crate) struct TallySink {
    entries: Vec<BTreeMap<(u32, u64), u64>>,
}

impl TallySink {
    pub(crate) fn new(nodes: usize) -> Self {
        Self { entries: vec![BTreeMap::new(); nodes] }
    }

    pub(crate) fn into_entries(self) -> Vec<BTreeMap<(u32, u64), u64>> {
        self.entries
    }
}

impl Sink for TallySink {
    fn output(&mut self, branch: &Branch, node: u32) {
        let key = (branch.program_len() as u32, branch.state.step_count());
        *self.entries[node as usize].entry(key).or_insert(0) += 1;
    }

    fn absorb(&mut self, other: Self) {
        for (mine, theirs) in self.entries.iter_mut().zip(other.entries) {
            for (key, count) in theirs {
                *mine.entry(key).or_insert(0) += count;
            }
        }
    }
}
