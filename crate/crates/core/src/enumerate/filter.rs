//! Output filters restrict exploration to branches whose output can still
//! reach a string of interest.

use crate::bits::BitString;

const NONE: u32 = u32::MAX;

/// A prefix-closed set of output strings, stored as a binary trie, with
/// some members marked as wanted.
///
/// Node 0 is the empty string. Exploration keeps every member reachable but
/// only guarantees complete records for wanted members.
#[derive(Clone, Debug)]
pub struct OutputTrie {
    children: Vec<[u32; 2]>,
    depth: Vec<u32>,
    wanted: Vec<bool>,
}

impl Default for OutputTrie {
    fn default() -> Self {
        Self { children: vec![[NONE; 2]], depth: vec![0], wanted: vec![false] }
    }
}

impl OutputTrie {
    pub fn new() -> Self {
        Self::default()
    }

    /// The smallest prefix-closed set containing every given string; only
    /// the given strings are wanted.
    pub fn from_strings<'a>(strings: impl IntoIterator<Item = &'a BitString>) -> Self {
        let mut trie = Self::new();
        for s in strings {
            trie.insert(s);
        }
        trie
    }

    /// Every string of length at most `max_len`, all wanted.
    pub fn complete(max_len: usize) -> Self {
        assert!(max_len <= 20, "complete tries are limited to depth 20");
        let mut trie = Self::new();
        trie.wanted[0] = true;
        let mut frontier = vec![0u32];
        for _ in 0..max_len {
            let mut next = Vec::with_capacity(frontier.len() * 2);
            for node in frontier {
                for bit in [false, true] {
                    let child = trie.add_child(node, bit);
                    trie.wanted[child as usize] = true;
                    next.push(child);
                }
            }
            frontier = next;
        }
        trie
    }

    /// Prefixes of `sequence` plus, for each position, the one-bit
    /// deviation from it: everything a sequential predictor can query.
    /// All members are wanted.
    pub fn prediction_family(sequence: &BitString) -> Self {
        let mut trie = Self::new();
        let mut node = 0;
        for bit in sequence.iter() {
            trie.add_child(node, !bit);
            node = trie.add_child(node, bit);
        }
        trie.wanted.iter_mut().for_each(|w| *w = true);
        trie
    }

    fn add_child(&mut self, node: u32, bit: bool) -> u32 {
        let slot = self.children[node as usize][bit as usize];
        if slot != NONE {
            return slot;
        }
        let id = self.children.len() as u32;
        self.children.push([NONE; 2]);
        self.depth.push(self.depth[node as usize] + 1);
        self.wanted.push(false);
        self.children[node as usize][bit as usize] = id;
        id
    }

    /// Adds `s` (and its prefixes) and marks `s` wanted.
    pub fn insert(&mut self, s: &BitString) -> u32 {
        let mut node = 0;
        for bit in s.iter() {
            node = self.add_child(node, bit);
        }
        self.wanted[node as usize] = true;
        node
    }

    pub fn is_wanted(&self, node: u32) -> bool {
        self.wanted[node as usize]
    }

    /// For each node, the fewest further output bits that reach a wanted
    /// member (`u32::MAX` when none can).
    pub(crate) fn bits_needed(&self) -> Vec<u32> {
        let mut need = vec![u32::MAX; self.len()];
        // Children always have larger ids than their parents.
        for node in (0..self.len()).rev() {
            if self.wanted[node] {
                need[node] = 0;
                continue;
            }
            for c in self.children[node] {
                if c != NONE && need[c as usize] != u32::MAX {
                    need[node] = need[node].min(need[c as usize] + 1);
                }
            }
        }
        need
    }

    #[inline]
    pub fn child(&self, node: u32, bit: bool) -> Option<u32> {
        let c = self.children[node as usize][bit as usize];
        (c != NONE).then_some(c)
    }

    #[inline]
    pub fn is_leaf(&self, node: u32) -> bool {
        self.children[node as usize] == [NONE; 2]
    }

    pub fn find(&self, s: &BitString) -> Option<u32> {
        s.iter().try_fold(0u32, |node, bit| self.child(node, bit))
    }

    pub fn contains(&self, s: &BitString) -> bool {
        self.find(s).is_some()
    }

    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_depth(&self) -> u32 {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// All member strings, shortest first then lexicographic.
    pub fn strings(&self) -> Vec<BitString> {
        let mut out = Vec::with_capacity(self.len());
        let mut frontier = vec![(0u32, BitString::new())];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for (node, s) in frontier {
                for bit in [false, true] {
                    if let Some(c) = self.child(node, bit) {
                        next.push((c, s.with(bit)));
                    }
                }
                out.push(s);
            }
            frontier = next;
        }
        out
    }
}

/// What the explorer keeps.
#[derive(Clone, Copy, Debug)]
pub enum OutputFilter<'a> {
    /// Every output, of any length.
    Unbounded,
    /// Outputs of length at most the given bound.
    MaxLen(usize),
    /// Outputs inside a prefix-closed family.
    Family(&'a OutputTrie),
}

impl OutputFilter<'_> {
    /// State after appending `bit` at output length `len`, or `None` when
    /// the branch has left the filter.
    #[inline]
    pub(crate) fn advance(&self, node: u32, len: usize, bit: bool) -> Option<u32> {
        match self {
            OutputFilter::Unbounded => Some(0),
            OutputFilter::MaxLen(max) => (len < *max).then_some(0),
            OutputFilter::Family(trie) => trie.child(node, bit),
        }
    }

    /// No longer output can be kept from here.
    #[inline]
    pub(crate) fn exhausted(&self, node: u32, len: usize) -> bool {
        match self {
            OutputFilter::Unbounded => false,
            OutputFilter::MaxLen(max) => len >= *max,
            OutputFilter::Family(trie) => trie.is_leaf(node),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs;

    #[test]
    fn complete_trie_has_all_strings() {
        let trie = OutputTrie::complete(3);
        assert_eq!(trie.len(), 15);
        assert!(trie.contains(&bs("101")));
        assert!(!trie.contains(&bs("1010")));
        assert_eq!(trie.strings().len(), 15);
        assert!((0..trie.len() as u32).all(|n| trie.is_wanted(n)));
    }

    #[test]
    fn prediction_family_members() {
        let trie = OutputTrie::prediction_family(&bs("011"));
        let got: Vec<String> = trie.strings().iter().map(|s| s.to_string()).collect();
        assert_eq!(got, vec!["", "0", "1", "00", "01", "010", "011"]);
        assert!(trie.is_leaf(trie.find(&bs("011")).unwrap()));
        assert!(trie.bits_needed().iter().all(|&n| n == 0));
    }

    #[test]
    fn bits_needed_counts_to_wanted_members() {
        let trie = OutputTrie::from_strings([&bs("110"), &bs("0")]);
        let need = trie.bits_needed();
        assert_eq!(need[0], 1);
        assert_eq!(need[trie.find(&bs("1")).unwrap() as usize], 2);
        assert_eq!(need[trie.find(&bs("110")).unwrap() as usize], 0);
        assert!(!trie.is_wanted(trie.find(&bs("11")).unwrap()));
    }

    #[test]
    fn from_strings_is_prefix_closed() {
        let trie = OutputTrie::from_strings([&bs("110"), &bs("0")]);
        assert!(trie.contains(&bs("11")));
        assert!(trie.contains(&bs("")));
        assert!(!trie.contains(&bs("10")));
    }
}
