//! The FAST phase schedule: ledgers of computation records and brute-force
//! complexity estimators built on them.
//!
//! Two enumeration modes produce identical records. `Naive` re-runs every
//! program from scratch in every phase, exactly as FAST is described, and
//! exists to validate the step accounting. `Tree` explores the shared
//! execution tree once (see [`explore`]).

mod explore;
mod filter;
mod tally;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::vm::{MachineState, ProgramInput, StepError};
use crate::Workers;

use explore::{explore, Branch, Limit, Sink};
pub use explore::{ExploreStats, MAX_SUPPORTED_PHASE};
pub use filter::{OutputFilter, OutputTrie};
use tally::TallySink;
pub use tally::{Tally, TallyEntry};

/// `⌈log2 t⌉` for `t ≥ 1`.
pub fn ceil_log2(t: u64) -> u32 {
    assert!(t >= 1, "time must be at least one step");
    64 - (t - 1).leading_zeros()
}

/// Least phase `i` with `time ≤ 2^(i - program_len)`.
pub fn first_phase(program_len: u32, time: u64) -> u32 {
    program_len + ceil_log2(time)
}

/// Total steps FAST allots in phases `1..=k` when every program of length
/// `l ≤ i` is re-run for `2^(i-l)` steps in phase `i`.
pub fn naive_step_formula(k: u32) -> u128 {
    (1u128 << (k + 1)) * (k as u128 - 1) + 2
}

/// The Kt-cost `|p| + log2 t` of one computation, kept exact as `(|p|, t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KtCost {
    pub program_len: u32,
    pub time: u64,
}

impl KtCost {
    /// `t · 2^|p|`, which orders costs exactly.
    fn scaled(&self) -> u128 {
        (self.time as u128) << self.program_len
    }

    /// `⌈|p| + log2 t⌉`, the phase in which the computation first appears.
    pub fn ceil(&self) -> u32 {
        first_phase(self.program_len, self.time)
    }

    pub fn to_f64(&self) -> f64 {
        self.program_len as f64 + (self.time as f64).log2()
    }
}

impl Ord for KtCost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.scaled().cmp(&other.scaled()).then(self.program_len.cmp(&other.program_len))
    }
}

impl PartialOrd for KtCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for KtCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + log2({})", self.program_len, self.time)
    }
}

/// One computation event `p → x` found by FAST.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComputationRecord {
    pub program: BitString,
    pub output: BitString,
    pub time: u64,
    #[serde(rename = "firstPhase")]
    pub first_phase: u32,
}

impl ComputationRecord {
    pub fn new(program: BitString, output: BitString, time: u64) -> Self {
        let first_phase = first_phase(program.len() as u32, time);
        Self { program, output, time, first_phase }
    }

    pub fn kt_cost(&self) -> KtCost {
        KtCost { program_len: self.program.len() as u32, time: self.time }
    }

    fn sort_key(&self) -> (u32, &BitString, &BitString) {
        (self.first_phase, &self.program, &self.output)
    }
}

impl Ord for ComputationRecord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key()).then(self.time.cmp(&other.time))
    }
}

impl PartialOrd for ComputationRecord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Anything that can list the `(|p|, t)` pairs of the computations of `x`
/// found up to some phase.
pub trait RecordSource {
    fn max_phase(&self) -> u32;

    /// `None` when the source cannot answer for `x`.
    fn entries(&self, x: &BitString) -> Option<Vec<TallyEntry>>;
}

impl RecordSource for Tally {
    fn max_phase(&self) -> u32 {
        Tally::max_phase(self)
    }

    fn entries(&self, x: &BitString) -> Option<Vec<TallyEntry>> {
        Tally::entries(self, x)
    }
}

/// All records with first phase at most `max_phase`, sorted by
/// `(firstPhase, program, output)`.
#[derive(Clone, Debug)]
pub struct ComputationLedger {
    max_phase: u32,
    records: Vec<ComputationRecord>,
    by_output: BTreeMap<BitString, Vec<usize>>,
    naive_step_count: Option<u128>,
    executed_steps: u64,
}

impl ComputationLedger {
    fn new(max_phase: u32, mut records: Vec<ComputationRecord>, naive_step_count: Option<u128>, executed_steps: u64) -> Self {
        records.sort();
        records.dedup();
        let mut by_output: BTreeMap<BitString, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            by_output.entry(r.output.clone()).or_default().push(i);
        }
        Self { max_phase, records, by_output, naive_step_count, executed_steps }
    }

    pub fn max_phase(&self) -> u32 {
        self.max_phase
    }

    pub fn records(&self) -> &[ComputationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Steps allotted by the naive schedule; `None` for tree mode.
    pub fn naive_step_count(&self) -> Option<u128> {
        self.naive_step_count
    }

    /// Instructions actually simulated to build the ledger.
    pub fn executed_steps(&self) -> u64 {
        self.executed_steps
    }

    pub fn records_for<'a>(&'a self, x: &BitString) -> impl Iterator<Item = &'a ComputationRecord> + 'a {
        self.by_output.get(x).into_iter().flat_map(move |ids| ids.iter().map(move |&i| &self.records[i]))
    }

    /// Distinct outputs, in lexicographic order.
    pub fn outputs(&self) -> impl Iterator<Item = &BitString> {
        self.by_output.keys()
    }

    /// The ledger FAST would have produced after phase `k ≤ max_phase`.
    pub fn truncated(&self, k: u32) -> ComputationLedger {
        let records = self.records.iter().filter(|r| r.first_phase <= k).cloned().collect();
        ComputationLedger::new(k.min(self.max_phase), records, None, 0)
    }

    /// One JSON object per line, in ledger order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }
}

impl RecordSource for ComputationLedger {
    fn max_phase(&self) -> u32 {
        self.max_phase
    }

    fn entries(&self, x: &BitString) -> Option<Vec<TallyEntry>> {
        let mut counts: BTreeMap<(u32, u64), u64> = BTreeMap::new();
        for r in self.records_for(x) {
            *counts.entry((r.program.len() as u32, r.time)).or_insert(0) += 1;
        }
        Some(counts.into_iter().map(|((program_len, time), count)| TallyEntry { program_len, time, count }).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Naive,
    #[default]
    Tree,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(Mode::Naive),
            "tree" => Ok(Mode::Tree),
            other => Err(format!("unknown mode `{other}` (expected naive or tree)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerateConfig {
    pub workers: Workers,
    /// Largest phase any enumeration may reach.
    pub phase_cap: u32,
}

impl Default for EnumerateConfig {
    fn default() -> Self {
        Self { workers: Workers::Auto, phase_cap: 32 }
    }
}

impl EnumerateConfig {
    pub fn with_workers(mut self, workers: Workers) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_phase_cap(mut self, cap: u32) -> Self {
        self.phase_cap = cap;
        self
    }

    fn check(&self, k: u32) -> Result<(), EnumerateError> {
        if k == 0 {
            return Err(EnumerateError::ZeroPhase);
        }
        let cap = self.phase_cap.min(MAX_SUPPORTED_PHASE);
        if k > cap {
            return Err(EnumerateError::CapExceeded { requested: k, cap });
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnumerateError {
    #[error("phase {requested} exceeds the configured cap of {cap}")]
    CapExceeded { requested: u32, cap: u32 },
    #[error("phases start at 1")]
    ZeroPhase,
    #[error("time bound {t} is too large for exhaustive search (at most {max})")]
    TimeTooLarge { t: u64, max: u64 },
}

/// Every record with Kt-cost at most `k`.
pub fn enumerate_up_to_phase(k: u32, mode: Mode, config: &EnumerateConfig) -> Result<ComputationLedger, EnumerateError> {
    config.check(k)?;
    match mode {
        Mode::Tree => Ok(enumerate_tree(k, OutputFilter::Unbounded, config.workers)),
        Mode::Naive => Ok(enumerate_naive(k)),
    }
}

/// Records with Kt-cost at most `k` whose output passes `filter`.
pub fn enumerate_filtered(
    k: u32,
    filter: OutputFilter<'_>,
    config: &EnumerateConfig,
) -> Result<ComputationLedger, EnumerateError> {
    config.check(k)?;
    Ok(enumerate_tree(k, filter, config.workers))
}

#[derive(Default)]
struct LedgerSink {
    records: Vec<ComputationRecord>,
    steps: u64,
}

impl Sink for LedgerSink {
    fn output(&mut self, branch: &Branch, _node: u32) {
        let len = branch.program_len() as u32;
        let program = BitString::from_u64(branch.program, len);
        self.records.push(ComputationRecord::new(program, branch.state.output().clone(), branch.state.step_count()));
    }

    fn absorb(&mut self, other: Self) {
        self.records.extend(other.records);
        self.steps += other.steps;
    }
}

fn enumerate_tree(k: u32, filter: OutputFilter<'_>, workers: Workers) -> ComputationLedger {
    let (sink, stats) = explore(Limit::Phase(k), filter, workers, LedgerSink::default);
    ComputationLedger::new(k, sink.records, None, stats.instructions)
}

fn enumerate_naive(k: u32) -> ComputationLedger {
    let mut found: BTreeMap<(BitString, BitString), ComputationRecord> = BTreeMap::new();
    let mut allotted: u128 = 0;
    let mut executed: u64 = 0;
    for phase in 1..=k {
        for len in 1..=phase {
            let budget = 1u64 << (phase - len);
            allotted += (1u128 << len) * budget as u128;
            for value in 0..(1u64 << len) {
                let program = BitString::from_u64(value, len);
                executed += run_for_records(&program, budget, |output, time| {
                    let key = (program.clone(), output.clone());
                    found.entry(key).or_insert_with(|| ComputationRecord::new(program.clone(), output.clone(), time));
                });
            }
        }
    }
    for r in found.values() {
        debug_assert!(r.first_phase <= k);
    }
    ComputationLedger::new(k, found.into_values().collect(), Some(allotted), executed)
}

/// Runs `program` alone for `budget` steps, reporting every print made after
/// the whole program was read. Returns the number of steps executed.
fn run_for_records(program: &BitString, budget: u64, mut record: impl FnMut(&BitString, u64)) -> u64 {
    let mut state = MachineState::new();
    let mut input = ProgramInput::new(program);
    let full = program.len() as u64;
    while state.step_count() < budget {
        match state.step(&mut input) {
            Ok(Some(event)) => {
                if event.consumed_bits == full && state.step_count() <= budget {
                    record(&event.output, state.step_count());
                }
            }
            Ok(None) if state.is_running() => {}
            Ok(None) | Err(StepError::NeedsMoreInput | StepError::InvalidProgram | StepError::NotRunning) => break,
        }
    }
    state.step_count().min(budget)
}

/// Aggregated records of phase at most `k` for a prefix-closed family.
pub fn tally_family(trie: OutputTrie, k: u32, config: &EnumerateConfig) -> Result<Tally, EnumerateError> {
    config.check(k)?;
    let nodes = trie.len();
    let (sink, stats) = explore(Limit::Phase(k), OutputFilter::Family(&trie), config.workers, || TallySink::new(nodes));
    let entries = sink.into_entries();
    Ok(Tally::new(k, trie, entries, stats))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum BoundStatus {
    Exact,
    LowerBoundOnly,
}

/// Result of a Kt search up to some phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KtComplexity {
    /// Cheapest computation found, if any.
    pub cost: Option<KtCost>,
    pub status: BoundStatus,
    /// Every computation not found costs more than this.
    pub searched_phase: u32,
}

/// `Kt(x)` from the records of phase at most `k_max`.
pub fn kt_complexity(x: &BitString, k_max: u32, config: &EnumerateConfig) -> Result<KtComplexity, EnumerateError> {
    if k_max == 0 || x.is_empty() {
        return Ok(KtComplexity { cost: None, status: BoundStatus::LowerBoundOnly, searched_phase: 0 });
    }
    let trie = OutputTrie::from_strings([x]);
    let tally = tally_family(trie, k_max, config)?;
    let cost = tally.entries(x).unwrap_or_default().iter().map(|e| KtCost { program_len: e.program_len, time: e.time }).min();
    let status = match cost {
        Some(c) if c.ceil() <= k_max => BoundStatus::Exact,
        _ => BoundStatus::LowerBoundOnly,
    };
    Ok(KtComplexity { cost, status, searched_phase: k_max })
}

/// Result of a Km search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KmComplexity {
    /// Shortest program found that computes `x`.
    pub length: Option<u32>,
    /// `Km(x)` is at least this.
    pub lower_bound: u32,
    pub status: BoundStatus,
}

#[derive(Default)]
struct KmSink {
    target: u32,
    best: Option<u64>,
    stranded: Option<u64>,
}

impl Sink for KmSink {
    fn output(&mut self, branch: &Branch, node: u32) {
        if node == self.target {
            let len = branch.program_len();
            self.best = Some(self.best.map_or(len, |b| b.min(len)));
        }
    }

    fn stranded(&mut self, branch: &Branch) {
        let len = branch.program_len();
        self.stranded = Some(self.stranded.map_or(len, |s| s.min(len)));
    }

    fn prune_bits(&self) -> Option<u64> {
        self.best
    }

    fn absorb(&mut self, other: Self) {
        for (mine, theirs) in [(&mut self.best, other.best), (&mut self.stranded, other.stranded)] {
            if let Some(v) = theirs {
                *mine = Some(mine.map_or(v, |m| m.min(v)));
            }
        }
    }
}

/// `Km(x)` over programs of at most `k_max` bits, each run for `2^k_max`
/// steps.
pub fn km_complexity(x: &BitString, k_max: u32, config: &EnumerateConfig) -> Result<KmComplexity, EnumerateError> {
    if k_max == 0 || x.is_empty() {
        return Ok(KmComplexity { length: None, lower_bound: 0, status: BoundStatus::LowerBoundOnly });
    }
    config.check(k_max)?;
    let trie = OutputTrie::from_strings([x]);
    let target = trie.find(x).expect("x is in its own prefix trie");
    let limit = Limit::Flat { steps: 1u64 << k_max, max_bits: k_max as u64 };
    let (sink, _) = explore(limit, OutputFilter::Family(&trie), config.workers, || KmSink { target, ..KmSink::default() });
    let unresolved = sink.stranded.map(|s| s as u32);
    Ok(match sink.best.map(|b| b as u32) {
        Some(best) if unresolved.is_none_or(|s| s >= best) => {
            KmComplexity { length: Some(best), lower_bound: best, status: BoundStatus::Exact }
        }
        Some(best) => KmComplexity {
            length: Some(best),
            lower_bound: unresolved.unwrap_or(best).min(best),
            status: BoundStatus::LowerBoundOnly,
        },
        None => KmComplexity {
            length: None,
            lower_bound: unresolved.unwrap_or(k_max + 1).min(k_max + 1),
            status: BoundStatus::LowerBoundOnly,
        },
    })
}

#[derive(Default)]
struct OutputSetSink {
    outputs: BTreeSet<BitString>,
}

impl Sink for OutputSetSink {
    fn output(&mut self, branch: &Branch, _node: u32) {
        self.outputs.insert(branch.state.output().clone());
    }

    fn absorb(&mut self, other: Self) {
        self.outputs.extend(other.outputs);
    }
}

/// Largest `t` accepted by [`incomputable_prefix_set`].
pub const MAX_INCOMPUTABLE_TIME: u64 = MAX_SUPPORTED_PHASE as u64 / 3;

/// Nonempty strings of length at most `max_len` that some program of at most
/// `max_bits` bits prints within `t` steps.
pub fn computable_in_time(t: u64, max_len: usize, config: &EnumerateConfig) -> Result<BTreeSet<BitString>, EnumerateError> {
    if t == 0 || t > MAX_INCOMPUTABLE_TIME {
        return Err(EnumerateError::TimeTooLarge { t, max: MAX_INCOMPUTABLE_TIME });
    }
    // A program that prints within t steps has fetched at most t instructions.
    let limit = Limit::Flat { steps: t, max_bits: 3 * t };
    let (sink, _) = explore(limit, OutputFilter::MaxLen(max_len), config.workers, OutputSetSink::default);
    Ok(sink.outputs)
}

/// `Ĉ_t`: strings of length at most `max_len` not computable within `t`
/// steps whose nonempty proper prefixes all are.
pub fn incomputable_prefix_set(t: u64, max_len: usize, config: &EnumerateConfig) -> Result<BTreeSet<BitString>, EnumerateError> {
    let computable = computable_in_time(t, max_len, config)?;
    let mut out = BTreeSet::new();
    let empty = BitString::new();
    for y in std::iter::once(&empty).chain(computable.iter()) {
        if y.len() >= max_len {
            continue;
        }
        for bit in [false, true] {
            let x = y.with(bit);
            if !computable.contains(&x) {
                out.insert(x);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs;

    fn cfg() -> EnumerateConfig {
        EnumerateConfig::default().with_workers(Workers::Sequential)
    }

    #[test]
    fn first_phase_examples() {
        assert_eq!(first_phase(3, 1), 3);
        assert_eq!(first_phase(3, 2), 4);
        assert_eq!(first_phase(6, 5), 9);
        assert_eq!(first_phase(6, 4), 8);
    }

    #[test]
    fn naive_formula_values() {
        let expect = [2u128, 10, 34, 98, 258];
        for (k, e) in (1..=5).zip(expect) {
            assert_eq!(naive_step_formula(k), e);
        }
    }

    #[test]
    fn phase_three_ledger() {
        let ledger = enumerate_up_to_phase(3, Mode::Tree, &cfg()).unwrap();
        let out0 = ComputationRecord::new(bs("100"), bs("0"), 1);
        assert_eq!(out0.first_phase, 3);
        assert!(ledger.records().contains(&out0));
        assert!(!ledger.records().iter().any(|r| r.program == bs("100") && r.output == bs("1")));
        assert_eq!(ledger.len(), 1);
    }

    #[test]
    fn naive_matches_tree_small() {
        for k in 1..=9 {
            let naive = enumerate_up_to_phase(k, Mode::Naive, &cfg()).unwrap();
            let tree = enumerate_up_to_phase(k, Mode::Tree, &cfg()).unwrap();
            assert_eq!(naive.records(), tree.records(), "k = {k}");
            assert_eq!(naive.naive_step_count(), Some(naive_step_formula(k)));
        }
    }

    #[test]
    fn kt_cost_ordering_is_exact() {
        let a = KtCost { program_len: 3, time: 4 };
        let b = KtCost { program_len: 5, time: 1 };
        assert!(a < b);
        let c = KtCost { program_len: 4, time: 2 };
        assert_eq!(a.scaled(), c.scaled());
    }

    #[test]
    fn kt_and_km_examples() {
        let kt0 = kt_complexity(&bs("0"), 8, &cfg()).unwrap();
        assert_eq!(kt0.cost, Some(KtCost { program_len: 3, time: 1 }));
        assert_eq!(kt0.status, BoundStatus::Exact);
        let kt1 = kt_complexity(&bs("1"), 8, &cfg()).unwrap();
        assert_eq!(kt1.cost, Some(KtCost { program_len: 6, time: 2 }));
        assert_eq!(kt1.cost.unwrap().ceil(), 7);
        assert_eq!(kt_complexity(&bs("1"), 0, &cfg()).unwrap().status, BoundStatus::LowerBoundOnly);

        let km0 = km_complexity(&bs("0"), 8, &cfg()).unwrap();
        assert_eq!((km0.length, km0.status), (Some(3), BoundStatus::Exact));
        let km1 = km_complexity(&bs("1"), 8, &cfg()).unwrap();
        assert_eq!((km1.length, km1.status), (Some(6), BoundStatus::Exact));
    }

    #[test]
    fn incomputable_set_examples() {
        let c1 = incomputable_prefix_set(1, 1, &cfg()).unwrap();
        assert!(c1.contains(&bs("1")));
        assert!(!c1.contains(&bs("0")));
        let c = incomputable_prefix_set(4, 4, &cfg()).unwrap();
        for a in &c {
            for b in &c {
                assert!(a == b || !a.is_prefix_of(b));
            }
        }
        // Everything of length <= 2 is printable straight-line within 4 steps.
        assert!(incomputable_prefix_set(4, 2, &cfg()).unwrap().is_empty());
    }

    #[test]
    fn jsonl_lines_have_expected_keys() {
        let ledger = enumerate_up_to_phase(3, Mode::Tree, &cfg()).unwrap();
        assert_eq!(ledger.to_jsonl(), "{\"program\":\"100\",\"output\":\"0\",\"time\":1,\"firstPhase\":3}\n");
    }
}
