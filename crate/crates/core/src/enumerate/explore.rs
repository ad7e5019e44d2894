//! Fork-on-fetch exploration of REF-1's execution tree.
//!
//! Every program shares its execution with all programs it is a prefix of,
//! so instead of re-running each program separately the explorer runs one
//! machine per consumed prefix and clones it eight ways whenever it needs a
//! new instruction. A branch that has consumed `c` bits may only produce
//! records with `|p| = c`, so the step limit that applies to it shrinks as it
//! reads more input.
//!
//! Branches are dropped when they halt, go invalid, print outside the output
//! filter, exceed their step limit, or provably cycle without reading or
//! printing (Brent's algorithm over back-jump configurations).

use std::sync::Arc;

use crate::vm::{Effect, MachineState, Op};
use crate::Workers;

use super::filter::OutputFilter;

/// Largest phase (and program length in bits) the explorer supports.
pub const MAX_SUPPORTED_PHASE: u32 = 60;

/// Step allowance as a function of consumed program bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Limit {
    /// FAST phase `k`: programs of `c ≤ k` bits get `2^(k-c)` steps.
    Phase(u32),
    /// A flat step budget for every program of at most `max_bits` bits.
    Flat { steps: u64, max_bits: u64 },
}

impl Limit {
    /// Steps allowed to a program of `bits` bits, if it is allowed at all.
    #[inline]
    pub(crate) fn steps_for(&self, bits: u64) -> Option<u64> {
        match *self {
            Limit::Phase(k) => (bits <= k as u64).then(|| 1u64 << (k as u64 - bits)),
            Limit::Flat { steps, max_bits } => (bits <= max_bits).then_some(steps),
        }
    }
}

#[derive(Clone, Debug, Default)]
struct CycleGuard {
    saved: Option<Arc<MachineState>>,
    power: u32,
    since: u32,
}

impl CycleGuard {
    /// Called at each backward jump. True once the configuration repeats.
    fn repeats(&mut self, state: &MachineState) -> bool {
        if let Some(saved) = &self.saved {
            if saved.same_configuration(state) {
                return true;
            }
        }
        self.since += 1;
        if self.since >= self.power.max(1) {
            self.saved = Some(Arc::new(state.clone()));
            self.power = self.power.max(1) * 2;
            self.since = 0;
        }
        false
    }
}

/// One live node of the execution tree.
#[derive(Clone, Debug)]
pub(crate) struct Branch {
    pub(crate) state: MachineState,
    /// Consumed program bits, most significant first.
    pub(crate) program: u64,
    /// Output-filter node for the current output.
    node: u32,
    guard: CycleGuard,
}

impl Branch {
    fn root() -> Self {
        Self { state: MachineState::new(), program: 0, node: 0, guard: CycleGuard::default() }
    }

    pub(crate) fn program_len(&self) -> u64 {
        self.state.consumed_bits()
    }
}

/// Receives computation events.
pub(crate) trait Sink: Send + Sized {
    /// `branch` just printed; its current output, consumption and step count
    /// form a record. `node` is the filter node of the new output.
    fn output(&mut self, branch: &Branch, node: u32);

    /// `branch` is still running when its step allowance ran out.
    fn stranded(&mut self, _branch: &Branch) {}

    /// Branches that would consume this many bits are not needed.
    fn prune_bits(&self) -> Option<u64> {
        None
    }

    fn absorb(&mut self, other: Self);
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExploreStats {
    /// Instructions executed (a bulk JZ skip counts once).
    pub instructions: u64,
    /// Branches created by forking.
    pub branches: u64,
    /// Branches dropped by cycle detection.
    pub cycles: u64,
}

impl ExploreStats {
    fn add(&mut self, other: &ExploreStats) {
        self.instructions += other.instructions;
        self.branches += other.branches;
        self.cycles += other.cycles;
    }
}

struct Ctx<'a> {
    limit: Limit,
    filter: OutputFilter<'a>,
    /// Output bits still needed from each filter node (family filters only).
    need: Vec<u32>,
}

impl Ctx<'_> {
    /// Can a branch at `node` that has used `steps` steps still produce a
    /// wanted record while consuming `bits` bits? Every output bit costs at
    /// least one step.
    #[inline]
    fn viable(&self, bits: u64, steps: u64, node: u32) -> bool {
        let need = self.need.get(node as usize).map_or(0, |&n| n as u64);
        match self.limit.steps_for(bits) {
            Some(limit) => need != u32::MAX as u64 && steps + need.max(1) <= limit,
            None => false,
        }
    }
}

/// Runs `branch` until it forks (children appended to `out`) or dies.
fn advance<S: Sink>(mut b: Branch, ctx: &Ctx<'_>, sink: &mut S, out: &mut Vec<Branch>, stats: &mut ExploreStats) {
    loop {
        let consumed = b.state.consumed_bits();
        let steps = b.state.step_count();
        if b.state.needs_fetch() {
            let bits = consumed + 3;
            if !ctx.viable(bits, steps, b.node) || sink.prune_bits().is_some_and(|p| bits >= p) {
                return;
            }
            let scanning = b.state.is_scanning();
            let loops_open = b.state.has_open_loop();
            for op in Op::ALL.iter().rev().copied() {
                // Outside a scan these die on their first step.
                if !scanning && (op == Op::Halt || (op == Op::Jnz && !loops_open)) {
                    continue;
                }
                let mut child = b.clone();
                child.state.load(op);
                child.program = (b.program << 3) | op.code() as u64;
                out.push(child);
                stats.branches += 1;
            }
            return;
        }
        if !ctx.viable(consumed, steps, b.node) {
            if ctx.limit.steps_for(consumed).is_some_and(|limit| steps >= limit) {
                sink.stranded(&b);
            }
            return;
        }
        stats.instructions += 1;
        match b.state.execute() {
            Effect::None => {}
            Effect::Output(bit) => {
                let len = b.state.output().len();
                match ctx.filter.advance(b.node, len - 1, bit) {
                    None => return,
                    Some(node) => {
                        b.node = node;
                        sink.output(&b, node);
                        if ctx.filter.exhausted(node, len) {
                            return;
                        }
                    }
                }
            }
            Effect::Looped => {
                if b.guard.repeats(&b.state) {
                    stats.cycles += 1;
                    return;
                }
            }
            Effect::Halted | Effect::Invalid => return,
        }
    }
}

fn drain<S: Sink>(start: Vec<Branch>, ctx: &Ctx<'_>, sink: &mut S, stats: &mut ExploreStats) {
    let mut stack = start;
    while let Some(b) = stack.pop() {
        advance(b, ctx, sink, &mut stack, stats);
    }
}

/// Fork depth used to carve the tree into independent subtrees.
const SPLIT_ROUNDS: usize = 2;

/// Explores the whole tree under `limit`, merging per-subtree sinks.
pub(crate) fn explore<S, F>(limit: Limit, filter: OutputFilter<'_>, workers: Workers, make_sink: F) -> (S, ExploreStats)
where
    S: Sink,
    F: Fn() -> S + Sync,
{
    let need = match filter {
        OutputFilter::Family(trie) => trie.bits_needed(),
        _ => Vec::new(),
    };
    let ctx = Ctx { limit, filter, need };
    let mut sink = make_sink();
    let mut stats = ExploreStats::default();
    if workers.is_sequential() {
        drain(vec![Branch::root()], &ctx, &mut sink, &mut stats);
        return (sink, stats);
    }
    let mut frontier = vec![Branch::root()];
    for _ in 0..SPLIT_ROUNDS {
        let mut next = Vec::new();
        for b in frontier {
            advance(b, &ctx, &mut sink, &mut next, &mut stats);
        }
        frontier = next;
    }
    let parts = crate::par::map_ordered(workers, frontier, |b| {
        let mut local = make_sink();
        let mut local_stats = ExploreStats::default();
        drain(vec![b], &ctx, &mut local, &mut local_stats);
        (local, local_stats)
    });
    for (part, part_stats) in parts {
        sink.absorb(part);
        stats.add(&part_stats);
    }
    (sink, stats)
}
