//! REF-1, the fixed reference monotone machine.
//!
//! REF-1 reads its program from a read-once input tape in 3-bit opcodes,
//! fetched on demand into an instruction buffer so that loops can jump back
//! over program text that has already been consumed. Output is append-only.
//!
//! | bits | op    | effect                                                     |
//! |------|-------|------------------------------------------------------------|
//! | 000  | INC   | cell += 1 (mod 256)                                        |
//! | 001  | DEC   | cell -= 1 (mod 256)                                        |
//! | 010  | LEFT  | move the data pointer left                                 |
//! | 011  | RIGHT | move the data pointer right                                |
//! | 100  | OUT   | append the low bit of the cell to the output               |
//! | 101  | JZ    | if cell = 0, skip past the matching JNZ                    |
//! | 110  | JNZ   | if cell ≠ 0, jump to just after the matching JZ            |
//! | 111  | HALT  | stop                                                       |
//!
//! Every executed instruction costs one step. A JZ that skips forward costs
//! one further step per skipped instruction (the matching JNZ included),
//! fetching from the input as needed. A JNZ without a matching JZ in the
//! buffer makes the program invalid.
//!
//! A program `p` computes `x` (`p → x`) when the first step at which the
//! output extends `x` happens with exactly the bits of `p` consumed; `t(p, x)`
//! is the index of that step.

use thiserror::Error;

use crate::bits::BitString;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Op {
    Inc = 0,
    Dec = 1,
    Left = 2,
    Right = 3,
    Out = 4,
    Jz = 5,
    Jnz = 6,
    Halt = 7,
}

impl Op {
    pub const ALL: [Op; 8] = [Op::Inc, Op::Dec, Op::Left, Op::Right, Op::Out, Op::Jz, Op::Jnz, Op::Halt];

    /// Decodes an opcode whose first-read bit is the most significant.
    pub fn from_code(code: u8) -> Op {
        Op::ALL[(code & 7) as usize]
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_bits(b0: bool, b1: bool, b2: bool) -> Op {
        Op::from_code(((b0 as u8) << 2) | ((b1 as u8) << 1) | b2 as u8)
    }

    pub fn bits(self) -> [bool; 3] {
        let c = self.code();
        [c & 4 != 0, c & 2 != 0, c & 1 != 0]
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            Op::Inc => "INC",
            Op::Dec => "DEC",
            Op::Left => "LEFT",
            Op::Right => "RIGHT",
            Op::Out => "OUT",
            Op::Jz => "JZ",
            Op::Jnz => "JNZ",
            Op::Halt => "HALT",
        }
    }
}

/// Assembles opcodes into program bits.
pub fn assemble(ops: &[Op]) -> BitString {
    ops.iter().flat_map(|op| op.bits()).collect()
}

/// Two-sided tape of wrapping 8-bit cells, all initially zero.
#[derive(Clone, Debug)]
pub struct Tape {
    cells: Vec<u8>,
    /// Absolute position of `cells[0]`.
    base: i64,
    /// Index of the data pointer within `cells`.
    head: usize,
}

impl Default for Tape {
    fn default() -> Self {
        Self { cells: vec![0], base: 0, head: 0 }
    }
}

impl Tape {
    #[inline]
    pub fn read(&self) -> u8 {
        self.cells[self.head]
    }

    #[inline]
    fn write(&mut self, value: u8) {
        self.cells[self.head] = value;
    }

    #[inline]
    fn left(&mut self) {
        if self.head == 0 {
            const GROW: usize = 8;
            let mut grown = vec![0; GROW];
            grown.extend_from_slice(&self.cells);
            self.cells = grown;
            self.base -= GROW as i64;
            self.head = GROW;
        }
        self.head -= 1;
    }

    #[inline]
    fn right(&mut self) {
        self.head += 1;
        if self.head == self.cells.len() {
            self.cells.push(0);
        }
    }

    pub fn data_pointer(&self) -> i64 {
        self.base + self.head as i64
    }

    /// Value of the cell at absolute position `pos`.
    pub fn cell(&self, pos: i64) -> u8 {
        let idx = pos - self.base;
        if idx < 0 {
            return 0;
        }
        self.cells.get(idx as usize).copied().unwrap_or(0)
    }

    /// The nonzero region as (absolute start, cells).
    fn trimmed(&self) -> (i64, &[u8]) {
        let Some(first) = self.cells.iter().position(|&c| c != 0) else {
            return (0, &[]);
        };
        let last = self.cells.iter().rposition(|&c| c != 0).unwrap_or(first);
        (self.base + first as i64, &self.cells[first..=last])
    }

    /// Same cell contents and data pointer, regardless of allocation.
    pub fn same_configuration(&self, other: &Tape) -> bool {
        self.data_pointer() == other.data_pointer() && self.trimmed() == other.trimmed()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Slot {
    op: Op,
    /// Index of the matching JZ/JNZ once both are in the buffer.
    partner: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Running,
    Halted,
    Invalid,
}

/// Emitted whenever OUT appends a bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputEvent {
    pub consumed_bits: u64,
    pub output: BitString,
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum StepError {
    #[error("input exhausted while fetching an instruction")]
    NeedsMoreInput,
    #[error("JNZ executed without a matching JZ")]
    InvalidProgram,
    #[error("machine is not running")]
    NotRunning,
}

/// Supplies program bits on demand.
pub trait InputOracle {
    fn next_bit(&mut self) -> Option<bool>;
}

/// Oracle over a fixed finite program.
pub struct ProgramInput<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl<'a> ProgramInput<'a> {
    pub fn new(program: &'a BitString) -> Self {
        Self { bits: program.bits(), pos: 0 }
    }
}

impl InputOracle for ProgramInput<'_> {
    fn next_bit(&mut self) -> Option<bool> {
        let bit = self.bits.get(self.pos).copied();
        self.pos += bit.is_some() as usize;
        bit
    }
}

/// What a single executed instruction did, for the enumerator's hot loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Effect {
    None,
    Output(bool),
    /// A JNZ jumped backwards.
    Looped,
    Halted,
    Invalid,
}

/// Complete, self-contained state of one REF-1 run.
#[derive(Clone, Debug)]
pub struct MachineState {
    tape: Tape,
    program: Vec<Slot>,
    open_loops: Vec<u32>,
    ip: usize,
    /// Nesting depth of an in-progress JZ forward scan (0 when not scanning).
    scan_depth: u32,
    consumed_bits: u64,
    output: BitString,
    steps: u64,
    status: Status,
}

impl Default for MachineState {
    fn default() -> Self {
        Self::new()
    }
}

impl MachineState {
    pub fn new() -> Self {
        Self {
            tape: Tape::default(),
            program: Vec::new(),
            open_loops: Vec::new(),
            ip: 0,
            scan_depth: 0,
            consumed_bits: 0,
            output: BitString::new(),
            steps: 0,
            status: Status::Running,
        }
    }

    pub fn tape(&self) -> &Tape {
        &self.tape
    }
    pub fn data_pointer(&self) -> i64 {
        self.tape.data_pointer()
    }
    pub fn instruction_pointer(&self) -> usize {
        self.ip
    }
    pub fn program_buffer(&self) -> Vec<Op> {
        self.program.iter().map(|s| s.op).collect()
    }
    pub fn consumed_bits(&self) -> u64 {
        self.consumed_bits
    }
    pub fn output(&self) -> &BitString {
        &self.output
    }
    pub fn step_count(&self) -> u64 {
        self.steps
    }
    pub fn status(&self) -> Status {
        self.status
    }
    pub fn is_halted(&self) -> bool {
        self.status == Status::Halted
    }
    pub fn is_running(&self) -> bool {
        self.status == Status::Running
    }

    /// Executes exactly one instruction, fetching three bits from `oracle`
    /// first if the instruction pointer is at the end of the buffer.
    ///
    /// If the oracle runs dry mid-fetch the partial bits are dropped and the
    /// state is left untouched.
    pub fn step<O: InputOracle + ?Sized>(&mut self, oracle: &mut O) -> Result<Option<OutputEvent>, StepError> {
        if self.status != Status::Running {
            return Err(StepError::NotRunning);
        }
        if self.needs_fetch() {
            let mut code = 0u8;
            for _ in 0..3 {
                let bit = oracle.next_bit().ok_or(StepError::NeedsMoreInput)?;
                code = (code << 1) | bit as u8;
            }
            self.load(Op::from_code(code));
        }
        match self.execute() {
            Effect::Output(_) => Ok(Some(OutputEvent { consumed_bits: self.consumed_bits, output: self.output.clone() })),
            Effect::Invalid => Err(StepError::InvalidProgram),
            _ => Ok(None),
        }
    }

    #[inline]
    pub(crate) fn needs_fetch(&self) -> bool {
        self.ip == self.program.len()
    }

    /// Appends a freshly read instruction to the buffer.
    #[inline]
    pub(crate) fn load(&mut self, op: Op) {
        let idx = self.program.len() as u32;
        let mut partner = None;
        match op {
            Op::Jz => self.open_loops.push(idx),
            Op::Jnz => {
                partner = self.open_loops.pop();
                if let Some(open) = partner {
                    self.program[open as usize].partner = Some(idx);
                }
            }
            _ => {}
        }
        self.program.push(Slot { op, partner });
        self.consumed_bits += 3;
    }

    /// Executes the buffered instruction at the instruction pointer.
    #[inline]
    pub(crate) fn execute(&mut self) -> Effect {
        let here = self.ip;
        let slot = self.program[here];
        self.steps += 1;
        self.ip += 1;
        if self.scan_depth > 0 {
            match slot.op {
                Op::Jz => self.scan_depth += 1,
                Op::Jnz => self.scan_depth -= 1,
                _ => {}
            }
            return Effect::None;
        }
        match slot.op {
            Op::Inc => self.tape.write(self.tape.read().wrapping_add(1)),
            Op::Dec => self.tape.write(self.tape.read().wrapping_sub(1)),
            Op::Left => self.tape.left(),
            Op::Right => self.tape.right(),
            Op::Out => {
                let bit = self.tape.read() & 1 == 1;
                self.output.push(bit);
                return Effect::Output(bit);
            }
            Op::Jz => {
                if self.tape.read() == 0 {
                    match slot.partner {
                        // Body already buffered: charge every skipped
                        // instruction at once.
                        Some(jnz) => {
                            self.steps += jnz as u64 - here as u64;
                            self.ip = jnz as usize + 1;
                        }
                        None => self.scan_depth = 1,
                    }
                }
            }
            Op::Jnz => match slot.partner {
                None => {
                    self.status = Status::Invalid;
                    return Effect::Invalid;
                }
                Some(jz) => {
                    if self.tape.read() != 0 {
                        self.ip = jz as usize + 1;
                        return Effect::Looped;
                    }
                }
            },
            Op::Halt => {
                self.status = Status::Halted;
                return Effect::Halted;
            }
        }
        Effect::None
    }

    #[inline]
    pub(crate) fn is_scanning(&self) -> bool {
        self.scan_depth > 0
    }

    #[inline]
    pub(crate) fn has_open_loop(&self) -> bool {
        !self.open_loops.is_empty()
    }

    /// True when both states will behave identically on identical future
    /// input. Step counts are ignored.
    pub(crate) fn same_configuration(&self, other: &MachineState) -> bool {
        self.ip == other.ip
            && self.scan_depth == other.scan_depth
            && self.consumed_bits == other.consumed_bits
            && self.output.len() == other.output.len()
            && self.status == other.status
            && self.tape.same_configuration(&other.tape)
    }
}

/// Why a program fails to compute a given string.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Refusal {
    /// The output reached the target length before all of `p` was read.
    PrintedEarly,
    /// The output disagrees with the target.
    Mismatch,
    Halted,
    /// The machine asked for input beyond the end of `p`.
    NeedsMoreInput,
    InvalidProgram,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComputationResult {
    /// `p → x` with `t(p, x) = steps`.
    Computes {
        steps: u64,
    },
    DoesNotCompute(Refusal),
    /// Undecided within the budget; treat as unknown.
    BudgetExhausted,
}

impl ComputationResult {
    pub fn steps(&self) -> Option<u64> {
        match self {
            ComputationResult::Computes { steps } => Some(*steps),
            _ => None,
        }
    }

    pub fn is_computes(&self) -> bool {
        self.steps().is_some()
    }
}

/// Decides `p → x` within `budget` steps.
///
/// The empty target is never computed by a program; priors treat it by
/// convention.
pub fn computes(program: &BitString, target: &BitString, budget: u64) -> ComputationResult {
    if target.is_empty() {
        return ComputationResult::DoesNotCompute(Refusal::Mismatch);
    }
    let mut state = MachineState::new();
    let mut input = ProgramInput::new(program);
    loop {
        if state.steps >= budget {
            return ComputationResult::BudgetExhausted;
        }
        match state.step(&mut input) {
            Err(StepError::NeedsMoreInput) => return ComputationResult::DoesNotCompute(Refusal::NeedsMoreInput),
            Err(StepError::InvalidProgram) => return ComputationResult::DoesNotCompute(Refusal::InvalidProgram),
            Err(StepError::NotRunning) => unreachable!("loop exits once the machine stops"),
            Ok(Some(event)) => {
                let out = &event.output;
                let n = out.len();
                if out.get(n - 1) != target.get(n - 1) {
                    return ComputationResult::DoesNotCompute(Refusal::Mismatch);
                }
                if n == target.len() {
                    if event.consumed_bits != program.len() as u64 {
                        return ComputationResult::DoesNotCompute(Refusal::PrintedEarly);
                    }
                    // The budget check above guarantees steps <= budget.
                    return ComputationResult::Computes { steps: state.steps };
                }
            }
            Ok(None) => {
                if state.is_halted() {
                    return ComputationResult::DoesNotCompute(Refusal::Halted);
                }
            }
        }
    }
}

/// How a bounded free run of a program ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunEnd {
    OutputLimit,
    StepLimit,
    NeedsMoreInput,
    Halted,
    InvalidProgram,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub output: BitString,
    pub steps: u64,
    pub consumed_bits: u64,
    pub end: RunEnd,
}

/// Runs `program` until it has printed `max_output` bits, used `max_steps`
/// steps, or stopped.
pub fn run_program(program: &BitString, max_output: usize, max_steps: u64) -> RunSummary {
    let mut state = MachineState::new();
    let mut input = ProgramInput::new(program);
    let end = loop {
        if state.output.len() >= max_output {
            break RunEnd::OutputLimit;
        }
        if state.steps >= max_steps {
            break RunEnd::StepLimit;
        }
        match state.step(&mut input) {
            Err(StepError::NeedsMoreInput) => break RunEnd::NeedsMoreInput,
            Err(StepError::InvalidProgram) => break RunEnd::InvalidProgram,
            Err(StepError::NotRunning) => break RunEnd::Halted,
            Ok(_) if state.is_halted() => break RunEnd::Halted,
            Ok(_) => {}
        }
    };
    RunSummary { output: state.output, steps: state.steps, consumed_bits: state.consumed_bits, end }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs;
    use proptest::prelude::*;

    fn result(p: &str, x: &str, budget: u64) -> ComputationResult {
        computes(&bs(p), &bs(x), budget)
    }

    #[test]
    fn single_out_step() {
        let mut state = MachineState::new();
        let program = bs("100");
        let mut input = ProgramInput::new(&program);
        let event = state.step(&mut input).unwrap();
        assert_eq!(event, Some(OutputEvent { consumed_bits: 3, output: bs("0") }));
        assert_eq!(state.step_count(), 1);
        assert_eq!(state.consumed_bits(), 3);
    }

    #[test]
    fn halt_step() {
        let mut state = MachineState::new();
        let program = bs("111");
        let mut input = ProgramInput::new(&program);
        assert_eq!(state.step(&mut input), Ok(None));
        assert!(state.is_halted());
        assert_eq!(state.step(&mut input), Err(StepError::NotRunning));
    }

    #[test]
    fn inc_then_out() {
        let mut state = MachineState::new();
        let program = bs("000100");
        let mut input = ProgramInput::new(&program);
        assert_eq!(state.step(&mut input), Ok(None));
        assert_eq!(state.tape().read(), 1);
        let event = state.step(&mut input).unwrap().unwrap();
        assert_eq!(event, OutputEvent { consumed_bits: 6, output: bs("1") });
    }

    #[test]
    fn exhausted_mid_fetch_leaves_state() {
        let mut state = MachineState::new();
        let program = bs("10");
        let mut input = ProgramInput::new(&program);
        assert_eq!(state.step(&mut input), Err(StepError::NeedsMoreInput));
        assert_eq!(state.consumed_bits(), 0);
        assert_eq!(state.step_count(), 0);
    }

    #[test]
    fn computes_examples() {
        assert_eq!(result("100", "0", 10), ComputationResult::Computes { steps: 1 });
        assert_eq!(result("100111", "0", 10), ComputationResult::DoesNotCompute(Refusal::PrintedEarly));
        assert_eq!(result("000100", "1", 10), ComputationResult::Computes { steps: 2 });
        assert_eq!(result("100", "1", 10), ComputationResult::DoesNotCompute(Refusal::Mismatch));
        assert_eq!(result("000100", "1", 1), ComputationResult::BudgetExhausted);
        assert_eq!(result("111", "0", 10), ComputationResult::DoesNotCompute(Refusal::Halted));
        assert_eq!(result("000", "0", 10), ComputationResult::DoesNotCompute(Refusal::NeedsMoreInput));
        assert_eq!(result("110", "0", 10), ComputationResult::DoesNotCompute(Refusal::InvalidProgram));
    }

    #[test]
    fn loops_print_from_buffered_text() {
        // INC JZ OUT JNZ: prints 1 forever without reading past 12 bits.
        let p = assemble(&[Op::Inc, Op::Jz, Op::Out, Op::Jnz]);
        assert_eq!(computes(&p, &bs("11"), 100), ComputationResult::Computes { steps: 5 });
        assert_eq!(computes(&p, &bs("1111"), 100), ComputationResult::Computes { steps: 9 });
        assert_eq!(computes(&p, &bs("1"), 100), ComputationResult::DoesNotCompute(Refusal::PrintedEarly));
    }

    #[test]
    fn jz_skip_costs_a_step_per_skipped_instruction() {
        // JZ INC INC JNZ OUT: cell is zero so the three-instruction body
        // (INC INC JNZ) is skipped during fetch.
        let p = assemble(&[Op::Jz, Op::Inc, Op::Inc, Op::Jnz, Op::Out]);
        assert_eq!(computes(&p, &bs("0"), 100), ComputationResult::Computes { steps: 5 });
        // INC INC JZ [RIGHT JZ [INC] JNZ LEFT DEC] JNZ OUT: the inner JZ is
        // scanned on the first pass and skipped in bulk on the second.
        let p = assemble(&[Op::Inc, Op::Inc, Op::Jz, Op::Right, Op::Jz, Op::Inc, Op::Jnz, Op::Left, Op::Dec, Op::Jnz, Op::Out]);
        assert_eq!(computes(&p, &bs("0"), 100), ComputationResult::Computes { steps: 18 });
    }

    #[test]
    fn wrapping_cells() {
        let p = assemble(&[Op::Dec, Op::Out]);
        assert_eq!(computes(&p, &bs("1"), 10), ComputationResult::Computes { steps: 2 });
        let p = assemble(&[Op::Left, Op::Left, Op::Inc, Op::Out]);
        assert_eq!(computes(&p, &bs("1"), 10), ComputationResult::Computes { steps: 4 });
    }

    #[test]
    fn run_program_alternating_generator() {
        let p = assemble(&[Op::Out, Op::Inc, Op::Jz, Op::Out, Op::Inc, Op::Jnz]);
        let run = run_program(&p, 8, 1000);
        assert_eq!(run.output, bs("01010101"));
        assert_eq!(run.end, RunEnd::OutputLimit);
        assert_eq!(run.consumed_bits, 18);
    }

    fn arb_program() -> impl Strategy<Value = BitString> {
        proptest::collection::vec(0u8..8, 0..6).prop_map(|ops| assemble(&ops.into_iter().map(Op::from_code).collect::<Vec<_>>()))
    }

    proptest! {
        #[test]
        fn deterministic_and_monotone(p in arb_program(), x in proptest::collection::vec(any::<bool>(), 1..4), b in 1u64..40) {
            let x = BitString::from_bits(x);
            let r = computes(&p, &x, b);
            prop_assert_eq!(r, computes(&p, &x, b));
            if let ComputationResult::Computes { steps } = r {
                prop_assert!(steps >= 1 && steps <= b);
                prop_assert_eq!(computes(&p, &x, b + 17), r);
            }
        }

        #[test]
        fn state_invariants(p in arb_program()) {
            let mut state = MachineState::new();
            let mut input = ProgramInput::new(&p);
            let mut fetched = 0u64;
            let mut last_out = 0;
            for _ in 0..64 {
                let before_len = state.program_buffer().len();
                let before_steps = state.step_count();
                match state.step(&mut input) {
                    Ok(_) => {}
                    Err(_) => break,
                }
                fetched += (state.program_buffer().len() - before_len) as u64;
                prop_assert_eq!(state.consumed_bits(), 3 * fetched);
                prop_assert!(state.step_count() > before_steps);
                prop_assert!(state.output().len() >= last_out);
                last_out = state.output().len();
                if !state.is_running() { break; }
            }
        }
    }
}
