//! Certified approximations of `S_Kt` and `S_Fast`.
//!
//! Every value is an exact rational. An estimate is an interval
//! `[lower, lower + tail]` that provably contains the prior; it is certified
//! once `tail ≤ ε · lower`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::enumerate::{tally_family, EnumerateConfig, EnumerateError, OutputTrie, RecordSource, TallyEntry};
use crate::rational::{fraction, inv_pow2, Interval, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    Kt,
    Fast,
}

impl FromStr for PriorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "kt" => Ok(PriorKind::Kt),
            "fast" => Ok(PriorKind::Fast),
            other => Err(format!("unknown prior kind `{other}` (expected kt or fast)")),
        }
    }
}

impl fmt::Display for PriorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PriorKind::Kt => "kt",
            PriorKind::Fast => "fast",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PriorError {
    #[error(transparent)]
    Enumerate(#[from] EnumerateError),
    #[error("the prefix has no discovered computations after {phases} phases; cannot bound the conditional")]
    InsufficientPhases { phases: u32 },
    #[error("epsilon must satisfy 0 < epsilon < 1")]
    BadEpsilon,
    #[error("phase {requested} is beyond the record source (phase {available})")]
    SourceTooShallow { requested: u32, available: u32 },
    #[error("the record source does not cover `{0}`")]
    NotCovered(BitString),
}

/// Upper bound on the prior mass of computations not yet found after `k`
/// phases.
pub fn tail(kind: PriorKind, k: u32) -> Rational {
    match kind {
        PriorKind::Fast => inv_pow2(k),
        PriorKind::Kt => inv_pow2(k) + Rational::new(BigInt::one(), BigInt::from(k + 1)),
    }
}

/// `Σ_{i=from}^{to} 2^-i`, zero when `from > to`.
fn geometric(from: u32, to: u32) -> Rational {
    if from > to {
        return Rational::zero();
    }
    inv_pow2(from - 1) - inv_pow2(to)
}

fn weighted(count: u64, value: Rational) -> Rational {
    value * Rational::from_integer(count.into())
}

/// The defining partial sum after `k` phases.
///
/// Fast: `Σ_{i≤k} 2^-i Σ_{p →_i x} 2^-|p|`. Kt: `Σ 2^-|p| / t` over
/// computations with Kt-cost at most `k`.
pub fn lower_from_entries(kind: PriorKind, entries: &[TallyEntry], k: u32) -> Rational {
    let mut sum = Rational::zero();
    for e in entries.iter().filter(|e| e.first_phase() <= k) {
        let term = match kind {
            PriorKind::Fast => inv_pow2(e.program_len) * geometric(e.first_phase(), k),
            PriorKind::Kt => Rational::new(BigInt::one(), BigInt::from(e.time) << e.program_len),
        };
        sum += weighted(e.count, term);
    }
    sum
}

/// The alternate form of each prior, over the same computations as
/// [`lower_from_entries`].
///
/// Fast: the cost form `Σ 2^-2|p| / t`. Kt: the count form
/// `Σ_{i≤k} 2^-i #{p →_i x}`.
pub fn alternate_form_from_entries(kind: PriorKind, entries: &[TallyEntry], k: u32) -> Rational {
    let mut sum = Rational::zero();
    for e in entries.iter().filter(|e| e.first_phase() <= k) {
        let term = match kind {
            PriorKind::Fast => Rational::new(BigInt::one(), BigInt::from(e.time) << (2 * e.program_len)),
            PriorKind::Kt => geometric(e.first_phase(), k),
        };
        sum += weighted(e.count, term);
    }
    sum
}

/// `Σ 2^-|p|` over the computations of phase at most `k`.
pub fn kraft_sum(entries: &[TallyEntry], k: u32) -> Rational {
    entries.iter().filter(|e| e.first_phase() <= k).map(|e| weighted(e.count, inv_pow2(e.program_len))).sum()
}

/// A certified enclosure `[lower, lower + tail]` of `S(x)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorEstimate {
    pub kind: PriorKind,
    #[serde(rename = "x")]
    pub target: BitString,
    #[serde(with = "fraction")]
    pub lower: Rational,
    #[serde(with = "fraction")]
    pub tail: Rational,
    #[serde(rename = "k")]
    pub phases_used: u32,
    #[serde(with = "fraction")]
    pub epsilon: Rational,
    pub certified: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostic: Option<String>,
}

impl PriorEstimate {
    pub fn upper(&self) -> Rational {
        &self.lower + &self.tail
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.lower.clone(), self.upper())
    }

    fn empty_string(kind: PriorKind, epsilon: &Rational) -> Self {
        Self {
            kind,
            target: BitString::new(),
            lower: Rational::one(),
            tail: Rational::zero(),
            phases_used: 0,
            epsilon: epsilon.clone(),
            certified: true,
            diagnostic: None,
        }
    }
}

fn is_certified(lower: &Rational, tail: &Rational, epsilon: &Rational) -> bool {
    !lower.is_zero() && tail <= &(epsilon * lower)
}

fn check_epsilon(epsilon: &Rational) -> Result<(), PriorError> {
    if epsilon <= &Rational::zero() || epsilon >= &Rational::one() {
        return Err(PriorError::BadEpsilon);
    }
    Ok(())
}

/// The estimate after exactly `k` phases.
pub fn estimate_at(
    kind: PriorKind,
    x: &BitString,
    epsilon: &Rational,
    source: &dyn RecordSource,
    k: u32,
) -> Result<PriorEstimate, PriorError> {
    if x.is_empty() {
        return Ok(PriorEstimate::empty_string(kind, epsilon));
    }
    if k > source.max_phase() {
        return Err(PriorError::SourceTooShallow { requested: k, available: source.max_phase() });
    }
    let entries = source.entries(x).ok_or_else(|| PriorError::NotCovered(x.clone()))?;
    Ok(build(kind, x, epsilon, &entries, k))
}

fn build(kind: PriorKind, x: &BitString, epsilon: &Rational, entries: &[TallyEntry], k: u32) -> PriorEstimate {
    let lower = lower_from_entries(kind, entries, k);
    let tail = tail(kind, k);
    let certified = is_certified(&lower, &tail, epsilon);
    PriorEstimate { kind, target: x.clone(), lower, tail, phases_used: k, epsilon: epsilon.clone(), certified, diagnostic: None }
}

/// The estimate at the first phase `k ≤ source.max_phase()` that certifies,
/// or at the source's deepest phase (uncertified) if none does.
pub fn estimate_from_source(
    kind: PriorKind,
    x: &BitString,
    epsilon: &Rational,
    source: &dyn RecordSource,
) -> Result<PriorEstimate, PriorError> {
    check_epsilon(epsilon)?;
    if x.is_empty() {
        return Ok(PriorEstimate::empty_string(kind, epsilon));
    }
    let entries = source.entries(x).ok_or_else(|| PriorError::NotCovered(x.clone()))?;
    let max = source.max_phase();
    for k in 1..=max {
        let est = build(kind, x, epsilon, &entries, k);
        if est.certified {
            return Ok(est);
        }
    }
    let mut est = build(kind, x, epsilon, &entries, max);
    est.diagnostic = Some(format!("phase cap {max} reached before tail <= epsilon * lower"));
    Ok(est)
}

/// Enclosure of `S(bit | prefix)` from estimates of the joint and the prefix.
pub fn conditional_from(joint: &PriorEstimate, prefix: &PriorEstimate) -> Result<Interval, PriorError> {
    if prefix.lower.is_zero() {
        return Err(PriorError::InsufficientPhases { phases: prefix.phases_used });
    }
    let low = &joint.lower / prefix.upper();
    let high = joint.upper() / &prefix.lower;
    Ok(Interval::new(low, high))
}

/// Runs enumerations on demand with iterative deepening of the phase.
#[derive(Clone, Debug)]
pub struct PriorEngine {
    pub config: EnumerateConfig,
    pub k_cap: u32,
    /// First phase tried.
    pub k_start: u32,
    /// Phases added per deepening round.
    pub k_step: u32,
}

/// Default phase cap for single estimates.
pub const DEFAULT_K_CAP: u32 = 20;

impl Default for PriorEngine {
    fn default() -> Self {
        Self { config: EnumerateConfig::default(), k_cap: DEFAULT_K_CAP, k_start: 8, k_step: 4 }
    }
}

impl PriorEngine {
    pub fn new(config: EnumerateConfig, k_cap: u32) -> Self {
        Self { config, k_cap, ..Self::default() }
    }

    /// Certified estimate using the fewest phases that certify, up to
    /// `k_cap`.
    ///
    /// The result does not depend on the deepening schedule: each round
    /// checks every phase up to its depth.
    pub fn estimate(&self, kind: PriorKind, x: &BitString, epsilon: &Rational) -> Result<PriorEstimate, PriorError> {
        check_epsilon(epsilon)?;
        if x.is_empty() {
            return Ok(PriorEstimate::empty_string(kind, epsilon));
        }
        let cap = self.k_cap.max(1);
        let mut k = self.k_start.clamp(1, cap);
        loop {
            let tally = tally_family(OutputTrie::from_strings([x]), k, &self.config)?;
            let est = estimate_from_source(kind, x, epsilon, &tally)?;
            if est.certified || k >= cap {
                return Ok(est);
            }
            k = (k + self.k_step.max(1)).min(cap);
        }
    }

    /// The estimate after exactly `k` phases.
    pub fn estimate_at(&self, kind: PriorKind, x: &BitString, epsilon: &Rational, k: u32) -> Result<PriorEstimate, PriorError> {
        if x.is_empty() {
            return Ok(PriorEstimate::empty_string(kind, epsilon));
        }
        let tally = tally_family(OutputTrie::from_strings([x]), k, &self.config)?;
        estimate_at(kind, x, epsilon, &tally, k)
    }

    /// Certified enclosure of `S(bit | prefix)`.
    pub fn conditional(
        &self,
        kind: PriorKind,
        prefix: &BitString,
        bit: bool,
        epsilon: &Rational,
    ) -> Result<Interval, PriorError> {
        let joint = self.estimate(kind, &prefix.with(bit), epsilon)?;
        let pre = self.estimate(kind, prefix, epsilon)?;
        conditional_from(&joint, &pre)
    }

    /// `alternateFormSum` for `x` at phase `k`.
    pub fn alternate_form_sum(&self, kind: PriorKind, x: &BitString, k: u32) -> Result<Rational, PriorError> {
        let tally = tally_family(OutputTrie::from_strings([x]), k, &self.config)?;
        Ok(alternate_form_from_entries(kind, &tally.entries(x).unwrap_or_default(), k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs;
    use crate::rational::rat;
    use crate::Workers;

    fn entry(program_len: u32, time: u64) -> TallyEntry {
        TallyEntry { program_len, time, count: 1 }
    }

    fn engine() -> PriorEngine {
        PriorEngine::new(EnumerateConfig::default().with_workers(Workers::Sequential), 20)
    }

    #[test]
    fn single_record_forms() {
        let e = [entry(3, 1)];
        assert_eq!(lower_from_entries(PriorKind::Fast, &e, 5), rat(7, 256));
        assert_eq!(alternate_form_from_entries(PriorKind::Fast, &e, 5), rat(1, 64));
        assert_eq!(alternate_form_from_entries(PriorKind::Kt, &e, 5), rat(7, 32));
        assert_eq!(lower_from_entries(PriorKind::Kt, &e, 5), rat(1, 8));
        assert_eq!(alternate_form_from_entries(PriorKind::Kt, &[], 5), Rational::zero());
    }

    #[test]
    fn tails() {
        assert_eq!(tail(PriorKind::Fast, 4), rat(1, 16));
        assert_eq!(tail(PriorKind::Kt, 3), rat(1, 8) + rat(1, 4));
    }

    #[test]
    fn stopping_arithmetic() {
        // lower = 1/8, eps = 1/2: the Fast tail 2^-k must be <= 1/16.
        let lower = rat(1, 8);
        let eps = rat(1, 2);
        assert!(!is_certified(&lower, &tail(PriorKind::Fast, 3), &eps));
        assert!(is_certified(&lower, &tail(PriorKind::Fast, 4), &eps));
    }

    #[test]
    fn empty_string_convention() {
        let est = engine().estimate(PriorKind::Kt, &BitString::new(), &rat(1, 2)).unwrap();
        assert_eq!(est.lower, Rational::one());
        assert_eq!(est.tail, Rational::zero());
        assert!(est.certified);
    }

    #[test]
    fn fast_zero_certifies() {
        let est = engine().estimate(PriorKind::Fast, &bs("0"), &rat(1, 2)).unwrap();
        assert!(est.certified);
        assert!(est.tail <= &est.epsilon * &est.lower);
        assert!(est.lower >= rat(1, 8) * geometric(3, est.phases_used));
    }

    #[test]
    fn kt_zero_contains_the_shortest_program() {
        let est = engine().estimate(PriorKind::Kt, &bs("0"), &rat(1, 2)).unwrap();
        assert!(est.lower >= rat(1, 8));
        assert!(est.certified, "{est:?}");
    }

    #[test]
    fn conditional_from_empty_prefix_is_the_joint() {
        let e = engine();
        let eps = rat(1, 2);
        let joint = e.estimate(PriorKind::Fast, &bs("0"), &eps).unwrap();
        let cond = e.conditional(PriorKind::Fast, &BitString::new(), false, &eps).unwrap();
        assert_eq!(cond, joint.interval());
    }

    #[test]
    fn zero_prefix_lower_is_an_error() {
        let joint = build(PriorKind::Fast, &bs("00"), &rat(1, 2), &[], 3);
        let prefix = build(PriorKind::Fast, &bs("0"), &rat(1, 2), &[], 2);
        assert!(matches!(conditional_from(&joint, &prefix), Err(PriorError::InsufficientPhases { .. })));
    }

    #[test]
    fn epsilon_is_validated() {
        assert_eq!(engine().estimate(PriorKind::Fast, &bs("0"), &rat(1, 1)), Err(PriorError::BadEpsilon));
        assert_eq!(engine().estimate(PriorKind::Fast, &bs("0"), &rat(0, 1)), Err(PriorError::BadEpsilon));
    }

    #[test]
    fn json_keys() {
        let est = engine().estimate(PriorKind::Fast, &bs("0"), &rat(1, 2)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&est).unwrap();
        for key in ["kind", "x", "lower", "tail", "k", "epsilon", "certified"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["kind"], "fast");
        assert_eq!(v["x"], "0");
    }
}
