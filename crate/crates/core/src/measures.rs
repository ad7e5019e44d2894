//! Polynomial-time measures and the arithmetic-coding decoder built from
//! them.
//!
//! The decoder assigns each output string `x` the half-open interval of
//! width `ν(x)` obtained by splitting its parent's interval `0` first, then
//! `1`. An input `p` stands for the dyadic interval `[0.p, 0.p + 2^-|p|)`,
//! and the decoder prints the deepest `x` whose interval contains it.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand_core::RngCore;
use rand_core::SeedableRng;
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::rational::{format_rational, parse_rational, Rational};
use crate::vm::run_program;

/// Step budget for generating a deterministic sequence from a REF-1 program.
const GENERATOR_STEPS_PER_BIT: u64 = 1 << 16;

/// Source of a deterministic sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Generator {
    /// `0101…`
    Alternating,
    /// The output of a REF-1 program.
    Ref1(BitString),
    /// The given nonempty block repeated forever.
    Periodic(BitString),
}

impl Generator {
    /// The first `n` bits, or fewer if the generator stops printing.
    pub fn prefix(&self, n: usize) -> BitString {
        match self {
            Generator::Alternating => (0..n).map(|i| i % 2 == 1).collect(),
            Generator::Periodic(block) => (0..n).map(|i| block.get(i % block.len()).unwrap_or(false)).collect(),
            Generator::Ref1(program) => {
                let budget = GENERATOR_STEPS_PER_BIT.saturating_mul(n as u64 + 1);
                run_program(program, n, budget).output
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MeasureSpec {
    Uniform,
    /// Independent bits with `P(1) = theta`.
    Bernoulli(Rational),
    /// The point measure on one infinite sequence.
    DetSeq(Generator),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeasureError {
    #[error("invalid measure `{0}` (expected uniform, bernoulli:<num/den>, detseq:alternating, detseq:ref1:<bits> or detseq:periodic:<bits>)")]
    Parse(String),
    #[error("bernoulli parameter must satisfy 0 < theta < 1")]
    ThetaOutOfRange,
    #[error("`{0}` has measure zero, so it has no output interval")]
    ZeroWidth(BitString),
    #[error("no input of length at most {cap} decodes to `{x}`")]
    DepthCapInsufficient { x: BitString, cap: u32 },
}

impl FromStr for MeasureSpec {
    type Err = MeasureError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = || MeasureError::Parse(text.to_string());
        let bits = |s: &str| BitString::from_str(s).map_err(|_| bad());
        let mut parts = text.trim().splitn(3, ':');
        match (parts.next(), parts.next(), parts.next()) {
            (Some("uniform"), None, None) => Ok(MeasureSpec::Uniform),
            (Some("bernoulli"), Some(theta), None) => {
                let theta = parse_rational(theta).map_err(|_| bad())?;
                if theta <= Rational::zero() || theta >= Rational::one() {
                    return Err(MeasureError::ThetaOutOfRange);
                }
                Ok(MeasureSpec::Bernoulli(theta))
            }
            (Some("detseq"), Some("alternating"), None) => Ok(MeasureSpec::DetSeq(Generator::Alternating)),
            (Some("detseq"), Some("ref1"), Some(p)) => Ok(MeasureSpec::DetSeq(Generator::Ref1(bits(p)?))),
            (Some("detseq"), Some("periodic"), Some(p)) if !p.is_empty() => {
                Ok(MeasureSpec::DetSeq(Generator::Periodic(bits(p)?)))
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureSpec::Uniform => f.write_str("uniform"),
            MeasureSpec::Bernoulli(theta) => write!(f, "bernoulli:{}", format_rational(theta)),
            MeasureSpec::DetSeq(Generator::Alternating) => f.write_str("detseq:alternating"),
            MeasureSpec::DetSeq(Generator::Ref1(p)) => write!(f, "detseq:ref1:{p}"),
            MeasureSpec::DetSeq(Generator::Periodic(p)) => write!(f, "detseq:periodic:{p}"),
        }
    }
}

impl Serialize for MeasureSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MeasureSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl MeasureSpec {
    pub fn is_deterministic(&self) -> bool {
        matches!(self, MeasureSpec::DetSeq(_))
    }

    /// `P(next bit = 1)` for the i.i.d. variants.
    fn theta(&self) -> Option<Rational> {
        match self {
            MeasureSpec::Uniform => Some(Rational::new(1.into(), 2.into())),
            MeasureSpec::Bernoulli(theta) => Some(theta.clone()),
            MeasureSpec::DetSeq(_) => None,
        }
    }

    /// `μ(x)`, exactly.
    pub fn eval(&self, x: &BitString) -> Rational {
        match self.theta() {
            Some(theta) => {
                let ones = x.count_ones() as i32;
                let zeros = x.len() as i32 - ones;
                let one_minus = Rational::one() - &theta;
                num_traits::pow(theta, ones as usize) * num_traits::pow(one_minus, zeros as usize)
            }
            None => {
                let MeasureSpec::DetSeq(generator) = self else { unreachable!() };
                if generator.prefix(x.len()) == *x {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
        }
    }

    /// `μ(bit | prefix)`, or `None` when `μ(prefix) = 0`.
    pub fn conditional(&self, prefix: &BitString, bit: bool) -> Option<Rational> {
        match self.theta() {
            Some(theta) => Some(if bit { theta } else { Rational::one() - theta }),
            None => {
                let MeasureSpec::DetSeq(generator) = self else { unreachable!() };
                let seq = generator.prefix(prefix.len() + 1);
                if !prefix.is_prefix_of(&seq) {
                    return None;
                }
                Some(if seq.get(prefix.len()) == Some(bit) { Rational::one() } else { Rational::zero() })
            }
        }
    }

    /// Draws `x_{1:n}`. Deterministic sequences ignore the seed; otherwise
    /// bit `t` is 1 iff the `t`-th SplitMix64 output `u` has `u / 2^64 < θ`.
    pub fn sample(&self, n: usize, seed: u64) -> BitString {
        match self.theta() {
            None => {
                let MeasureSpec::DetSeq(generator) = self else { unreachable!() };
                generator.prefix(n)
            }
            Some(theta) => {
                let mut rng = SplitMix64::seed_from_u64(seed);
                let threshold = theta.numer() << 64u32;
                (0..n).map(|_| BigInt::from(rng.next_u64()) * theta.denom() < threshold).collect()
            }
        }
    }
}

/// Free-function form of [`MeasureSpec::eval`].
pub fn measure_eval(spec: &MeasureSpec, x: &BitString) -> Rational {
    spec.eval(x)
}

/// Half-open interval `[low, high)` of rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyadicInterval {
    pub low: Rational,
    pub high: Rational,
}

impl DyadicInterval {
    pub fn unit() -> Self {
        Self { low: Rational::zero(), high: Rational::one() }
    }

    /// `[0.p, 0.p + 2^-|p|)`.
    pub fn of_input(p: &BitString) -> Self {
        let denom = BigInt::one() << p.len();
        let mut num = BigInt::zero();
        for bit in p.iter() {
            num = (num << 1u32) + u8::from(bit);
        }
        let low = Rational::new(num.clone(), denom.clone());
        let high = Rational::new(num + 1, denom);
        Self { low, high }
    }

    pub fn width(&self) -> Rational {
        &self.high - &self.low
    }

    pub fn contains(&self, inner: &DyadicInterval) -> bool {
        self.low <= inner.low && inner.high <= self.high
    }

    pub fn intersects(&self, other: &DyadicInterval) -> bool {
        self.low < other.high && other.low < self.high
    }
}

/// The interval of width `μ(x)` assigned to output `x`.
pub fn output_interval(spec: &MeasureSpec, x: &BitString) -> Result<DyadicInterval, MeasureError> {
    let mut low = Rational::zero();
    let mut prefix = BitString::new();
    let mut mass = Rational::one();
    for bit in x.iter() {
        let zero_mass = spec.eval(&prefix.with(false));
        if bit {
            low += &zero_mass;
            mass -= zero_mass;
        } else {
            mass = zero_mass;
        }
        prefix.push(bit);
    }
    debug_assert_eq!(mass, spec.eval(x));
    if mass.is_zero() {
        return Err(MeasureError::ZeroWidth(x.clone()));
    }
    let high = &low + mass;
    Ok(DyadicInterval { low, high })
}

/// Output of the decoder after reading all of `input`, capped at
/// `max_output` bits.
pub fn decoder_run(spec: &MeasureSpec, input: &BitString, max_output: usize) -> BitString {
    let target = DyadicInterval::of_input(input);
    let mut out = BitString::new();
    let mut low = Rational::zero();
    while out.len() < max_output {
        let zero_mass = spec.eval(&out.with(false));
        let one_mass = spec.eval(&out.with(true));
        let zero = DyadicInterval { low: low.clone(), high: &low + &zero_mass };
        let one = DyadicInterval { low: zero.high.clone(), high: &zero.high + &one_mass };
        if !zero_mass.is_zero() && zero.contains(&target) {
            out.push(false);
        } else if !one_mass.is_zero() && one.contains(&target) {
            low = one.low;
            out.push(true);
        } else {
            break;
        }
    }
    out
}

/// Inputs `p` with `|p| ≤ depth` on which the decoder's output first
/// reaches `x`: the maximal dyadic subintervals of `x`'s output interval,
/// shallowest first, then left to right.
pub fn decoder_programs(spec: &MeasureSpec, x: &BitString, depth: u32) -> Result<Vec<BitString>, MeasureError> {
    let target = output_interval(spec, x)?;
    let mut found = Vec::new();
    let mut partial = vec![BitString::new()];
    for d in 0..=depth {
        let mut next = Vec::new();
        for p in partial {
            let interval = DyadicInterval::of_input(&p);
            if target.contains(&interval) {
                found.push(p);
            } else if target.intersects(&interval) && d < depth {
                next.push(p.with(false));
                next.push(p.with(true));
            }
        }
        partial = next;
    }
    Ok(found)
}

/// `Σ 2^-|p|` over [`decoder_programs`].
pub fn decoder_mass(spec: &MeasureSpec, x: &BitString, depth: u32) -> Result<Rational, MeasureError> {
    Ok(decoder_programs(spec, x, depth)?.iter().map(|p| Rational::new(BigInt::one(), BigInt::one() << p.len())).sum())
}

/// `Km` of `x` on the decoder: the length of its shortest input.
pub fn decoder_km(spec: &MeasureSpec, x: &BitString, depth_cap: u32) -> Result<u32, MeasureError> {
    decoder_programs(spec, x, depth_cap)?
        .first()
        .map(|p| p.len() as u32)
        .ok_or(MeasureError::DepthCapInsufficient { x: x.clone(), cap: depth_cap })
}
