//! Independent reference implementations used as test oracles.
//!
//! The interpreter here shares no code with the library: it decodes the whole
//! program up front, tracks consumption as the furthest instruction touched,
//! and finds loop partners by scanning brackets on every jump.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn two_pow_neg(e: u32) -> Q {
    Q::new(BigInt::one(), BigInt::one() << e)
}

pub fn bits(s: &str) -> Vec<bool> {
    s.chars().map(|c| c == '1').collect()
}

pub fn text(b: &[bool]) -> String {
    b.iter().map(|&x| if x { '1' } else { '0' }).collect()
}

/// Every binary string of length `n`, in counting order.
pub fn strings_of_len(n: usize) -> Vec<Vec<bool>> {
    (0..1u64 << n).map(|v| (0..n).rev().map(|i| v >> i & 1 == 1).collect()).collect()
}

/// Least `i` with `t ≤ 2^(i - len)`.
pub fn first_phase(len: u32, t: u64) -> u32 {
    let mut i = len;
    while (1u128 << (i - len)) < t as u128 {
        i += 1;
    }
    i
}

const INC: u8 = 0;
const DEC: u8 = 1;
const LEFT: u8 = 2;
const RIGHT: u8 = 3;
const OUT: u8 = 4;
const JZ: u8 = 5;
const JNZ: u8 = 6;
const HALT: u8 = 7;

/// Runs `p` as the complete input for up to `budget` steps and returns every
/// `(output, t)` printed with all of `p` read and nothing more, stopping
/// once `max_output` bits are out.
pub fn run_oracle(p: &[bool], budget: u64, max_output: usize) -> Vec<(Vec<bool>, u64)> {
    if !p.len().is_multiple_of(3) {
        return Vec::new();
    }
    let ops: Vec<u8> = p.chunks(3).map(|c| (c[0] as u8) << 2 | (c[1] as u8) << 1 | c[2] as u8).collect();
    let mut tape: HashMap<i64, u8> = HashMap::new();
    let mut dp = 0i64;
    let mut ip = 0usize;
    let mut touched = 0usize;
    let mut steps = 0u64;
    let mut out = Vec::new();
    let mut found = Vec::new();
    loop {
        if steps >= budget || ip >= ops.len() {
            return found;
        }
        touched = touched.max(ip + 1);
        let cell = tape.get(&dp).copied().unwrap_or(0);
        steps += 1;
        match ops[ip] {
            INC => {
                tape.insert(dp, cell.wrapping_add(1));
            }
            DEC => {
                tape.insert(dp, cell.wrapping_sub(1));
            }
            LEFT => dp -= 1,
            RIGHT => dp += 1,
            OUT => {
                out.push(cell & 1 == 1);
                if 3 * touched == p.len() && steps <= budget {
                    found.push((out.clone(), steps));
                }
                if out.len() >= max_output {
                    return found;
                }
            }
            JZ if cell == 0 => {
                let mut depth = 1;
                let mut j = ip;
                while depth > 0 {
                    j += 1;
                    if j >= ops.len() {
                        return found;
                    }
                    touched = touched.max(j + 1);
                    steps += 1;
                    match ops[j] {
                        JZ => depth += 1,
                        JNZ => depth -= 1,
                        _ => {}
                    }
                }
                ip = j;
            }
            JZ => {}
            JNZ => {
                let mut depth = 1;
                let mut j = ip;
                let partner = loop {
                    if j == 0 {
                        break None;
                    }
                    j -= 1;
                    match ops[j] {
                        JNZ => depth += 1,
                        JZ => depth -= 1,
                        _ => {}
                    }
                    if depth == 0 {
                        break Some(j);
                    }
                };
                match partner {
                    None => return found,
                    Some(jz) if cell != 0 => {
                        ip = jz + 1;
                        continue;
                    }
                    Some(_) => {}
                }
            }
            HALT => return found,
            _ => unreachable!(),
        }
        ip += 1;
    }
}

/// One computation found by brute force.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct OracleRecord {
    pub program: Vec<bool>,
    pub output: Vec<bool>,
    pub time: u64,
}

impl OracleRecord {
    pub fn first_phase(&self) -> u32 {
        first_phase(self.program.len() as u32, self.time)
    }
}

/// All computations with Kt-cost at most `k`, by running every program of
/// length at most `k` with its phase-`k` budget. Outputs longer than
/// `max_output` are not followed.
pub fn oracle_ledger(k: u32, max_output: usize) -> Vec<OracleRecord> {
    let mut records = Vec::new();
    for len in (3..=k as usize).step_by(3) {
        let budget = 1u64 << (k as usize - len);
        for v in 0..1u64 << len {
            let p: Vec<bool> = (0..len).rev().map(|i| v >> i & 1 == 1).collect();
            for (output, time) in run_oracle(&p, budget, max_output) {
                records.push(OracleRecord { program: p.clone(), output, time });
            }
        }
    }
    records.sort();
    records
}

/// `(|p|, t)` pairs per output string, with multiplicity.
pub fn by_output(records: &[OracleRecord], max_len: usize) -> BTreeMap<Vec<bool>, Vec<(u32, u64)>> {
    let mut map: BTreeMap<Vec<bool>, Vec<(u32, u64)>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.output.len() <= max_len) {
        map.entry(r.output.clone()).or_default().push((r.program.len() as u32, r.time));
    }
    map
}

/// `Σ_{i=i*}^{k} 2^-i Σ 2^-|p|`, term by term.
pub fn fast_lower(pairs: &[(u32, u64)], k: u32) -> Q {
    let mut sum = Q::zero();
    for &(len, t) in pairs {
        for i in first_phase(len, t)..=k {
            sum += two_pow_neg(len + i);
        }
    }
    sum
}

/// `Σ 2^-|p| / t` over computations with Kt-cost at most `k`.
pub fn kt_lower(pairs: &[(u32, u64)], k: u32) -> Q {
    pairs
        .iter()
        .filter(|&&(len, t)| first_phase(len, t) <= k)
        .map(|&(len, t)| two_pow_neg(len) / Q::from_integer(BigInt::from(t)))
        .sum()
}

pub fn fast_tail(k: u32) -> Q {
    two_pow_neg(k)
}

pub fn kt_tail(k: u32) -> Q {
    two_pow_neg(k) + q(1, k as i64 + 1)
}

/// Natural log of a positive rational, accurate to double precision.
pub fn ln_q(x: &Q) -> f64 {
    fn ln_int(n: &BigInt) -> f64 {
        let bits = n.bits();
        if bits <= 1000 {
            return num_traits::ToPrimitive::to_f64(n).unwrap().ln();
        }
        let shift = bits - 64;
        let top: BigInt = n >> shift;
        num_traits::ToPrimitive::to_f64(&top).unwrap().ln() + shift as f64 * std::f64::consts::LN_2
    }
    ln_int(x.numer()) - ln_int(x.denom())
}

pub fn to_f64(x: &Q) -> f64 {
    num_traits::ToPrimitive::to_f64(x).unwrap()
}
