//! Self-checks of the exact invariants, runnable from the command line.
//!
//! Each check returns a report rather than panicking so callers can print a
//! PASS/FAIL line and carry on.

use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::json;

use crate::bits::BitString;
use crate::enumerate::{
    enumerate_up_to_phase, incomputable_prefix_set, naive_step_formula, tally_family, EnumerateConfig, EnumerateError, Mode,
    OutputTrie,
};
use crate::measures::{decoder_km, decoder_mass, MeasureSpec};
use crate::priors::{alternate_form_from_entries, kraft_sum, lower_from_entries, tail, PriorKind};
use crate::rational::{format_rational, int, inv_pow2, rat, Rational};
use crate::vm::computes;

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub data: serde_json::Value,
}

impl CheckReport {
    fn new(name: &str, passed: bool, detail: String, data: serde_json::Value) -> Self {
        Self { name: name.to_string(), passed, detail, data }
    }
}

/// Naive FAST accounting at phase `k` against `2^(k+1)(k-1) + 2`.
pub fn check_steps(k: u32, config: &EnumerateConfig) -> Result<CheckReport, EnumerateError> {
    let ledger = enumerate_up_to_phase(k, Mode::Naive, config)?;
    let counted = ledger.naive_step_count().unwrap_or_default();
    let expected = naive_step_formula(k);
    Ok(CheckReport::new(
        "steps",
        counted == expected,
        format!("k={k} naiveStepCount={counted} formula={expected}"),
        json!({ "k": k, "naiveStepCount": counted.to_string(), "formula": expected.to_string() }),
    ))
}

/// Every record of phase `k` re-verifies, and `p →_i x` holds exactly for
/// `i ≥ firstPhase`.
pub fn check_records(k: u32, config: &EnumerateConfig) -> Result<CheckReport, EnumerateError> {
    let ledger = enumerate_up_to_phase(k, Mode::Tree, config)?;
    let mut failures = Vec::new();
    for r in ledger.records() {
        let len = r.program.len() as u32;
        if computes(&r.program, &r.output, 1u64 << (k - len)).steps() != Some(r.time) {
            failures.push(format!("{} -> {}", r.program, r.output));
            continue;
        }
        for i in len..=k {
            let in_phase = computes(&r.program, &r.output, 1u64 << (i - len)).is_computes();
            if in_phase != (r.first_phase <= i) {
                failures.push(format!("{} -> {} at phase {i}", r.program, r.output));
            }
        }
    }
    Ok(CheckReport::new(
        "records",
        failures.is_empty(),
        format!("k={k} records={} failures={}", ledger.len(), failures.len()),
        json!({ "k": k, "records": ledger.len(), "failures": failures.iter().take(10).collect::<Vec<_>>() }),
    ))
}

/// Naive and tree enumeration agree at phase `k`.
pub fn check_equivalence(k: u32, config: &EnumerateConfig) -> Result<CheckReport, EnumerateError> {
    let naive = enumerate_up_to_phase(k, Mode::Naive, config)?;
    let tree = enumerate_up_to_phase(k, Mode::Tree, config)?;
    let same = naive.records() == tree.records();
    Ok(CheckReport::new(
        "equivalence",
        same,
        format!("k={k} naive={} tree={}", naive.len(), tree.len()),
        json!({ "k": k, "naive": naive.len(), "tree": tree.len() }),
    ))
}

/// Kraft sums and the semimeasure inequality at phase `k` for every
/// nonempty `x` with `|x| ≤ max_len`.
pub fn check_kraft(k: u32, max_len: usize, config: &EnumerateConfig) -> Result<CheckReport, EnumerateError> {
    let tally = tally_family(OutputTrie::complete(max_len + 1), k, config)?;
    let mut failures = Vec::new();
    let mut checked = 0;
    for x in BitString::all_up_to(max_len) {
        let entries = tally.entries(&x).expect("family member");
        if !x.is_empty() && kraft_sum(&entries, k) > Rational::one() {
            failures.push(format!("kraft {x}"));
        }
        for kind in [PriorKind::Fast, PriorKind::Kt] {
            let upper = if x.is_empty() { Rational::one() } else { lower_from_entries(kind, &entries, k) + tail(kind, k) };
            let children: Rational = [false, true]
                .iter()
                .map(|&b| lower_from_entries(kind, &tally.entries(&x.with(b)).expect("family member"), k))
                .sum();
            if children > upper {
                failures.push(format!("semimeasure {kind} {x}"));
            }
            checked += 1;
        }
    }
    Ok(CheckReport::new(
        "kraft",
        failures.is_empty(),
        format!("k={k} |x|<={max_len} checks={checked} failures={}", failures.len()),
        json!({ "k": k, "maxLen": max_len, "failures": failures }),
    ))
}

/// `1/2 < defining form / alternate form ≤ 2` for both priors.
pub fn check_envelopes(k: u32, max_len: usize, config: &EnumerateConfig) -> Result<CheckReport, EnumerateError> {
    let tally = tally_family(OutputTrie::complete(max_len), k, config)?;
    let mut failures = Vec::new();
    let mut checked = 0;
    for x in BitString::all_up_to(max_len).filter(|x| !x.is_empty()) {
        let entries = tally.entries(&x).expect("family member");
        for kind in [PriorKind::Fast, PriorKind::Kt] {
            let (defining, alternate) = match kind {
                PriorKind::Fast => (lower_from_entries(kind, &entries, k), alternate_form_from_entries(kind, &entries, k)),
                // For Kt the count form is compared against the cost form.
                PriorKind::Kt => (alternate_form_from_entries(kind, &entries, k), lower_from_entries(kind, &entries, k)),
            };
            if alternate.is_zero() {
                if !defining.is_zero() {
                    failures.push(format!("{kind} {x}: zero alternate form"));
                }
                continue;
            }
            let ratio = defining / alternate;
            checked += 1;
            if !(ratio > rat(1, 2) && ratio <= int(2)) {
                failures.push(format!("{kind} {x}: ratio {}", format_rational(&ratio)));
            }
        }
    }
    Ok(CheckReport::new(
        "envelopes",
        failures.is_empty(),
        format!("k={k} |x|<={max_len} ratios={checked} failures={}", failures.len()),
        json!({ "k": k, "maxLen": max_len, "failures": failures }),
    ))
}

/// `Σ_{x ∈ Ĉ_t} S_Kt-lower(x) ≤ 1/t` with lower bounds at phase `k`.
pub fn check_mass(ts: &[u64], max_len: usize, k: u32, config: &EnumerateConfig) -> Result<CheckReport, EnumerateError> {
    let mut rows = Vec::new();
    let mut passed = true;
    for &t in ts {
        let set = incomputable_prefix_set(t, max_len, config)?;
        let tally = tally_family(OutputTrie::from_strings(&set), k, config)?;
        let mass: Rational =
            set.iter().map(|x| lower_from_entries(PriorKind::Kt, &tally.entries(x).expect("family member"), k)).sum();
        let bound = Rational::new(1.into(), t.into());
        passed &= mass <= bound;
        rows.push(json!({ "t": t, "size": set.len(), "mass": format_rational(&mass), "bound": format_rational(&bound) }));
    }
    Ok(CheckReport::new("mass", passed, format!("t in {ts:?}, |x|<={max_len}, k={k}"), json!({ "rows": rows })))
}

/// Decoder mass within `2^(1-depth)` of `ν(x)` and `2^-Km ≥ ν(x)/4`.
pub fn check_decoder(specs: &[MeasureSpec], max_len: usize, depth: u32) -> CheckReport {
    let mut failures = Vec::new();
    let mut checked = 0;
    for spec in specs {
        for x in BitString::all_up_to(max_len).filter(|x| !x.is_empty()) {
            let mu = spec.eval(&x);
            if mu.is_zero() {
                continue;
            }
            checked += 1;
            let mass = decoder_mass(spec, &x, depth).expect("positive measure");
            let gap = &mu - &mass;
            if gap < Rational::zero() || gap > inv_pow2(depth - 1) {
                failures.push(format!("{spec} {x}: mass gap {}", format_rational(&gap)));
            }
            match decoder_km(spec, &x, depth) {
                Ok(km) if inv_pow2(km) * int(4) >= mu => {}
                other => failures.push(format!("{spec} {x}: km {other:?}")),
            }
        }
    }
    CheckReport::new(
        "decoder",
        failures.is_empty(),
        format!("|x|<={max_len} depth={depth} strings={checked} failures={}", failures.len()),
        json!({ "failures": failures }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Workers;

    fn cfg() -> EnumerateConfig {
        EnumerateConfig::default().with_workers(Workers::Sequential)
    }

    #[test]
    fn small_suites_pass() {
        assert!(check_steps(3, &cfg()).unwrap().passed);
        assert!(check_records(8, &cfg()).unwrap().passed);
        assert!(check_equivalence(6, &cfg()).unwrap().passed);
        assert!(check_kraft(10, 2, &cfg()).unwrap().passed);
        assert!(check_envelopes(10, 2, &cfg()).unwrap().passed);
        assert!(check_mass(&[1, 2], 3, 10, &cfg()).unwrap().passed);
        assert!(check_decoder(&[MeasureSpec::Uniform], 3, 8).passed);
    }
}
