//! Sequential prediction from certified prior conditionals.
//!
//! At each step the evaluator estimates `S(prefix)`, `S(prefix·0)` and
//! `S(prefix·1)` at one common phase and turns them into conditional
//! enclosures. A prediction is made when the enclosures settle the argmin of
//! expected loss; otherwise epsilon is tightened a bounded number of times
//! and, failing that, the point values (the lower bounds) decide, with exact
//! ties going to the declared tie-break bit. The adversarial sequence uses
//! the very same evaluator, so a predictor breaking ties towards 0 errs on
//! every bit of it.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::bits::BitString;
use crate::enumerate::{tally_family, EnumerateConfig, OutputTrie, RecordSource};
use crate::measures::MeasureSpec;
use crate::priors::{conditional_from, estimate_at, estimate_from_source, PriorError, PriorEstimate, PriorKind};
use crate::rational::{fraction, ln, parse_rational, rat, Interval, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PredictorError {
    #[error(transparent)]
    Prior(#[from] PriorError),
    #[error(transparent)]
    Enumerate(#[from] crate::enumerate::EnumerateError),
    #[error("loss entries must lie in [0, 1]")]
    LossOutOfRange,
    #[error("invalid loss matrix `{0}` (expected four rationals l00,l01,l10,l11 indexed by actual then predicted bit)")]
    LossParse(String),
    #[error("n = {n} exceeds the budget of {max} for the {kind} prior")]
    BudgetExceeded { n: usize, max: usize, kind: PriorKind },
}

/// Loss `ℓ(actual, predicted)`, time independent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LossSpec {
    matrix: [[Rational; 2]; 2],
}

impl Default for LossSpec {
    fn default() -> Self {
        Self::zero_one()
    }
}

impl LossSpec {
    pub fn zero_one() -> Self {
        Self { matrix: [[rat(0, 1), rat(1, 1)], [rat(1, 1), rat(0, 1)]] }
    }

    /// `matrix[actual][predicted]`, every entry in `[0, 1]`.
    pub fn new(matrix: [[Rational; 2]; 2]) -> Result<Self, PredictorError> {
        let ok = matrix.iter().flatten().all(|v| v >= &Rational::zero() && v <= &Rational::one());
        if !ok {
            return Err(PredictorError::LossOutOfRange);
        }
        Ok(Self { matrix })
    }

    pub fn get(&self, actual: bool, predicted: bool) -> &Rational {
        &self.matrix[actual as usize][predicted as usize]
    }

    pub fn is_zero_one(&self) -> bool {
        *self == Self::zero_one()
    }
}

impl FromStr for LossSpec {
    type Err = PredictorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "01" || s == "zero-one" {
            return Ok(Self::zero_one());
        }
        let values: Vec<Rational> = s
            .split(',')
            .map(|v| parse_rational(v).map_err(|_| PredictorError::LossParse(s.to_string())))
            .collect::<Result<_, _>>()?;
        let [a, b, c, d]: [Rational; 4] = values.try_into().map_err(|_| PredictorError::LossParse(s.to_string()))?;
        Self::new([[a, b], [c, d]])
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.matrix;
        write!(f, "{},{},{},{}", m[0][0], m[0][1], m[1][0], m[1][1])
    }
}

/// Upper bound of `Σ_b coeff_b · w_b` over `w_b ∈ [low_b, high_b]`, or
/// `None` when unbounded.
fn max_linear(coeff: [Rational; 2], boxes: [&Interval; 2]) -> Option<Rational> {
    let mut total = Rational::zero();
    for (c, b) in coeff.into_iter().zip(boxes) {
        if c > Rational::zero() {
            total += c * b.high.clone()?;
        } else {
            total += c * &b.low;
        }
    }
    Some(total)
}

/// Is predicting `y` certainly better than predicting `!y` for every
/// weighting inside the enclosures? Equal losses everywhere do not count.
fn surely_better(y: bool, weights: [&Interval; 2], loss: &LossSpec) -> bool {
    // E(y) - E(!y) = Σ_b (ℓ(b,y) - ℓ(b,!y)) w_b must be < 0 throughout.
    let coeff = [false, true].map(|b| loss.get(b, y) - loss.get(b, !y));
    max_linear(coeff, weights).is_some_and(|m| m < Rational::zero())
}

/// `y` is never worse than `!y` and strictly better for some outcome.
fn dominates(y: bool, loss: &LossSpec) -> bool {
    let diffs = [false, true].map(|b| loss.get(b, y) - loss.get(b, !y));
    diffs.iter().all(|d| d <= &Rational::zero()) && diffs.iter().any(|d| d < &Rational::zero())
}

/// The prediction when the enclosures settle it.
pub fn decide(cond0: &Interval, cond1: &Interval, loss: &LossSpec) -> Option<bool> {
    [false, true].into_iter().find(|&y| dominates(y, loss) || surely_better(y, [cond0, cond1], loss))
}

/// Argmin of expected loss for point weights; exact ties go to `tie_break`.
pub fn point_choice(w0: &Rational, w1: &Rational, loss: &LossSpec, tie_break: bool) -> bool {
    let expected = |y: bool| loss.get(false, y) * w0 + loss.get(true, y) * w1;
    let (e0, e1) = (expected(false), expected(true));
    match e0.cmp(&e1) {
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Equal => tie_break,
    }
}

/// Prediction from two enclosures: settled by the enclosures if possible,
/// otherwise by their lower endpoints, otherwise by `tie_break`.
pub fn predict_next(cond0: &Interval, cond1: &Interval, loss: &LossSpec, tie_break: bool) -> bool {
    decide(cond0, cond1, loss).unwrap_or_else(|| point_choice(&cond0.low, &cond1.low, loss, tie_break))
}

/// Settings shared by the predictor and the adversary.
#[derive(Clone, Debug)]
pub struct EvalConfig {
    pub kind: PriorKind,
    pub epsilon: Rational,
    /// Deepest phase enumerated.
    pub k_cap: u32,
    /// How many times epsilon may be halved before falling back to point
    /// values.
    pub max_tightenings: u32,
    pub loss: LossSpec,
    pub tie_break: bool,
    pub enumerate: EnumerateConfig,
}

impl EvalConfig {
    pub fn new(kind: PriorKind, epsilon: Rational, k_cap: u32) -> Self {
        Self {
            kind,
            epsilon,
            k_cap,
            max_tightenings: 2,
            loss: LossSpec::zero_one(),
            tie_break: false,
            enumerate: EnumerateConfig::default().with_phase_cap(k_cap.max(EnumerateConfig::default().phase_cap)),
        }
    }
}

/// The estimates behind one prediction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepEstimate {
    pub epsilon: Rational,
    /// Common phase of all three estimates.
    pub k: u32,
    /// All three estimates are certified at `k`.
    pub certified: bool,
    pub prefix: PriorEstimate,
    pub joint: [PriorEstimate; 2],
    /// `S(b | prefix)` enclosures; unbounded above while the prefix has no
    /// discovered mass.
    pub cond: [Interval; 2],
}

fn conditional_or_unbounded(joint: &PriorEstimate, prefix: &PriorEstimate) -> Interval {
    conditional_from(joint, prefix).unwrap_or(Interval { low: Rational::zero(), high: None })
}

/// Estimates for `prefix`, `prefix·0`, `prefix·1` at the least phase where
/// all three certify (the source's deepest phase if they never do).
pub fn estimate_step(
    kind: PriorKind,
    prefix: &BitString,
    epsilon: &Rational,
    source: &dyn RecordSource,
) -> Result<StepEstimate, PredictorError> {
    let xs = [prefix.clone(), prefix.with(false), prefix.with(true)];
    let mut k = 0;
    for x in &xs {
        let est = estimate_from_source(kind, x, epsilon, source)?;
        k = k.max(est.phases_used);
    }
    let at = |x: &BitString| estimate_at(kind, x, epsilon, source, k);
    let prefix_est = at(&xs[0])?;
    let joint = [at(&xs[1])?, at(&xs[2])?];
    let certified = prefix_est.certified && joint.iter().all(|j| j.certified);
    let cond = [conditional_or_unbounded(&joint[0], &prefix_est), conditional_or_unbounded(&joint[1], &prefix_est)];
    Ok(StepEstimate { epsilon: epsilon.clone(), k, certified, prefix: prefix_est, joint, cond })
}

/// The prediction after `prefix` and the estimates it rests on.
pub fn choose(prefix: &BitString, cfg: &EvalConfig, source: &dyn RecordSource) -> Result<(bool, StepEstimate), PredictorError> {
    let mut epsilon = cfg.epsilon.clone();
    let mut round = 0;
    loop {
        let est = estimate_step(cfg.kind, prefix, &epsilon, source)?;
        if let Some(y) = decide(&est.cond[0], &est.cond[1], &cfg.loss) {
            return Ok((y, est));
        }
        // Once at the deepest phase a smaller epsilon changes nothing.
        if round >= cfg.max_tightenings || est.k >= source.max_phase() {
            let y = point_choice(&est.joint[0].lower, &est.joint[1].lower, &cfg.loss, cfg.tie_break);
            return Ok((y, est));
        }
        epsilon /= rat(2, 1);
        round += 1;
    }
}

/// One predicted bit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceStep {
    pub t: usize,
    pub x_t: bool,
    pub y_t: bool,
    #[serde(with = "fraction")]
    pub loss: Rational,
    pub cond0: Interval,
    pub cond1: Interval,
    pub k_used: u32,
    #[serde(with = "fraction")]
    pub epsilon_used: Rational,
    pub certified: bool,
    #[serde(with = "fraction")]
    pub cum_loss: Rational,
    pub informed_y_t: bool,
    #[serde(with = "fraction")]
    pub cum_informed_loss: Rational,
    /// Lower bound on the prior of `x_{1:t}` at phase `k_used`.
    #[serde(with = "fraction")]
    pub prior_lower: Rational,
    /// `ln μ(x_{1:t}) - ln prior_lower`; `None` when the lower bound is 0.
    pub d_hat: Option<f64>,
    /// `cum_loss ≤ -2 ln prior_lower` (deterministic environments only).
    pub unit_bound_holds: Option<bool>,
}

/// Runs the predictor along a fixed sequence.
pub fn predict_sequence(seq: &BitString, cfg: &EvalConfig, source: &dyn RecordSource) -> Result<Vec<TraceStep>, PredictorError> {
    let mut steps = Vec::with_capacity(seq.len());
    let mut cum = Rational::zero();
    let mut prefix = BitString::new();
    for (i, x_t) in seq.iter().enumerate() {
        let (y_t, est) = choose(&prefix, cfg, source)?;
        let loss = cfg.loss.get(x_t, y_t).clone();
        cum += &loss;
        let [cond0, cond1] = est.cond.clone();
        steps.push(TraceStep {
            t: i + 1,
            x_t,
            y_t,
            loss,
            cond0,
            cond1,
            k_used: est.k,
            epsilon_used: est.epsilon.clone(),
            certified: est.certified,
            cum_loss: cum.clone(),
            informed_y_t: false,
            cum_informed_loss: Rational::zero(),
            prior_lower: est.joint[x_t as usize].lower.clone(),
            d_hat: None,
            unit_bound_holds: None,
        });
        prefix.push(x_t);
    }
    Ok(steps)
}

/// `e^{-1/2}` lies strictly between these.
const EXP_NEG_HALF_BELOW: (i64, i64) = (60653, 100000);

/// Decides `loss ≤ -2 ln lower`, i.e. `lower ≤ e^{-loss/2}`.
pub fn unit_bound_holds(loss: &Rational, lower: &Rational) -> bool {
    if lower.is_zero() {
        return true;
    }
    if loss.is_integer() {
        if let Ok(l) = u32::try_from(loss.to_integer()) {
            // A lower bound of e^{-1/2} makes the exact check sufficient.
            let below = num_traits::pow(rat(EXP_NEG_HALF_BELOW.0, EXP_NEG_HALF_BELOW.1), l as usize);
            if lower <= &below {
                return true;
            }
        }
    }
    crate::rational::to_f64(loss) <= -2.0 * ln(lower)
}

/// `Σ_t |1 - S(x_t | x_{<t})|` enclosed from the recorded conditionals,
/// each first clipped to `[0, 1]`.
pub fn deviation_sum(steps: &[TraceStep]) -> Interval {
    let mut low = Rational::zero();
    let mut high = Rational::zero();
    for s in steps {
        let cond = if s.x_t { &s.cond1 } else { &s.cond0 };
        let c_low = cond.low.clone().min(Rational::one());
        let c_high = cond.high.clone().map_or(Rational::one(), |h| h.min(Rational::one()));
        low += Rational::one() - c_high;
        high += Rational::one() - c_low;
    }
    Interval::new(low, high)
}

/// Full configuration of one prediction experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub env: MeasureSpec,
    pub eval: EvalConfig,
    pub n: usize,
    pub seed: u64,
    /// Refuse runs longer than this.
    pub max_n: usize,
}

/// Default budgets on `n` per prior kind.
pub fn default_max_n(kind: PriorKind) -> usize {
    match kind {
        PriorKind::Fast => 64,
        PriorKind::Kt => 10,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceSummary {
    pub n: usize,
    pub errors: usize,
    #[serde(with = "fraction")]
    pub cum_loss: Rational,
    #[serde(with = "fraction")]
    pub cum_informed_loss: Rational,
    /// `ln μ(x_{1:n}) - ln lower(x_{1:n})`, `None` when the lower bound is 0.
    pub d_hat_n: Option<f64>,
    /// Enclosure of the deviation sum over all `n` steps (deterministic
    /// environments only).
    pub deviation_sum: Option<Interval>,
    /// The same over the first `n / 2` steps.
    pub deviation_sum_half: Option<Interval>,
    /// `Σ_t H(μ(· | x_{<t}))` in nats, a diagnostic for stochastic runs.
    pub entropy_nats: f64,
    pub uncertified_steps: usize,
    pub unit_bound_violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PredictionTrace {
    pub env: MeasureSpec,
    pub kind: PriorKind,
    pub n: usize,
    pub seed: u64,
    #[serde(with = "fraction")]
    pub epsilon: Rational,
    pub k_cap: u32,
    pub sequence: BitString,
    pub steps: Vec<TraceStep>,
    pub summary: TraceSummary,
}

fn binary_entropy_nats(p1: &Rational) -> f64 {
    let p = crate::rational::to_f64(p1);
    [p, 1.0 - p].iter().filter(|&&q| q > 0.0).map(|&q| -q * q.ln()).sum()
}

/// Samples `x_{1:n}` from the environment and predicts it with the prior and
/// with the informed predictor.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<PredictionTrace, PredictorError> {
    if cfg.n > cfg.max_n {
        return Err(PredictorError::BudgetExceeded { n: cfg.n, max: cfg.max_n, kind: cfg.eval.kind });
    }
    let seq = cfg.env.sample(cfg.n, cfg.seed);
    let tally = tally_family(OutputTrie::prediction_family(&seq), cfg.eval.k_cap, &cfg.eval.enumerate)?;
    let mut steps = predict_sequence(&seq, &cfg.eval, &tally)?;

    let deterministic = cfg.env.is_deterministic();
    let mut cum_informed = Rational::zero();
    let mut entropy = 0.0;
    let mut prefix = BitString::new();
    for step in steps.iter_mut() {
        let mu0 = cfg.env.conditional(&prefix, false).unwrap_or_default();
        let mu1 = cfg.env.conditional(&prefix, true).unwrap_or_default();
        entropy += binary_entropy_nats(&mu1);
        let informed = point_choice(&mu0, &mu1, &cfg.eval.loss, cfg.eval.tie_break);
        cum_informed += cfg.eval.loss.get(step.x_t, informed);
        step.informed_y_t = informed;
        step.cum_informed_loss = cum_informed.clone();
        prefix.push(step.x_t);
        let mu = cfg.env.eval(&prefix);
        if !step.prior_lower.is_zero() && !mu.is_zero() {
            step.d_hat = Some(ln(&mu) - ln(&step.prior_lower));
        }
        if deterministic {
            step.unit_bound_holds = Some(unit_bound_holds(&step.cum_loss, &step.prior_lower));
        }
    }

    let last = steps.last();
    let summary = TraceSummary {
        n: cfg.n,
        errors: steps.iter().filter(|s| s.x_t != s.y_t).count(),
        cum_loss: last.map_or_else(Rational::zero, |s| s.cum_loss.clone()),
        cum_informed_loss: cum_informed,
        d_hat_n: last.and_then(|s| s.d_hat),
        deviation_sum: deterministic.then(|| deviation_sum(&steps)),
        deviation_sum_half: deterministic.then(|| deviation_sum(&steps[..steps.len() / 2])),
        entropy_nats: entropy,
        uncertified_steps: steps.iter().filter(|s| !s.certified).count(),
        unit_bound_violations: steps.iter().filter(|s| s.unit_bound_holds == Some(false)).count(),
    };
    Ok(PredictionTrace {
        env: cfg.env.clone(),
        kind: cfg.eval.kind,
        n: cfg.n,
        seed: cfg.seed,
        epsilon: cfg.eval.epsilon.clone(),
        k_cap: cfg.eval.k_cap,
        sequence: seq,
        steps,
        summary,
    })
}

/// A sequence on which the evaluator's ranking is always wrong.
#[derive(Clone, Debug, Serialize)]
pub struct AdversarialRun {
    pub kind: PriorKind,
    #[serde(with = "fraction")]
    pub epsilon: Rational,
    pub k_cap: u32,
    pub sequence: BitString,
    /// Phase used at each step.
    pub phases: Vec<u32>,
    pub certified: Vec<bool>,
}

/// Emits 1 whenever the evaluator ranks `S(0 | x_{<t}) ≥ S(1 | x_{<t})`,
/// otherwise 0.
///
/// Only the prior, epsilon, phase cap, tightening budget and enumeration
/// settings of `cfg` are used; the ranking is that of a 0-1 predictor
/// breaking ties towards 0.
pub fn adversarial_sequence(cfg: &EvalConfig, n: usize) -> Result<AdversarialRun, PredictorError> {
    let ranking = EvalConfig { loss: LossSpec::zero_one(), tie_break: false, ..cfg.clone() };
    let mut seq = BitString::new();
    let mut phases = Vec::with_capacity(n);
    let mut certified = Vec::with_capacity(n);
    for _ in 0..n {
        let family = [seq.clone(), seq.with(false), seq.with(true)];
        let tally = tally_family(OutputTrie::from_strings(&family), cfg.k_cap, &cfg.enumerate)?;
        let (y, est) = choose(&seq, &ranking, &tally)?;
        phases.push(est.k);
        certified.push(est.certified);
        seq.push(!y);
    }
    Ok(AdversarialRun { kind: cfg.kind, epsilon: cfg.epsilon.clone(), k_cap: cfg.k_cap, sequence: seq, phases, certified })
}

/// For each `n`, the least phase at which `S(x_n | x_{<n})` is certified,
/// i.e. both `S(x_{1:n})` and `S(x_{<n})` are; `None` if that takes more
/// than `k_cap` phases.
///
/// One enumeration serves every `n`; its depth grows one phase at a time
/// from `k_start`.
pub fn conditional_phases_needed(
    kind: PriorKind,
    seq: &BitString,
    ns: &[usize],
    epsilon: &Rational,
    k_start: u32,
    k_cap: u32,
    config: &EnumerateConfig,
) -> Result<Vec<Option<u32>>, PredictorError> {
    assert!(ns.iter().all(|&n| n >= 1 && n <= seq.len()), "n must index into the sequence");
    let mut family = Vec::new();
    for &n in ns {
        family.push(seq.prefix(n - 1));
        family.push(seq.prefix(n));
    }
    let trie = OutputTrie::from_strings(&family);
    let mut found = vec![None; ns.len()];
    let mut k_try = k_start.clamp(1, k_cap.max(1));
    loop {
        let tally = tally_family(trie.clone(), k_try, config)?;
        for (i, &n) in ns.iter().enumerate() {
            if found[i].is_some() {
                continue;
            }
            let a = estimate_from_source(kind, &seq.prefix(n - 1), epsilon, &tally)?;
            let b = estimate_from_source(kind, &seq.prefix(n), epsilon, &tally)?;
            if a.certified && b.certified {
                found[i] = Some(a.phases_used.max(b.phases_used));
            }
        }
        if found.iter().all(Option::is_some) || k_try >= k_cap {
            return Ok(found);
        }
        k_try += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs;
    use crate::Workers;

    fn pt(v: Rational) -> Interval {
        Interval::point(v)
    }

    #[test]
    fn argmin_examples() {
        let loss = LossSpec::zero_one();
        assert!(!predict_next(&pt(rat(3, 5)), &pt(rat(2, 5)), &loss, true));
        assert!(!predict_next(&pt(rat(1, 2)), &pt(rat(1, 2)), &loss, false));
        assert!(predict_next(&pt(rat(1, 2)), &pt(rat(1, 2)), &loss, true));
        let always_one: LossSpec = "1,0,1,0".parse().unwrap();
        assert!(predict_next(&pt(rat(9, 10)), &pt(rat(1, 10)), &always_one, false));
    }

    #[test]
    fn overlapping_enclosures_fall_back_to_lower_endpoints() {
        let loss = LossSpec::zero_one();
        let c0 = Interval::new(rat(1, 4), rat(3, 4));
        let c1 = Interval::new(rat(1, 5), rat(3, 5));
        assert_eq!(decide(&c0, &c1, &loss), None);
        assert!(!predict_next(&c0, &c1, &loss, true));
        let open = Interval { low: rat(1, 2), high: None };
        assert_eq!(decide(&open, &pt(rat(1, 3)), &loss), Some(false));
        assert_eq!(decide(&pt(rat(1, 3)), &open, &loss), Some(true));
    }

    #[test]
    fn loss_validation() {
        assert!("0,1,1,0".parse::<LossSpec>().unwrap().is_zero_one());
        assert!("0,2,1,0".parse::<LossSpec>().is_err());
        assert!("0,1,1".parse::<LossSpec>().is_err());
    }

    #[test]
    fn unit_bound_exact_and_fallback() {
        assert!(unit_bound_holds(&rat(3, 1), &rat(1, 8)));
        // -2 ln(1/2) = 1.386...
        assert!(unit_bound_holds(&rat(1, 1), &rat(1, 2)));
        assert!(!unit_bound_holds(&rat(2, 1), &rat(1, 2)));
        assert!(unit_bound_holds(&rat(100, 1), &Rational::zero()));
    }

    #[test]
    fn deviation_sum_of_perfect_conditionals_is_zero() {
        let step = |x_t: bool| TraceStep {
            t: 1,
            x_t,
            y_t: x_t,
            loss: rat(0, 1),
            cond0: pt(rat(1, 1)),
            cond1: pt(rat(1, 1)),
            k_used: 1,
            epsilon_used: rat(1, 2),
            certified: true,
            cum_loss: rat(0, 1),
            informed_y_t: x_t,
            cum_informed_loss: rat(0, 1),
            prior_lower: rat(1, 1),
            d_hat: None,
            unit_bound_holds: None,
        };
        assert_eq!(deviation_sum(&[step(true), step(false)]), pt(Rational::zero()));
    }

    #[test]
    fn first_adversarial_bit_is_one() {
        let mut cfg = EvalConfig::new(PriorKind::Fast, rat(1, 2), 14);
        cfg.enumerate = cfg.enumerate.with_workers(Workers::Sequential);
        let run = adversarial_sequence(&cfg, 1).unwrap();
        assert_eq!(run.sequence, bs("1"));
    }
}
