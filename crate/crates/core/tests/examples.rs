mod common;

use common::*;
use speedprior::enumerate::{
    enumerate_up_to_phase, first_phase as lib_first_phase, incomputable_prefix_set, km_complexity, kt_complexity, BoundStatus,
    EnumerateConfig, Mode,
};
use speedprior::measures::{decoder_km, decoder_mass, decoder_run, output_interval, MeasureSpec};
use speedprior::predictor::{adversarial_sequence, deviation_sum, predict_sequence, EvalConfig};
use speedprior::priors::{PriorEngine, PriorKind};
use speedprior::rational::{rat, Interval};
use speedprior::vm::computes;
use speedprior::{bs, BitString, Workers};

fn seq() -> EnumerateConfig {
    EnumerateConfig::default().with_workers(Workers::Sequential)
}

#[test]
fn computes_examples_match_the_reference_interpreter() {
    for (p, x, t) in [("100", "0", Some(1)), ("100111", "0", None), ("000100", "1", Some(2)), ("100", "1", None)] {
        assert_eq!(computes(&bs(p), &bs(x), 10).steps(), t, "{p} -> {x}");
        let oracle = run_oracle(&bits(p), 10, 8).into_iter().find(|(o, _)| text(o) == x).map(|(_, t)| t);
        assert_eq!(oracle, t, "{p} -> {x}");
    }
}

#[test]
fn phase_three_ledger() {
    let ledger = enumerate_up_to_phase(3, Mode::Naive, &seq()).unwrap();
    assert_eq!(ledger.naive_step_count(), Some(34));
    assert!(ledger.records().iter().any(|r| r.program == bs("100") && r.output == bs("0") && r.time == 1 && r.first_phase == 3));
    assert!(!ledger.records().iter().any(|r| r.program == bs("100") && r.output == bs("1")));
    assert_eq!(enumerate_up_to_phase(1, Mode::Naive, &seq()).unwrap().naive_step_count(), Some(2));
}

#[test]
fn first_phase_examples() {
    for (len, t) in [(3, 1), (3, 2), (6, 5), (9, 1 << 20), (1, 3)] {
        assert_eq!(lib_first_phase(len, t), first_phase(len, t));
    }
    assert_eq!(lib_first_phase(6, 5), 9);
}

#[test]
fn complexity_examples() {
    let zero = kt_complexity(&bs("0"), 8, &seq()).unwrap();
    let cost = zero.cost.unwrap();
    assert_eq!((cost.program_len, cost.time, zero.status), (3, 1, BoundStatus::Exact));
    let one = kt_complexity(&bs("1"), 8, &seq()).unwrap();
    let cost = one.cost.unwrap();
    assert_eq!((cost.program_len, cost.time, cost.ceil()), (6, 2, 7));
    assert_eq!(kt_complexity(&bs("0"), 0, &seq()).unwrap().status, BoundStatus::LowerBoundOnly);

    // Brute force over every program of at most 9 bits.
    let records = oracle_ledger(12, 1);
    let shortest = |x: &str| records.iter().filter(|r| text(&r.output) == x).map(|r| r.program.len() as u32).min();
    for (x, km) in [("0", 3), ("1", 6)] {
        let found = km_complexity(&bs(x), 8, &seq()).unwrap();
        assert_eq!(found.length, Some(km));
        assert_eq!(found.status, BoundStatus::Exact);
        assert_eq!(shortest(x), Some(km));
    }
}

#[test]
fn incomputable_prefix_examples() {
    let set = incomputable_prefix_set(1, 1, &seq()).unwrap();
    assert!(set.contains(&bs("1")) && !set.contains(&bs("0")));
    let set = incomputable_prefix_set(4, 5, &seq()).unwrap();
    for x in &set {
        assert!(set.iter().all(|y| y == x || !y.is_prefix_of(x)), "{x} has a prefix in the set");
    }
}

#[test]
fn prior_examples() {
    let engine = PriorEngine::new(seq(), 20);
    let est = engine.estimate(PriorKind::Fast, &bs("0"), &rat(1, 2)).unwrap();
    assert!(est.certified && est.tail <= rat(1, 2) * &est.lower);
    let deeper = engine.estimate_at(PriorKind::Fast, &bs("0"), &rat(1, 2), est.phases_used + 4).unwrap();
    assert!(est.interval().contains_interval(&deeper.interval()));

    let kt = engine.estimate_at(PriorKind::Kt, &bs("0"), &rat(1, 2), 12).unwrap();
    assert!(kt.lower >= rat(1, 8));
    let empty = engine.estimate(PriorKind::Kt, &BitString::new(), &rat(1, 2)).unwrap();
    assert_eq!((empty.lower, empty.tail), (rat(1, 1), rat(0, 1)));

    let c0 = engine.conditional(PriorKind::Fast, &BitString::new(), false, &rat(1, 2)).unwrap();
    let c1 = engine.conditional(PriorKind::Fast, &BitString::new(), true, &rat(1, 2)).unwrap();
    assert!(c0.low > *c1.high.as_ref().unwrap());
    let tight = engine.conditional(PriorKind::Fast, &BitString::new(), false, &rat(1, 4)).unwrap();
    assert!(c0.contains_interval(&tight));
}

#[test]
fn measure_examples() {
    let uniform: MeasureSpec = "uniform".parse().unwrap();
    let bern: MeasureSpec = "bernoulli:2/3".parse().unwrap();
    let alt: MeasureSpec = "detseq:alternating".parse().unwrap();
    assert_eq!(uniform.eval(&bs("0110")), rat(1, 16));
    assert_eq!(bern.eval(&bs("10")), rat(2, 9));
    assert_eq!((alt.eval(&bs("0101")), alt.eval(&bs("0100"))), (rat(1, 1), rat(0, 1)));

    let iv = |s: &MeasureSpec, x: &str| {
        let d = output_interval(s, &bs(x)).unwrap();
        (d.low, d.high)
    };
    assert_eq!(iv(&bern, "0"), (rat(0, 1), rat(1, 3)));
    assert_eq!(iv(&bern, "10"), (rat(1, 3), rat(5, 9)));
    assert_eq!(iv(&uniform, "01"), (rat(1, 4), rat(1, 2)));

    assert_eq!(decoder_run(&uniform, &bs("01"), 8), bs("01"));
    assert_eq!(decoder_run(&bern, &bs("00"), 8), bs("0"));
    assert_eq!(decoder_run(&bern, &bs("0"), 8), BitString::new());
    assert_eq!(decoder_km(&uniform, &bs("01"), 12).unwrap(), 2);
    assert_eq!(decoder_km(&bern, &bs("0"), 12).unwrap(), 2);
    assert_eq!(decoder_mass(&uniform, &bs("01"), 5).unwrap(), rat(1, 4));
    assert_eq!(decoder_mass(&bern, &bs("0"), 4).unwrap(), rat(5, 16));
}

#[test]
fn decoder_output_is_the_deepest_containing_interval() {
    for spec in ["uniform", "bernoulli:2/3"] {
        let nu: MeasureSpec = spec.parse().unwrap();
        for len in 0..=10 {
            for p in strings_of_len(len) {
                let p = BitString::from_bits(p);
                let out = decoder_run(&nu, &p, 32);
                let input = speedprior::measures::DyadicInterval::of_input(&p);
                assert!(output_interval(&nu, &out).unwrap().contains(&input), "{spec} {p}");
                for b in [false, true] {
                    let child = out.with(b);
                    if let Ok(d) = output_interval(&nu, &child) {
                        assert!(!d.contains(&input), "{spec} {p} stops early");
                    }
                }
            }
        }
    }
}

#[test]
fn adversary_and_deviation_sums() {
    let eval = EvalConfig { enumerate: seq(), ..EvalConfig::new(PriorKind::Kt, rat(1, 2), 16) };
    let a = adversarial_sequence(&eval, 6).unwrap();
    let b = adversarial_sequence(&eval, 6).unwrap();
    assert_eq!(a.sequence, b.sequence);
    assert_eq!(a.sequence.get(0), Some(true));

    let fast = EvalConfig { enumerate: seq(), ..EvalConfig::new(PriorKind::Fast, rat(1, 2), 20) };
    let alt: BitString = "0101010101010101".parse().unwrap();
    let tally =
        speedprior::enumerate::tally_family(speedprior::enumerate::OutputTrie::prediction_family(&alt), 20, &seq()).unwrap();
    let steps = predict_sequence(&alt, &fast, &tally).unwrap();
    let mut previous = Interval::point(rat(0, 1));
    for m in 1..=steps.len() {
        let d = deviation_sum(&steps[..m]);
        assert!(d.low >= previous.low && d.high >= previous.high);
        previous = d;
    }
    let exact_ones: Vec<_> = steps
        .iter()
        .map(|s| speedprior::predictor::TraceStep {
            cond0: Interval::point(rat(1, 1)),
            cond1: Interval::point(rat(1, 1)),
            ..s.clone()
        })
        .collect();
    assert_eq!(deviation_sum(&exact_ones), Interval::point(rat(0, 1)));
}
