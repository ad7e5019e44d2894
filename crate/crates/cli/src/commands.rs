//! Command dispatch: each command returns its rendered report.

use anyhow::{bail, Result};
use serde_json::json;

use speedprior::enumerate::{enumerate_up_to_phase, EnumerateConfig, Mode};
use speedprior::measures::{decoder_km, decoder_mass, decoder_programs, decoder_run, output_interval, MeasureSpec};
use speedprior::predictor::{adversarial_sequence, default_max_n, run_experiment, EvalConfig, ExperimentConfig, PredictionTrace};
use speedprior::priors::{PriorEngine, PriorKind};
use speedprior::rational::{format_decimal, format_rational, Interval, Rational};
use speedprior::verify::{self, CheckReport};
use speedprior::Workers;

use crate::render::{decimal_block, exact, interval_decimal, interval_text, json_report, text_header};
use crate::{Cli, Command, Format, GlobalOpts, Suite};

pub struct Outcome {
    pub report: String,
    /// Some result was not certified.
    pub uncertified: bool,
    /// A verification failed.
    pub failed: bool,
}

impl Outcome {
    fn ok(report: String) -> Self {
        Self { report, uncertified: false, failed: false }
    }
}

fn enumerate_config(opts: &GlobalOpts, k_cap: u32) -> EnumerateConfig {
    let base = EnumerateConfig::default();
    base.with_workers(Workers::from_count(opts.workers)).with_phase_cap(base.phase_cap.max(k_cap))
}

fn reject_format(command: &str, format: Format, allowed: &[Format]) -> Result<()> {
    if !allowed.contains(&format) {
        bail!("--format {format:?} is not available for `{command}`", format = format_name(format));
    }
    Ok(())
}

fn format_name(format: Format) -> &'static str {
    match format {
        Format::Json => "json",
        Format::Jsonl => "jsonl",
        Format::Csv => "csv",
        Format::Text => "text",
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let opts = &cli.global;
    match &cli.command {
        Command::Prior { kind, x, eps, k_cap } => prior(opts, *kind, x, eps, *k_cap),
        Command::Predict { kind, env, n, eps, seed, k_cap, loss, tie_break, max_tightenings, max_n } => {
            let k_cap = k_cap.unwrap_or(match kind {
                PriorKind::Fast => 28,
                PriorKind::Kt => 20,
            });
            let mut eval = EvalConfig::new(*kind, eps.clone(), k_cap);
            eval.loss = loss.clone();
            eval.tie_break = *tie_break;
            eval.max_tightenings = *max_tightenings;
            eval.enumerate = enumerate_config(opts, k_cap);
            let cfg = ExperimentConfig {
                env: env.clone(),
                eval,
                n: *n,
                seed: *seed,
                max_n: max_n.unwrap_or_else(|| default_max_n(*kind)),
            };
            predict(opts, &cfg)
        }
        Command::Adversarial { kind, eps, n, k_cap, max_tightenings, max_n } => {
            let limit = max_n.unwrap_or_else(|| default_max_n(*kind));
            if *n > limit {
                bail!("n = {n} exceeds the budget of {limit} for the {kind} prior (raise it with --max-n)");
            }
            let mut eval = EvalConfig::new(*kind, eps.clone(), *k_cap);
            eval.max_tightenings = *max_tightenings;
            eval.enumerate = enumerate_config(opts, *k_cap);
            adversarial(opts, &eval, *n)
        }
        Command::Verify { suite, k, max_len } => verify_suite(opts, *suite, *k, *max_len),
        Command::Enumerate { k, mode } => enumerate(opts, *k, *mode),
        Command::Decoder { env, x, input, depth, max_output } => {
            decoder(opts, env, x.as_ref(), input.as_ref(), *depth, *max_output)
        }
    }
}

fn prior(opts: &GlobalOpts, kind: PriorKind, x: &speedprior::BitString, eps: &Rational, k_cap: u32) -> Result<Outcome> {
    reject_format("prior", opts.format, &[Format::Json, Format::Text])?;
    let engine = PriorEngine::new(enumerate_config(opts, k_cap), k_cap);
    let est = engine.estimate(kind, x, eps)?;
    let report = match opts.format {
        Format::Text => {
            let mut s = text_header(&format!("S_{kind}({x})"), opts);
            s += &format!("lower     {}\n", exact(&est.lower, opts));
            s += &format!("tail      {}\n", exact(&est.tail, opts));
            s += &format!("upper     {}\n", exact(&est.upper(), opts));
            s += &format!("phases    {}\n", est.phases_used);
            s += &format!("epsilon   {}\n", format_rational(&est.epsilon));
            s += &format!("certified {}\n", est.certified);
            if let Some(d) = &est.diagnostic {
                s += &format!("note      {d}\n");
            }
            s
        }
        _ => {
            let mut v = serde_json::to_value(&est)?;
            if opts.decimal {
                let upper = est.upper();
                v["decimal"] = decimal_block(&[("lower", &est.lower), ("tail", &est.tail), ("upper", &upper)]);
            }
            json_report(v, opts)
        }
    };
    Ok(Outcome { report, uncertified: !est.certified, failed: false })
}

const CSV_COLUMNS: [&str; 12] = [
    "t",
    "x_t",
    "y_t",
    "loss",
    "cond0_low",
    "cond0_high",
    "cond1_low",
    "cond1_high",
    "k_used",
    "certified",
    "cum_loss",
    "cum_informed_loss",
];

/// Columns holding rationals; renamed when rendered as decimals.
const RATIONAL_COLUMNS: [&str; 7] =
    ["loss", "cond0_low", "cond0_high", "cond1_low", "cond1_high", "cum_loss", "cum_informed_loss"];

fn trace_csv(trace: &PredictionTrace, opts: &GlobalOpts) -> Result<String> {
    let value = |r: &Rational| if opts.decimal { format_decimal(r) } else { format_rational(r) };
    let high = |i: &Interval| i.high.as_ref().map_or_else(|| "inf".to_string(), value);
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = CSV_COLUMNS
        .iter()
        .map(|c| if opts.decimal && RATIONAL_COLUMNS.contains(c) { format!("{c}_approx") } else { c.to_string() })
        .collect();
    w.write_record(&header)?;
    for s in &trace.steps {
        w.write_record([
            s.t.to_string(),
            u8::from(s.x_t).to_string(),
            u8::from(s.y_t).to_string(),
            value(&s.loss),
            value(&s.cond0.low),
            high(&s.cond0),
            value(&s.cond1.low),
            high(&s.cond1),
            s.k_used.to_string(),
            s.certified.to_string(),
            value(&s.cum_loss),
            value(&s.cum_informed_loss),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn predict(opts: &GlobalOpts, cfg: &ExperimentConfig) -> Result<Outcome> {
    reject_format("predict", opts.format, &[Format::Json, Format::Csv, Format::Text])?;
    let trace = run_experiment(cfg)?;
    let sum = &trace.summary;
    let report = match opts.format {
        Format::Csv => trace_csv(&trace, opts)?,
        Format::Text => {
            let mut s = text_header(&format!("predict {} with S_{}", trace.env, trace.kind), opts);
            s += &format!("sequence          {}\n", trace.sequence);
            let predictions: String = trace.steps.iter().map(|st| if st.y_t { '1' } else { '0' }).collect();
            s += &format!("predictions       {predictions}\n");
            s += &format!("errors            {}\n", sum.errors);
            s += &format!("cum_loss          {}\n", exact(&sum.cum_loss, opts));
            s += &format!("cum_informed_loss {}\n", exact(&sum.cum_informed_loss, opts));
            s += &format!("d_hat_n           {}\n", sum.d_hat_n.map_or("inf".into(), |d| format!("{d:.6}")));
            if let Some(dev) = &sum.deviation_sum {
                s += &format!("deviation_sum     {}\n", interval_text(dev, opts));
            }
            s += &format!("entropy_nats      {:.6}\n", sum.entropy_nats);
            s += &format!("uncertified_steps {}\n", sum.uncertified_steps);
            s
        }
        _ => {
            let mut v = serde_json::to_value(&trace)?;
            if opts.decimal {
                if let Some(dev) = &sum.deviation_sum {
                    v["summary"]["decimal"] = json!({ "approximate": true, "deviation_sum": interval_decimal(dev) });
                }
            }
            json_report(v, opts)
        }
    };
    Ok(Outcome { report, uncertified: sum.uncertified_steps > 0, failed: false })
}

fn adversarial(opts: &GlobalOpts, eval: &EvalConfig, n: usize) -> Result<Outcome> {
    reject_format("adversarial", opts.format, &[Format::Json, Format::Text])?;
    let run = adversarial_sequence(eval, n)?;
    let uncertified = run.certified.iter().any(|c| !c);
    let report = match opts.format {
        Format::Text => {
            let mut s = text_header(&format!("adversarial sequence for S_{}", run.kind), opts);
            s += &format!("{}\n", run.sequence);
            s
        }
        _ => json_report(serde_json::to_value(&run)?, opts),
    };
    Ok(Outcome { report, uncertified, failed: false })
}

fn verify_suite(opts: &GlobalOpts, suite: Suite, k: Option<u32>, max_len: Option<usize>) -> Result<Outcome> {
    reject_format("verify", opts.format, &[Format::Json, Format::Text])?;
    let cfg = enumerate_config(opts, k.unwrap_or(0));
    let run_one = |s: Suite| -> Result<Vec<CheckReport>> {
        Ok(match s {
            Suite::Steps => {
                let top = k.unwrap_or(12);
                (1..=top).map(|i| verify::check_steps(i, &cfg)).collect::<Result<_, _>>()?
            }
            Suite::Records => vec![verify::check_records(k.unwrap_or(10), &cfg)?],
            Suite::Equivalence => vec![verify::check_equivalence(k.unwrap_or(10), &cfg)?],
            Suite::Kraft => vec![verify::check_kraft(k.unwrap_or(14), max_len.unwrap_or(4), &cfg)?],
            Suite::Envelopes => vec![verify::check_envelopes(k.unwrap_or(12), max_len.unwrap_or(3), &cfg)?],
            Suite::Mass => vec![verify::check_mass(&[1, 2, 4, 8], max_len.unwrap_or(6), k.unwrap_or(16), &cfg)?],
            Suite::Decoder => {
                let specs: [MeasureSpec; 2] = [MeasureSpec::Uniform, "bernoulli:2/3".parse()?];
                vec![verify::check_decoder(&specs, max_len.unwrap_or(5), k.unwrap_or(12))]
            }
            Suite::All => unreachable!("expanded by the caller"),
        })
    };
    let suites = match suite {
        Suite::All => {
            vec![Suite::Steps, Suite::Records, Suite::Equivalence, Suite::Kraft, Suite::Envelopes, Suite::Mass, Suite::Decoder]
        }
        s => vec![s],
    };
    let mut checks = Vec::new();
    for s in suites {
        checks.extend(run_one(s)?);
    }
    let passed = checks.iter().all(|c| c.passed);
    let report = match opts.format {
        Format::Text => {
            let mut s = text_header("verify", opts);
            for c in &checks {
                s += &format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            s
        }
        _ => json_report(json!({ "passed": passed, "checks": checks }), opts),
    };
    Ok(Outcome { report, uncertified: false, failed: !passed })
}

fn enumerate(opts: &GlobalOpts, k: u32, mode: Mode) -> Result<Outcome> {
    let ledger = enumerate_up_to_phase(k, mode, &enumerate_config(opts, k))?;
    let report = match opts.format {
        Format::Jsonl => ledger.to_jsonl(),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["program", "output", "time", "firstPhase"])?;
            for r in ledger.records() {
                w.write_record([r.program.to_string(), r.output.to_string(), r.time.to_string(), r.first_phase.to_string()])?;
            }
            String::from_utf8(w.into_inner()?)?
        }
        Format::Text => {
            let mut s = text_header(&format!("ledger up to phase {k} ({mode:?} mode)"), opts);
            s += &format!("records {}\n", ledger.len());
            if let Some(n) = ledger.naive_step_count() {
                s += &format!("naiveStepCount {n}\n");
            }
            for r in ledger.records() {
                s += &format!("{:>3} {} -> {} t={}\n", r.first_phase, r.program, r.output, r.time);
            }
            s
        }
        Format::Json => json_report(
            json!({
                "maxPhase": k,
                "mode": mode,
                "naiveStepCount": ledger.naive_step_count().map(|n| n.to_string()),
                "records": ledger.records(),
            }),
            opts,
        ),
    };
    Ok(Outcome::ok(report))
}

fn decoder(
    opts: &GlobalOpts,
    env: &MeasureSpec,
    x: Option<&speedprior::BitString>,
    input: Option<&speedprior::BitString>,
    depth: u32,
    max_output: usize,
) -> Result<Outcome> {
    reject_format("decoder", opts.format, &[Format::Json, Format::Text])?;
    if x.is_none() && input.is_none() {
        bail!("decoder needs --x, --input, or both");
    }
    let mut v = json!({ "env": env.to_string(), "depth": depth });
    let mut text = text_header(&format!("decoder for {env}"), opts);
    if let Some(x) = x {
        let mu = env.eval(x);
        let interval = output_interval(env, x)?;
        let km = decoder_km(env, x, depth)?;
        let mass = decoder_mass(env, x, depth)?;
        let programs: Vec<String> = decoder_programs(env, x, depth)?.iter().map(|p| p.to_string()).collect();
        let mut xv = json!({
            "x": x.to_string(),
            "measure": format_rational(&mu),
            "interval": { "low": format_rational(&interval.low), "high": format_rational(&interval.high) },
            "km": km,
            "mass": format_rational(&mass),
            "programs": programs,
        });
        if opts.decimal {
            xv["decimal"] = decimal_block(&[("measure", &mu), ("mass", &mass)]);
        }
        v["output"] = xv;
        text += &format!("x         {x}\n");
        text += &format!("measure   {}\n", exact(&mu, opts));
        text += &format!("interval  [{}, {})\n", exact(&interval.low, opts), exact(&interval.high, opts));
        text += &format!("km        {km}\n");
        text += &format!("mass      {}\n", exact(&mass, opts));
        text += &format!("programs  {}\n", programs.join(" "));
    }
    if let Some(p) = input {
        let out = decoder_run(env, p, max_output);
        v["run"] = json!({ "input": p.to_string(), "output": out.to_string() });
        text += &format!("input     {p}\noutput    {out}\n");
    }
    let report = match opts.format {
        Format::Text => text,
        _ => json_report(v, opts),
    };
    Ok(Outcome::ok(report))
}
