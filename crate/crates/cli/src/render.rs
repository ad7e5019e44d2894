//! Shared report formatting.

use serde_json::{json, Value};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use speedprior::rational::{format_decimal, format_rational, Interval, Rational};

use crate::GlobalOpts;

pub fn timestamp() -> String {
    OffsetDateTime::now_utc().format(&Rfc3339).unwrap_or_default()
}

/// Pretty JSON with the optional `generatedAt` field appended.
pub fn json_report(mut value: Value, opts: &GlobalOpts) -> String {
    if !opts.no_timestamp {
        if let Value::Object(map) = &mut value {
            map.insert("generatedAt".into(), Value::String(timestamp()));
        }
    }
    let mut text = serde_json::to_string_pretty(&value).expect("reports serialize");
    text.push('\n');
    text
}

/// Text header line carrying the timestamp unless suppressed.
pub fn text_header(title: &str, opts: &GlobalOpts) -> String {
    if opts.no_timestamp {
        format!("{title}\n")
    } else {
        format!("{title} (generated {})\n", timestamp())
    }
}

/// Exact rendering, followed by an approximate decimal when requested.
pub fn exact(r: &Rational, opts: &GlobalOpts) -> String {
    if opts.decimal {
        format!("{} (~{})", format_rational(r), format_decimal(r))
    } else {
        format_rational(r)
    }
}

pub fn interval_text(i: &Interval, opts: &GlobalOpts) -> String {
    let high = i.high.as_ref().map_or_else(|| "inf".to_string(), |h| exact(h, opts));
    format!("[{}, {}]", exact(&i.low, opts), high)
}

/// Approximate decimal renderings keyed by name, labeled as such.
pub fn decimal_block(values: &[(&str, &Rational)]) -> Value {
    let mut map = serde_json::Map::new();
    map.insert("approximate".into(), Value::Bool(true));
    for (name, r) in values {
        map.insert((*name).into(), Value::String(format_decimal(r)));
    }
    Value::Object(map)
}

pub fn interval_decimal(i: &Interval) -> Value {
    json!({
        "low": format_decimal(&i.low),
        "high": i.high.as_ref().map(format_decimal),
    })
}
