//! Flat `key = value` configuration files that mirror command-line flags.
//!
//! Keys are flag names without the leading dashes (`k-cap` or `k_cap`).
//! Boolean flags take `true` or `false`. The optional `command` key names the
//! subcommand when the command line does not. Values from the file are
//! placed before the command-line flags, so flags given explicitly win.

use std::path::Path;

use anyhow::{bail, Context, Result};

const BOOLEAN_FLAGS: &[&str] = &["strict", "no-timestamp", "decimal"];
const COMMANDS: &[&str] = &["prior", "predict", "adversarial", "verify", "enumerate", "decoder"];

#[derive(Debug, Default, PartialEq, Eq)]
pub struct ConfigFile {
    pub command: Option<String>,
    pub args: Vec<String>,
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let mut out = ConfigFile::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected key = value", lineno + 1);
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            bail!("config line {}: empty key", lineno + 1);
        }
        if key == "command" {
            out.command = Some(value.to_string());
        } else if key == "config" {
            bail!("config line {}: nested config files are not supported", lineno + 1);
        } else if BOOLEAN_FLAGS.contains(&key.as_str()) {
            match value {
                "true" => out.args.push(format!("--{key}")),
                "false" => {}
                other => bail!("config line {}: `{key}` expects true or false, got `{other}`", lineno + 1),
            }
        } else {
            out.args.push(format!("--{key}"));
            out.args.push(value.to_string());
        }
    }
    Ok(out)
}

/// Removes `--config <path>` from `argv` and splices the file's flags in
/// right after the subcommand.
pub fn expand_argv(argv: Vec<String>) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut iter = argv.into_iter();
    while let Some(arg) = iter.next() {
        if arg == "--config" {
            path = Some(iter.next().context("--config needs a file path")?);
        } else if let Some(p) = arg.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(Path::new(&path)).with_context(|| format!("reading config file {path}"))?;
    let config = parse_config(&text)?;
    let pos = rest.iter().position(|a| COMMANDS.contains(&a.as_str()));
    let (mut out, insert_at) = match (pos, config.command) {
        (Some(i), Some(cmd)) if rest[i] != cmd => {
            bail!("config file names command `{cmd}` but the command line asks for `{}`", rest[i])
        }
        (Some(i), _) => (rest, i + 1),
        (None, Some(cmd)) => {
            if !COMMANDS.contains(&cmd.as_str()) {
                bail!("config file names unknown command `{cmd}`");
            }
            let mut v = rest;
            let at = 1.min(v.len());
            v.insert(at, cmd);
            (v, at + 1)
        }
        (None, None) => bail!("no command given on the command line or in the config file"),
    };
    for (offset, arg) in config.args.into_iter().enumerate() {
        out.insert(insert_at + offset, arg);
    }
    Ok(out)
}
