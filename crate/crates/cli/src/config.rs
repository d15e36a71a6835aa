//! Flat `key=value` config files, merged into the command line as flags.

use anyhow::{bail, Context, Result};

pub const SUBCOMMANDS: [&str; 9] = [
    "eigen",
    "kms-check",
    "counterexample",
    "nonuniqueness",
    "transverse",
    "bowen",
    "twosided",
    "baker",
    "algebra-props",
];

/// Parsed config: the optional `command` entry and the remaining entries in
/// file order.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct ConfigFile {
    pub command: Option<String>,
    pub entries: Vec<(String, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = ConfigFile::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("config line {}: expected key=value, got {line:?}", n + 1);
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                bail!("config line {}: empty key", n + 1);
            }
            if k == "command" {
                out.command = Some(v.to_string());
            } else {
                out.entries.push((k.to_string(), v.to_string()));
            }
        }
        Ok(out)
    }

    pub fn read(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {path}"))?;
        Self::parse(&text)
    }
}

/// Rewrites the argument list so that config entries come first as
/// `--key value` flags after the subcommand. Later flags override earlier
/// ones, so anything given on the command line wins.
pub fn expand_args(args: Vec<String>) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    let prog = it.next().unwrap_or_else(|| "haarkit".into());
    while let Some(a) = it.next() {
        if a == "--config" {
            config = Some(it.next().context("--config needs a path")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        let mut out = vec![prog];
        out.extend(rest);
        return Ok(out);
    };
    let cfg = ConfigFile::read(&path)?;
    let pos = rest.iter().position(|a| SUBCOMMANDS.contains(&a.as_str()));
    let command = match (pos, &cfg.command) {
        (Some(i), _) => rest.remove(i),
        (None, Some(c)) => c.clone(),
        (None, None) => bail!("no subcommand given and config {path} has no command entry"),
    };
    let mut out = vec![prog, command];
    for (k, v) in cfg.entries {
        out.push(format!("--{k}"));
        out.push(v);
    }
    out.extend(rest);
    Ok(out)
}
