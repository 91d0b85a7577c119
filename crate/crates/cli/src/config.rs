//! Optional flat `key=value` default files.
//!
//! `--config <path>` loads defaults whose keys are long flag names (without
//! the leading dashes). Flags given on the command line always win: a config
//! entry is appended only when its flag is absent from the invocation.

use fedsynth_core::error::{Error, Result};

/// Extracts `--config`, loads it, and appends missing flags. Returns the
/// argument vector to hand to the parser.
pub fn inject(args: Vec<String>) -> Result<Vec<String>> {
    let mut out: Vec<String> = Vec::with_capacity(args.len());
    let mut config_path: Option<String> = None;
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        if arg == "--config" {
            let path = iter
                .next()
                .ok_or_else(|| Error::Config("--config needs a file path".into()))?;
            config_path = Some(path);
        } else if let Some(path) = arg.strip_prefix("--config=") {
            config_path = Some(path.to_owned());
        } else {
            out.push(arg);
        }
    }

    let Some(path) = config_path else {
        return Ok(out);
    };
    let content = std::fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("cannot read config {path}: {e}")))?;
    for (lineno, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse(format!(
                "config {path} line {}: expected key=value, got {line:?}",
                lineno + 1
            )));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key == "config" {
            return Err(Error::Parse(format!(
                "config {path} line {}: invalid key {key:?}",
                lineno + 1
            )));
        }
        let flag = format!("--{key}");
        let given = out.iter().any(|a| a == &flag || a.starts_with(&format!("{flag}=")));
        if !given {
            out.push(format!("{flag}={value}"));
        }
    }
    Ok(out)
}
