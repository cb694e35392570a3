//! `--config <file>` support: keys of a flat TOML table become command-line flags placed
//! before the user's own arguments, so anything given on the command line wins.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Returns `args` with the flags from any `--config` file spliced in after the subcommand.
pub fn merge_config_file(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let injected = flags_from_toml(&text).with_context(|| format!("config {path}"))?;
    let Some(sub) = args.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')) else {
        return Ok(args);
    };
    let at = sub + 2;
    let mut merged = args[..at].to_vec();
    merged.extend(injected.into_iter().map(OsString::from));
    merged.extend_from_slice(&args[at..]);
    Ok(merged)
}

fn config_path(args: &[OsString]) -> Option<String> {
    let mut it = args.iter().map(|a| a.to_string_lossy().into_owned());
    while let Some(arg) = it.next() {
        if arg == "--config" {
            return it.next();
        }
        if let Some(v) = arg.strip_prefix("--config=") {
            return Some(v.to_owned());
        }
    }
    None
}

/// `key = value` pairs to `--key value` (underscores become dashes). `true` booleans become
/// bare switches and `false` ones are dropped.
pub fn flags_from_toml(text: &str) -> Result<Vec<String>> {
    let table: toml::Table = text.parse()?;
    let mut flags = Vec::new();
    for (key, value) in table {
        // `resolved` holds derived settings echoed by a previous run, not flags.
        if key == "command" || key == "config" || key == "resolved" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        let rendered = match value {
            toml::Value::String(s) => s,
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            toml::Value::Boolean(true) => {
                flags.push(flag);
                continue;
            }
            toml::Value::Boolean(false) => continue,
            toml::Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    toml::Value::String(s) => Ok(s.clone()),
                    other => bail!("key {key}: unsupported list item {other}"),
                })
                .collect::<Result<Vec<_>>>()?
                .join(","),
            other => bail!("key {key}: unsupported value {other}"),
        };
        flags.push(flag);
        flags.push(rendered);
    }
    Ok(flags)
}

/// Writes `value` as TOML to `<dir>/effective_config.toml`.
pub fn write_effective_config<T: serde::Serialize>(dir: &Path, command: &str, value: &T) -> Result<()> {
    let mut table = toml::Table::try_from(value).context("serializing effective config")?;
    table.insert("command".into(), toml::Value::String(command.into()));
    let path = dir.join("effective_config.toml");
    std::fs::write(&path, toml::to_string(&table)?).with_context(|| format!("writing {}", path.display()))
}
