//! Config files and run manifests.
//!
//! A config file supplies values for flags that were not given on the
//! command line. It is either `key=value` lines (`#` starts a comment) or a
//! JSON object; a manifest written by an earlier run is accepted as is, in
//! which case its `config` object is used.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgMatches, CommandFactory, ValueHint};
use serde_json::{Map, Value};

use crate::args::Cli;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

const SUBCOMMANDS: [&str; 5] = ["simulate", "fit", "sample", "benchmark", "gibbs"];

pub fn command() -> clap::Command {
    let mut cmd = Cli::command();
    for name in SUBCOMMANDS {
        cmd = cmd.mut_subcommand(name, |s| s.args_override_self(true));
    }
    cmd
}

fn normalize(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('_', "-").to_lowercase()
}

fn value_to_string(v: &Value) -> Result<String, CliError> {
    Ok(match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Array(items) => items.iter().map(value_to_string).collect::<Result<Vec<_>, _>>()?.join(","),
        other => return Err(CliError::Usage(format!("unsupported config value {other}"))),
    })
}

/// Parsed `(key, value)` pairs plus the subcommand a manifest was written for.
pub fn load(path: &Path) -> Result<(Vec<(String, String)>, Option<String>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let json: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
        let obj = json.as_object().ok_or_else(|| CliError::Usage("config must be a JSON object".into()))?;
        let command = obj.get("command").and_then(Value::as_str).map(str::to_string);
        let entries = match obj.get("config") {
            Some(Value::Object(inner)) => inner,
            _ => obj,
        };
        let pairs = entries
            .iter()
            .filter(|(k, _)| !(command.is_some() && k.as_str() == "command"))
            .map(|(k, v)| Ok((normalize(k), value_to_string(v)?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        return Ok((pairs, command));
    }
    let mut pairs = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{}:{}: expected key=value", path.display(), k + 1)))?;
        pairs.push((normalize(key), value.trim().to_string()));
    }
    Ok((pairs, None))
}

fn long_names(cmd: &clap::Command) -> BTreeSet<String> {
    cmd.get_arguments().filter_map(|a| a.get_long().map(str::to_string)).collect()
}

/// Appends config values for every flag absent from `argv`.
pub fn apply(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let strs: Vec<String> = argv.iter().map(|s| s.to_string_lossy().into_owned()).collect();
    let mut config_path = None;
    let mut given = BTreeSet::new();
    let mut sub = None;
    for (k, tok) in strs.iter().enumerate().skip(1) {
        if let Some(flag) = tok.strip_prefix("--") {
            let (name, inline) = match flag.split_once('=') {
                Some((n, v)) => (n, Some(v.to_string())),
                None => (flag, None),
            };
            given.insert(name.to_string());
            if name == "config" {
                config_path = inline.or_else(|| strs.get(k + 1).cloned());
            }
        } else if sub.is_none() && SUBCOMMANDS.contains(&tok.as_str()) {
            // a bare token right after `--flag` is that flag's value
            let prev = &strs[k - 1];
            if k == 1 || !(prev.starts_with("--") && !prev.contains('=')) {
                sub = Some(tok.clone());
            }
        }
    }
    let (Some(path), Some(sub)) = (config_path, sub) else {
        return Ok(argv);
    };
    let (pairs, written_for) = load(Path::new(&path))?;
    if let Some(w) = written_for {
        if w != sub {
            return Err(CliError::Usage(format!("manifest was written by `{w}`, not `{sub}`")));
        }
    }
    let root = command();
    let mut known = long_names(&root);
    if let Some(s) = root.find_subcommand(&sub) {
        known.extend(long_names(s));
    }
    let mut out = argv;
    for (key, value) in pairs {
        if key == "config" || given.contains(&key) {
            continue;
        }
        if !known.contains(&key) {
            return Err(CliError::Usage(format!("unknown config key `{key}` for `{sub}`")));
        }
        out.push(format!("--{key}").into());
        out.push(value.into());
    }
    Ok(out)
}

/// Resolved configuration of the invoked subcommand, defaults included.
/// Path values are made absolute so the manifest can be replayed from
/// anywhere.
pub fn manifest(matches: &ArgMatches) -> Value {
    let root = command();
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let sub_cmd = root.find_subcommand(name).expect("known subcommand");
    let mut config = Map::new();
    let args = root.get_arguments().chain(sub_cmd.get_arguments());
    let mut seen = BTreeSet::new();
    for arg in args {
        let id = arg.get_id().as_str();
        let Some(long) = arg.get_long() else { continue };
        if long == "config" || !seen.insert(long.to_string()) {
            continue;
        }
        let Ok(Some(raw)) = sub.try_get_raw(id) else { continue };
        let is_path = matches!(arg.get_value_hint(), ValueHint::FilePath | ValueHint::DirPath);
        let values: Vec<String> = raw
            .map(|v| {
                if is_path {
                    std::path::absolute(v).unwrap_or_else(|_| PathBuf::from(v)).to_string_lossy().into_owned()
                } else {
                    v.to_string_lossy().into_owned()
                }
            })
            .collect();
        config.insert(long.to_string(), Value::String(values.join(",")));
    }
    serde_json::json!({
        "tool": "sicf",
        "version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "config": Value::Object(config),
    })
}
