//! TOML run files: `--config` defaults and the manifest written by every run.
//!
//! Top-level keys are global flags; one table named after the subcommand
//! holds its flags. Keys use the flag names with `_` for `-`.

use std::ffi::OsString;
use std::path::Path;

use crate::args::Cli;

pub const SUBCOMMANDS: [&str; 9] = [
    "error", "relerr", "extrema", "pdf", "benchmark", "simulate", "quadstudy", "sweep", "pitfall",
];

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn flag_tokens(table: &toml::Table) -> Result<Vec<OsString>, String> {
    let mut out = Vec::new();
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            toml::Value::Boolean(true) => out.push(flag.into()),
            toml::Value::Boolean(false) => {}
            toml::Value::String(s) => out.extend([flag.into(), s.into()]),
            toml::Value::Integer(i) => out.extend([flag.into(), i.to_string().into()]),
            toml::Value::Float(f) => out.extend([flag.into(), f.to_string().into()]),
            _ => return Err(format!("config key '{key}' must be a string, number or boolean")),
        }
    }
    Ok(out)
}

/// Inserts the values of a `--config` file ahead of the command-line flags so
/// that the latter override them.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args[1..]) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.to_string_lossy()))?;
    let table: toml::Table = text.parse().map_err(|e| format!("{}: {e}", path.to_string_lossy()))?;

    let mut globals = toml::Table::new();
    let mut sub: Option<(String, toml::Table)> = None;
    for (k, v) in table {
        match v {
            toml::Value::Table(t) if SUBCOMMANDS.contains(&k.as_str()) => {
                if sub.is_some() {
                    return Err("config file names more than one subcommand".into());
                }
                sub = Some((k, t));
            }
            toml::Value::Table(_) => return Err(format!("unknown subcommand table [{k}] in config file")),
            v => {
                globals.insert(k, v);
            }
        }
    }

    let mut out = vec![args[0].clone()];
    out.extend(flag_tokens(&globals)?);
    let rest = &args[1..];
    let pos = rest.iter().position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()));
    match (pos, sub) {
        (Some(p), Some((name, t))) => {
            if rest[p].to_string_lossy() != name {
                return Err(format!("config file is for '{name}', not '{}'", rest[p].to_string_lossy()));
            }
            out.extend(rest[..=p].iter().cloned());
            out.extend(flag_tokens(&t)?);
            out.extend(rest[p + 1..].iter().cloned());
        }
        (None, Some((name, t))) => {
            out.extend(rest.iter().cloned());
            out.push(name.into());
            out.extend(flag_tokens(&t)?);
        }
        (_, None) => out.extend(rest.iter().cloned()),
    }
    Ok(out)
}

/// Writes the effective parameters in `--config` format.
pub fn write_manifest(cli: &Cli, path: &Path, threads: usize) -> std::io::Result<()> {
    let body = toml::to_string(cli).map_err(std::io::Error::other)?;
    let text = format!(
        "# swarmcov {} manifest; rerun with --config {}\n# worker threads: {threads}\n{body}",
        env!("CARGO_PKG_VERSION"),
        path.display()
    );
    std::fs::write(path, text)
}
