//! Command results, rendering and file emission.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cavatten_core::analysis::round_sig;
use serde::Serialize;
use serde_json::{Map, Value};

/// Significant digits kept in every printed number, text and JSON alike.
pub const DIGITS: usize = 10;

#[derive(Debug, Clone)]
pub enum Field {
    Num(f64),
    Text(String),
    Flag(bool),
}

/// An ordered list of named scalar results.
#[derive(Debug, Clone, Default)]
pub struct Record {
    pub fields: Vec<(String, Field, &'static str)>,
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num(mut self, key: &str, value: f64, unit: &'static str) -> Self {
        self.fields.push((key.into(), Field::Num(round_sig(value, DIGITS)), unit));
        self
    }

    pub fn text(mut self, key: &str, value: impl Into<String>) -> Self {
        self.fields.push((key.into(), Field::Text(value.into()), ""));
        self
    }

    pub fn flag(mut self, key: &str, value: bool) -> Self {
        self.fields.push((key.into(), Field::Flag(value), ""));
        self
    }

    pub fn render_text(&self) -> String {
        let width = self.fields.iter().map(|f| f.0.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v, unit) in &self.fields {
            let v = match v {
                Field::Num(x) => fmt_num(*x),
                Field::Text(s) => s.clone(),
                Field::Flag(b) => b.to_string(),
            };
            let line = format!("{k:<width$}  {v} {unit}");
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (k, v, _) in &self.fields {
            let v = match v {
                Field::Num(x) if x.is_finite() => Value::from(*x),
                Field::Num(_) => Value::Null,
                Field::Text(s) => Value::from(s.clone()),
                Field::Flag(b) => Value::from(*b),
            };
            m.insert(k.clone(), v);
        }
        Value::Object(m)
    }
}

pub fn fmt_num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x != 0.0 && !(1e-4..1e7).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub text: String,
    pub json: Value,
    /// (file name, contents) written under `--out`.
    pub files: Vec<(String, String)>,
    /// Parsed input configuration, recorded in the manifest.
    pub config: Option<Value>,
    /// Set by `reproduce` when a check fails.
    pub failed: bool,
}

impl Outcome {
    pub fn record(r: Record) -> Self {
        Self {
            text: r.render_text(),
            json: r.to_json(),
            ..Self::default()
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config: Option<Value>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub outputs: Vec<PathBuf>,
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory and an atomic rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes the command's files plus `result.json` and `manifest.json` into `dir`.
pub fn emit_files(dir: &Path, outcome: &Outcome, command: Vec<String>, seed: Option<u64>) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, contents) in &outcome.files {
        let p = dir.join(name);
        write_atomic(&p, contents)?;
        written.push(p);
    }
    let result = dir.join("result.json");
    write_atomic(&result, &(serde_json::to_string_pretty(&outcome.json)? + "\n"))?;
    written.push(result);
    let manifest = RunManifest {
        command,
        config: outcome.config.clone(),
        seed,
        tool_version: cavatten_core::VERSION.to_string(),
        outputs: written.clone(),
    };
    let mpath = dir.join("manifest.json");
    write_atomic(&mpath, &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    written.push(mpath);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_and_json_agree() {
        let r = Record::new().num("x", 1.0 / 3.0, "K").num("y", f64::INFINITY, "").flag("ok", true);
        let text = r.render_text();
        let json = r.to_json();
        let x_text: f64 = text.lines().next().unwrap().split_whitespace().nth(1).unwrap().parse().unwrap();
        assert_eq!(x_text, json["x"].as_f64().unwrap());
        assert!(json["y"].is_null());
        assert!(text.contains("y   inf"));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
