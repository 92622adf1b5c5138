//! Artifact assembly: every file or stream this tool emits carries the full
//! run configuration, so results stay traceable to the flags that made them.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mmfs::{Error, Result};
use serde_json::Value;

/// The run configuration as one JSON object: subcommand name, run seed, and
/// the complete flag set of that subcommand.
pub fn run_config_value<T: serde::Serialize>(subcommand: &str, seed: u64, args: &T) -> Value {
    let mut v = serde_json::json!({
        "subcommand": subcommand,
        "seed": seed,
    });
    let flags = serde_json::to_value(args).expect("flag serialization cannot fail");
    v["args"] = flags;
    v
}

/// Single-line comment form for text artifacts (TSV/CSV/SVMlight all treat
/// `#` as a comment).
pub fn run_config_line(config: &Value) -> String {
    format!("# run_config: {config}\n")
}

/// Injects the config echo into a JSON artifact object.
pub fn embed_run_config(mut artifact: Value, config: &Value) -> Value {
    artifact["run_config"] = config.clone();
    artifact
}

/// Pretty JSON with a trailing newline; key order is deterministic.
pub fn json_text(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON serialization cannot fail");
    s.push('\n');
    s
}

/// Where the primary artifact goes: a file stem or standard output.
pub enum Sink {
    Stdout,
    Stem(PathBuf),
}

impl Sink {
    pub fn new(out: &Option<PathBuf>) -> Sink {
        match out {
            Some(p) => Sink::Stem(p.clone()),
            None => Sink::Stdout,
        }
    }

    /// Writes `content` either to stdout or to `<stem><suffix>`.
    pub fn write(&self, suffix: &str, content: &str) -> Result<()> {
        match self {
            Sink::Stdout => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                lock.write_all(content.as_bytes()).map_err(Error::Io)?;
                lock.flush().map_err(Error::Io)?;
                Ok(())
            }
            Sink::Stem(stem) => write_file(&with_suffix(stem, suffix), content),
        }
    }

    /// File path for a secondary artifact, or `None` when running to stdout.
    pub fn side_path(&self, suffix: &str) -> Option<PathBuf> {
        match self {
            Sink::Stdout => None,
            Sink::Stem(stem) => Some(with_suffix(stem, suffix)),
        }
    }
}

/// Appends a suffix to the stem's file name (`out/run` + `.ranking.tsv`
/// gives `out/run.ranking.tsv`).
pub fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut name = stem
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(suffix);
    stem.with_file_name(name)
}

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(Error::Io)
}
