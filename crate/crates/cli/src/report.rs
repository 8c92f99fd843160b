use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::{OutputFormat, RunConfig};
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A CSV table with a header row.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Trace {
    pub fn new(header: &[&'static str]) -> Self {
        Trace {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub results: Value,
    pub flags: BTreeSet<String>,
    pub seed: Option<u64>,
    pub trace: Option<Trace>,
}

impl Report {
    pub fn new(results: Value) -> Self {
        Report {
            results,
            flags: BTreeSet::new(),
            seed: None,
            trace: None,
        }
    }

    pub fn flags<I: IntoIterator<Item = S>, S: Into<String>>(mut self, flags: I) -> Self {
        self.flags.extend(flags.into_iter().map(Into::into));
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn trace(mut self, trace: Trace) -> Self {
        self.trace = Some(trace);
        self
    }

    pub fn to_json(&self, cfg: &RunConfig) -> String {
        let params: Map<String, Value> = cfg
            .params
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        let doc = json!({
            "command": cfg.command.as_str(),
            "params": params,
            "seed": self.seed,
            "results": self.results,
            "flags": self.flags,
            "version": VERSION,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("json values serialize");
        s.push('\n');
        s
    }
}

/// JSON number, with non-finite values spelled "inf", "-inf" or "nan".
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// Decimal rendering for CSV cells, matching the JSON spelling.
pub fn cell(x: f64) -> String {
    match num(x) {
        Value::String(s) => s,
        v => v.to_string(),
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Io(format!("{}: not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

pub fn csv_path(json_path: &Path) -> PathBuf {
    json_path.with_extension("csv")
}

/// Writes the report files, or returns the text for stdout when no output
/// path is configured.
pub fn emit(cfg: &RunConfig, report: &Report) -> Result<Option<String>, CliError> {
    match &cfg.output_path {
        Some(path) => {
            write_atomic(path, &report.to_json(cfg))?;
            if let Some(t) = &report.trace {
                write_atomic(&csv_path(path), &t.to_csv())?;
            }
            Ok(None)
        }
        None => match cfg.output {
            OutputFormat::Json => Ok(Some(report.to_json(cfg))),
            OutputFormat::Csv => match &report.trace {
                Some(t) => Ok(Some(t.to_csv())),
                None => Err(CliError::key(
                    "output",
                    format!("command '{}' produces no CSV trace", cfg.command),
                )),
            },
        },
    }
}
