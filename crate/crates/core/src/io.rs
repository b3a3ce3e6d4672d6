//! Text file formats.
//!
//! * Trace files: a header `frequency_<unit>,<name>` followed by one
//!   `frequency,value` pair per line, frequencies strictly ascending.
//! * Tables: a header of comma-separated column names, then rows of numbers.
//!   Column names carry their unit as a `_<unit>` suffix (`y_um`, `g_MHz`).
//! * Fit reports and manifests: TOML.
//!
//! In trace files and tables, blank lines and lines starting with `#` are
//! ignored. Parse errors carry 1-based line numbers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fitting::FitResult;
use crate::jc_model::SpectrumTrace;
use crate::units::{convert, Dimension};

pub const TRACE_HEADER: &str = "frequency_GHz,transmission";

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_number(what: &'static str, line: usize, field: &str) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
        what,
        line,
        reason: format!("`{}` is not a number", field.trim()),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            what,
            line,
            reason: format!("`{}` is not finite", field.trim()),
        });
    }
    Ok(v)
}

/// Split a `name_unit` column header; the unit is everything after the last
/// underscore.
fn split_unit(column: &str) -> Option<(&str, &str)> {
    column
        .rsplit_once('_')
        .filter(|(n, u)| !n.is_empty() && !u.is_empty())
}

pub fn write_trace(trace: &SpectrumTrace) -> String {
    let mut out = String::with_capacity(32 * trace.len() + 32);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for (f, v) in trace.iter() {
        let _ = writeln!(out, "{f},{v}");
    }
    out
}

pub fn parse_trace(text: &str) -> Result<SpectrumTrace> {
    const WHAT: &str = "trace";
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or(Error::Parse {
        what: WHAT,
        line: 0,
        reason: "empty file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() != 2 || cols[1].is_empty() {
        return Err(Error::Parse {
            what: WHAT,
            line: hline,
            reason: format!("expected header `{TRACE_HEADER}`, found `{header}`"),
        });
    }
    let unit = match split_unit(cols[0]) {
        Some(("frequency", unit)) if convert(1.0, Dimension::Frequency, unit).is_some() => unit,
        _ => "",
    };
    if unit.is_empty() {
        return Err(Error::Parse {
            what: WHAT,
            line: hline,
            reason: format!(
                "first column must be `frequency_<unit>`, found `{}`",
                cols[0]
            ),
        });
    }
    let mut freqs = Vec::new();
    let mut values = Vec::new();
    for (line, l) in lines {
        let fields: Vec<&str> = l.split(',').collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                what: WHAT,
                line,
                reason: format!("expected 2 fields, found {}", fields.len()),
            });
        }
        let f = convert(
            parse_number(WHAT, line, fields[0])?,
            Dimension::Frequency,
            unit,
        )
        .unwrap_or(f64::NAN);
        let v = parse_number(WHAT, line, fields[1])?;
        if v < 0.0 {
            return Err(Error::Parse {
                what: WHAT,
                line,
                reason: format!("negative transmission {v}"),
            });
        }
        if let Some(&prev) = freqs.last() {
            if f <= prev {
                return Err(Error::Parse {
                    what: WHAT,
                    line,
                    reason: format!("frequency {f} not above previous {prev}"),
                });
            }
        }
        freqs.push(f);
        values.push(v);
    }
    if freqs.is_empty() {
        return Err(Error::Parse {
            what: WHAT,
            line: hline,
            reason: "no data rows".into(),
        });
    }
    SpectrumTrace::new(freqs, values)
}

/// Columnar numeric data with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_text(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                first = false;
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        const WHAT: &str = "table";
        let mut lines = content_lines(text);
        let (hline, header) = lines.next().ok_or(Error::Parse {
            what: WHAT,
            line: 0,
            reason: "empty file".into(),
        })?;
        let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
        if let Some(bad) = columns
            .iter()
            .find(|c| c.is_empty() || c.parse::<f64>().is_ok())
        {
            return Err(Error::Parse {
                what: WHAT,
                line: hline,
                reason: format!("invalid column name `{bad}`"),
            });
        }
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].contains(c) {
                return Err(Error::Parse {
                    what: WHAT,
                    line: hline,
                    reason: format!("duplicate column `{c}`"),
                });
            }
        }
        let mut rows = Vec::new();
        for (line, l) in lines {
            let fields: Vec<&str> = l.split(',').collect();
            if fields.len() != columns.len() {
                return Err(Error::Parse {
                    what: WHAT,
                    line,
                    reason: format!("expected {} fields, found {}", columns.len(), fields.len()),
                });
            }
            rows.push(
                fields
                    .iter()
                    .map(|f| parse_number(WHAT, line, f))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Ok(Table { columns, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// The column named `<base>_<unit>`, converted to the canonical unit of
    /// `dim`.
    pub fn quantity_column(&self, base: &str, dim: Dimension) -> Result<Vec<f64>> {
        for (i, c) in self.columns.iter().enumerate() {
            if let Some((b, unit)) = split_unit(c) {
                if b == base {
                    if convert(1.0, dim, unit).is_none() {
                        return Err(Error::Config(format!(
                            "column `{c}`: unknown {dim} unit `{unit}`"
                        )));
                    }
                    return Ok(self
                        .rows
                        .iter()
                        .filter_map(|r| convert(r[i], dim, unit))
                        .collect());
                }
            }
        }
        Err(Error::Config(format!(
            "missing column `{base}_<unit>` (have {})",
            self.columns.join(", ")
        )))
    }
}

/// Two-column `(a, b)` points from a table, converted to canonical units.
pub fn parse_points(
    text: &str,
    a: (&str, Dimension),
    b: (&str, Dimension),
) -> Result<Vec<(f64, f64)>> {
    let t = Table::parse(text)?;
    let xs = t.quantity_column(a.0, a.1)?;
    let ys = t.quantity_column(b.0, b.1)?;
    Ok(xs.into_iter().zip(ys).collect())
}

pub fn write_fit_report(fit: &FitResult) -> Result<String> {
    toml::to_string(fit).map_err(|e| Error::Config(format!("serializing fit report: {e}")))
}

pub fn parse_fit_report(text: &str) -> Result<FitResult> {
    let fit: FitResult =
        toml::from_str(text).map_err(|e| Error::Config(format!("fit report: {e}")))?;
    if fit.params.keys().ne(fit.sigmas.keys()) {
        return Err(Error::Config(
            "fit report: params and sigmas name different parameters".into(),
        ));
    }
    if let Some((k, s)) = fit.sigmas.iter().find(|(_, s)| !(**s >= 0.0)) {
        return Err(Error::Config(format!("fit report: sigma of `{k}` is {s}")));
    }
    Ok(fit)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Ground truth for one simulated campaign position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestPosition {
    pub file: String,
    pub x_um: f64,
    pub y_um: f64,
    pub y_recorded_um: f64,
    pub z_um: f64,
    pub flux: f64,
    pub stream: u64,
    pub nu_r_ghz: f64,
    pub nu_q_ghz: f64,
    pub g_ghz: f64,
    pub kappa_ghz: f64,
    pub t1_us: f64,
    pub amp: f64,
    pub bg: f64,
}

/// Index of a run's outputs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    /// Relative path → SHA-256 of every output file except the manifest.
    pub files: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub truth: IndexMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub positions: Vec<ManifestPosition>,
}

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const CONFIG_ECHO_FILE: &str = "effective_config.toml";

/// Writes files below a root directory and records their hashes.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.files
            .insert(rel.to_string(), sha256_hex(contents.as_bytes()));
        Ok(())
    }

    /// Write the manifest listing every file written so far.
    pub fn finish(self, mut manifest: Manifest) -> Result<Manifest> {
        manifest.files = self.files;
        let text = toml::to_string(&manifest)
            .map_err(|e| Error::Config(format!("serializing manifest: {e}")))?;
        let path = self.root.join(MANIFEST_FILE);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
