use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format_num(*v),
            Cell::Int(v) => v.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map(Value::Number).unwrap_or(Value::Null),
            Cell::Int(v) => json!(v),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

/// Scientific notation with ten significant digits.
pub fn format_num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.9e}")
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::csv))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(buf)
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    #[cfg_attr(not(test), allow(dead_code))]
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match r[k] {
                    Cell::Num(v) => v,
                    Cell::Int(v) => v as f64,
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

/// Provenance record written next to every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command_line: Vec<String>,
    pub config: Value,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub parameters: Value,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn new(config: Value, seeds: Vec<u64>) -> Self {
        RunManifest {
            tool: "levitodyn",
            version: env!("CARGO_PKG_VERSION"),
            command_line: std::env::args().collect(),
            config,
            seeds,
            parameters: Value::Null,
            outputs: Vec::new(),
        }
    }
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Where results go: a file (plus manifest) or stdout.
pub struct Sink {
    pub out: Option<PathBuf>,
    pub json: bool,
    pub gnuplot: bool,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(out: Option<PathBuf>, json: bool) -> Self {
        Sink {
            out,
            json,
            gnuplot: false,
            written: Vec::new(),
        }
    }

    pub fn write_bytes(&mut self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
        self.written.push(path.to_path_buf());
        Ok(())
    }

    /// Record a file produced elsewhere (e.g. streamed) for the manifest.
    pub fn register(&mut self, path: &Path) {
        self.written.push(path.to_path_buf());
    }

    /// Primary table: to `--out` as CSV, else to stdout as CSV or JSON.
    pub fn table(&mut self, table: &Table) -> Result<(), CliError> {
        match self.out.clone() {
            Some(path) => {
                self.write_bytes(&path, &table.to_csv()?)?;
                if self.gnuplot {
                    self.write_bytes(&path.with_extension("gp"), gnuplot_script(&path, table).as_bytes())?;
                }
                Ok(())
            }
            None if self.json => print_json(&table.to_json()),
            None => table.write_csv(io::stdout().lock()),
        }
    }

    /// Secondary table written beside the primary output as
    /// `<stem>_<suffix>.csv`; only emitted when writing to files.
    pub fn side_table(&mut self, suffix: &str, table: &Table) -> Result<(), CliError> {
        if let Some(path) = self.out.clone() {
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let side = path.with_file_name(format!("{stem}_{suffix}.csv"));
            self.write_bytes(&side, &table.to_csv()?)?;
        }
        Ok(())
    }

    /// JSON-valued result: to `--out` or stdout.
    pub fn document(&mut self, value: &Value) -> Result<(), CliError> {
        match self.out.clone() {
            Some(path) => {
                let text = serde_json::to_string_pretty(value)? + "\n";
                self.write_bytes(&path, text.as_bytes())
            }
            None => print_json(value),
        }
    }

    /// Write the manifest if any file was produced.
    pub fn finish(self, mut manifest: RunManifest) -> Result<(), CliError> {
        let Some(out) = self.out.as_ref() else {
            return Ok(());
        };
        for path in &self.written {
            manifest.outputs.push(OutputFile {
                path: path.display().to_string(),
                sha256: sha256_file(path)?,
            });
        }
        let mpath = manifest_path(out);
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(&mpath, text).map_err(|e| CliError::io(&mpath, e))?;
        if self.json {
            print_json(&json!({
                "outputs": manifest.outputs,
                "manifest": mpath.display().to_string(),
            }))?;
        }
        Ok(())
    }
}

pub fn print_json(value: &Value) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    Ok(())
}

/// Warnings go to stderr as one JSON object per line.
pub fn warn(message: impl AsRef<str>) {
    eprintln!("{}", json!({ "warning": message.as_ref() }));
}

fn gnuplot_script(data: &Path, table: &Table) -> String {
    let file = data.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\n");
    s.push_str(&format!("set xlabel '{}'\n", table.columns.first().cloned().unwrap_or_default()));
    let series: Vec<String> = (2..=table.columns.len())
        .map(|k| format!("'{file}' using 1:{k} with linespoints"))
        .collect();
    s.push_str(&format!("plot {}\n", series.join(", \\\n     ")));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_ten_digits() {
        assert_eq!(format_num(1263600.0), "1.263600000e6");
        assert_eq!(format_num(-2.5e-29), "-2.500000000e-29");
        assert_eq!(format_num(f64::INFINITY), "inf");
        let v = 0.1 + 0.2;
        assert!((format_num(v).parse::<f64>().unwrap() / v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn table_formats() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec![1.5.into(), true.into()]);
        let csv = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(csv, "a,b\n1.500000000e0,1\n");
        assert_eq!(t.to_json(), json!([{"a": 1.5, "b": 1}]));
        assert_eq!(t.column("a").unwrap(), vec![1.5]);
    }

    #[test]
    fn manifest_sits_beside_output() {
        assert_eq!(manifest_path(Path::new("out/x.csv")), PathBuf::from("out/x.csv.manifest.json"));
    }
}
