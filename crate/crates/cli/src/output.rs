//! Table emission (CSV with 17 significant digits or JSON row objects) and
//! run manifests.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

#[derive(Clone, Debug)]
pub enum Cell {
    UInt(u64),
    Float(f64),
    Str(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::UInt(v) => v.to_string(),
            // 17 significant digits: round-trip exact for f64
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Str(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::UInt(v) => serde_json::Value::from(*v),
            Cell::Float(v) => serde_json::Number::from_f64(*v)
                .map_or(serde_json::Value::Null, serde_json::Value::Number),
            Cell::Str(s) => serde_json::Value::from(s.as_str()),
            Cell::Bool(b) => serde_json::Value::from(*b),
        }
    }
}

/// Fixed-schema output table: column names and order are part of each
/// command's contract.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row does not match schema");
        self.rows.push(row);
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => {
                let mut out = String::new();
                out.push_str(&self.columns.join(","));
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
                out
            }
            OutputFormat::Json => {
                let rows: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let mut obj = serde_json::Map::new();
                        for (name, cell) in self.columns.iter().zip(row) {
                            obj.insert((*name).to_string(), cell.json());
                        }
                        serde_json::Value::Object(obj)
                    })
                    .collect();
                let mut s = serde_json::to_string_pretty(&rows).expect("serializable rows");
                s.push('\n');
                s
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Reproducibility sidecar written next to every `--out` file.
#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, parameters: BTreeMap<String, String>, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            parameters,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }
}

/// Writes the table to `--out` (plus `<out>.manifest.json`) or stdout.
pub fn emit(
    table: &Table,
    format: OutputFormat,
    out: Option<&Path>,
    manifest: &RunManifest,
) -> std::io::Result<()> {
    let rendered = table.render(format);
    match out {
        None => {
            std::io::stdout().write_all(rendered.as_bytes())?;
        }
        Some(path) => {
            std::fs::write(path, rendered)?;
            let manifest_path = {
                let mut os = path.as_os_str().to_owned();
                os.push(".manifest.json");
                std::path::PathBuf::from(os)
            };
            let mut doc = serde_json::to_string_pretty(manifest).expect("serializable manifest");
            doc.push('\n');
            std::fs::write(manifest_path, doc)?;
        }
    }
    Ok(())
}
