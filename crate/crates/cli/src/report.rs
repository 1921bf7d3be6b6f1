use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;

use crate::commands::Output;
use crate::Format;

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunConfig {
    pub command: String,
    pub graph: Option<String>,
    pub seed: u64,
    pub seed_generated: bool,
    pub trials: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub jobs: Option<u64>,
    pub options: Value,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Timestamps {
    pub started: String,
    pub finished: String,
    pub elapsed_seconds: f64,
}

/// Everything except `timestamps` is a deterministic function of the config.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub config: RunConfig,
    pub results: Value,
    pub timestamps: Timestamps,
    #[serde(skip)]
    pub table: Option<Table>,
}

/// Per-row data for CSV output.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new(config: RunConfig, output: Output, started: DateTime<Utc>) -> Self {
        let finished = Utc::now();
        Report {
            version: env!("CARGO_PKG_VERSION"),
            config,
            results: output.results,
            timestamps: Timestamps {
                started: started.to_rfc3339_opts(SecondsFormat::Millis, true),
                finished: finished.to_rfc3339_opts(SecondsFormat::Millis, true),
                elapsed_seconds: (finished - started).num_milliseconds() as f64 / 1000.0,
            },
            table: output.table,
        }
    }
}

pub fn write(report: &Report, format: Format, out: Option<&Path>) -> io::Result<()> {
    let mut sink: Box<dyn Write> = match out {
        Some(p) => Box::new(io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, report)?;
            writeln!(sink)?;
        }
        Format::Csv => {
            let table = report.table.clone().unwrap_or_else(|| scalar_table(&report.results));
            let mut w = csv::Writer::from_writer(&mut sink);
            w.write_record(&table.header)?;
            for row in &table.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
    }
    sink.flush()
}

/// One-row table of the top-level scalar results, for commands without per-trial rows.
fn scalar_table(results: &Value) -> Table {
    let mut table = Table::default();
    let mut row = Vec::new();
    if let Value::Object(map) = results {
        for (k, v) in map {
            let cell = match v {
                Value::String(s) => s.clone(),
                Value::Number(_) | Value::Bool(_) => v.to_string(),
                _ => continue,
            };
            table.header.push(k.clone());
            row.push(cell);
        }
    }
    table.rows.push(row);
    table
}
