//! CSV and JSON serialization of command results.
//!
//! CSV numbers use 17 significant digits in exponent form, which round-trips
//! every f64. Undefined cells are empty in CSV and `null` in JSON. JSON keys
//! are emitted in sorted order, so identical results give identical bytes.

use serde_json::{json, Map, Value};

use qswitch_core::bench::SweepResult;

use crate::config::{Format, RunConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Cell {
        v.map_or(Cell::Empty, Cell::Num)
    }

    fn csv_field(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

/// `x` with 17 significant digits, e.g. `5.0828426400000002e4`.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// One row per cell: the axis coordinates followed by the metric.
pub fn sweep_table(result: &SweepResult) -> Table {
    let mut columns: Vec<String> = result.axes.iter().map(|a| a.name.clone()).collect();
    columns.push(result.metric.clone());
    let rows = (0..result.values.len())
        .map(|flat| {
            let idx = result.unravel(flat);
            let mut row: Vec<Cell> = result
                .axes
                .iter()
                .zip(&idx)
                .map(|(axis, &i)| match axis.label(i) {
                    Some(l) => Cell::Text(l.to_string()),
                    None => Cell::Num(axis.values[i]),
                })
                .collect();
            row.push(Cell::opt(result.values[flat]));
            row
        })
        .collect();
    Table { columns, rows }
}

/// What a command produces: a table for CSV and a JSON body. The JSON body
/// is an object; run metadata is merged into its `metadata` member.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub command: String,
    pub table: Table,
    pub body: Value,
}

impl Artifact {
    pub fn from_table(command: &str, table: Table) -> Self {
        let body = json!({
            "columns": table.columns,
            "rows": table.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        });
        Artifact {
            command: command.into(),
            table,
            body,
        }
    }

    pub fn from_sweep(command: &str, result: &SweepResult) -> Self {
        Artifact {
            command: command.into(),
            table: sweep_table(result),
            body: serde_json::to_value(result).expect("sweep result serializes"),
        }
    }
}

pub fn to_csv(table: &Table) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(&table.columns).expect("in-memory write");
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::csv_field))
            .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn metadata(artifact: &Artifact, config: &RunConfig) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), json!(artifact.command));
    m.insert("seed".into(), json!(config.seed));
    m.insert("n_samples".into(), json!(config.n_samples));
    m.insert("estimator".into(), json!(config.estimator));
    m.insert("config_hash".into(), json!(config.hash()));
    m.insert(
        "profile".into(),
        serde_json::to_value(&config.profile).expect("profile serializes"),
    );
    m
}

pub fn to_json(artifact: &Artifact, config: &RunConfig) -> Vec<u8> {
    let mut body = artifact.body.clone();
    let obj = body.as_object_mut().expect("artifact body is an object");
    let mut meta = match obj.remove("metadata") {
        Some(Value::Object(m)) => m,
        _ => Map::new(),
    };
    meta.extend(metadata(artifact, config));
    obj.insert("metadata".into(), Value::Object(meta));
    let mut out = serde_json::to_vec_pretty(&body).expect("json serializes");
    out.push(b'\n');
    out
}

pub fn emit(artifact: &Artifact, config: &RunConfig, format: Format) -> Vec<u8> {
    match format {
        Format::Csv => to_csv(&artifact.table),
        Format::Json => to_json(artifact, config),
    }
}
