//! Rendering of command results as JSON, CSV, or plain text.

use std::io::{self, Write};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Human,
}

/// Rows of a table; every row has one value per column.
#[derive(Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn as_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    Value::Object(
                        self.columns
                            .iter()
                            .zip(r)
                            .map(|(c, v)| (c.to_string(), v.clone()))
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

/// Everything a command produced.
#[derive(Debug)]
pub struct Report {
    pub command: String,
    pub params: Value,
    pub seed: Option<u64>,
    pub tolerances: Value,
    pub result: Value,
    pub table: Option<Table>,
    /// A checked bound failed.
    pub violation: bool,
}

impl Report {
    pub fn new(command: &str, params: Value, tolerances: Value, result: Value) -> Self {
        Self {
            command: command.to_string(),
            params,
            seed: None,
            tolerances,
            result,
            table: None,
            violation: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    pub fn to_json(&self) -> Value {
        let mut out = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
            "tolerances": self.tolerances,
            "result": self.result,
        });
        if let Some(t) = &self.table {
            out["table"] = t.as_json();
        }
        out
    }

    pub fn render(&self, format: Format, out: &mut impl Write) -> io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.to_json())?;
                writeln!(out)
            }
            Format::Csv => self.render_csv(out),
            Format::Human => self.render_human(out),
        }
    }

    fn render_csv(&self, out: &mut impl Write) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if let Some(t) = &self.table {
            w.write_record(&t.columns)?;
            for row in &t.rows {
                w.write_record(row.iter().map(scalar))?;
            }
        } else {
            w.write_record(["field", "value"])?;
            let mut flat = Vec::new();
            flatten("", &self.result, &mut flat);
            for (k, v) in flat {
                w.write_record([k, v])?;
            }
        }
        w.flush()
    }

    fn render_human(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "{}", self.command)?;
        let mut header = Vec::new();
        flatten("", &self.params, &mut header);
        if let Some(seed) = self.seed {
            header.push(("seed".into(), seed.to_string()));
        }
        flatten("", &self.tolerances, &mut header);
        for (k, v) in header {
            writeln!(out, "  {k} = {v}")?;
        }
        let mut flat = Vec::new();
        flatten("", &self.result, &mut flat);
        let width = flat.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in flat {
            writeln!(out, "{k:<width$}  {v}")?;
        }
        if let Some(t) = &self.table {
            writeln!(out, "{}", t.columns.join("\t"))?;
            for row in &t.rows {
                let cells: Vec<String> = row.iter().map(scalar).collect();
                writeln!(out, "{}", cells.join("\t"))?;
            }
        }
        Ok(())
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Dotted keys for nested objects; arrays are indexed.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(a) => {
            for (i, v) in a.iter().enumerate() {
                flatten(&key(&i.to_string()), v, out);
            }
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

/// JSON number for a float, or a string for non-finite values, which JSON
/// cannot carry.
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

/// Serializes `v`; serde_json writes non-finite floats as `null`.
pub fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

pub fn object(pairs: Vec<(&str, Value)>) -> Value {
    Value::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect::<Map<_, _>>())
}
