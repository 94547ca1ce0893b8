//
// Copyright 2026 The dpb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

//! Printing results as JSON or CSV.

use clap::ValueEnum;
use dpb::curves::{write_csv, CurveEnvelope, CurveTable, Precision};
use serde::Serialize;
use serde_json::{Map, Value};
use std::io::Write;
use std::path::PathBuf;

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

pub struct Emitter {
    format: Format,
    precision: Precision,
    out: Option<PathBuf>,
}

fn round(v: Value, p: Precision) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = p.round(n.as_f64().unwrap_or(f64::NAN));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(|x| round(x, p)).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, x)| (k, round(x, p))).collect()),
        other => other,
    }
}

// Nested objects become dotted column names.
fn flatten(prefix: &str, v: &Value, out: &mut Map<String, Value>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, x, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Emitter {
    pub fn new(format: Format, precision: Precision, out: Option<PathBuf>) -> Self {
        Emitter {
            format,
            precision,
            out,
        }
    }

    fn sink(&self) -> std::io::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(std::io::BufWriter::new(std::fs::File::create(path)?)),
            None => Box::new(std::io::stdout().lock()),
        })
    }

    pub fn record<T: Serialize>(&self, value: &T) -> std::io::Result<()> {
        let v = round(serde_json::to_value(value)?, self.precision);
        match self.format {
            Format::Json => self.json(&v),
            Format::Csv => self.table(&[v]),
        }
    }

    pub fn records<T: Serialize>(&self, values: &[T]) -> std::io::Result<()> {
        let v = round(serde_json::to_value(values)?, self.precision);
        match self.format {
            Format::Json => self.json(&v),
            Format::Csv => match v {
                Value::Array(rows) => self.table(&rows),
                other => self.table(&[other]),
            },
        }
    }

    pub fn curve<T: CurveTable>(
        &self,
        curve: &T,
        envelope: impl FnOnce() -> CurveEnvelope,
    ) -> dpb::Result<()> {
        match self.format {
            Format::Csv => write_csv(curve, self.sink()?, self.precision),
            Format::Json => {
                Ok(self.json(&serde_json::to_value(envelope()).map_err(std::io::Error::from)?)?)
            }
        }
    }

    fn json(&self, v: &Value) -> std::io::Result<()> {
        let mut w = self.sink()?;
        serde_json::to_writer_pretty(&mut w, v)?;
        writeln!(w)?;
        w.flush()
    }

    fn table(&self, rows: &[Value]) -> std::io::Result<()> {
        let flat: Vec<Map<String, Value>> = rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                flatten("", r, &mut m);
                m
            })
            .collect();
        let mut w = csv::Writer::from_writer(self.sink()?);
        if let Some(first) = flat.first() {
            w.write_record(first.keys())?;
            for row in &flat {
                w.write_record(
                    first
                        .keys()
                        .map(|k| row.get(k).map(cell).unwrap_or_default()),
                )?;
            }
        }
        w.flush()
    }
}
