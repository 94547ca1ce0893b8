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

//! Two-column CSV and a JSON envelope for the three curve types.

use super::{BayesErrorCurve, PrivacyProfile, TradeoffCurve};
use crate::error::{Error, Result};
use serde::Serialize;
use std::io::{Read, Write};

/// How many digits numbers carry on output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Significant(usize),
    Decimals(usize),
}

impl Default for Precision {
    fn default() -> Self {
        Precision::Significant(9)
    }
}

impl Precision {
    /// Rounds `x` to this precision. Non-finite values pass through.
    pub fn round(self, x: f64) -> f64 {
        if !x.is_finite() || x == 0.0 {
            return x;
        }
        let s = match self {
            Precision::Significant(d) => format!("{:.*e}", d.max(1) - 1, x),
            Precision::Decimals(d) => format!("{:.*}", d, x),
        };
        s.parse().unwrap_or(x)
    }
}

/// A curve stored as two aligned columns.
pub trait CurveTable: Sized {
    const KIND: &'static str;
    const HEADER: [&'static str; 2];

    fn columns(&self) -> (&[f64], &[f64]);

    fn from_columns(x: Vec<f64>, y: Vec<f64>) -> Result<Self>;
}

impl CurveTable for TradeoffCurve {
    const KIND: &'static str = "tradeoff";
    const HEADER: [&'static str; 2] = ["alpha", "beta"];

    fn columns(&self) -> (&[f64], &[f64]) {
        (self.alphas(), self.betas())
    }

    fn from_columns(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        TradeoffCurve::new(x, y)
    }
}

impl CurveTable for BayesErrorCurve {
    const KIND: &'static str = "bayes";
    const HEADER: [&'static str; 2] = ["pi", "rmin"];

    fn columns(&self) -> (&[f64], &[f64]) {
        (self.pis(), self.risks())
    }

    fn from_columns(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        BayesErrorCurve::new(x, y)
    }
}

impl CurveTable for PrivacyProfile {
    const KIND: &'static str = "profile";
    const HEADER: [&'static str; 2] = ["epsilon", "delta"];

    fn columns(&self) -> (&[f64], &[f64]) {
        (self.epsilons(), self.deltas())
    }

    fn from_columns(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        PrivacyProfile::new(x, y)
    }
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::parse("csv", e.to_string())
    }
}

pub fn write_csv<T: CurveTable, W: Write>(curve: &T, out: W, precision: Precision) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(T::HEADER).map_err(csv_error)?;
    let (xs, ys) = curve.columns();
    for (&x, &y) in xs.iter().zip(ys) {
        w.write_record([
            format!("{:?}", precision.round(x)),
            format!("{:?}", precision.round(y)),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a curve written by [`write_csv`]. The header must match the type.
pub fn read_csv<T: CurveTable, R: Read>(input: R) -> Result<T> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = r.headers().map_err(csv_error)?.clone();
    if header.len() != 2 || header[0] != *T::HEADER[0] || header[1] != *T::HEADER[1] {
        return Err(Error::parse(
            header.iter().collect::<Vec<_>>().join(","),
            format!("expected header {},{}", T::HEADER[0], T::HEADER[1]),
        ));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        let num = |i: usize| -> Result<f64> {
            let s = rec.get(i).unwrap_or_default();
            s.parse()
                .map_err(|_| Error::parse(s, "not a floating-point number"))
        };
        xs.push(num(0)?);
        ys.push(num(1)?);
    }
    T::from_columns(xs, ys)
}

/// JSON form of a curve, with its grid metadata.
#[derive(Debug, Clone, Serialize)]
pub struct CurveEnvelope {
    pub kind: &'static str,
    pub grid_size: usize,
    pub columns: [&'static str; 2],
    pub mechanism: Option<String>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl CurveEnvelope {
    pub fn new<T: CurveTable>(curve: &T, mechanism: Option<String>, precision: Precision) -> Self {
        let (xs, ys) = curve.columns();
        CurveEnvelope {
            kind: T::KIND,
            grid_size: xs.len(),
            columns: T::HEADER,
            mechanism,
            x: xs.iter().map(|&v| precision.round(v)).collect(),
            y: ys.iter().map(|&v| precision.round(v)).collect(),
        }
    }
}
