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

//! Calibrated parameter sweeps: for each (p, N) cell, find the noise that
//! meets a fixed (ε, δ) target and measure how far the result is from a
//! base mechanism.

use crate::accountant::{calibrate_sigma, composed_tradeoff, AccountantConfig};
use crate::curves::TradeoffCurve;
use crate::divergence::compare;
use crate::error::{Error, Result};
use crate::mechanism::{tradeoff_curve_with, MechanismSpec};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub base: MechanismSpec,
    pub target_eps: f64,
    pub target_delta: f64,
    pub p_values: Vec<f64>,
    pub steps_values: Vec<u64>,
    pub grid_size: usize,
    pub accountant: AccountantConfig,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.p_values.is_empty() || self.steps_values.is_empty() {
            return Err(Error::domain(
                "lattice",
                0.0,
                "sweep ranges must be non-empty",
            ));
        }
        for &p in &self.p_values {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::domain("p", p, "must lie in (0, 1]"));
            }
        }
        if self.steps_values.contains(&0) {
            return Err(Error::domain("steps", 0.0, "must be at least 1"));
        }
        Ok(())
    }
}

/// One cell of a sweep. Failed cells keep their coordinates and carry the
/// error message instead of numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub steps: u64,
    pub sigma: Option<f64>,
    /// Δ(base‖target).
    pub delta_base_target: Option<f64>,
    /// Δ(target‖base).
    pub delta_target_base: Option<f64>,
    pub calibration_error: Option<f64>,
    pub achieved_epsilon: Option<f64>,
    pub error: Option<String>,
}

/// `n` points from `lo` to `hi`, evenly spaced in log scale.
pub fn log_lattice(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let mut v: Vec<f64> = (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect();
            v[0] = lo;
            v[n - 1] = hi;
            v
        }
    }
}

/// [`log_lattice`] rounded to distinct integers.
pub fn log_lattice_steps(lo: u64, hi: u64, n: usize) -> Vec<u64> {
    let mut v: Vec<u64> = log_lattice(lo as f64, hi as f64, n)
        .into_iter()
        .map(|x| x.round() as u64)
        .collect();
    v.dedup();
    v
}

/// Runs every (p, N) cell, in parallel. Rows come back sorted by (p, N).
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let base = tradeoff_curve_with(&config.base, config.grid_size, &config.accountant)?;
    let cells: Vec<(f64, u64)> = config
        .p_values
        .iter()
        .flat_map(|&p| config.steps_values.iter().map(move |&n| (p, n)))
        .collect();
    let mut rows: Vec<SweepRow> = cells
        .into_par_iter()
        .map(|(p, steps)| match run_cell(config, &base, p, steps) {
            Ok(row) => row,
            Err(e) => SweepRow {
                p,
                steps,
                sigma: None,
                delta_base_target: None,
                delta_target_base: None,
                calibration_error: None,
                achieved_epsilon: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    rows.sort_by(|a, b| a.p.total_cmp(&b.p).then(a.steps.cmp(&b.steps)));
    Ok(rows)
}

fn run_cell(config: &SweepConfig, base: &TradeoffCurve, p: f64, steps: u64) -> Result<SweepRow> {
    let cal = calibrate_sigma(
        config.target_eps,
        config.target_delta,
        p,
        steps,
        &config.accountant,
    )?;
    let target = composed_tradeoff(cal.sigma, p, steps, config.grid_size, &config.accountant)?;
    let v = compare(base, &target, config.grid_size)?;
    Ok(SweepRow {
        p,
        steps,
        sigma: Some(cal.sigma),
        delta_base_target: Some(v.delta_ab),
        delta_target_base: Some(v.delta_ba),
        calibration_error: Some(cal.abs_error),
        achieved_epsilon: Some(cal.achieved_epsilon),
        error: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattices() {
        let v = log_lattice(0.04, 0.9, 8);
        assert_eq!(v.len(), 8);
        assert_eq!((v[0], v[7]), (0.04, 0.9));
        assert!((v[1] / v[0] - v[7] / v[6]).abs() < 1e-12);
        let s = log_lattice_steps(534, 1500, 8);
        assert_eq!((s[0], s[7]), (534, 1500));
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn empty_ranges_are_rejected() {
        let cfg = SweepConfig {
            base: MechanismSpec::gaussian(1.0),
            target_eps: 1.0,
            target_delta: 1e-5,
            p_values: vec![],
            steps_values: vec![10],
            grid_size: 101,
            accountant: AccountantConfig::default(),
        };
        assert!(run_sweep(&cfg).is_err());
    }

    #[test]
    fn failed_cells_become_error_rows() {
        // No sigma in the bracket reaches epsilon = 1e-4 with full sampling.
        let cfg = SweepConfig {
            base: MechanismSpec::gaussian(1.0),
            target_eps: 1e-4,
            target_delta: 1e-5,
            p_values: vec![1.0],
            steps_values: vec![1],
            grid_size: 101,
            accountant: AccountantConfig::default(),
        };
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].error.as_deref().unwrap().contains("no sigma"));
        assert!(rows[0].sigma.is_none());
    }
}
