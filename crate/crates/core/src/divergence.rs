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

//! Δ-divergence between trade-off curves and the quantities built on it.
//!
//! Δ(f‖g) is the largest amount by which the minimum Bayes error of f
//! exceeds that of g, over all priors π. It is zero exactly when f is
//! dominated by g, that is when f is at least as private.

use crate::curves::{bayes_error_curve, tv_and_advantage, TradeoffCurve};
use crate::error::{Error, Result};
use crate::hull::LowerHull;
use crate::quadrature::{endpoint_breakpoints, integrate, Tolerance};
use rayon::prelude::*;
use serde::Serialize;

/// Both one-sided divergences of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominanceVerdict {
    pub delta_ab: f64,
    pub delta_ba: f64,
    pub symmetric: f64,
    /// One of the two curves dominates the other up to grid resolution.
    pub universal: bool,
    pub tolerance: f64,
    pub grid_size: usize,
}

/// Evaluation of the three equivalent forms of approximate dominance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClauseVerdict {
    /// f(α + D) − D ≤ g(α) for all α.
    pub tradeoff: bool,
    /// δ_f(ε) + D(1 + e^ε) ≥ δ_g(ε) for all ε.
    pub profile: bool,
    /// R_f(π) − R_g(π) ≤ D for all π.
    pub bayes: bool,
}

impl ClauseVerdict {
    pub fn all(&self) -> bool {
        self.tradeoff && self.profile && self.bayes
    }

    pub fn none(&self) -> bool {
        !(self.tradeoff || self.profile || self.bayes)
    }
}

pub fn grid_tolerance(grid_size: usize) -> f64 {
    1.0 / (grid_size.max(2) - 1) as f64
}

fn bayes_pair(
    f: &TradeoffCurve,
    g: &TradeoffCurve,
    grid_size: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (rf, rg) = rayon::join(
        || bayes_error_curve(f, grid_size),
        || bayes_error_curve(g, grid_size),
    );
    Ok((rf?.risks().to_vec(), rg?.risks().to_vec()))
}

/// Δ(f‖g) = max over π of R_f(π) − R_g(π), on a uniform π grid.
pub fn delta_divergence(f: &TradeoffCurve, g: &TradeoffCurve, grid_size: usize) -> Result<f64> {
    let (rf, rg) = bayes_pair(f, g, grid_size)?;
    Ok(max_gap(&rf, &rg))
}

fn max_gap(rf: &[f64], rg: &[f64]) -> f64 {
    rf.iter()
        .zip(rg)
        .map(|(a, b)| a - b)
        .fold(0.0, f64::max)
        .min(0.5)
}

/// Δ↔(f, g), the sup-norm distance between the Bayes error curves.
pub fn symmetrised_delta(f: &TradeoffCurve, g: &TradeoffCurve, grid_size: usize) -> Result<f64> {
    let (rf, rg) = bayes_pair(f, g, grid_size)?;
    Ok(rf
        .iter()
        .zip(&rg)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        .min(0.5))
}

/// Both one-sided divergences.
pub fn compare(f: &TradeoffCurve, g: &TradeoffCurve, grid_size: usize) -> Result<DominanceVerdict> {
    let (rf, rg) = bayes_pair(f, g, grid_size)?;
    let delta_ab = max_gap(&rf, &rg);
    let delta_ba = max_gap(&rg, &rf);
    let tolerance = grid_tolerance(grid_size);
    Ok(DominanceVerdict {
        delta_ab,
        delta_ba,
        symmetric: delta_ab.max(delta_ba),
        universal: delta_ab.min(delta_ba) <= tolerance,
        tolerance,
        grid_size,
    })
}

// Violations smaller than this are rounding.
const CLAUSE_TOL: f64 = 1e-12;
const EPS_RANGE: f64 = 20.0;
const EPS_STEP: f64 = 0.01;

/// Checks the three forms of "f is within D of being dominated by g".
///
/// The trade-off clause is exact for the interpolated curves: the gap is
/// piecewise linear in α, so it is checked at every kink. The profile clause
/// is checked on ε ∈ [−20, 20] with step 0.01 plus the ε of every edge of
/// f's hull, and the Bayes clause on a uniform π grid of `grid_size` nodes.
pub fn check_approx_dominance(
    f: &TradeoffCurve,
    g: &TradeoffCurve,
    d: f64,
    grid_size: usize,
) -> Result<ClauseVerdict> {
    if !d.is_finite() {
        return Err(Error::domain("D", d, "must be finite"));
    }
    let tradeoff = tradeoff_clause(f, g, d);

    let (hf, hg) = (f.hull(), g.hull());
    let n = (2.0 * EPS_RANGE / EPS_STEP).round() as usize;
    // In w = e^ε the deficit is concave minus convex, so besides the grid
    // its maximum can only sit where f's hull changes edge.
    let mut ws: Vec<f64> = (0..=n)
        .map(|k| (-EPS_RANGE + k as f64 * EPS_STEP).exp())
        .collect();
    ws.extend(
        hf.slopes()
            .iter()
            .map(|&s| -s)
            .filter(|w| w.is_finite() && *w > 0.0),
    );
    let profile = ws.into_par_iter().all(|w| {
        let df = 1.0 - hf.min_linear(w, 1.0);
        let dg = 1.0 - hg.min_linear(w, 1.0);
        df + d * (1.0 + w) >= dg - CLAUSE_TOL
    });

    let (rf, rg) = bayes_pair(f, g, grid_size)?;
    let bayes = rf.iter().zip(&rg).all(|(a, b)| a - b <= d + CLAUSE_TOL);
    Ok(ClauseVerdict {
        tradeoff,
        profile,
        bayes,
    })
}

fn tradeoff_clause(f: &TradeoffCurve, g: &TradeoffCurve, d: f64) -> bool {
    let mut xs: Vec<f64> = g.alphas().to_vec();
    xs.extend(f.alphas().iter().map(|&a| a - d));
    xs.extend([0.0, 1.0, -d, 1.0 - d]);
    let gap = |a: f64| f.eval(a + d) - d - g.eval(a);
    xs.into_iter().filter(|a| (0.0..=1.0).contains(a)).all(|a| {
        // f jumps at the ends of [0, 1] under the extension, so look on
        // both sides of each kink.
        [a, (a - 1e-13).max(0.0), (a + 1e-13).min(1.0)]
            .into_iter()
            .all(|x| gap(x) <= CLAUSE_TOL)
    })
}

/// Δ(f_PP‖f), half the total variation distance of the pair.
pub fn divergence_from_perfect_privacy(f: &TradeoffCurve) -> f64 {
    0.5 * tv_and_advantage(f)
}

/// Δ(f‖f_BNP), the fixed point α* = f(α*).
///
/// For a symmetric curve this is also the minimax Bayes error; a gap larger
/// than 1e-3 between the two means the curve is too asymmetric and gives
/// [`Error::NoFixedPoint`].
pub fn divergence_to_blatant_nonprivacy(f: &TradeoffCurve) -> Result<f64> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid - f.eval(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha_star = 0.5 * (lo + hi);
    let minimax = minimax_bayes_error(&f.hull());
    if (alpha_star - minimax).abs() > 1e-3 {
        return Err(Error::NoFixedPoint {
            alpha_star,
            minimax,
        });
    }
    Ok(alpha_star)
}

/// max over π of R_min(π), by golden-section search on the concave curve.
fn minimax_bayes_error(hull: &LowerHull) -> f64 {
    let r = |pi: f64| hull.min_linear(pi, 1.0 - pi);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-12 {
        let x1 = hi - inv_phi * (hi - lo);
        let x2 = lo + inv_phi * (hi - lo);
        if r(x1) < r(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    r(0.5 * (lo + hi)).max(0.0)
}

/// A distribution of the adversary's prior π.
#[derive(Debug, Clone, PartialEq)]
pub enum HyperPrior {
    Uniform,
    /// Beta(½, ½).
    Jeffreys,
    /// 12(π − ½)² on [0, 1].
    UQuadratic,
    /// Piecewise-linear density through the given nodes.
    Tabulated {
        pis: Vec<f64>,
        density: Vec<f64>,
    },
}

impl HyperPrior {
    /// Validates a tabulated density: nodes increasing in [0, 1], values
    /// non-negative, integral 1 within 1e-6.
    pub fn tabulated(pis: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if pis.len() < 2 || pis.len() != density.len() {
            return Err(Error::InvalidCurve(
                "prior needs two or more aligned nodes".into(),
            ));
        }
        if pis.windows(2).any(|w| w[1] <= w[0]) || pis[0] < 0.0 || pis[pis.len() - 1] > 1.0 {
            return Err(Error::InvalidCurve(
                "prior nodes must increase within [0, 1]".into(),
            ));
        }
        if density.iter().any(|&d| !(d >= 0.0 && d.is_finite())) {
            return Err(Error::InvalidCurve(
                "prior density must be finite and non-negative".into(),
            ));
        }
        let mass: f64 = pis
            .windows(2)
            .zip(density.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidCurve(format!(
                "prior integrates to {mass}, not 1"
            )));
        }
        Ok(HyperPrior::Tabulated { pis, density })
    }

    pub fn density(&self, pi: f64) -> f64 {
        if !(0.0..=1.0).contains(&pi) {
            return 0.0;
        }
        match self {
            HyperPrior::Uniform => 1.0,
            HyperPrior::Jeffreys => 1.0 / (std::f64::consts::PI * (pi * (1.0 - pi)).sqrt()),
            HyperPrior::UQuadratic => 12.0 * (pi - 0.5) * (pi - 0.5),
            HyperPrior::Tabulated { pis, density } => {
                let n = pis.len();
                if pi < pis[0] || pi > pis[n - 1] {
                    return 0.0;
                }
                let k = pis.partition_point(|&x| x <= pi).clamp(1, n - 1) - 1;
                let t = (pi - pis[k]) / (pis[k + 1] - pis[k]);
                density[k] + t * (density[k + 1] - density[k])
            }
        }
    }

    /// ∫ Ψ over [0, 1].
    pub fn total_mass(&self) -> f64 {
        let mut bp = endpoint_breakpoints();
        if let HyperPrior::Tabulated { pis, .. } = self {
            bp.extend_from_slice(pis);
        }
        let psi = |x: f64| {
            if x > 0.0 && x < 1.0 {
                self.density(x)
            } else {
                0.0
            }
        };
        integrate(psi, 0.0, 1.0, &bp, Tolerance::default()).value
    }
}

impl std::str::FromStr for HyperPrior {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(HyperPrior::Uniform),
            "jeffreys" => Ok(HyperPrior::Jeffreys),
            "uquadratic" => Ok(HyperPrior::UQuadratic),
            _ => Err(Error::parse(s, "expected uniform, jeffreys or uquadratic")),
        }
    }
}

/// Δ^Ψ(f‖g) = max over π of Ψ(π)(R_f(π) − R_g(π)), clamped at 0.
///
/// The grid is the open one π_j = (j + ½)/n so that densities that blow up
/// at 0 or 1 are never evaluated there.
pub fn weighted_delta_divergence(
    f: &TradeoffCurve,
    g: &TradeoffCurve,
    prior: &HyperPrior,
    grid_size: usize,
) -> Result<f64> {
    if grid_size < 1 {
        return Err(Error::domain("grid_size", 0.0, "must be positive"));
    }
    let (hf, hg) = (f.hull(), g.hull());
    let n = grid_size as f64;
    Ok((0..grid_size)
        .into_par_iter()
        .map(|j| {
            let pi = (j as f64 + 0.5) / n;
            let rf = hf.min_linear(pi, 1.0 - pi).clamp(0.0, pi.min(1.0 - pi));
            let rg = hg.min_linear(pi, 1.0 - pi).clamp(0.0, pi.min(1.0 - pi));
            prior.density(pi) * (rf - rg)
        })
        .reduce(|| 0.0, f64::max))
}

/// Lévy distance between the CDFs F(x) = f(1 − x) and G(x) = g(1 − x).
///
/// Bisection on λ for the smallest value with
/// F(x − λ) − λ ≤ G(x) ≤ F(x + λ) + λ everywhere. All four functions are
/// piecewise linear, so the sandwich is checked at their kinks and on both
/// sides of the jumps at 0 and 1.
pub fn levy_distance(f: &TradeoffCurve, g: &TradeoffCurve) -> f64 {
    let cdf = |c: &TradeoffCurve, x: f64| c.eval(1.0 - x);
    let knots = |c: &TradeoffCurve| -> Vec<f64> {
        let mut k: Vec<f64> = c.alphas().iter().map(|&a| 1.0 - a).collect();
        k.extend([0.0, 1.0]);
        k
    };
    let (kf, kg) = (knots(f), knots(g));
    // sandwich(λ, a, b): A(x − λ) − λ ≤ B(x) ≤ A(x + λ) + λ for all x.
    let sandwich = |lambda: f64, a: &TradeoffCurve, ka: &[f64], b: &TradeoffCurve, kb: &[f64]| {
        let mut xs: Vec<f64> = kb.to_vec();
        xs.extend(ka.iter().map(|&x| x + lambda));
        xs.extend(ka.iter().map(|&x| x - lambda));
        xs.into_iter().all(|x| {
            [x - 1e-13, x, x + 1e-13].into_iter().all(|y| {
                let mid = cdf(b, y);
                cdf(a, y - lambda) - lambda <= mid + CLAUSE_TOL
                    && mid <= cdf(a, y + lambda) + lambda + CLAUSE_TOL
            })
        })
    };
    let ok = |lambda: f64| sandwich(lambda, f, &kf, g, &kg) && sandwich(lambda, g, &kg, f, &kf);
    if ok(0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
