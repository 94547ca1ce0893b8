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

//! The three equivalent descriptions of a mechanism: trade-off curve,
//! minimum Bayes error curve and privacy profile.

mod convert;
mod io;

pub use convert::{
    bayes_error_at, bayes_error_curve, bayes_error_of_fn, default_eps_grid, profile_from_tradeoff,
    tradeoff_from_bayes, tradeoff_from_plrv_cdfs, tradeoff_from_profile, tv_and_advantage,
    DEFAULT_EPS_STEP,
};
pub use io::{read_csv, write_csv, CurveEnvelope, CurveTable, Precision};

use crate::error::{Error, Result};
use crate::hull::LowerHull;
use serde::{Deserialize, Serialize};

/// Shape violations up to this size are treated as floating-point noise and
/// repaired; anything larger is rejected.
pub const SHAPE_TOLERANCE: f64 = 1e-9;

/// `n` evenly spaced points on [0, 1], with exact endpoints.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2, "grid needs both endpoints");
    let last = (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|i| i as f64 / last).collect();
    g[n - 1] = 1.0;
    g
}

/// Checks a grid is finite and strictly increasing.
fn check_grid(what: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidCurve(format!(
            "{what} grid has non-finite nodes"
        )));
    }
    if let Some(i) = xs.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidCurve(format!(
            "{what} grid not strictly increasing at index {}",
            i + 1
        )));
    }
    Ok(())
}

/// Largest amount by which an interior node sits above the chord of its
/// neighbours (positive means a convexity violation).
fn chord_excess(xs: &[f64], ys: &[f64], i: usize) -> f64 {
    let w = (xs[i + 1] - xs[i]) / (xs[i + 1] - xs[i - 1]);
    ys[i] - (w * ys[i - 1] + (1.0 - w) * ys[i + 1])
}

/// Discretised trade-off function α ↦ f(α), linearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurve", into = "RawCurve")]
pub struct TradeoffCurve {
    alphas: Vec<f64>,
    betas: Vec<f64>,
    uniform: bool,
}

#[derive(Serialize, Deserialize)]
struct RawCurve {
    alphas: Vec<f64>,
    betas: Vec<f64>,
}

impl TryFrom<RawCurve> for TradeoffCurve {
    type Error = Error;
    fn try_from(raw: RawCurve) -> Result<Self> {
        TradeoffCurve::new(raw.alphas, raw.betas)
    }
}

impl From<TradeoffCurve> for RawCurve {
    fn from(c: TradeoffCurve) -> Self {
        RawCurve {
            alphas: c.alphas,
            betas: c.betas,
        }
    }
}

impl TradeoffCurve {
    /// Validates a tabulated trade-off function.
    ///
    /// The grid must start at 0 and end at 1. Values must be non-increasing,
    /// convex and end at 0; violations up to [`SHAPE_TOLERANCE`] are repaired
    /// by taking the lower convex hull.
    pub fn new(alphas: Vec<f64>, mut betas: Vec<f64>) -> Result<Self> {
        let n = alphas.len();
        if n < 2 || betas.len() != n {
            return Err(Error::InvalidCurve(format!(
                "need at least two aligned nodes, got {} alphas and {} betas",
                n,
                betas.len()
            )));
        }
        check_grid("alpha", &alphas)?;
        if alphas[0] != 0.0 || alphas[n - 1] != 1.0 {
            return Err(Error::InvalidCurve("alpha grid must span [0, 1]".into()));
        }
        if betas.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidCurve("non-finite beta".into()));
        }
        let tol = SHAPE_TOLERANCE;
        if let Some(b) = betas.iter().find(|&&b| !(-tol..=1.0 + tol).contains(&b)) {
            return Err(Error::InvalidCurve(format!("beta {b} outside [0, 1]")));
        }
        if betas[n - 1] > tol {
            return Err(Error::InvalidCurve(format!(
                "f(1) = {} but a trade-off function ends at 0",
                betas[n - 1]
            )));
        }
        let mut repair = false;
        for i in 1..n {
            let rise = betas[i] - betas[i - 1];
            if rise > tol {
                return Err(Error::InvalidCurve(format!(
                    "betas increase by {rise:e} at alpha = {}",
                    alphas[i]
                )));
            }
            repair |= rise > 0.0;
        }
        for i in 1..n - 1 {
            let excess = chord_excess(&alphas, &betas, i);
            if excess > tol {
                return Err(Error::InvalidCurve(format!(
                    "not convex at alpha = {} (excess {excess:e})",
                    alphas[i]
                )));
            }
            repair |= excess > 0.0;
        }
        for b in betas.iter_mut() {
            *b = b.clamp(0.0, 1.0);
        }
        betas[n - 1] = 0.0;
        if repair {
            let hull = LowerHull::new(&alphas, &betas);
            for (b, &a) in betas.iter_mut().zip(&alphas) {
                *b = hull.eval(a).clamp(0.0, 1.0);
            }
            for i in 1..n {
                betas[i] = betas[i].min(betas[i - 1]);
            }
        }
        let uniform = is_uniform(&alphas);
        Ok(TradeoffCurve {
            alphas,
            betas,
            uniform,
        })
    }

    /// Samples `f` on a uniform grid of `grid_size` nodes.
    pub fn from_fn(grid_size: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if grid_size < 2 {
            return Err(Error::domain(
                "grid_size",
                grid_size as f64,
                "a trade-off grid needs at least 2 nodes",
            ));
        }
        let alphas = uniform_grid(grid_size);
        let betas = alphas.iter().map(|&a| f(a)).collect();
        Self::new(alphas, betas)
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// f(0). Below 1 exactly when the mechanism has a positive probability
    /// of an infinite privacy loss.
    pub fn f0(&self) -> f64 {
        self.betas[0]
    }

    /// Evaluates the interpolant at any real `x`, extended by f(x) = 1 for
    /// x < 0 and f(x) = 0 for x > 1.
    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        if x > 1.0 {
            return 0.0;
        }
        let n = self.alphas.len();
        let k = if self.uniform {
            ((x * (n - 1) as f64) as usize).min(n - 2)
        } else {
            self.alphas.partition_point(|&a| a <= x).clamp(1, n - 1) - 1
        };
        let (a0, a1) = (self.alphas[k], self.alphas[k + 1]);
        let t = (x - a0) / (a1 - a0);
        self.betas[k] + t * (self.betas[k + 1] - self.betas[k])
    }

    /// Re-samples the interpolant on a uniform grid.
    pub fn resample(&self, grid_size: usize) -> Result<Self> {
        if self.uniform && self.len() == grid_size {
            return Ok(self.clone());
        }
        Self::from_fn(grid_size, |a| self.eval(a))
    }

    pub(crate) fn hull(&self) -> LowerHull {
        LowerHull::new(&self.alphas, &self.betas)
    }
}

fn is_uniform(xs: &[f64]) -> bool {
    let last = (xs.len() - 1) as f64;
    xs.iter()
        .enumerate()
        .all(|(i, &x)| (x - i as f64 / last).abs() <= 1e-12)
}

/// Discretised minimum Bayes error π ↦ R_min(π).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BayesErrorCurve {
    pis: Vec<f64>,
    risks: Vec<f64>,
}

impl BayesErrorCurve {
    /// Validates a tabulated Bayes error curve: zero at both ends, capped by
    /// min(π, 1 − π) and concave, up to [`SHAPE_TOLERANCE`].
    pub fn new(pis: Vec<f64>, mut risks: Vec<f64>) -> Result<Self> {
        let n = pis.len();
        if n < 3 || risks.len() != n {
            return Err(Error::InvalidCurve(format!(
                "need at least three aligned nodes, got {} priors and {} risks",
                n,
                risks.len()
            )));
        }
        check_grid("prior", &pis)?;
        if pis[0] != 0.0 || pis[n - 1] != 1.0 {
            return Err(Error::InvalidCurve("prior grid must span [0, 1]".into()));
        }
        let tol = SHAPE_TOLERANCE;
        for (&p, r) in pis.iter().zip(risks.iter_mut()) {
            if !r.is_finite() || *r < -tol || *r > p.min(1.0 - p) + tol {
                return Err(Error::InvalidCurve(format!(
                    "R_min({p}) = {r} violates 0 <= R <= min(pi, 1 - pi)"
                )));
            }
            *r = r.clamp(0.0, p.min(1.0 - p));
        }
        for i in 1..n - 1 {
            let excess = chord_excess(&pis, &risks, i);
            if excess < -tol {
                return Err(Error::InvalidCurve(format!(
                    "not concave at pi = {} (deficit {:e})",
                    pis[i], -excess
                )));
            }
        }
        Ok(BayesErrorCurve { pis, risks })
    }

    pub fn pis(&self) -> &[f64] {
        &self.pis
    }

    pub fn risks(&self) -> &[f64] {
        &self.risks
    }

    pub fn len(&self) -> usize {
        self.pis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pis.is_empty()
    }

    /// R* = max over π of R_min(π).
    pub fn minimax(&self) -> f64 {
        self.risks.iter().copied().fold(0.0, f64::max)
    }
}

/// Discretised privacy profile ε ↦ δ(ε).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrivacyProfile {
    epsilons: Vec<f64>,
    deltas: Vec<f64>,
}

impl PrivacyProfile {
    /// Validates a tabulated profile: δ ∈ [0, 1], non-increasing in ε and
    /// convex in e^ε, up to [`SHAPE_TOLERANCE`].
    pub fn new(epsilons: Vec<f64>, mut deltas: Vec<f64>) -> Result<Self> {
        let n = epsilons.len();
        if n < 2 || deltas.len() != n {
            return Err(Error::InvalidCurve(format!(
                "need at least two aligned nodes, got {} epsilons and {} deltas",
                n,
                deltas.len()
            )));
        }
        check_grid("epsilon", &epsilons)?;
        let tol = SHAPE_TOLERANCE;
        for d in deltas.iter_mut() {
            if !d.is_finite() || *d < -tol || *d > 1.0 + tol {
                return Err(Error::InvalidCurve(format!("delta {d} outside [0, 1]")));
            }
            *d = d.clamp(0.0, 1.0);
        }
        for i in 1..n {
            let rise = deltas[i] - deltas[i - 1];
            if rise > tol {
                return Err(Error::InvalidCurve(format!(
                    "delta increases by {rise:e} at epsilon = {}",
                    epsilons[i]
                )));
            }
            deltas[i] = deltas[i].min(deltas[i - 1]);
        }
        let xs: Vec<f64> = epsilons.iter().map(|e| e.exp()).collect();
        if xs.iter().all(|x| x.is_finite()) {
            for i in 1..n - 1 {
                let excess = chord_excess(&xs, &deltas, i);
                if excess > tol {
                    return Err(Error::InvalidCurve(format!(
                        "delta not convex in exp(epsilon) at epsilon = {} (excess {excess:e})",
                        epsilons[i]
                    )));
                }
            }
        }
        Ok(PrivacyProfile { epsilons, deltas })
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }

    /// δ(ε) on the grid's span, interpolated linearly in e^ε. Points left of
    /// the grid use the symmetric extension δ(−ε) = 1 − e^{−ε}(1 − δ(ε))
    /// when the mirrored point is covered. `None` when neither applies.
    pub fn delta_at(&self, eps: f64) -> Option<f64> {
        let n = self.epsilons.len();
        let (lo, hi) = (self.epsilons[0], self.epsilons[n - 1]);
        if eps >= lo && eps <= hi {
            let k = self.epsilons.partition_point(|&e| e <= eps).clamp(1, n - 1) - 1;
            let (x0, x1) = (self.epsilons[k].exp(), self.epsilons[k + 1].exp());
            let t = (eps.exp() - x0) / (x1 - x0);
            return Some(self.deltas[k] + t * (self.deltas[k + 1] - self.deltas[k]));
        }
        if eps < lo && -eps >= lo && -eps <= hi {
            let mirrored = self.delta_at(-eps)?;
            return Some(1.0 - eps.exp() * (1.0 - mirrored));
        }
        None
    }
}
