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

use super::{uniform_grid, BayesErrorCurve, PrivacyProfile, TradeoffCurve, SHAPE_TOLERANCE};
use crate::error::{check_probability, Error, Result};
use crate::hull::{Line, UpperEnvelope};

/// Spacing of the ε grid built by [`default_eps_grid`].
pub const DEFAULT_EPS_STEP: f64 = 5e-3;

/// R_min(π) = min over α of πα + (1 − π)f(α), by a scan over the curve's
/// nodes. The interpolant is piecewise linear so the minimum sits on a node.
pub fn bayes_error_at(f: &TradeoffCurve, pi: f64) -> Result<f64> {
    check_probability("pi", pi)?;
    let r = f
        .alphas()
        .iter()
        .zip(f.betas())
        .map(|(&a, &b)| pi * a + (1.0 - pi) * b)
        .fold(f64::INFINITY, f64::min);
    Ok(r.clamp(0.0, pi.min(1.0 - pi)))
}

/// R_min(π) for a trade-off function given as a closure, by golden-section
/// search on the convex objective.
pub fn bayes_error_of_fn(f: impl Fn(f64) -> f64, pi: f64) -> Result<f64> {
    check_probability("pi", pi)?;
    let obj = |a: f64| pi * a + (1.0 - pi) * f(a);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (obj(x1), obj(x2));
    while hi - lo > 1e-12 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = obj(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = obj(x2);
        }
    }
    let best = [obj(0.0), obj(1.0), f1, f2]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(best.clamp(0.0, pi.min(1.0 - pi)))
}

/// Minimum Bayes error curve on a uniform prior grid.
pub fn bayes_error_curve(f: &TradeoffCurve, grid_size: usize) -> Result<BayesErrorCurve> {
    if grid_size < 3 {
        return Err(Error::domain(
            "grid_size",
            grid_size as f64,
            "a Bayes error grid needs at least 3 nodes",
        ));
    }
    let hull = f.hull();
    let pis = uniform_grid(grid_size);
    let risks = pis
        .iter()
        .map(|&pi| hull.min_linear(pi, 1.0 - pi).clamp(0.0, pi.min(1.0 - pi)))
        .collect();
    BayesErrorCurve::new(pis, risks)
}

/// Rebuilds f(α) = max over π < 1 of (R_min(π) − πα)/(1 − π).
pub fn tradeoff_from_bayes(r: &BayesErrorCurve, grid_size: usize) -> Result<TradeoffCurve> {
    let lines = r
        .pis()
        .iter()
        .zip(r.risks())
        .filter(|(&pi, _)| pi < 1.0)
        .map(|(&pi, &risk)| Line {
            slope: -pi / (1.0 - pi),
            intercept: risk / (1.0 - pi),
        })
        .collect();
    envelope_curve(lines, grid_size)
}

/// Samples the upper envelope of `lines` and of the zero line on a uniform
/// α grid.
fn envelope_curve(mut lines: Vec<Line>, grid_size: usize) -> Result<TradeoffCurve> {
    if grid_size < 2 {
        return Err(Error::domain(
            "grid_size",
            grid_size as f64,
            "a trade-off grid needs at least 2 nodes",
        ));
    }
    lines.push(Line {
        slope: 0.0,
        intercept: 0.0,
    });
    let alphas = uniform_grid(grid_size);
    let mut betas = UpperEnvelope::new(lines).eval_sorted(&alphas);
    for b in betas.iter_mut() {
        *b = b.clamp(0.0, 1.0);
    }
    let n = betas.len();
    if betas[n - 1] <= SHAPE_TOLERANCE {
        betas[n - 1] = 0.0;
    }
    TradeoffCurve::new(alphas, betas)
}

/// An ε grid on which [`profile_from_tradeoff`] captures the whole profile.
///
/// The grid runs from 0 to the log of the steepest slope of the curve, past
/// which δ is constant, then one extra node so that the flat tail is visible.
pub fn default_eps_grid(f: &TradeoffCurve, step: f64) -> Vec<f64> {
    let a = f.alphas();
    let b = f.betas();
    let steepest = a
        .windows(2)
        .zip(b.windows(2))
        .map(|(x, y)| (y[0] - y[1]) / (x[1] - x[0]))
        .fold(0.0f64, f64::max);
    let eps_max = if steepest > 1.0 { steepest.ln() } else { 0.0 };
    let n = (eps_max / step).ceil() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    if let Some(last) = grid.last_mut() {
        *last = last.max(eps_max);
    }
    let end = grid[grid.len() - 1];
    grid.push(end + 1.0);
    grid
}

/// δ(ε) = 1 − min over α of (e^ε α + f(α)), clipped to [0, 1].
pub fn profile_from_tradeoff(f: &TradeoffCurve, eps_grid: &[f64]) -> Result<PrivacyProfile> {
    let hull = f.hull();
    let deltas = eps_grid
        .iter()
        .map(|&eps| {
            if !eps.is_finite() {
                return Err(Error::domain("epsilon", eps, "must be finite"));
            }
            let w = eps.exp();
            let m = if w.is_finite() {
                hull.min_linear(w, 1.0)
            } else {
                f.f0()
            };
            Ok((1.0 - m).clamp(0.0, 1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    PrivacyProfile::new(eps_grid.to_vec(), deltas)
}

/// Rebuilds the symmetric trade-off function
/// f(α) = sup over ε of max{0, 1 − δ(ε) − e^ε α, e^{−ε}(1 − δ(ε) − α)}.
///
/// Fails with [`Error::Truncation`] when δ is above 1e-9 and still falling at
/// the end of the grid, since larger ε would then raise f near α = 0.
pub fn tradeoff_from_profile(profile: &PrivacyProfile, grid_size: usize) -> Result<TradeoffCurve> {
    let eps = profile.epsilons();
    let del = profile.deltas();
    let n = eps.len();
    if del[n - 1] > 1e-9 && del[n - 2] - del[n - 1] > 1e-12 {
        return Err(Error::Truncation {
            eps_max: eps[n - 1],
            delta: del[n - 1],
        });
    }
    let mut lines = Vec::with_capacity(2 * n);
    let mut f0: f64 = 0.0;
    for (&e, &d) in eps.iter().zip(del) {
        let keep = 1.0 - d;
        f0 = f0.max(keep);
        let up = e.exp();
        let down = (-e).exp();
        lines.push(Line {
            slope: -up,
            intercept: keep,
        });
        lines.push(Line {
            slope: -down,
            intercept: down * keep,
        });
    }
    let mut curve = envelope_curve(lines, grid_size)?;
    if curve.f0() < f0 {
        // Slopes too steep to represent still pin down f(0).
        let mut betas = curve.betas().to_vec();
        betas[0] = f0;
        curve = TradeoffCurve::new(curve.alphas().to_vec(), betas)?;
    }
    Ok(curve)
}

/// f(α) = F_Y(F_X⁻¹(1 − α)) for the privacy-loss variables X and Y of a
/// mutually absolutely continuous pair, given by their CDFs.
pub fn tradeoff_from_plrv_cdfs(
    cdf_x: impl Fn(f64) -> f64,
    cdf_y: impl Fn(f64) -> f64,
    alpha: f64,
) -> Result<f64> {
    check_probability("alpha", alpha)?;
    if alpha == 0.0 {
        return Ok(1.0);
    }
    if alpha == 1.0 {
        return Ok(0.0);
    }
    let q = 1.0 - alpha;
    // Generalised inverse: the smallest t with F_X(t) ≥ q.
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while cdf_x(lo) >= q {
        lo *= 2.0;
        if lo < -1e300 {
            return Ok(cdf_y(f64::NEG_INFINITY).clamp(0.0, 1.0));
        }
    }
    while cdf_x(hi) < q {
        hi *= 2.0;
        if hi > 1e300 {
            return Ok(1.0);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf_x(mid) >= q {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(cdf_y(hi).clamp(0.0, 1.0))
}

/// Total variation between the pair, max over α of 1 − α − f(α).
pub fn tv_and_advantage(f: &TradeoffCurve) -> f64 {
    f.alphas()
        .iter()
        .zip(f.betas())
        .map(|(&a, &b)| 1.0 - a - b)
        .fold(0.0, f64::max)
        .min(1.0)
}
