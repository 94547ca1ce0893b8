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

//! Lower convex hulls and upper envelopes of lines.
//!
//! Every conversion between curve representations is either a minimum of a
//! linear functional over the points of a curve or a maximum over a family
//! of lines. Both reduce to these two structures.

/// Lower convex hull of a point set sorted by strictly increasing x.
#[derive(Debug, Clone)]
pub(crate) struct LowerHull {
    xs: Vec<f64>,
    ys: Vec<f64>,
    // slopes[k] is the slope of the edge from vertex k to vertex k + 1.
    slopes: Vec<f64>,
}

impl LowerHull {
    pub(crate) fn new(xs: &[f64], ys: &[f64]) -> Self {
        debug_assert_eq!(xs.len(), ys.len());
        let mut hx: Vec<f64> = Vec::with_capacity(xs.len());
        let mut hy: Vec<f64> = Vec::with_capacity(xs.len());
        for (&x, &y) in xs.iter().zip(ys) {
            while hx.len() >= 2 {
                let n = hx.len();
                let cross = (hx[n - 1] - hx[n - 2]) * (y - hy[n - 2])
                    - (hy[n - 1] - hy[n - 2]) * (x - hx[n - 2]);
                if cross <= 0.0 {
                    hx.pop();
                    hy.pop();
                } else {
                    break;
                }
            }
            hx.push(x);
            hy.push(y);
        }
        let slopes = hx
            .windows(2)
            .zip(hy.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect();
        LowerHull {
            xs: hx,
            ys: hy,
            slopes,
        }
    }

    /// Edge slopes, increasing.
    pub(crate) fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Index of the vertex minimising `wx·x + wy·y`, for `wy ≥ 0`.
    fn argmin(&self, wx: f64, wy: f64) -> usize {
        self.slopes.partition_point(|&s| wx + wy * s < 0.0)
    }

    /// min over the original points of `wx·x + wy·y`, for `wy ≥ 0`.
    pub(crate) fn min_linear(&self, wx: f64, wy: f64) -> f64 {
        let k = self.argmin(wx, wy);
        wx * self.xs[k] + wy * self.ys[k]
    }

    /// Evaluates the hull as a piecewise-linear function at `x`.
    pub(crate) fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if n == 1 || x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let k = self.xs.partition_point(|&v| v <= x) - 1;
        self.ys[k] + self.slopes[k] * (x - self.xs[k])
    }
}

/// A line `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    fn at(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Upper envelope (pointwise maximum) of a family of lines.
#[derive(Debug, Clone)]
pub(crate) struct UpperEnvelope {
    lines: Vec<Line>,
}

impl UpperEnvelope {
    pub(crate) fn new(mut lines: Vec<Line>) -> Self {
        lines.retain(|l| l.slope.is_finite() && l.intercept.is_finite());
        lines.sort_by(|a, b| {
            a.slope
                .total_cmp(&b.slope)
                .then(b.intercept.total_cmp(&a.intercept))
        });
        lines.dedup_by(|later, earlier| later.slope == earlier.slope);
        let mut hull: Vec<Line> = Vec::with_capacity(lines.len());
        for l3 in lines {
            while hull.len() >= 2 {
                let l1 = hull[hull.len() - 2];
                let l2 = hull[hull.len() - 1];
                // l2 is redundant when l1 and l3 cross left of where l1 and l2 do.
                let lhs = (l1.intercept - l3.intercept) * (l2.slope - l1.slope);
                let rhs = (l1.intercept - l2.intercept) * (l3.slope - l1.slope);
                if lhs <= rhs {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(l3);
        }
        UpperEnvelope { lines: hull }
    }

    /// Evaluates the envelope at each of `xs`, which must be ascending.
    pub(crate) fn eval_sorted(&self, xs: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(xs.len());
        if self.lines.is_empty() {
            out.resize(xs.len(), f64::NEG_INFINITY);
            return out;
        }
        let mut k = 0;
        for &x in xs {
            debug_assert!(out.is_empty() || x >= xs[out.len() - 1]);
            while k + 1 < self.lines.len() && self.lines[k + 1].at(x) >= self.lines[k].at(x) {
                k += 1;
            }
            out.push(self.lines[k].at(x));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_min_matches_brute_force() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| (1.0 - x).powi(3) + 0.01 * (17.0 * x).sin())
            .collect();
        let hull = LowerHull::new(&xs, &ys);
        for i in 0..=40 {
            let pi = i as f64 / 40.0;
            let brute = xs
                .iter()
                .zip(&ys)
                .map(|(&x, &y)| pi * x + (1.0 - pi) * y)
                .fold(f64::INFINITY, f64::min);
            assert!((hull.min_linear(pi, 1.0 - pi) - brute).abs() < 1e-14);
        }
    }

    #[test]
    fn envelope_matches_brute_force() {
        let lines: Vec<Line> = (0..30)
            .map(|i| {
                let s = -(i as f64 * 0.2).exp();
                Line {
                    slope: s,
                    intercept: 1.0 - 0.03 * i as f64,
                }
            })
            .chain(std::iter::once(Line {
                slope: 0.0,
                intercept: 0.0,
            }))
            .collect();
        let xs: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let env = UpperEnvelope::new(lines.clone());
        for (x, got) in xs.iter().zip(env.eval_sorted(&xs)) {
            let brute = lines
                .iter()
                .map(|l| l.at(*x))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((got - brute).abs() < 1e-14, "x={x}");
        }
    }
}
