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

//! Moments of the log-derivative of a trade-off curve and the
//! finite-composition bound on Δ built from them.
//!
//! With g(x) = log|f′(x)| the moments are
//! v1 = −∫g, v2 = ∫g², v3 = ∫|g + v1|³ and v4 = ∫|g|³ over [0, 1], and
//! η = v1/√(v2 − v1²).

use crate::accountant::{sgm_log_ratio, AccountantConfig};
use crate::curves::TradeoffCurve;
use crate::divergence::{compare, grid_tolerance};
use crate::error::{Error, Result};
use crate::mechanism::{tradeoff_curve_with, MechanismSpec};
use crate::quadrature::{endpoint_breakpoints, integrate, Tolerance};
use crate::special::{laplace_isf, norm_isf};
use serde::Serialize;

const BOUND_CONSTANT: f64 = 0.56;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub v4: f64,
    /// `None` when the variance v2 − v1² vanishes.
    pub eta: Option<f64>,
}

impl MomentSet {
    fn from_parts(v1: f64, v2: f64, v3: f64, v4: f64) -> Self {
        let var = v2 - v1 * v1;
        let eta = (var > 1e-300 && v1 > 0.0).then(|| v1 / var.sqrt());
        MomentSet {
            v1,
            v2,
            v3,
            v4,
            eta,
        }
    }

    fn eta_or_err(&self) -> Result<f64> {
        self.eta.ok_or(Error::domain(
            "eta",
            self.v1,
            "undefined without privacy loss",
        ))
    }
}

fn moments_of(g: impl Fn(f64) -> f64 + Sync, extra: &[f64]) -> Result<MomentSet> {
    let mut bp = endpoint_breakpoints();
    bp.extend_from_slice(extra);
    // Nodes next to 1 can round onto it, where g is infinite; the piece
    // they stand for is below machine epsilon wide.
    let g = |x: f64| if x > 0.0 && x < 1.0 { g(x) } else { 0.0 };
    let tol = Tolerance::default();
    let run = |which: &'static str, h: &dyn Fn(f64) -> f64| -> Result<f64> {
        let q = integrate(h, 0.0, 1.0, &bp, tol);
        if !q.converged {
            return Err(Error::DivergentMoment {
                which,
                estimate: q.value,
                error: q.error,
            });
        }
        Ok(q.value)
    };
    let v1 = -run("v1", &|x| g(x))?;
    let v2 = run("v2", &|x| g(x).powi(2))?;
    let v3 = run("v3", &|x| (g(x) + v1).abs().powi(3))?;
    let v4 = run("v4", &|x| g(x).abs().powi(3))?;
    Ok(MomentSet::from_parts(v1, v2, v3, v4))
}

/// Moments of one step of `spec`, with the analytic log-derivative of each
/// closed-form family. Tabulated curves go through [`compute_curve_moments`].
pub fn compute_moments(spec: &MechanismSpec) -> Result<MomentSet> {
    spec.validate()?;
    match *spec {
        MechanismSpec::Gaussian { mu } => moments_of(|x| mu * norm_isf(x) - 0.5 * mu * mu, &[]),
        MechanismSpec::Laplace { mu } => moments_of(
            |x| (2.0 * laplace_isf(x) - mu).clamp(-mu, mu),
            &[0.5, 0.5 * (-mu).exp()],
        ),
        MechanismSpec::SubsampledGaussian { sigma, p, .. } => {
            moments_of(|x| sgm_log_ratio(sigma, p, sigma * norm_isf(x)), &[])
        }
        MechanismSpec::PerfectlyPrivate => Ok(MomentSet::from_parts(0.0, 0.0, 0.0, 0.0)),
        MechanismSpec::BlatantlyNonPrivate => Err(Error::DivergentMoment {
            which: "v1",
            estimate: f64::INFINITY,
            error: f64::INFINITY,
        }),
        MechanismSpec::Tabulated { ref curve } => compute_curve_moments(curve),
    }
}

/// Moments of a tabulated curve: f′ by central differences (one-sided at
/// the ends), integrals by the trapezoid rule.
pub fn compute_curve_moments(f: &TradeoffCurve) -> Result<MomentSet> {
    let (a, b) = (f.alphas(), f.betas());
    let n = a.len();
    let mut g = Vec::with_capacity(n);
    for i in 0..n {
        let (l, r) = (i.saturating_sub(1), (i + 1).min(n - 1));
        let slope = (b[r] - b[l]) / (a[r] - a[l]);
        let v = slope.abs().ln();
        if !v.is_finite() {
            return Err(Error::DivergentMoment {
                which: "v4",
                estimate: f64::INFINITY,
                error: f64::INFINITY,
            });
        }
        g.push(v);
    }
    let trap = |h: &dyn Fn(f64) -> f64| -> f64 {
        (1..n)
            .map(|i| 0.5 * (a[i] - a[i - 1]) * (h(g[i]) + h(g[i - 1])))
            .sum()
    };
    let v1 = -trap(&|x| x);
    let v2 = trap(&|x| x * x);
    let v3 = trap(&|x| (x + v1).abs().powi(3));
    let v4 = trap(&|x| x.abs().powi(3));
    Ok(MomentSet::from_parts(v1, v2, v3, v4))
}

/// 0.56(η³v3/(√N v1³) + η̃³ṽ3/(√Ñ ṽ1³)), the bound on
/// Δ(M^⊗N‖M̃^⊗Ñ) that holds when N/Ñ ≥ (η̃/η)².
///
/// A failed precondition gives [`Error::PreconditionUnmet`], which still
/// carries the value of the formula.
pub fn composition_bound(m1: &MomentSet, m2: &MomentSet, n: u64, n2: u64) -> Result<f64> {
    let bound = bound_value(m1, m2, n, n2)?;
    let ratio = n as f64 / n2 as f64;
    let required = (m2.eta_or_err()? / m1.eta_or_err()?).powi(2);
    if ratio < required {
        return Err(Error::PreconditionUnmet {
            ratio,
            required,
            bound,
        });
    }
    Ok(bound)
}

fn bound_value(m1: &MomentSet, m2: &MomentSet, n: u64, n2: u64) -> Result<f64> {
    if n == 0 || n2 == 0 {
        return Err(Error::domain("steps", 0.0, "must be at least 1"));
    }
    let term = |m: &MomentSet, n: u64| -> Result<f64> {
        let eta = m.eta_or_err()?;
        Ok(eta.powi(3) * m.v3 / ((n as f64).sqrt() * m.v1.powi(3)))
    };
    Ok(BOUND_CONSTANT * (term(m1, n)? + term(m2, n2)?))
}

/// The Gaussian mechanism that N steps of a mechanism with moments `m`
/// approach: μ = 2√N·η.
pub fn clt_gaussian_approx(m: &MomentSet, n: u64) -> Result<MechanismSpec> {
    if n == 0 {
        return Err(Error::domain("steps", 0.0, "must be at least 1"));
    }
    Ok(MechanismSpec::gaussian(
        2.0 * (n as f64).sqrt() * m.eta.unwrap_or(0.0),
    ))
}

/// The analytic bound next to the accountant's Δ for two composed mechanisms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub bound: f64,
    /// N/Ñ ≥ (η̃/η)², so the bound applies to Δ(A‖B).
    pub precondition_forward: bool,
    /// Ñ/N ≥ (η/η̃)², so the bound applies to Δ(B‖A).
    pub precondition_reverse: bool,
    pub ratio: f64,
    pub required: f64,
    pub delta_ab: f64,
    pub delta_ba: f64,
    /// bound − Δ(A‖B).
    pub gap: f64,
    /// The accountant never exceeds the bound where the bound applies.
    pub sound: bool,
    pub tolerance: f64,
    pub moments_a: MomentSet,
    pub moments_b: MomentSet,
    pub steps_a: u64,
    pub steps_b: u64,
}

/// Compares [`composition_bound`] with the accountant for `a` and `b`, each
/// a Gaussian or subsampled Gaussian spec with its own number of steps.
pub fn empirical_vs_bound(
    a: &MechanismSpec,
    b: &MechanismSpec,
    grid_size: usize,
    config: &AccountantConfig,
) -> Result<BoundReport> {
    for s in [a, b] {
        if !matches!(
            s,
            MechanismSpec::Gaussian { .. } | MechanismSpec::SubsampledGaussian { .. }
        ) {
            return Err(Error::domain(
                "mechanism",
                f64::NAN,
                "the bound report needs Gaussian or subsampled Gaussian specs",
            ));
        }
    }
    let (ma, mb) = (compute_moments(a)?, compute_moments(b)?);
    let (na, nb) = (a.steps(), b.steps());
    let bound = bound_value(&ma, &mb, na, nb)?;
    let (ea, eb) = (ma.eta_or_err()?, mb.eta_or_err()?);
    let ratio = na as f64 / nb as f64;
    let required = (eb / ea).powi(2);
    let forward = ratio >= required;
    let reverse = 1.0 / ratio >= 1.0 / required;
    let (ca, cb) = rayon::join(
        || tradeoff_curve_with(a, grid_size, config),
        || tradeoff_curve_with(b, grid_size, config),
    );
    let verdict = compare(&ca?, &cb?, grid_size)?;
    let tolerance = 2.0 * grid_tolerance(grid_size);
    let sound = (!forward || verdict.delta_ab <= bound + tolerance)
        && (!reverse || verdict.delta_ba <= bound + tolerance);
    Ok(BoundReport {
        bound,
        precondition_forward: forward,
        precondition_reverse: reverse,
        ratio,
        required,
        delta_ab: verdict.delta_ab,
        delta_ba: verdict.delta_ba,
        gap: bound - verdict.delta_ab,
        sound,
        tolerance,
        moments_a: ma,
        moments_b: mb,
        steps_a: na,
        steps_b: nb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::gaussian_tradeoff;

    #[test]
    fn gaussian_identities() {
        for mu in [0.5, 1.0, 2.0, 4.0] {
            let m = compute_moments(&MechanismSpec::gaussian(mu)).unwrap();
            assert!((m.v1 - mu * mu / 2.0).abs() < 1e-9, "mu={mu} {m:?}");
            assert!((m.v2 - (mu * mu + mu.powi(4) / 4.0)).abs() < 1e-8);
            assert!((m.eta.unwrap() - mu / 2.0).abs() < 1e-9);
            let abs3 = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
            assert!((m.v3 - mu.powi(3) * abs3).abs() < 1e-8);
        }
    }

    #[test]
    fn sgm_with_full_sampling_is_gaussian() {
        let s = compute_moments(&MechanismSpec::sgm(2.0, 1.0, 1)).unwrap();
        let g = compute_moments(&MechanismSpec::gaussian(0.5)).unwrap();
        assert!((s.v1 - g.v1).abs() < 1e-12);
        assert!((s.v3 - g.v3).abs() < 1e-10);
    }

    #[test]
    fn laplace_mean_is_kl() {
        // KL between unit Laplace laws a distance mu apart: mu + e^{-mu} - 1.
        let m = compute_moments(&MechanismSpec::laplace(1.0)).unwrap();
        assert!((m.v1 - (-1f64).exp()).abs() < 1e-10, "{m:?}");
    }

    #[test]
    fn extremes() {
        let m = compute_moments(&MechanismSpec::PerfectlyPrivate).unwrap();
        assert_eq!(m.v1, 0.0);
        assert!(m.eta.is_none());
        assert!(matches!(
            compute_moments(&MechanismSpec::BlatantlyNonPrivate),
            Err(Error::DivergentMoment { .. })
        ));
    }

    #[test]
    fn tabulated_moments_approach_analytic() {
        let c = TradeoffCurve::from_fn(100_001, |a| gaussian_tradeoff(1.0, a).unwrap()).unwrap();
        let m = compute_curve_moments(&c).unwrap();
        assert!((m.v1 - 0.5).abs() < 2e-3, "{m:?}");
        assert!((m.eta.unwrap() - 0.5).abs() < 1e-2);
    }

    #[test]
    fn bound_scaling_and_precondition() {
        let m = compute_moments(&MechanismSpec::gaussian(1.0)).unwrap();
        let b1 = composition_bound(&m, &m, 1_000_000, 1_000_000).unwrap();
        let b2 = composition_bound(&m, &m, 2_000_000, 2_000_000).unwrap();
        assert!((b1 / b2 - 2f64.sqrt()).abs() < 1e-12);
        let m2 = compute_moments(&MechanismSpec::gaussian(2.0)).unwrap();
        match composition_bound(&m, &m2, 10, 10) {
            Err(Error::PreconditionUnmet {
                ratio,
                required,
                bound,
            }) => {
                assert_eq!(ratio, 1.0);
                assert!((required - 4.0).abs() < 1e-9);
                assert!(bound > 0.0);
            }
            other => panic!("{other:?}"),
        }
        assert!(composition_bound(&m, &m2, 41, 10).is_ok());
    }

    #[test]
    fn clt_mu() {
        let m = compute_moments(&MechanismSpec::gaussian(1.0)).unwrap();
        match clt_gaussian_approx(&m, 4).unwrap() {
            MechanismSpec::Gaussian { mu } => assert!((mu - 2.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        assert!(clt_gaussian_approx(&m, 0).is_err());
    }
}
