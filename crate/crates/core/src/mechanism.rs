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

//! Mechanism specifications and their trade-off curves.

use crate::accountant::{composed_tradeoff, AccountantConfig};
use crate::curves::{read_csv, TradeoffCurve};
use crate::error::{check_probability, Error, Result};
use crate::special::{laplace_cdf, laplace_isf, norm_cdf, norm_isf};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Grid size used when none is given: tolerance 1e-4.
pub const DEFAULT_GRID_SIZE: usize = 10_001;

/// A mechanism, described by its family and parameters.
///
/// Gaussian and Laplace mechanisms are parameterised by the ratio of
/// sensitivity to noise scale. Subsampled Gaussian mechanisms carry the
/// noise multiplier, the Poisson sampling rate and the number of
/// self-compositions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MechanismSpec {
    Gaussian { mu: f64 },
    Laplace { mu: f64 },
    SubsampledGaussian { sigma: f64, p: f64, steps: u64 },
    PerfectlyPrivate,
    BlatantlyNonPrivate,
    Tabulated { curve: TradeoffCurve },
}

/// The two extremal reference mechanisms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremal {
    /// Output independent of the data: f(α) = 1 − α.
    PerfectlyPrivate,
    /// Output reveals the data: f(α) = 0.
    BlatantlyNonPrivate,
}

fn check_mu(mu: f64) -> Result<()> {
    if mu.is_finite() && mu >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain("mu", mu, "must be finite and non-negative"))
    }
}

/// G_μ(α) = Φ(Φ⁻¹(1 − α) − μ).
pub fn gaussian_tradeoff(mu: f64, alpha: f64) -> Result<f64> {
    check_mu(mu)?;
    check_probability("alpha", alpha)?;
    Ok(norm_cdf(norm_isf(alpha) - mu).clamp(0.0, 1.0))
}

/// Trade-off function of the Laplace mechanism with sensitivity-to-scale
/// ratio μ.
pub fn laplace_tradeoff(mu: f64, alpha: f64) -> Result<f64> {
    check_mu(mu)?;
    check_probability("alpha", alpha)?;
    Ok(laplace_cdf(laplace_isf(alpha) - mu).clamp(0.0, 1.0))
}

pub fn extremal_tradeoff(which: Extremal, alpha: f64) -> Result<f64> {
    check_probability("alpha", alpha)?;
    Ok(match which {
        Extremal::PerfectlyPrivate => 1.0 - alpha,
        Extremal::BlatantlyNonPrivate => 0.0,
    })
}

impl MechanismSpec {
    pub fn gaussian(mu: f64) -> Self {
        MechanismSpec::Gaussian { mu }
    }

    pub fn laplace(mu: f64) -> Self {
        MechanismSpec::Laplace { mu }
    }

    pub fn sgm(sigma: f64, p: f64, steps: u64) -> Self {
        MechanismSpec::SubsampledGaussian { sigma, p, steps }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MechanismSpec::Gaussian { mu } | MechanismSpec::Laplace { mu } => check_mu(mu),
            MechanismSpec::SubsampledGaussian { sigma, p, steps } => {
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(Error::domain("sigma", sigma, "must be finite and positive"));
                }
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::domain("p", p, "must lie in (0, 1]"));
                }
                if steps == 0 {
                    return Err(Error::domain("steps", 0.0, "must be at least 1"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// f(α) for the closed-form families; `None` for composed and tabulated
    /// mechanisms, which only exist as curves.
    pub fn analytic_tradeoff(&self, alpha: f64) -> Option<Result<f64>> {
        match *self {
            MechanismSpec::Gaussian { mu } => Some(gaussian_tradeoff(mu, alpha)),
            MechanismSpec::Laplace { mu } => Some(laplace_tradeoff(mu, alpha)),
            MechanismSpec::PerfectlyPrivate => {
                Some(extremal_tradeoff(Extremal::PerfectlyPrivate, alpha))
            }
            MechanismSpec::BlatantlyNonPrivate => {
                Some(extremal_tradeoff(Extremal::BlatantlyNonPrivate, alpha))
            }
            MechanismSpec::SubsampledGaussian { sigma, p, steps } if p == 1.0 => {
                // Composed Gaussians stay Gaussian.
                Some(gaussian_tradeoff((steps as f64).sqrt() / sigma, alpha))
            }
            _ => None,
        }
    }

    /// Number of self-compositions the spec describes.
    pub fn steps(&self) -> u64 {
        match *self {
            MechanismSpec::SubsampledGaussian { steps, .. } => steps,
            _ => 1,
        }
    }
}

/// Trade-off curve of `spec` on a uniform grid, using the default
/// accountant settings for subsampled Gaussian mechanisms.
pub fn tradeoff_curve(spec: &MechanismSpec, grid_size: usize) -> Result<TradeoffCurve> {
    tradeoff_curve_with(spec, grid_size, &AccountantConfig::default())
}

pub fn tradeoff_curve_with(
    spec: &MechanismSpec,
    grid_size: usize,
    config: &AccountantConfig,
) -> Result<TradeoffCurve> {
    spec.validate()?;
    match spec {
        MechanismSpec::Gaussian { mu } => {
            TradeoffCurve::from_fn(grid_size, |a| norm_cdf(norm_isf(a) - mu))
        }
        MechanismSpec::Laplace { mu } => {
            TradeoffCurve::from_fn(grid_size, |a| laplace_cdf(laplace_isf(a) - mu))
        }
        MechanismSpec::PerfectlyPrivate => TradeoffCurve::from_fn(grid_size, |a| 1.0 - a),
        MechanismSpec::BlatantlyNonPrivate => TradeoffCurve::from_fn(grid_size, |_| 0.0),
        &MechanismSpec::SubsampledGaussian { sigma, p, steps } => {
            composed_tradeoff(sigma, p, steps, grid_size, config)
        }
        MechanismSpec::Tabulated { curve } => curve.resample(grid_size),
    }
}

impl fmt::Display for MechanismSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MechanismSpec::Gaussian { mu } => write!(f, "gaussian:mu={mu}"),
            MechanismSpec::Laplace { mu } => write!(f, "laplace:mu={mu}"),
            MechanismSpec::SubsampledGaussian { sigma, p, steps } => {
                write!(f, "sgm:sigma={sigma},p={p},steps={steps}")
            }
            MechanismSpec::PerfectlyPrivate => f.write_str("pp"),
            MechanismSpec::BlatantlyNonPrivate => f.write_str("bnp"),
            MechanismSpec::Tabulated { curve } => write!(f, "tabulated:nodes={}", curve.len()),
        }
    }
}

/// Parses the `family:key=value,...` form, e.g. `gaussian:mu=1`,
/// `sgm:sigma=2,p=0.0009,steps=1400000`, `pp`, `bnp` or
/// `tabulated:file=curve.csv` (an `alpha,beta` CSV file).
impl FromStr for MechanismSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, rest) = match s.split_once(':') {
            Some((f, r)) => (f.trim(), r.trim()),
            None => (s, ""),
        };
        let mut params: Vec<(&str, &str)> = Vec::new();
        for item in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::parse(s, format!("expected key=value, got {item:?}")))?;
            params.push((k.trim(), v.trim()));
        }
        let mut take = |key: &str| -> Result<Option<&str>> {
            let hits: Vec<usize> = (0..params.len()).filter(|&i| params[i].0 == key).collect();
            match hits.as_slice() {
                [] => Ok(None),
                [i] => Ok(Some(params.remove(*i).1)),
                _ => Err(Error::parse(s, format!("{key} given more than once"))),
            }
        };
        let num = |key: &str, v: Option<&str>| -> Result<f64> {
            let v = v.ok_or_else(|| Error::parse(s, format!("missing {key}")))?;
            let x: f64 = v
                .parse()
                .map_err(|_| Error::parse(s, format!("{key}={v} is not a number")))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::parse(s, format!("{key} must be finite")))
            }
        };
        let spec = match family.to_ascii_lowercase().as_str() {
            "gaussian" | "gauss" => MechanismSpec::Gaussian {
                mu: num("mu", take("mu")?)?,
            },
            "laplace" => MechanismSpec::Laplace {
                mu: num("mu", take("mu")?)?,
            },
            "sgm" | "subsampled_gaussian" => {
                let sigma = num("sigma", take("sigma")?)?;
                let p = num("p", take("p")?)?;
                let raw_steps = take("steps")?;
                let steps = match raw_steps {
                    None => 1,
                    Some(v) => match v.parse::<u64>() {
                        Ok(n) => n,
                        Err(_) => {
                            let x = num("steps", Some(v))?;
                            if x < 1.0 || x.fract() != 0.0 || x > u64::MAX as f64 {
                                return Err(Error::parse(s, "steps must be a positive integer"));
                            }
                            x as u64
                        }
                    },
                };
                MechanismSpec::SubsampledGaussian { sigma, p, steps }
            }
            "pp" | "perfectly_private" => MechanismSpec::PerfectlyPrivate,
            "bnp" | "blatantly_non_private" => MechanismSpec::BlatantlyNonPrivate,
            "tabulated" => {
                let path = take("file")?.ok_or_else(|| Error::parse(s, "missing file"))?;
                let file = std::fs::File::open(path)?;
                MechanismSpec::Tabulated {
                    curve: read_csv(std::io::BufReader::new(file))?,
                }
            }
            other => return Err(Error::parse(s, format!("unknown family {other:?}"))),
        };
        if let Some((k, _)) = params.first() {
            return Err(Error::parse(s, format!("unexpected parameter {k:?}")));
        }
        spec.validate()
            .map_err(|e| Error::parse(s, e.to_string()))?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_values() {
        assert!((gaussian_tradeoff(0.0, 0.3).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(laplace_tradeoff(0.0, 0.5).unwrap(), 0.5);
        assert_eq!(laplace_tradeoff(1.0, 0.0).unwrap(), 1.0);
        assert_eq!(gaussian_tradeoff(2.0, 1.0).unwrap(), 0.0);
        assert_eq!(
            extremal_tradeoff(Extremal::PerfectlyPrivate, 0.25).unwrap(),
            0.75
        );
        assert_eq!(
            extremal_tradeoff(Extremal::BlatantlyNonPrivate, 0.25).unwrap(),
            0.0
        );
        assert_eq!(
            extremal_tradeoff(Extremal::PerfectlyPrivate, 1.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn domain_errors() {
        assert!(gaussian_tradeoff(-0.1, 0.5).is_err());
        assert!(gaussian_tradeoff(1.0, 1.1).is_err());
        assert!(laplace_tradeoff(f64::NAN, 0.5).is_err());
        assert!(extremal_tradeoff(Extremal::PerfectlyPrivate, -0.5).is_err());
        assert!(MechanismSpec::sgm(0.0, 0.5, 3).validate().is_err());
        assert!(MechanismSpec::sgm(1.0, 0.0, 3).validate().is_err());
        assert!(MechanismSpec::sgm(1.0, 0.5, 0).validate().is_err());
    }

    #[test]
    fn parse_and_display_roundtrip() {
        for text in [
            "gaussian:mu=1",
            "laplace:mu=0.5",
            "sgm:sigma=2,p=0.0009,steps=1400000",
            "pp",
            "bnp",
        ] {
            let spec: MechanismSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
            assert_eq!(spec.to_string().parse::<MechanismSpec>().unwrap(), spec);
        }
        let s: MechanismSpec = "sgm: sigma=3.0, p=9e-4, steps=3.4e6".parse().unwrap();
        assert_eq!(s, MechanismSpec::sgm(3.0, 9e-4, 3_400_000));
    }

    #[test]
    fn parse_errors() {
        for bad in [
            "gaussian",
            "gaussian:mu=x",
            "gaussian:mu=-1",
            "gaussian:mu=1,mu=2",
            "gaussian:mu=1,sigma=2",
            "sgm:sigma=1,p=2",
            "sgm:sigma=1,p=0.5,steps=1.5",
            "cauchy:mu=1",
            "laplace:mu",
        ] {
            assert!(
                matches!(bad.parse::<MechanismSpec>(), Err(Error::Parse { .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn curves_for_closed_forms() {
        let c = tradeoff_curve(&MechanismSpec::gaussian(0.0), 101).unwrap();
        for (a, b) in c.alphas().iter().zip(c.betas()) {
            assert!((b - (1.0 - a)).abs() < 1e-15);
        }
        let z = tradeoff_curve(&MechanismSpec::BlatantlyNonPrivate, 11).unwrap();
        assert!(z.betas().iter().all(|&b| b == 0.0));
        assert_eq!(z.len(), 11);
    }

    #[test]
    fn serde_tags_family() {
        let json = serde_json::to_string(&MechanismSpec::gaussian(1.0)).unwrap();
        assert_eq!(json, r#"{"family":"gaussian","mu":1.0}"#);
    }
}
