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

use super::{self_compose, AccountantConfig, Rounding};
use crate::curves::PrivacyProfile;
use crate::error::{Error, Result};
use crate::special::norm_interval;

/// Discretised privacy-loss distribution of an ordered pair (A, B).
///
/// Atom `i` carries A-probability `masses[i]` at loss
/// `(offset + i) · spacing`, where the loss is log(dA/dB). The atom at +∞
/// holds `truncation_mass`, so that δ(ε) = E_A[(1 − e^{ε − L})₊] is never
/// understated by cutting the window.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePLD {
    spacing: f64,
    offset: i64,
    masses: Vec<f64>,
    truncation_mass: f64,
    rounding: Rounding,
    // Mass moved upward by tail trimming, and absolute FFT round-off.
    moved_mass: f64,
    roundoff: f64,
}

impl DiscretePLD {
    /// Builds a PLD from raw parts. Masses must be non-negative and sum,
    /// together with `truncation_mass`, to 1 within 1e-9.
    pub fn new(
        spacing: f64,
        offset: i64,
        masses: Vec<f64>,
        truncation_mass: f64,
        rounding: Rounding,
    ) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::domain("grid_spacing", spacing, "must be positive"));
        }
        if masses.is_empty() || masses.iter().any(|&m| !(m >= 0.0 && m.is_finite())) {
            return Err(Error::InvalidCurve(
                "PLD masses must be finite and non-negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&truncation_mass) {
            return Err(Error::domain(
                "truncation_mass",
                truncation_mass,
                "must lie in [0, 1]",
            ));
        }
        let total: f64 = masses.iter().sum::<f64>() + truncation_mass;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidCurve(format!(
                "PLD total mass {total} is not 1"
            )));
        }
        Ok(Self::from_parts(
            spacing,
            offset,
            masses,
            truncation_mass,
            rounding,
        ))
    }

    pub(crate) fn from_parts(
        spacing: f64,
        offset: i64,
        masses: Vec<f64>,
        truncation_mass: f64,
        rounding: Rounding,
    ) -> Self {
        DiscretePLD {
            spacing,
            offset,
            masses,
            truncation_mass,
            rounding,
            moved_mass: 0.0,
            roundoff: 0.0,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Grid index of the first atom.
    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn truncation_mass(&self) -> f64 {
        self.truncation_mass
    }

    pub fn rounding(&self) -> Rounding {
        self.rounding
    }

    pub fn loss(&self, i: usize) -> f64 {
        (self.offset + i as i64) as f64 * self.spacing
    }

    pub fn loss_grid(&self) -> Vec<f64> {
        (0..self.masses.len()).map(|i| self.loss(i)).collect()
    }

    /// Mass moved to larger losses by tail trimming during composition.
    pub fn moved_mass(&self) -> f64 {
        self.moved_mass
    }

    /// Accumulated FFT round-off (mass of the clipped negative values).
    pub fn roundoff(&self) -> f64 {
        self.roundoff
    }

    /// Everything the discretisation and composition may have added to δ
    /// beyond the grid's own rounding: truncation, trimming and round-off.
    pub fn error_bound(&self) -> f64 {
        self.truncation_mass + self.moved_mass + self.roundoff
    }

    /// E_A[L] over the finite atoms.
    pub fn mean(&self) -> f64 {
        self.masses
            .iter()
            .enumerate()
            .map(|(i, &m)| m * self.loss(i))
            .sum()
    }

    pub(crate) fn set_tracking(&mut self, moved_mass: f64, roundoff: f64) {
        self.moved_mass = moved_mass;
        self.roundoff = roundoff;
    }

    /// Self-composition, see [`self_compose`].
    pub fn compose(&self, steps: u64, config: &AccountantConfig) -> Result<DiscretePLD> {
        self_compose(self, steps, config)
    }

    /// Survival sums for evaluating δ at many ε.
    pub fn hockey_stick(&self) -> HockeyStick {
        let n = self.masses.len();
        let mut s1 = vec![0.0; n + 1];
        let mut s2 = vec![0.0; n + 1];
        for i in (0..n).rev() {
            let m = self.masses[i];
            s1[i] = s1[i + 1] + m;
            s2[i] = s2[i + 1] + m * (-self.loss(i)).exp();
        }
        HockeyStick {
            spacing: self.spacing,
            offset: self.offset,
            s1,
            s2,
            at_infinity: self.truncation_mass,
        }
    }
}

/// δ(ε) = m_∞ + Σ_{ℓ > ε} m(ℓ)(1 − e^{ε − ℓ}) for one direction.
#[derive(Debug, Clone)]
pub struct HockeyStick {
    spacing: f64,
    offset: i64,
    s1: Vec<f64>,
    s2: Vec<f64>,
    at_infinity: f64,
}

impl HockeyStick {
    pub fn delta(&self, eps: f64) -> f64 {
        let n = self.s1.len() - 1;
        // First atom with loss strictly above eps.
        let pos = eps / self.spacing - self.offset as f64;
        let j = if pos < 0.0 {
            0
        } else {
            ((pos.floor() as usize).saturating_add(1)).min(n)
        };
        let tail = self.s1[j] - eps.exp() * self.s2[j];
        (self.at_infinity + tail.max(0.0)).min(1.0)
    }

    pub fn max_finite_loss(&self) -> f64 {
        (self.offset + self.s1.len() as i64 - 2) as f64 * self.spacing
    }
}

/// The two adjacency directions of one mechanism: `remove` is the
/// distribution of log(Q/P) under Q, `add` that of log(P/Q) under P.
#[derive(Debug, Clone)]
pub struct PldPair {
    pub remove: DiscretePLD,
    pub add: DiscretePLD,
    sums: [HockeyStick; 2],
}

impl PldPair {
    pub fn new(remove: DiscretePLD, add: DiscretePLD) -> Self {
        let sums = [remove.hockey_stick(), add.hockey_stick()];
        PldPair { remove, add, sums }
    }

    pub fn compose(&self, steps: u64, config: &AccountantConfig) -> Result<PldPair> {
        let (remove, add) = rayon::join(
            || self.remove.compose(steps, config),
            || self.add.compose(steps, config),
        );
        Ok(PldPair::new(remove?, add?))
    }

    /// δ(ε), the larger of the two directions.
    pub fn delta(&self, eps: f64) -> f64 {
        self.sums[0].delta(eps).max(self.sums[1].delta(eps))
    }

    pub fn delta_at_infinity(&self) -> f64 {
        self.remove.truncation_mass.max(self.add.truncation_mass)
    }

    pub fn max_finite_loss(&self) -> f64 {
        self.sums[0]
            .max_finite_loss()
            .max(self.sums[1].max_finite_loss())
    }

    pub fn error_bound(&self) -> f64 {
        self.remove.error_bound().max(self.add.error_bound())
    }

    /// Profile on an explicit ε grid.
    pub fn profile(&self, eps_grid: &[f64]) -> Result<PrivacyProfile> {
        let deltas = eps_grid.iter().map(|&e| self.delta(e)).collect();
        PrivacyProfile::new(eps_grid.to_vec(), deltas)
    }

    /// Smallest ε ≥ 0 with δ(ε) ≤ `target`; +∞ if the atom at infinity
    /// alone exceeds it.
    pub fn epsilon_for_delta(&self, target: f64) -> f64 {
        if self.delta_at_infinity() > target {
            return f64::INFINITY;
        }
        if self.delta(0.0) <= target {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = self.max_finite_loss().max(1.0);
        while self.delta(hi) > target {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.delta(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 {
                break;
            }
        }
        hi
    }
}

/// PLD pair of one step of the subsampled Gaussian mechanism with
/// pessimistic rounding and the default window.
pub fn sgm_pld(sigma: f64, p: f64, grid_spacing: f64) -> Result<PldPair> {
    sgm_pld_with(sigma, p, grid_spacing, &AccountantConfig::default())
}

pub fn sgm_pld_with(
    sigma: f64,
    p: f64,
    grid_spacing: f64,
    config: &AccountantConfig,
) -> Result<PldPair> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::domain("sigma", sigma, "must be finite and positive"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::domain("p", p, "must lie in (0, 1]"));
    }
    if !(grid_spacing.is_finite() && grid_spacing > 0.0) {
        return Err(Error::domain(
            "grid_spacing",
            grid_spacing,
            "must be positive",
        ));
    }
    let pair = SgmPair { sigma, p };
    let remove = pair.discretise(Direction::Remove, grid_spacing, config)?;
    let add = pair.discretise(Direction::Add, grid_spacing, config)?;
    Ok(PldPair::new(remove, add))
}

/// log(Q/P)(ω) for P = N(0, σ²) and Q = (1 − p)N(0, σ²) + pN(1, σ²).
pub fn sgm_log_ratio(sigma: f64, p: f64, omega: f64) -> f64 {
    let t = (2.0 * omega - 1.0) / (2.0 * sigma * sigma);
    if t > 0.0 {
        t + (p + (1.0 - p) * (-t).exp()).ln()
    } else if t > -1.0 {
        (p * t.exp_m1()).ln_1p()
    } else {
        // ln((1 − p) + p·e^t) without the cancellation in expm1.
        let (a, b) = (p.ln() + t, (-p).ln_1p());
        let (hi, lo) = if a > b { (a, b) } else { (b, a) };
        hi + (lo - hi).exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Remove,
    Add,
}

struct SgmPair {
    sigma: f64,
    p: f64,
}

impl SgmPair {
    fn log_ratio(&self, omega: f64) -> f64 {
        sgm_log_ratio(self.sigma, self.p, omega)
    }

    /// The ω at which log(Q/P) equals `l`; −∞ below the range of the ratio.
    fn threshold(&self, l: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        if l > 30.0 {
            s2 * (l - self.p.ln() + (-(1.0 - self.p) * (-l).exp()).ln_1p()) + 0.5
        } else if l < -1.0 {
            let inner = (l.exp() - (1.0 - self.p)) / self.p;
            if inner <= 0.0 {
                f64::NEG_INFINITY
            } else {
                s2 * inner.ln() + 0.5
            }
        } else {
            let u = l.exp_m1() / self.p;
            if u <= -1.0 {
                f64::NEG_INFINITY
            } else {
                s2 * u.ln_1p() + 0.5
            }
        }
    }

    /// Masses of (lo, hi] under N(0, σ²) and N(1, σ²).
    fn interval(&self, lo: f64, hi: f64) -> (f64, f64) {
        let s = self.sigma;
        (
            norm_interval(lo / s, hi / s),
            norm_interval((lo - 1.0) / s, (hi - 1.0) / s),
        )
    }

    fn discretise(&self, dir: Direction, h: f64, config: &AccountantConfig) -> Result<DiscretePLD> {
        let (p, sigma) = (self.p, self.sigma);
        let w_lo = -config.window_sigmas * sigma;
        let w_hi = 1.0 + config.window_sigmas * sigma;
        let (loss_lo, loss_hi) = match dir {
            Direction::Remove => (self.log_ratio(w_lo), self.log_ratio(w_hi)),
            Direction::Add => (-self.log_ratio(w_hi), -self.log_ratio(w_lo)),
        };
        let k0 = (loss_lo / h).floor();
        let k1 = (loss_hi / h).ceil().max(k0 + 1.0);
        let bins = k1 - k0 + 1.0;
        if bins > config.max_bins as f64 {
            return Err(Error::GridTooLarge {
                bins: bins.min(usize::MAX as f64) as usize,
                limit: config.max_bins,
            });
        }
        let (k0, n) = (k0 as i64, bins as usize);
        // A-mass beyond the high-loss edge of the window goes to +∞.
        let (p0, p1) = match dir {
            Direction::Remove => self.interval(w_hi, f64::INFINITY),
            Direction::Add => self.interval(f64::NEG_INFINITY, w_lo),
        };
        let tail = match dir {
            Direction::Remove => (1.0 - p) * p0 + p * p1,
            Direction::Add => p0,
        };
        if tail > config.window_tail_mass {
            return Err(Error::WindowTooSmall {
                mass: tail,
                target: config.window_tail_mass,
            });
        }

        let mut masses = vec![0.0; n];
        let denom = -(-h).exp_m1();
        for j in 0..n - 1 {
            let l_a = (k0 + j as i64) as f64 * h;
            let l_b = l_a + h;
            // ω-range of losses in (l_a, l_b]; the first interval also takes
            // the low-loss tail outside the window.
            let (lo, hi) = match dir {
                Direction::Remove => (
                    if j == 0 {
                        f64::NEG_INFINITY
                    } else {
                        self.threshold(l_a)
                    },
                    if j == n - 2 {
                        w_hi
                    } else {
                        self.threshold(l_b)
                    },
                ),
                Direction::Add => (
                    if j == n - 2 {
                        w_lo
                    } else {
                        self.threshold(-l_b)
                    },
                    if j == 0 {
                        f64::INFINITY
                    } else {
                        self.threshold(-l_a)
                    },
                ),
            };
            if !(hi > lo) {
                continue;
            }
            let (q0, q1) = self.interval(lo, hi);
            if q0 <= 0.0 && q1 <= 0.0 {
                continue;
            }
            // A-mass of the interval and the loss of the merged atom.
            let log_ratio = || (p * (q1 / q0 - 1.0)).ln_1p();
            let (a, merged) = match dir {
                Direction::Remove => {
                    let m = if q0 > 0.0 { log_ratio() } else { f64::INFINITY };
                    ((1.0 - p) * q0 + p * q1, m)
                }
                Direction::Add => (q0, if q0 > 0.0 { -log_ratio() } else { 0.0 }),
            };
            if a <= 0.0 {
                continue;
            }
            let upper = match config.rounding {
                Rounding::Pessimistic => {
                    // Keeps both the A-mass and the B-mass of the interval.
                    let d = merged - l_a;
                    (a * (-(-d).exp_m1()) / denom).clamp(0.0, a)
                }
                Rounding::Midpoint => {
                    if merged - l_a > 0.5 * h {
                        a
                    } else {
                        0.0
                    }
                }
            };
            masses[j] += a - upper;
            masses[j + 1] += upper;
        }
        let mut pld = DiscretePLD::from_parts(h, k0, masses, tail, config.rounding);
        pld.trim_zeros();
        Ok(pld)
    }
}

impl DiscretePLD {
    /// Drops empty atoms at both ends.
    pub(crate) fn trim_zeros(&mut self) {
        let first = self.masses.iter().position(|&m| m > 0.0).unwrap_or(0);
        let last = self
            .masses
            .iter()
            .rposition(|&m| m > 0.0)
            .unwrap_or(self.masses.len() - 1);
        if first > 0 || last + 1 < self.masses.len() {
            self.masses = self.masses[first..=last].to_vec();
            self.offset += first as i64;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::norm_cdf;

    fn gaussian_delta(mu: f64, eps: f64) -> f64 {
        norm_cdf(-eps / mu + mu / 2.0) - eps.exp() * norm_cdf(-eps / mu - mu / 2.0)
    }

    #[test]
    fn pure_gaussian_pair_is_normal_loss() {
        let pair = sgm_pld(1.0, 1.0, 1e-3).unwrap();
        for pld in [&pair.remove, &pair.add] {
            let total: f64 = pld.masses().iter().sum::<f64>() + pld.truncation_mass();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(pld.truncation_mass() < 1e-12);
            // log(Q/P) under Q is N(1/2, 1); the split keeps E_A[e^{-L}] so
            // the mean moves by O(h^2).
            assert!((pld.mean() - 0.5).abs() < 1e-3, "{}", pld.mean());
        }
    }

    #[test]
    fn pessimistic_split_matches_on_grid_and_bounds_between() {
        let pair = sgm_pld(1.0, 1.0, 1e-2).unwrap();
        for k in 0..300 {
            let eps = k as f64 * 0.01;
            let exact = gaussian_delta(1.0, eps);
            let got = pair.delta(eps);
            assert!(got >= exact - 1e-12, "eps={eps}: {got} < {exact}");
            assert!(got - exact < 1e-5, "eps={eps}");
            let between = pair.delta(eps + 0.005);
            assert!(between >= gaussian_delta(1.0, eps + 0.005) - 1e-12);
        }
    }

    #[test]
    fn heavy_noise_has_negligible_loss() {
        let pair = sgm_pld(100.0, 0.01, 1e-5).unwrap();
        assert!(pair.delta(1.0) < 1e-6);
    }

    #[test]
    fn window_too_small_is_reported() {
        let config = AccountantConfig {
            window_sigmas: 3.0,
            ..AccountantConfig::default()
        };
        assert!(matches!(
            sgm_pld_with(1.0, 0.5, 1e-3, &config),
            Err(Error::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn raw_constructor_validates() {
        assert!(DiscretePLD::new(0.1, 0, vec![0.5, 0.5], 0.0, Rounding::Pessimistic).is_ok());
        assert!(DiscretePLD::new(0.1, 0, vec![0.5, 0.4], 0.0, Rounding::Pessimistic).is_err());
        assert!(DiscretePLD::new(0.1, 0, vec![1.5, -0.5], 0.0, Rounding::Pessimistic).is_err());
        assert!(DiscretePLD::new(0.0, 0, vec![1.0], 0.0, Rounding::Pessimistic).is_err());
    }

    #[test]
    fn zero_loss_has_zero_delta() {
        let pld = DiscretePLD::new(0.1, 0, vec![1.0], 0.0, Rounding::Pessimistic).unwrap();
        let pair = PldPair::new(pld.clone(), pld);
        for eps in [0.0, 0.5, 3.0] {
            assert_eq!(pair.delta(eps), 0.0);
        }
        assert_eq!(pair.epsilon_for_delta(1e-6), 0.0);
    }
}
