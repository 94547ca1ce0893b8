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

use super::{AccountantConfig, DiscretePLD};
use crate::error::{Error, Result};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

// Below this many multiply-adds the direct sum is faster than an FFT.
const DIRECT_LIMIT: usize = 1 << 16;

/// `steps`-fold self-convolution of `pld` by repeated squaring.
///
/// After every convolution at most `config.trim_mass` is cut from each end:
/// the low-loss tail is moved up onto the first kept atom and the high-loss
/// tail onto the atom at +∞, so δ can only grow. Both, and the clipped FFT
/// round-off, are tracked in [`DiscretePLD::error_bound`].
pub fn self_compose(
    pld: &DiscretePLD,
    steps: u64,
    config: &AccountantConfig,
) -> Result<DiscretePLD> {
    if steps == 0 {
        return Err(Error::domain("steps", 0.0, "must be at least 1"));
    }
    let mut planner = FftPlanner::new();
    let mut acc: Option<DiscretePLD> = None;
    let mut base = pld.clone();
    let mut n = steps;
    loop {
        if n & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => convolve(&a, &base, config, &mut planner)?,
            });
        }
        n >>= 1;
        if n == 0 {
            break;
        }
        base = convolve(&base, &base, config, &mut planner)?;
    }
    let out = acc.expect("steps >= 1");
    if let Some(budget) = config.error_budget {
        if out.error_bound() > budget {
            return Err(Error::AccumulatedErrorExceeded {
                bound: out.error_bound(),
                budget,
            });
        }
    }
    Ok(out)
}

fn convolve(
    a: &DiscretePLD,
    b: &DiscretePLD,
    config: &AccountantConfig,
    planner: &mut FftPlanner<f64>,
) -> Result<DiscretePLD> {
    let (ma, mb) = (a.masses(), b.masses());
    let len = ma.len() + mb.len() - 1;
    if len > config.max_bins {
        return Err(Error::GridTooLarge {
            bins: len,
            limit: config.max_bins,
        });
    }
    let mut out = if ma.len().saturating_mul(mb.len()) <= DIRECT_LIMIT {
        direct(ma, mb)
    } else {
        fft(ma, mb, std::ptr::eq(a, b), planner)
    };
    let mut roundoff = 0.0;
    for v in out.iter_mut() {
        if *v < 0.0 {
            roundoff -= *v;
            *v = 0.0;
        }
    }
    let (ta, tb) = (a.truncation_mass(), b.truncation_mass());
    let mut truncation = ta + tb - ta * tb;
    let mut offset = a.offset() + b.offset();

    // Trim the upper tail onto +∞.
    let mut cut = 0.0;
    let mut hi = out.len();
    while hi > 1 && cut + out[hi - 1] <= config.trim_mass {
        cut += out[hi - 1];
        hi -= 1;
    }
    truncation += cut;
    out.truncate(hi);

    // Trim the lower tail onto the first kept atom.
    let mut moved = 0.0;
    let mut lo = 0;
    while lo + 1 < out.len() && moved + out[lo] <= config.trim_mass {
        moved += out[lo];
        lo += 1;
    }
    if lo > 0 {
        out.drain(..lo);
        out[0] += moved;
        offset += lo as i64;
    }

    let mut c =
        DiscretePLD::from_parts(a.spacing(), offset, out, truncation.min(1.0), a.rounding());
    c.set_tracking(
        a.moved_mass() + b.moved_mass() + moved,
        a.roundoff() + b.roundoff() + roundoff,
    );
    c.trim_zeros();
    Ok(c)
}

fn direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

fn fft(a: &[f64], b: &[f64], square: bool, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let len = a.len() + b.len() - 1;
    let n = len.next_power_of_two();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let load = |v: &[f64]| {
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for (c, &x) in buf.iter_mut().zip(v) {
            c.re = x;
        }
        buf
    };
    let mut fa = load(a);
    forward.process(&mut fa);
    if square {
        for z in fa.iter_mut() {
            *z = *z * *z;
        }
    } else {
        let mut fb = load(b);
        forward.process(&mut fb);
        for (z, w) in fa.iter_mut().zip(&fb) {
            *z *= *w;
        }
    }
    inverse.process(&mut fa);
    let scale = 1.0 / n as f64;
    fa[..len].iter().map(|z| z.re * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accountant::{sgm_pld, PldPair, Rounding};

    fn binomial_pld(n: usize) -> DiscretePLD {
        DiscretePLD::new(0.5, -1, vec![0.25, 0.25, 0.5], 0.0, Rounding::Pessimistic)
            .unwrap()
            .compose(n as u64, &AccountantConfig::default())
            .unwrap()
    }

    #[test]
    fn fft_matches_direct() {
        let a: Vec<f64> = (0..700)
            .map(|i| ((i * 37 % 101) as f64 + 1.0) / 1e5)
            .collect();
        let b: Vec<f64> = (0..500)
            .map(|i| ((i * 13 % 89) as f64 + 1.0) / 1e5)
            .collect();
        let mut planner = FftPlanner::new();
        let d = direct(&a, &b);
        let f = fft(&a, &b, false, &mut planner);
        for (x, y) in d.iter().zip(&f) {
            assert!((x - y).abs() < 1e-15);
        }
        let s = fft(&a, &a, true, &mut planner);
        for (x, y) in direct(&a, &a).iter().zip(&s) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn small_composition_is_exact() {
        let c = binomial_pld(3);
        assert_eq!(c.offset(), -3);
        // (0.25 x^-1 + 0.25 + 0.5 x)^3, coefficient of x^0 is
        // 0.25^3 + 6 * 0.25 * 0.25 * 0.5 = 0.203125.
        let i = (0 - c.offset()) as usize;
        assert!((c.masses()[i] - 0.203125).abs() < 1e-15);
        let total: f64 = c.masses().iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn truncation_mass_composes() {
        let pld = DiscretePLD::new(0.1, 0, vec![0.9], 0.1, Rounding::Pessimistic).unwrap();
        let c = pld.compose(4, &AccountantConfig::default()).unwrap();
        assert!((c.truncation_mass() - (1.0 - 0.9f64.powi(4))).abs() < 1e-14);
    }

    #[test]
    fn gaussian_composes_to_gaussian() {
        // Ten steps of N(1/2, 1) loss make mu = sqrt(10).
        let config = AccountantConfig::default();
        let pair = sgm_pld(1.0, 1.0, 1e-3)
            .unwrap()
            .compose(10, &config)
            .unwrap();
        let mu = 10f64.sqrt();
        let exact = |eps: f64| {
            use crate::special::norm_cdf;
            norm_cdf(-eps / mu + mu / 2.0) - eps.exp() * norm_cdf(-eps / mu - mu / 2.0)
        };
        for eps in [0.0, 1.0, 2.0, 4.0, 8.0] {
            let got = pair.delta(eps);
            assert!(got >= exact(eps) - 1e-12, "eps={eps}");
            assert!(got - exact(eps) < 1e-4 * exact(eps).max(1e-9), "eps={eps}");
        }
        assert!(pair.error_bound() < 1e-10);
    }

    #[test]
    fn budget_is_enforced() {
        let config = AccountantConfig {
            error_budget: Some(0.0),
            ..AccountantConfig::default()
        };
        let pld = DiscretePLD::new(0.1, 0, vec![0.9], 0.1, Rounding::Pessimistic).unwrap();
        assert!(matches!(
            pld.compose(2, &config),
            Err(Error::AccumulatedErrorExceeded { .. })
        ));
        let pair = PldPair::new(pld.clone(), pld);
        assert!(pair.delta(5.0) >= 0.1);
    }
}
