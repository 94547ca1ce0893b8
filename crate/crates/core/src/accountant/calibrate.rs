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

use super::{sgm_pld_with, AccountantConfig};
use crate::error::{check_probability, Error, Result};
use serde::Serialize;

/// Noise multipliers searched by [`calibrate_sigma`].
pub const SIGMA_BRACKET: (f64, f64) = (0.3, 64.0);

const MAX_ITERATIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub sigma: f64,
    /// ε at the target δ for the returned σ; never above the target.
    pub achieved_epsilon: f64,
    /// target ε minus achieved ε.
    pub abs_error: f64,
    /// The smallest σ of the bracket already meets the target.
    pub degenerate: bool,
    pub iterations: usize,
}

/// ε(δ) of the `steps`-fold subsampled Gaussian mechanism.
pub fn composed_epsilon(
    sigma: f64,
    p: f64,
    steps: u64,
    delta: f64,
    config: &AccountantConfig,
) -> Result<f64> {
    let pair =
        sgm_pld_with(sigma, p, config.spacing_for(sigma, p), config)?.compose(steps, config)?;
    Ok(pair.epsilon_for_delta(delta))
}

/// Smallest σ in [`SIGMA_BRACKET`], up to `config.calibration_tolerance` in
/// ε, for which `steps` subsampled Gaussian steps are (ε, δ)-DP.
pub fn calibrate_sigma(
    target_eps: f64,
    target_delta: f64,
    p: f64,
    steps: u64,
    config: &AccountantConfig,
) -> Result<CalibrationResult> {
    if !(target_eps.is_finite() && target_eps > 0.0) {
        return Err(Error::domain(
            "epsilon",
            target_eps,
            "must be finite and positive",
        ));
    }
    check_probability("delta", target_delta)?;
    if target_delta == 0.0 || target_delta == 1.0 {
        return Err(Error::domain("delta", target_delta, "must lie in (0, 1)"));
    }
    let eps_of = |sigma: f64| composed_epsilon(sigma, p, steps, target_delta, config);
    let (mut lo, mut hi) = SIGMA_BRACKET;
    let eps_lo = eps_of(lo)?;
    if eps_lo <= target_eps {
        return Ok(CalibrationResult {
            sigma: lo,
            achieved_epsilon: eps_lo,
            abs_error: target_eps - eps_lo,
            degenerate: true,
            iterations: 0,
        });
    }
    let mut eps_hi = eps_of(hi)?;
    if eps_hi > target_eps {
        return Err(Error::BracketFailure {
            lo,
            hi,
            target_eps,
            target_delta,
        });
    }
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && target_eps - eps_hi > config.calibration_tolerance {
        iterations += 1;
        let mid = (lo * hi).sqrt();
        let e = eps_of(mid)?;
        if e > target_eps {
            lo = mid;
        } else {
            hi = mid;
            eps_hi = e;
        }
    }
    Ok(CalibrationResult {
        sigma: hi,
        achieved_epsilon: eps_hi,
        abs_error: target_eps - eps_hi,
        degenerate: false,
        iterations,
    })
}
