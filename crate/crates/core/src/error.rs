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

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    /// A scalar argument lies outside the operation's domain.
    #[error("{name} = {value} is out of range: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// Tabulated input that is not a valid curve of the requested kind.
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    /// A mechanism spec or a data file could not be parsed.
    #[error("cannot parse {input:?}: {reason}")]
    Parse { input: String, reason: String },

    /// The privacy profile window ends while delta is still falling.
    #[error("profile window ends at epsilon = {eps_max} with delta = {delta:e} still decreasing")]
    Truncation { eps_max: f64, delta: f64 },

    /// The loss window leaves more tail mass than allowed.
    #[error("loss window leaves tail mass {mass:e}, target is {target:e}")]
    WindowTooSmall { mass: f64, target: f64 },

    /// The requested discretisation would allocate an unreasonable grid.
    #[error("loss grid would need {bins} bins (limit {limit})")]
    GridTooLarge { bins: usize, limit: usize },

    /// Truncation plus round-off after composition exceeds the caller's budget.
    #[error("tracked composition error {bound:e} exceeds budget {budget:e}")]
    AccumulatedErrorExceeded { bound: f64, budget: f64 },

    /// Calibration could not bracket the target.
    #[error("no sigma in [{lo}, {hi}] reaches epsilon {target_eps} at delta {target_delta:e}")]
    BracketFailure {
        lo: f64,
        hi: f64,
        target_eps: f64,
        target_delta: f64,
    },

    /// The curve's fixed point does not match its minimax Bayes error.
    #[error("fixed point {alpha_star} differs from the minimax Bayes error {minimax}")]
    NoFixedPoint { alpha_star: f64, minimax: f64 },

    /// A moment integral failed to converge or is infinite.
    #[error("moment {which} does not converge (estimate {estimate:e}, error {error:e})")]
    DivergentMoment {
        which: &'static str,
        estimate: f64,
        error: f64,
    },

    /// The eta-ratio condition of the composition bound fails.
    /// `bound` still carries the formula's value for reporting.
    #[error("composition bound precondition fails: N/N2 = {ratio} < {required} (formula value {bound:e})")]
    PreconditionUnmet {
        ratio: f64,
        required: f64,
        bound: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            reason,
        }
    }

    pub(crate) fn parse(input: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            input: input.into(),
            reason: reason.into(),
        }
    }
}

/// Checks that `x` is a probability.
pub(crate) fn check_probability(name: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::domain(name, x, "must lie in [0, 1]"))
    }
}
