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

//! Comparing differential-privacy mechanisms through their trade-off
//! curves, minimum Bayes error curves and privacy profiles.

pub mod accountant;
pub mod curves;
pub mod divergence;
pub mod error;
mod hull;
pub mod mechanism;
pub mod moments;
pub mod quadrature;
pub mod special;
pub mod sweep;

pub use accountant::{AccountantConfig, Rounding};
pub use curves::{BayesErrorCurve, PrivacyProfile, TradeoffCurve};
pub use divergence::{ClauseVerdict, DominanceVerdict, HyperPrior};
pub use error::{Error, Result};
pub use mechanism::MechanismSpec;
pub use moments::{BoundReport, MomentSet};
