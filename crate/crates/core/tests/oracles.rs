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

// Frozen reference values. Column "want" was computed outside this crate
// (50-digit arithmetic or closed forms) and is not derived from the code
// under test.

use dpb::accountant::{full_profile, sgm_pld, AccountantConfig, PldPair};
use dpb::curves::{profile_from_tradeoff, TradeoffCurve};
use dpb::divergence::{divergence_from_perfect_privacy, divergence_to_blatant_nonprivacy};
use dpb::mechanism::{gaussian_tradeoff, laplace_tradeoff, tradeoff_curve, MechanismSpec};
use dpb::moments::compute_moments;
use dpb::special::{laplace_isf, norm_cdf, norm_sf};
use rand::{Rng, SeedableRng};

#[test]
fn closed_form_tradeoffs() {
    let cases = [
        (
            gaussian_tradeoff(2.0, 0.05).unwrap(),
            0.361_239_968_687_664_9,
        ),
        (
            gaussian_tradeoff(1.0, 0.5).unwrap(),
            0.158_655_253_931_457_05,
        ),
        (laplace_tradeoff(1.0, 0.2).unwrap(), 0.459_849_301_464_302_9),
        (laplace_tradeoff(1.0, 0.5).unwrap(), 0.5 * (-1f64).exp()),
    ];
    for (got, want) in cases {
        assert!((got - want).abs() < 1e-13, "{got} vs {want}");
    }
}

#[test]
fn extremal_divergences_of_closed_forms() {
    // (mu, Delta from PP, Delta to BNP)
    let gauss = [
        (0.5, 0.098_706_325_682_923_72, 0.401_293_674_317_076_3),
        (1.0, 0.191_462_461_274_013_1, 0.308_537_538_725_986_9),
        (2.0, 0.341_344_746_068_542_9, 0.158_655_253_931_457_05),
    ];
    for (mu, pp, bnp) in gauss {
        let c = tradeoff_curve(&MechanismSpec::gaussian(mu), 10_001).unwrap();
        assert!(
            (divergence_from_perfect_privacy(&c) - pp).abs() < 1e-6,
            "mu={mu}"
        );
        assert!((divergence_to_blatant_nonprivacy(&c).unwrap() - bnp).abs() < 1e-6);
    }
    let lap = tradeoff_curve(&MechanismSpec::laplace(1.0), 10_001).unwrap();
    assert!((divergence_from_perfect_privacy(&lap) - 0.196_734_670_143_683_3).abs() < 1e-6);
    assert!(
        (divergence_to_blatant_nonprivacy(&lap).unwrap() - 0.303_265_329_856_316_7).abs() < 1e-6
    );
}

#[test]
fn gaussian_profile_at_zero() {
    let pair = sgm_pld(1.0, 1.0, 1e-3).unwrap();
    assert!((pair.delta(0.0) - 0.382_924_922_548_026_2).abs() < 1e-5);
    let c = tradeoff_curve(&MechanismSpec::gaussian(1.0), 10_001).unwrap();
    let p = profile_from_tradeoff(&c, &[0.0, 1.0]).unwrap();
    assert!((p.deltas()[0] - 0.382_924_922_548_026_2).abs() < 1e-6);
}

/// Exact hockey-stick divergences of the one-step subsampled Gaussian pair:
/// the likelihood ratio is monotone in the output, so each divergence is a
/// difference of normal tails past one threshold.
fn sgm_exact_delta(sigma: f64, p: f64, eps: f64) -> f64 {
    let s2 = sigma * sigma;
    let thr = |l: f64| {
        let u = l.exp_m1() / p;
        (u > -1.0).then(|| s2 * u.ln_1p() + 0.5)
    };
    let q_tail = |w: f64| (1.0 - p) * norm_sf(w / sigma) + p * norm_sf((w - 1.0) / sigma);
    let remove = thr(eps).map_or(0.0, |w| q_tail(w) - eps.exp() * norm_sf(w / sigma));
    let add = thr(-eps).map_or(0.0, |w| {
        let q_head = (1.0 - p) * norm_cdf(w / sigma) + p * norm_cdf((w - 1.0) / sigma);
        norm_cdf(w / sigma) - eps.exp() * q_head
    });
    remove.max(add).max(0.0)
}

#[test]
fn one_step_sgm_matches_hockey_stick() {
    let (sigma, p) = (2.0, 9e-4);
    let pair = sgm_pld(sigma, p, 1e-5).unwrap();
    for k in 0..=40 {
        let eps = k as f64 * 1e-4;
        let exact = sgm_exact_delta(sigma, p, eps);
        let got = pair.delta(eps);
        assert!(got >= exact - 1e-12, "eps={eps}: {got} < {exact}");
        assert!(got - exact < 1e-6, "eps={eps}: {got} vs {exact}");
    }
}

#[test]
fn composed_gaussian_profiles() {
    let config = AccountantConfig::default();
    let one = sgm_pld(1.0, 1.0, config.spacing_for(1.0, 1.0)).unwrap();
    assert_eq!(one.compose(1, &config).unwrap().remove, one.remove);
    for n in [2u64, 4, 16] {
        let pair: PldPair = one.compose(n, &config).unwrap();
        let mu = (n as f64).sqrt();
        let mut worst: f64 = 0.0;
        for k in 0..=1000 {
            let eps = k as f64 * 0.01;
            let exact = norm_cdf(-eps / mu + mu / 2.0) - eps.exp() * norm_cdf(-eps / mu - mu / 2.0);
            let got = pair.delta(eps);
            assert!(got >= exact - 1e-12, "n={n} eps={eps}");
            worst = worst.max(got - exact);
        }
        assert!(worst < 1e-4, "n={n}: {worst}");
    }
}

#[test]
fn calibrated_base_mechanism_profile() {
    let config = AccountantConfig::default();
    let pair = sgm_pld(0.54, 0.01, config.spacing_for(0.54, 0.01))
        .unwrap()
        .compose(500, &config)
        .unwrap();
    let d = pair.delta(8.0);
    assert!(d > 5e-6 && d < 2e-5, "{d}");
    let profile = full_profile(&pair, config.eps_step).unwrap();
    assert!(profile.deltas().windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn laplace_moments_match_monte_carlo() {
    // Under uniform x, the quantile t = F̄⁻¹(x) is a unit Laplace draw and
    // log|f′(x)| = |t| − |t − 1|.
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed);
    let n = 10_000_000;
    let mut sums = [0.0f64; 3];
    let mut g_all = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let t = laplace_isf(u);
        let g = t.abs() - (t - 1.0).abs();
        sums[0] += g;
        sums[1] += g * g;
        sums[2] += g.abs().powi(3);
        g_all.push(g);
    }
    let v1 = -sums[0] / n as f64;
    let v2 = sums[1] / n as f64;
    let v4 = sums[2] / n as f64;
    let v3 = g_all.iter().map(|g| (g + v1).abs().powi(3)).sum::<f64>() / n as f64;
    let m = compute_moments(&MechanismSpec::laplace(1.0)).unwrap();
    for (got, want) in [(m.v1, v1), (m.v2, v2), (m.v3, v3), (m.v4, v4)] {
        assert!((got - want).abs() < 1e-3, "{got} vs {want}");
    }
}

#[test]
fn tabulated_spec_uses_its_curve() {
    let c = TradeoffCurve::from_fn(11, |a| (1.0 - a) * (1.0 - a)).unwrap();
    let spec = MechanismSpec::Tabulated { curve: c.clone() };
    assert_eq!(tradeoff_curve(&spec, 11).unwrap(), c);
}
