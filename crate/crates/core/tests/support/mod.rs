//! Randomized invariant checks shared by the property tests and the
//! acceptance runner. Each check runs a deterministic proptest runner.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use tfqkd_core::channel_model::x_basis_counts;
use tfqkd_core::diagnostics::{
    sns_constraint_residual, sns_phase_error_bound, sns_quantum_coin_delta, SnsSourceSetting,
};
use tfqkd_core::finite_stats::{
    bessel_i0, binary_entropy, chernoff_expected_bounds, chernoff_observed_bounds,
    random_sampling_gamma,
};
use tfqkd_core::quadrature::integrate;
use tfqkd_core::{evaluate_link, LinkGeometry, Mode, MxForm, SourceSetting, SystemParams};

pub const CASES: u32 = 1000;

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner(cases)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

fn setting() -> impl Strategy<Value = SourceSetting> {
    (
        0.05f64..0.9,
        0.005f64..0.6,
        0.05f64..0.5,
        0.05f64..0.4,
        0.001f64..0.05,
    )
        .prop_map(|(mu, ratio, p_mu, p_nu, p_ohat)| SourceSetting {
            mu,
            nu: mu * ratio,
            p_mu,
            p_nu,
            p_ohat,
            p_o: 1.0 - p_mu - p_nu - p_ohat,
        })
}

type Link = (SourceSetting, SourceSetting, LinkGeometry, SystemParams);

fn link() -> impl Strategy<Value = Link> {
    (
        setting(),
        setting(),
        0.0f64..150.0,
        0.0f64..150.0,
        9.0f64..13.0,
        0.0f64..20.0,
        1.0f64..15.0,
    )
        .prop_map(|(a, b, la, extra, log_n, sigma, delta)| {
            let params =
                SystemParams::reference(10f64.powf(log_n), sigma.to_radians(), delta.to_radians());
            (a, b, LinkGeometry::new(la, la + extra), params)
        })
}

pub fn chernoff_nesting(cases: u32) -> Result<(), String> {
    check(
        cases,
        (0.0f64..1e12, -30.0f64..-1.0, 0.0f64..10.0),
        |(x, e1, shrink)| {
            let (loose, tight) = (10f64.powf(e1), 10f64.powf(e1 - shrink));
            for f in [chernoff_expected_bounds, chernoff_observed_bounds] {
                let wide = f(x, tight);
                let narrow = f(x, loose);
                prop_assert!(narrow.lower <= x && x <= narrow.upper);
                prop_assert!(wide.lower <= narrow.lower && narrow.upper <= wide.upper);
                prop_assert!(wide.lower >= 0.0);
            }
            // the upper expected bound is exactly the mean whose lower observed
            // bound is the data
            let e = chernoff_expected_bounds(x, loose);
            let back = chernoff_observed_bounds(e.upper, loose).lower;
            prop_assert!(
                (back - x).abs() <= 1e-9 * (x + e.upper - e.lower),
                "{} {}",
                back,
                x
            );
            Ok(())
        },
    )
}

pub fn gamma_nonnegative_and_vanishing(cases: u32) -> Result<(), String> {
    check(
        cases,
        (1e3f64..1e9, 1e3f64..1e9, 1e-4f64..0.5, 1e-15f64..1e-3),
        |(n, k, lam, eps)| {
            let g = random_sampling_gamma(n, k, lam, eps).unwrap();
            prop_assert!(g >= 0.0 && g.is_finite());
            let big = random_sampling_gamma(n * 1e6, k * 1e6, lam, eps).unwrap();
            prop_assert!(big <= g);
            prop_assert!(big < 0.05, "{}", big);
            let huge = random_sampling_gamma(n * 1e12, k * 1e12, lam, eps).unwrap();
            prop_assert!(huge < 1e-3);
            Ok(())
        },
    )
}

pub fn entropy_identities(cases: u32) -> Result<(), String> {
    check(cases, (0.0f64..=1.0, 0.0f64..=1.0), |(x, y)| {
        let h = |v: f64| binary_entropy(v).unwrap();
        prop_assert!((h(x) - h(1.0 - x)).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-15).contains(&h(x)));
        prop_assert!(h(0.5 * (x + y)) + 1e-12 >= 0.5 * (h(x) + h(y)));
        if x <= 0.5 && y <= x {
            prop_assert!(h(y) <= h(x) + 1e-15);
        }
        prop_assert!((h(0.5) - 1.0).abs() < 1e-15);
        Ok(())
    })
}

pub fn phase_error_exact_not_above_relaxed(cases: u32) -> Result<(), String> {
    check(cases, (0.0f64..0.4999, 0.0f64..=0.5), |(delta, e)| {
        let b = sns_phase_error_bound(delta, e).unwrap();
        prop_assert!(b.exact <= b.relaxed * (1.0 + 1e-12) + 1e-15);
        prop_assert!(b.exact + 1e-15 >= e);
        prop_assert!(b.bound <= 0.5);
        Ok(())
    })
}

pub fn bessel_matches_integral(cases: u32) -> Result<(), String> {
    check(cases, 0.0f64..40.0, |x| {
        let direct = integrate(|t| (x * t.cos() - x).exp(), 0.0, std::f64::consts::PI).unwrap()
            / std::f64::consts::PI;
        let series = bessel_i0(x) * (-x).exp();
        prop_assert!(
            ((series - direct) / direct).abs() < 1e-8,
            "{} {}",
            series,
            direct
        );
        Ok(())
    })
}

fn z_weights(s: &SnsSourceSetting) -> (f64, f64) {
    (
        s.t_a * (1.0 - s.t_b) * s.mu_a * (-s.mu_a).exp(),
        s.t_b * (1.0 - s.t_a) * s.mu_b * (-s.mu_b).exp(),
    )
}

pub fn coin_balanced_iff_residual_zero(cases: u32) -> Result<(), String> {
    let strategy = (
        (0.05f64..1.0, 0.05f64..1.0, 0.01f64..0.5),
        (0.05f64..0.6, 0.05f64..0.6),
        prop_oneof![-0.5f64..-1e-3, 1e-3f64..0.5],
        (1e-5f64..0.5, 1e-5f64..0.5),
    );
    check(
        cases,
        strategy,
        |((mu_a, mu_b, nu_b), (t_a, t_b), skew, (y10, y01))| {
            let mut s = SnsSourceSetting {
                mu_a,
                mu_b,
                nu_a: 1.0,
                nu_b,
                t_a,
                t_b,
            };
            let (wa, wb) = z_weights(&s);
            s.nu_a = nu_b * wa / wb;
            prop_assert!(sns_constraint_residual(&s).unwrap().abs() <= 1e-12 * s.nu_a / nu_b);
            if let Ok(c) = sns_quantum_coin_delta(&s, y10, y01) {
                prop_assert!(c.delta.abs() < 1e-9, "{}", c.delta);
            }
            s.nu_a *= 1.0 + skew;
            prop_assert!(sns_constraint_residual(&s).unwrap() != 0.0);
            if let Ok(c) = sns_quantum_coin_delta(&s, y10, y01) {
                prop_assert!(c.delta > 0.0);
            }
            Ok(())
        },
    )
}

pub fn phase_error_not_below_x_error(cases: u32) -> Result<(), String> {
    check(cases, link(), |(a, b, geom, params)| {
        if let Ok(r) = evaluate_link(
            &a,
            &b,
            &geom,
            &params,
            Mode::Finite,
            MxForm::FirstPrinciples,
        ) {
            let e = &r.estimates;
            prop_assert!(e.gamma >= 0.0);
            prop_assert!(e.phi11_z_upper >= e.e11_x_upper);
            prop_assert!(e.phi11_z_upper <= 0.5);
        }
        Ok(())
    })
}

pub fn key_length_clamped(cases: u32) -> Result<(), String> {
    check(cases, link(), |(a, b, geom, params)| {
        for mode in [Mode::Finite, Mode::Asymptotic] {
            if let Ok(r) = evaluate_link(&a, &b, &geom, &params, mode, MxForm::FirstPrinciples) {
                prop_assert!(r.ell >= 0.0);
                prop_assert_eq!(r.ell, r.ell_unclamped.max(0.0));
                prop_assert_eq!(r.rate, r.ell / params.n_rounds);
            }
        }
        Ok(())
    })
}

pub fn x_errors_within_x_events(cases: u32) -> Result<(), String> {
    check(cases, link(), |(a, b, geom, params)| {
        let (n_x, m_x) = x_basis_counts(&a, &b, &geom, &params, MxForm::FirstPrinciples).unwrap();
        prop_assert!(m_x >= 0.0);
        prop_assert!(m_x <= n_x);
        Ok(())
    })
}

pub fn asymptotic_not_below_finite(cases: u32) -> Result<(), String> {
    check(cases, link(), |(a, b, geom, params)| {
        let f = evaluate_link(
            &a,
            &b,
            &geom,
            &params,
            Mode::Finite,
            MxForm::FirstPrinciples,
        );
        let s = evaluate_link(
            &a,
            &b,
            &geom,
            &params,
            Mode::Asymptotic,
            MxForm::FirstPrinciples,
        );
        if let (Ok(f), Ok(s)) = (f, s) {
            prop_assert!(s.rate >= f.rate);
        }
        Ok(())
    })
}

pub type Suite = fn(u32) -> Result<(), String>;

/// Every suite, by name.
pub const ALL: &[(&str, Suite)] = &[
    ("chernoff bound nesting", chernoff_nesting),
    (
        "gamma nonnegative and vanishing",
        gamma_nonnegative_and_vanishing,
    ),
    (
        "phase error not below X error",
        phase_error_not_below_x_error,
    ),
    ("key length clamping", key_length_clamped),
    ("binary entropy identities", entropy_identities),
    (
        "coin balanced iff residual zero",
        coin_balanced_iff_residual_zero,
    ),
    (
        "exact phase bound not above relaxed",
        phase_error_exact_not_above_relaxed,
    ),
    ("X errors within X events", x_errors_within_x_events),
    ("asymptotic not below finite", asymptotic_not_below_finite),
    ("I0 series matches integral", bessel_matches_integral),
];
