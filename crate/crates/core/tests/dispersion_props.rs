use proptest::prelude::*;

use lattice_kpp::dispersion::{
    c_coefficient, dispersion_gradient, h_eval, h_inverse, mu_bar, MU_MAX, MU_MIN,
};
use lattice_kpp::{
    beta0, big_gamma, dispersion_f, eta0, lambda_of_mu, lambda_star, optimal_beta,
    spreading_speed, steady_state, sweep, BirthLaw, Error, ModelParams, Regime, SweepParameter,
};

fn reference() -> (ModelParams, BirthLaw) {
    (
        ModelParams::new(1.0, 0.5, 0.1, 0.2, 0.0),
        BirthLaw::monod(1.0, 1.0),
    )
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

#[test]
fn frozen_reference_values() {
    let (p, f) = reference();
    let r = spreading_speed(0.5, &p, &f).unwrap();
    assert!(close(r.c_star, 1.258107068274819, 1e-12), "{}", r.c_star);
    assert!(close(r.mu_star, 0.8844097535987255, 1e-7), "{}", r.mu_star);
    assert!(r.residual_f <= 1e-12 * (r.lambda_at_min + 1.0));
    assert!(!r.multiple_minima);

    // lambda(0) solves (lambda + 0.1)(lambda + 2.2) = 2
    let l0 = lambda_of_mu(0.0, 0.5, &p, &f).unwrap();
    assert!((((l0 + 0.1) * (l0 + 2.2)) - 2.0).abs() < 1e-13);

    let opt = optimal_beta(&p, &f).unwrap();
    assert!(close(opt.beta1, 0.8531342341005722, 1e-9));
    assert!(close(opt.mu_bar, 0.6864295721212899, 1e-12));
    assert!(close(opt.c_max, 1.3111323237702426, 1e-12));
    assert_eq!(opt.lambda_star, 0.9);
    assert!(close(opt.beta0, 4.95, 1e-14));

    assert!(close(c_coefficient(0.9, 1.0, &p, &f).unwrap(), 0.9216941799156173, 1e-14));
    let delayed = ModelParams { tau: 1.0, ..p };
    assert!(close(lambda_star(&delayed, &f).unwrap(), 0.5040681900258921, 1e-13));
}

#[test]
fn frozen_endpoint_sweeps() {
    let (p, f) = reference();
    let small = [1.2563, 0.7405, 0.4456, 0.3044];
    let large = [0.3672, 0.1122, 0.0354, 0.0112];
    for k in 1..=4 {
        let lo = spreading_speed(4.95 * 10f64.powi(-k), &p, &f).unwrap();
        let hi = spreading_speed(4.95 * (1.0 - 10f64.powi(-k)), &p, &f).unwrap();
        assert!((lo.c_star - small[k as usize - 1]).abs() < 1e-4, "{k}: {}", lo.c_star);
        assert!((hi.c_star - large[k as usize - 1]).abs() < 1e-4, "{k}: {}", hi.c_star);
        assert!(hi.mu_star > MU_MIN && hi.mu_star < MU_MAX);
    }
}

#[test]
fn speed_at_optimum_equals_closed_form_maximum() {
    for tau in [0.0, 0.5, 2.0] {
        let (p, f) = reference();
        let p = ModelParams { tau, ..p };
        let opt = optimal_beta(&p, &f).unwrap();
        let at = spreading_speed(opt.beta1, &p, &f).unwrap();
        assert!(close(at.c_star, opt.c_max, 1e-9), "tau={tau}: {} vs {}", at.c_star, opt.c_max);
        assert!(close(at.mu_star, opt.mu_bar, 1e-6));
        for db in [-0.05, 0.05] {
            let near = spreading_speed(opt.beta1 + db, &p, &f).unwrap();
            assert!(near.c_star < at.c_star);
        }
    }
}

#[test]
fn delay_slows_spread() {
    let (p, f) = reference();
    let mut last = f64::INFINITY;
    for tau in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let c = spreading_speed(0.5, &ModelParams { tau, ..p }, &f).unwrap().c_star;
        assert!(c < last);
        last = c;
    }
}

#[test]
fn stationarity_at_minimiser() {
    let (p, f) = reference();
    for beta in [0.05, 0.3, 0.5, 1.0, 2.5, 4.5] {
        let r = spreading_speed(beta, &p, &f).unwrap();
        assert!(r.residual_stationarity < 1e-8, "beta={beta}: {}", r.residual_stationarity);
        let (dl, dm, _) = dispersion_gradient(r.lambda_at_min, r.mu_star, beta, &p, &f);
        // mu lambda' = lambda with lambda' = -F_mu / F_lambda
        let lhs = r.mu_star * (-dm / dl);
        assert!((lhs - r.lambda_at_min).abs() < 1e-7 * r.lambda_at_min);
    }
}

#[test]
fn speed_derivative_has_sign_of_f_beta() {
    let (p, f) = reference();
    for beta in [0.1, 0.4, 0.7, 1.2, 2.0, 3.5, 4.5] {
        let r = spreading_speed(beta, &p, &f).unwrap();
        let (_, _, fb) = dispersion_gradient(r.lambda_at_min, r.mu_star, beta, &p, &f);
        let h = 1e-5 * beta;
        let up = spreading_speed(beta + h, &p, &f).unwrap().c_star;
        let down = spreading_speed(beta - h, &p, &f).unwrap().c_star;
        let slope = (up - down) / (2.0 * h);
        assert_eq!(slope > 0.0, fb > 0.0, "beta={beta}: slope {slope}, F_beta {fb}");
    }
}

#[test]
fn h_round_trip() {
    for mu in [0.0, 1e-6, 0.3, 1.0, 5.0, 40.0] {
        let y = h_eval(mu).unwrap();
        assert!((h_inverse(y).unwrap() - mu).abs() <= 1e-12 * mu.max(1.0));
    }
    assert!(h_eval(-1.0).is_err());
    assert!(h_inverse(-1.0).is_err());
}

#[test]
fn out_of_range_beta_is_an_error_but_flagged_in_sweeps() {
    let (p, f) = reference();
    assert!(matches!(
        spreading_speed(5.0, &p, &f),
        Err(Error::BetaOutOfRange { beta0, .. }) if (beta0 - 4.95).abs() < 1e-12
    ));
    assert!(spreading_speed(0.0, &p, &f).is_err());
    let table = sweep(SweepParameter::Beta, &[0.5, 5.0, 1.0], &p, &f).unwrap();
    let flags: Vec<Regime> = table.rows.iter().map(|r| r.regime).collect();
    assert_eq!(flags, [Regime::KppOk, Regime::BetaOutOfRange, Regime::KppOk]);
    assert_eq!(table.rows[1].regime.flag(), "BETA_OUT_OF_RANGE");
    assert!(table.rows[1].c_star.is_none());
    assert_eq!(table.speeds().len(), 2);

    let low = sweep(SweepParameter::FPrime0, &[0.05, 1.0], &p, &f).unwrap();
    assert_eq!(low.rows[0].regime.flag(), "NO_POSITIVE_ROOT");
    assert_eq!(low.rows[1].regime, Regime::KppOk);
    assert!(matches!(sweep(SweepParameter::Eta, &[], &p, &f), Err(Error::EmptyGrid)));
}

#[test]
fn sweep_preserves_grid_order_and_matches_pointwise() {
    let (p, f) = reference();
    let grid = [3.0, 0.2, 1.7, 0.9, 4.0];
    let table = sweep(SweepParameter::Beta, &grid, &p, &f).unwrap();
    for (row, &b) in table.rows.iter().zip(&grid) {
        assert_eq!(row.value, b);
        assert_eq!(row.c_star, Some(spreading_speed(b, &p, &f).unwrap().c_star));
    }
}

#[test]
fn ascending_fprime0_increases_speed() {
    let (p, f) = reference();
    let grid: Vec<f64> = (1..=10).map(|k| 0.2 + 0.3 * k as f64).collect();
    let speeds = sweep(SweepParameter::FPrime0, &grid, &p, &f).unwrap().speeds();
    assert_eq!(speeds.len(), grid.len());
    assert!(speeds.windows(2).all(|w| w[1] > w[0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn effective_mortality_increases_in_beta_and_eta(
        alpha in 0.05f64..5.0,
        beta in 0.05f64..5.0,
        gamma in 0.01f64..1.0,
        eta in 0.01f64..5.0,
        d in 0.01f64..1.0,
    ) {
        let p = ModelParams::new(alpha, beta, gamma, eta, 0.0);
        let g = big_gamma(&p);
        prop_assert!(g > gamma);
        prop_assert!(big_gamma(&p.with_beta(beta + d)) > g);
        prop_assert!(big_gamma(&p.with_eta(eta + d)) > g);
    }

    #[test]
    fn thresholds_are_where_gamma_meets_fprime0(
        alpha in 0.1f64..5.0,
        beta in 0.1f64..5.0,
        eta in 0.1f64..5.0,
        slope in 0.2f64..3.0,
    ) {
        let p = ModelParams::new(alpha, beta, 0.1, eta, 0.0);
        let f = BirthLaw::monod(slope, 1.0);
        let b0 = beta0(&p, &f).unwrap();
        prop_assert!((big_gamma(&p.with_beta(b0)) - slope).abs() <= 1e-12 * slope);
        if big_gamma(&p) < slope {
            let e0 = eta0(&p, &f).unwrap();
            if e0.is_finite() {
                prop_assert!((big_gamma(&p.with_eta(e0)) - slope).abs() <= 1e-12 * slope);
            } else {
                prop_assert!(slope >= 2.0 * beta + 0.1);
            }
        }
    }

    #[test]
    fn root_residual_is_at_machine_precision(
        mu in 1e-3f64..30.0,
        frac in 0.01f64..0.99,
        tau in 0.0f64..3.0,
    ) {
        let (p, f) = reference();
        let p = ModelParams { tau, ..p };
        let beta = frac * 4.95;
        let l = lambda_of_mu(mu, beta, &p, &f).unwrap();
        prop_assert!(l > 0.0);
        prop_assert!(dispersion_f(l, mu, beta, &p, &f).abs() <= 1e-12 * (l + 1.0));
    }

    #[test]
    fn minimum_is_below_every_sampled_ratio(
        frac in 0.02f64..0.98,
        mus in proptest::collection::vec(1e-3f64..30.0, 10),
    ) {
        let (p, f) = reference();
        let beta = frac * 4.95;
        let r = spreading_speed(beta, &p, &f).unwrap();
        for mu in mus {
            let c = lambda_of_mu(mu, beta, &p, &f).unwrap() / mu;
            prop_assert!(c >= r.c_star * (1.0 - 1e-12));
        }
    }

    #[test]
    fn optimal_decay_rate_solves_its_defining_equation(lambda in 0.01f64..50.0, alpha in 0.1f64..5.0) {
        let p = ModelParams::new(alpha, 0.5, 0.1, 0.2, 0.0);
        let m = mu_bar(lambda, &p);
        let lhs = 2.0 * alpha * m.cosh().powi(2);
        prop_assert!((lhs - (lambda + 2.0 * alpha + 0.2)).abs() <= 1e-11 * lhs);
    }

    #[test]
    fn steady_state_is_a_fixed_point(p_birth in 0.5f64..20.0, q in 0.1f64..5.0) {
        let (p, _) = reference();
        let f = BirthLaw::monod(p_birth, q);
        prop_assume!(f.slope_at_zero() > big_gamma(&p) * 1.01);
        let ss = steady_state(&p, &f).unwrap();
        let gam = big_gamma(&p);
        prop_assert!((f.eval(ss.w_star) - gam * ss.w_star).abs() <= 1e-12 * gam * ss.w_star);
    }
}
