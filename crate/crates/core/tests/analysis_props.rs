use num::{BigInt, BigRational, ToPrimitive};
use proptest::prelude::*;
use sarc_core::analysis::{
    c1, eps_floor, eps_floor_terms, h_of_alpha, reliability_p, sigma_bar, tail_bound,
    tail_bound_value, TailBound, TheoryConstants,
};

fn rational(v: f64) -> BigRational {
    BigRational::from_float(v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn h_is_monotone(a in 1e-4f64..10.0, b in 1e-4f64..10.0, theta in 0.01f64..0.99,
                     eta in 0.01f64..0.99, sigma_min in 1e-3f64..10.0, alpha_bar in 1e-3f64..10.0,
                     eps in 1e-6f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let h_lo = h_of_alpha(lo, theta, eta, sigma_min, alpha_bar, eps).unwrap();
        let h_hi = h_of_alpha(hi, theta, eta, sigma_min, alpha_bar, eps).unwrap();
        prop_assert!(h_hi >= h_lo);
    }

    /// Above the noise floor, the progress at alpha_bar beats 4 eps_f' / (p - 1/2).
    #[test]
    fn progress_exceeds_noise_above_floor(theta in 0.05f64..0.95, eta in 0.05f64..0.95,
                                           sigma_min in 1e-2f64..5.0, kappa in 0.1f64..5.0,
                                           l in 0.0f64..10.0, p in 0.55f64..0.99,
                                           eps_f_prime in 1e-10f64..1e-3, factor in 1.001f64..100.0) {
        let sb = sigma_bar(kappa, kappa, l, l, theta).unwrap();
        let floor = eps_floor(0.0, eta, theta, sigma_min, sb, p, eps_f_prime).unwrap();
        let eps = floor * factor;
        let h = h_of_alpha(1.0 / sb, theta, eta, sigma_min, 1.0 / sb, eps).unwrap();
        prop_assert!(h > 4.0 * eps_f_prime / (p - 0.5));
        // and c1 eps^{3/2} is the same quantity
        let via_c1 = c1(theta, eta, sigma_min, sb) * eps.powf(1.5);
        prop_assert!((h - via_c1).abs() <= 1e-12 * h);
    }

    #[test]
    fn mu_term_inverts_mu_condition(mu in 1e-8f64..1.0, eta in 0.05f64..0.95, theta in 0.05f64..0.95,
                                    sigma_min in 1e-2f64..5.0, sb in 0.1f64..100.0, scale in 0.5f64..2.0) {
        let (term1, _) = eps_floor_terms(mu, eta, theta, sigma_min, sb, 0.9, 1e-9).unwrap();
        let eps = term1 * scale;
        // exact rational comparison of mu <= (1-eta) eps / (1 + (1-theta/3) sb / sigma_min)
        let one = BigRational::from_integer(BigInt::from(1));
        let three = BigRational::from_integer(BigInt::from(3));
        let d = &one + (&one - rational(theta) / &three) * rational(sb) / rational(sigma_min);
        let allowed = (&one - rational(eta)) * rational(eps) / d;
        let condition = rational(mu) <= allowed;
        if (scale - 1.0).abs() > 1e-12 {
            prop_assert_eq!(condition, scale > 1.0);
        }
    }

    #[test]
    fn tail_bound_monotone_in_t(p in 0.6f64..0.99, frac in 0.05f64..0.95, s in 0.0f64..5.0,
                                k in 0.01f64..5.0, t0 in 1.0f64..1e4) {
        let p_hat = 0.5 + frac * (p - 0.5);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..20 {
            let v = tail_bound_value(t0 * 1.5f64.powi(i), s, p_hat, p, k);
            prop_assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn reliability_p_bounded(d1 in 0.0f64..0.5, d2 in 0.0f64..0.5, eps_f in 0.0f64..1.0,
                             gap in 1e-6f64..10.0, lambda in 0.01f64..100.0, a in 0.0f64..2.0) {
        let r = reliability_p(d1, d2, eps_f, eps_f + gap, lambda, a, 1.0).unwrap();
        prop_assert!(r.p <= 1.0);
        prop_assert!(r.k > 0.0);
        prop_assert_eq!(r.exceeds_half, r.p > 0.5);
    }
}

/// The noise term cubed equals the exact rational
/// `((2 - theta/3) sb / (1 - eta))^3 (24 eps_f' / ((p - 1/2) theta sigma_min))^2`.
#[test]
fn eps_floor_matches_rational_evaluation() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
    let one = BigRational::from_integer(BigInt::from(1));
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let two = BigRational::from_integer(BigInt::from(2));
    let three = BigRational::from_integer(BigInt::from(3));
    let c24 = BigRational::from_integer(BigInt::from(24));
    for _ in 0..10 {
        let eta: f64 = rng.random_range(0.05..0.95);
        let theta: f64 = rng.random_range(0.05..0.95);
        let sigma_min: f64 = rng.random_range(0.01..5.0);
        let sb: f64 = rng.random_range(0.5..50.0);
        let p: f64 = rng.random_range(0.55..0.99);
        let efp: f64 = 10f64.powf(rng.random_range(-10.0..-2.0));
        let mu: f64 = 10f64.powf(rng.random_range(-8.0..-2.0));
        let (t1, t2) = eps_floor_terms(mu, eta, theta, sigma_min, sb, p, efp).unwrap();

        let (eta_r, theta_r, smin_r, sb_r, p_r, efp_r, mu_r) = (
            rational(eta), rational(theta), rational(sigma_min), rational(sb),
            rational(p), rational(efp), rational(mu),
        );
        let term1 = (&one + (&one - &theta_r / &three) * &sb_r / &smin_r) * &mu_r / (&one - &eta_r);
        let lead = (&two - &theta_r / &three) * &sb_r / (&one - &eta_r);
        let inner = &c24 * &efp_r / ((&p_r - &half) * &theta_r * &smin_r);
        let cube_exact = lead.pow(3) * inner.pow(2);
        let cube_f64 = rational(t2).pow(3);
        let rel = ((cube_f64 - &cube_exact) / &cube_exact).to_f64().unwrap().abs();
        assert!(rel < 1e-13, "noise term relative error {rel}");
        let rel1 = ((rational(t1) - &term1) / &term1).to_f64().unwrap().abs();
        assert!(rel1 < 1e-14, "mu term relative error {rel1}");
    }
}

#[test]
fn tail_bound_preconditions() {
    let constants = TheoryConstants {
        sigma_bar: 6.0,
        alpha_bar: 1.0 / 6.0,
        kappa_g: 1.0,
        kappa_h: 1.0,
        lipschitz_gradient: 1.0,
        lipschitz_hessian: 1.0,
        eps_f: 0.0,
        lambda: 1e9,
        a: 0.0,
        c: 1.0,
        k: 1e-9,
        u: 4e-9,
        p: 0.9 - (-2.0f64).exp(),
        p_exceeds_half: true,
        eps_floor: Some(1e-3),
        eps_floor_mu_term: 0.0,
        epsilon: 0.1,
        eps_f_prime: 4e-9,
        mu: 0.0,
        within_theory: true,
        mu_condition: true,
        c1: c1(0.5, 0.5, 1.0, 6.0),
        r: 0.0,
        h_at_alpha_bar: 0.0,
        phi_gap: 1e-4,
        sigma0: 6.0,
        gamma: 0.5,
    };
    let k = constants.k;
    match tail_bound(200.0, k, 0.6, &constants, 0.1, 4e-9) {
        TailBound::Applicable(v) => {
            assert!((v - tail_bound_value(200.0, k, 0.6, constants.p, k)).abs() < 1e-15)
        }
        other => panic!("{other:?}"),
    }
    let TailBound::Inapplicable(why) = tail_bound(200.0, k, 0.8, &constants, 0.1, 4e-9) else {
        panic!("p_hat >= p accepted");
    };
    assert!(why.to_string().contains("p_hat < p violated"));
    let TailBound::Inapplicable(why) = tail_bound(1.0, k, 0.6, &constants, 0.1, 4e-9) else {
        panic!("small t accepted");
    };
    assert!(why.to_string().contains("violated") && why.to_string().starts_with("t >="));
    assert!(matches!(
        tail_bound(200.0, -1.0, 0.6, &constants, 0.1, 4e-9),
        TailBound::Inapplicable(_)
    ));
}
