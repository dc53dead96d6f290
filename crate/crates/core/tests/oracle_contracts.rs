//! Monte Carlo checks of the oracle contracts at fixed seeds.

use nalgebra::DVector;
use sarc_core::analysis::binomial_margin;
use sarc_core::oracles::{
    bernstein_batch_size, gaussian_first, gaussian_second, laplace_zeroth, subsampled_suite, symmetric_op_norm,
    FirstOracle, SecondOracle, ZerothOracle,
};
use sarc_core::problems::make_problem;
use sarc_core::rng::RngStream;

const N: usize = 100_000;

fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn tail_frequency(errors: &[f64], t: f64) -> f64 {
    errors.iter().filter(|&&e| e >= t).count() as f64 / errors.len() as f64
}

#[test]
fn laplace_mean_and_tail() {
    let p = make_problem("quadratic", 2).unwrap();
    let b = 0.01;
    let oracle = laplace_zeroth(p.clone(), b).unwrap();
    let x = DVector::from_vec(vec![1.0, 0.0]);
    let mut rng = RngStream::from_seed(2024);
    let errors: Vec<f64> = (0..N).map(|_| (oracle.sample(&x, &mut rng) - 0.5).abs()).collect();
    let (mean, std) = mean_and_std(&errors);
    assert!((0.0095..=0.0105).contains(&mean), "mean {mean}");
    let params = oracle.params();
    assert!(mean <= params.eps_f + 3.0 * std / (N as f64).sqrt());
    for mult in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let t = mult * b;
        let bound = (params.lambda * (params.a - t)).exp().min(1.0);
        let freq = tail_frequency(&errors, t);
        assert!(freq <= bound + binomial_margin(bound, N), "t {t}: {freq} vs {bound}");
    }
}

#[test]
fn gaussian_first_violation_rate() {
    let p = make_problem("quadratic", 2).unwrap();
    let oracle = gaussian_first(p.clone(), 1.0).unwrap();
    let x = DVector::from_vec(vec![0.3, -0.7]);
    let truth = p.gradient(&x);
    let mut rng = RngStream::from_seed(7);
    let violations = (0..N)
        .filter(|_| (oracle.sample(&x, 0.1, 0.05, &mut rng).unwrap() - &truth).norm() > 0.1)
        .count() as f64
        / N as f64;
    assert!((0.043..=0.057).contains(&violations), "{violations}");
}

#[test]
fn gaussian_first_contract_other_dimensions() {
    for (n, kappa, mu, delta) in [(5, 2.0, 0.03, 0.1), (10, 0.5, 1.0, 0.2)] {
        let p = make_problem("nonconvex_sum_sin", n).unwrap();
        let oracle = gaussian_first(p.clone(), kappa).unwrap();
        let x = DVector::from_element(n, 0.4);
        let truth = p.gradient(&x);
        let mut rng = RngStream::from_seed(n as u64);
        let trials = 20_000;
        let ok = (0..trials)
            .filter(|_| {
                (oracle.sample(&x, mu, delta, &mut rng).unwrap() - &truth).norm() <= kappa * mu
            })
            .count() as f64
            / trials as f64;
        assert!(ok >= 1.0 - delta - binomial_margin(1.0 - delta, trials), "n {n}: {ok}");
    }
}

#[test]
fn gaussian_second_contract() {
    let p = make_problem("nonconvex_sum_sin", 2).unwrap();
    let oracle = gaussian_second(p.clone(), 1.0).unwrap();
    let x = DVector::from_vec(vec![0.2, 1.3]);
    let truth = p.hessian(&x);
    let mut rng = RngStream::from_seed(99);
    let mut violations = 0usize;
    for _ in 0..N {
        let e = oracle.sample(&x, 0.2, 0.05, &mut rng).unwrap() - &truth;
        assert!((&e - e.transpose()).amax() <= 1e-12);
        if symmetric_op_norm(&e) > 0.2 {
            violations += 1;
        }
    }
    let freq = violations as f64 / N as f64;
    assert!(freq <= 0.05 + binomial_margin(0.05, N), "{freq}");
}

#[test]
fn subsampled_first_and_second_contracts() {
    let p = make_problem("logistic_finite_sum", 4).unwrap();
    let fs = p.finite_sum().unwrap();
    let x = DVector::from_vec(vec![0.5, -0.25, 1.0, 0.1]);
    let (grad, hess) = (p.gradient(&x), p.hessian(&x));
    let trials = 10_000;
    let delta = 0.1;

    // kappa_g = 1 at mu1 = 0.1 asks for the full batch, which is exact
    let suite = subsampled_suite(p.clone(), 1.0, 1.0, 3).unwrap();
    let mut rng = RngStream::from_seed(1);
    assert_eq!(suite.first.sample(&x, 0.1, delta, &mut rng).unwrap(), grad);

    // a large kappa drops the batch below m so the bound is exercised
    let m = fs.component_count();
    for kappa in [fs.component_gradient_bound() * 6.0, fs.component_gradient_bound() * 12.0] {
        assert!(bernstein_batch_size(m, 4, fs.component_gradient_bound(), kappa * 0.1, delta) < m);
        let suite = subsampled_suite(p.clone(), kappa, kappa, 3).unwrap();
        let tol = kappa * 0.1;
        let mut rng = RngStream::from_seed(kappa.to_bits());
        let ok = (0..trials)
            .filter(|_| (suite.first.sample(&x, 0.1, delta, &mut rng).unwrap() - &grad).norm() <= tol)
            .count() as f64
            / trials as f64;
        assert!(ok >= 1.0 - delta - binomial_margin(1.0 - delta, trials), "{kappa}: {ok}");
    }
    for kappa in [fs.component_hessian_bound() * 6.0, fs.component_hessian_bound() * 12.0] {
        assert!(bernstein_batch_size(m, 4, fs.component_hessian_bound(), kappa * 0.1, delta) < m);
        let suite = subsampled_suite(p.clone(), 1.0, kappa, 3).unwrap();
        let tol = kappa * 0.1;
        let mut rng = RngStream::from_seed(kappa.to_bits() ^ 1);
        let ok = (0..trials)
            .filter(|_| {
                let e = suite.second.sample(&x, 0.1, delta, &mut rng).unwrap() - &hess;
                symmetric_op_norm(&e) <= tol
            })
            .count() as f64
            / trials as f64;
        assert!(ok >= 1.0 - delta - binomial_margin(1.0 - delta, trials), "{kappa}: {ok}");
    }
}

#[test]
fn subsampled_batches_shrink_below_m() {
    let p = make_problem("logistic_finite_sum", 4).unwrap();
    let g = p.finite_sum().unwrap().component_gradient_bound();
    let suite = subsampled_suite(p.clone(), 3.0 * g, 1.0, 0).unwrap();
    let x = DVector::zeros(4);
    let mut rng = RngStream::from_seed(5);
    let full = p.gradient(&x);
    let sample = suite.first.sample(&x, 1.0, 0.1, &mut rng).unwrap();
    assert_ne!(sample, full);
}

#[test]
fn subsampled_zeroth_contract() {
    let p = make_problem("logistic_finite_sum", 4).unwrap();
    let suite = subsampled_suite(p.clone(), 1.0, 1.0, 77).unwrap();
    let params = suite.zeroth.params();
    let n_samples = 20_000;
    let points = [p.default_start(), DVector::from_vec(vec![1.0, -1.0, 0.5, 2.0])];
    for (j, x) in points.iter().enumerate() {
        let truth = p.value(x);
        let mut rng = RngStream::from_seed(1000 + j as u64);
        let errors: Vec<f64> = (0..n_samples)
            .map(|_| (suite.zeroth.sample(x, &mut rng) - truth).abs())
            .collect();
        let (mean, std) = mean_and_std(&errors);
        assert!(mean <= params.eps_f + 3.0 * std / (n_samples as f64).sqrt(), "{mean} vs {params:?}");
        for mult in [0.5, 1.0, 2.0, 3.0, 5.0] {
            let t = mult * params.eps_f;
            let bound = (params.lambda * (params.a - t)).exp().min(1.0);
            let freq = tail_frequency(&errors, t);
            assert!(freq <= bound + binomial_margin(bound, n_samples), "t {t}: {freq} vs {bound}");
        }
    }
}

#[test]
fn oracles_are_deterministic_given_stream() {
    let p = make_problem("logistic_finite_sum", 3).unwrap();
    let suite = subsampled_suite(p.clone(), 50.0, 50.0, 1).unwrap();
    let x = DVector::from_vec(vec![0.1, 0.2, 0.3]);
    let a = suite.first.sample(&x, 0.5, 0.1, &mut RngStream::from_seed(4)).unwrap();
    let b = suite.first.sample(&x, 0.5, 0.1, &mut RngStream::from_seed(4)).unwrap();
    assert_eq!(a, b);
    let a = suite.zeroth.sample(&x, &mut RngStream::from_seed(4));
    let b = suite.zeroth.sample(&x, &mut RngStream::from_seed(4));
    assert_eq!(a.to_bits(), b.to_bits());
}
