//! Chi-square quantiles for oracle calibration.

use statrs::function::erf::erfc_inv;
use statrs::function::gamma::gamma_ur;

/// Returns `x` with `P(chi2_dof > x) = tail`.
///
/// Starts from the Wilson–Hilferty approximation, brackets the root of the
/// regularized upper incomplete gamma function and bisects it to 1e-14
/// relative width.
pub fn chi_square_upper_quantile(dof: f64, tail: f64) -> f64 {
    assert!(dof > 0.0, "degrees of freedom must be positive");
    assert!(tail > 0.0 && tail < 1.0, "tail probability must be in (0, 1)");
    let survival = |x: f64| gamma_ur(0.5 * dof, 0.5 * x);

    let z = std::f64::consts::SQRT_2 * erfc_inv(2.0 * tail);
    let c = 2.0 / (9.0 * dof);
    let guess = dof * (1.0 - c + z * c.sqrt()).max(1e-3).powi(3);

    let (mut lo, mut hi) = (guess, guess);
    while survival(lo) < tail {
        lo *= 0.5;
    }
    while survival(hi) > tail {
        hi *= 2.0;
    }
    for _ in 0..200 {
        if hi - lo <= 1e-14 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if survival(mid) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
