#!/usr/bin/env python3
"""Recompute the analysis constants' worked values at 50 digits.

The printed values are frozen into crates/harness/tests/acceptance.rs.
"""

from mpmath import mp, mpf, exp, sqrt

mp.dps = 50


def sigma_bar(kg, kh, l, lh, theta):
    return (2 * kg + kh + l + lh) / (1 - theta / 3)


def eps_floor(mu, eta, theta, smin, sb, p, efp):
    term1 = (1 + (1 - theta / 3) * sb / smin) * mu / (1 - eta)
    term2 = ((2 - theta / 3) * sb / (1 - eta)) * (24 * efp / ((p - mpf(1) / 2) * theta * smin)) ** (mpf(2) / 3)
    return max(term1, term2)


def reliability_p(d1, d2, u, k):
    return 1 - d1 - d2 - exp(-min(u**2 / (2 * k**2), u / (2 * k)))


def h_of_alpha(alpha, theta, eta, smin, alpha_bar, eps):
    return (theta / 6) * (1 - eta) ** mpf(1.5) * smin * (1 / alpha + (1 - theta / 3) / alpha_bar) ** mpf(-1.5) * eps ** mpf(1.5)


def tail_bound(t, s, p_hat, p, k):
    walk = exp(-((p - p_hat) ** 2) / (2 * p**2) * t)
    noise = exp(-min(s**2 * t / (8 * k**2), s * t / (4 * k)))
    return 1 - walk - noise


def main():
    half, tenth = mpf(1) / 2, mpf(1) / 10
    d = mpf(5) / 100
    p4 = reliability_p(d, d, mpf(4), mpf(1))
    values = {
        "sigma_bar_1_1_1_1_0.5": sigma_bar(1, 1, 1, 1, half),
        "sigma_bar_2_1_1_1_0.3": sigma_bar(2, 1, 1, 1, mpf(3) / 10),
        "eps_floor_example": eps_floor(0, half, half, 1, 6, mpf(9) / 10, mpf(10) ** -6),
        "reliability_p_u4k": p4,
        "reliability_p_u2k": reliability_p(d, d, mpf(2), mpf(1)),
        "h_example": h_of_alpha(mpf(1) / 6, half, half, 1, mpf(1) / 6, tenth),
        "tail_bound_t200": tail_bound(200, 1, mpf(6) / 10, p4, 1),
    }
    for name, v in values.items():
        print(f"{name} = {mp.nstr(v, 25)}")


if __name__ == "__main__":
    main()
