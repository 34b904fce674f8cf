"""Reference computations that share no code with the package.

Each oracle uses a different numerical route from the library so that an
agreement between the two is evidence, not a tautology.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np


def multiplier_hyp1f1(alpha: float, length: float, omega: float, dps: int = 40) -> complex:
    """Closed form via the confluent hypergeometric function, in extended precision.

    ``int_0^L u^-a e^{-i w u} du = L^(1-a) 1F1(1-a; 2-a; -i w L) / (1-a)``.
    """
    with mpmath.workdps(dps):
        a = mpmath.mpf(alpha)
        w = mpmath.mpf(omega)
        big_l = mpmath.mpf(length)
        if a == 1:
            return complex(1j * w)
        integral = big_l ** (1 - a) * mpmath.hyp1f1(1 - a, 2 - a, -1j * w * big_l) / (1 - a)
        return complex(1j * w * integral / mpmath.gamma(1 - a))


def multiplier_split(alpha: float, length: float, omega: float, pieces_per_radian: float = 1.0) -> complex:
    """Singularity splitting: a Taylor series on ``[0, d]`` plus Gauss-Legendre
    panels on ``[d, L]`` with geometric grading away from the origin.

    The series integrates ``u^-a (e^{-iwu} - 1)`` term by term on ``[0, d]``,
    the constant there is added in closed form, and the panel part is
    refined until two resolutions agree.
    """
    if omega == 0.0:
        return 0j
    if alpha == 1.0:
        return 1j * omega
    w = abs(omega)
    d = min(length, 0.25 / w)
    # sum_{n>=1} (-i w)^n d^(n+1-a) / (n! (n+1-a)); |w d| <= 1/4 so 40 terms is plenty
    series = 0j
    term = 1.0 + 0j
    for n in range(1, 60):
        term *= -1j * omega * d / n
        series += term * d ** (1.0 - alpha) / (n + 1.0 - alpha)
    # constant part on [0, d]: int_0^d u^-a du / Gamma(1-a) = d^(1-a)/Gamma(2-a)
    const = d ** (1.0 - alpha) / math.gamma(2.0 - alpha)

    def tail(order: int, width: float) -> complex:
        if d >= length:
            return 0j
        # geometric panels [d, 2d, 4d, ...] until the panel width reaches `width`,
        # then uniform panels of that width
        edges = [d]
        while edges[-1] < length:
            step = min(edges[-1], width)
            edges.append(min(edges[-1] + step, length))
        x, wts = np.polynomial.legendre.leggauss(order)
        total = 0j
        for lo, hi in zip(edges[:-1], edges[1:]):
            u = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
            f = u ** (-alpha) * np.exp(-1j * omega * u)
            total += 0.5 * (hi - lo) * np.dot(wts, f)
        return total

    width = pieces_per_radian / w
    coarse = tail(24, width)
    fine = tail(40, 0.5 * width)
    if abs(fine - coarse) > 1e-13 * max(abs(fine), 1e-300) + 1e-16:
        fine = tail(60, 0.25 * width)
    rg = 1.0 / math.gamma(1.0 - alpha) if alpha < 1.0 else 0.0
    return 1j * omega * (const + rg * (series + fine))


def cfds_modal(coef_cos, coef_sin, alpha, length, period, t):
    """Derivative of ``sum_k a_k cos(w_k t) + b_k sin(w_k t)`` through the
    hypergeometric multipliers, evaluated directly at times ``t``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for k, (a, b) in enumerate(zip(coef_cos, coef_sin), start=1):
        w = 2.0 * np.pi * k / period
        m = multiplier_hyp1f1(alpha, length, w)
        # cos = Re e^{iwt}, sin = Im e^{iwt}
        e = np.exp(1j * w * t)
        out += a * (m * e).real + b * (m * e).imag
    return out


def equilibrium_bisection(d_bar, ky, mu_max, s_in, tol=1e-15):
    """Root of ``nu(s) = D_bar`` on ``[0, s_in]`` by bisection."""
    lo, hi = 0.0, s_in
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        nu = mu_max * mid / (ky * (s_in - mid) + mid)
        if nu < d_bar:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def sliding_rl_mp(func, alpha, length, t, dps=30):
    """``1/Gamma(a) int_{t-L}^t (t-tau)^(a-1) func(tau) dtau`` with mpmath.quad."""
    with mpmath.workdps(dps):
        a = mpmath.mpf(alpha)
        val = mpmath.quad(lambda u: u ** (a - 1) * func(t - u), [0, length]) / mpmath.gamma(a)
        return float(val)
