"""Dirac propagator in momentum space, and the printed position-space form.

Momenta are contravariant components (p^0, p^1, p^2, p^3) in natural units
(hbar = c = 1); the slash is gamma^mu p_mu = gamma^0 p^0 - gamma^k p^k.
"""

from __future__ import annotations

import math

import numpy as np

from .clifford import minkowski_gammas
from .minkowski import lower, norm_sq

DEFAULT_EPS = 1e-8
ON_SHELL_TOL = 1e-12
# Below this the power series is used; above, the Hankel asymptotic series.
# At 8 the smallest asymptotic term is still ~1e-8, so the switch sits higher.
BESSEL_SWITCH = 12.0

_GAMMAS = minkowski_gammas()
_I4 = np.eye(4, dtype=complex)


class OnShellError(ValueError):
    pass


def slash(p) -> np.ndarray:
    """gamma^mu p_mu for contravariant components p."""
    pl = lower(p)
    return sum(pl[mu] * _GAMMAS[mu] for mu in range(4))


def momentum_propagator(p, m: float, eps: float = DEFAULT_EPS) -> np.ndarray:
    """S_F(p) = (gamma.p + m) / (p^2 - m^2 + i eps)."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if m < 0:
        raise ValueError(f"mass must be non-negative, got {m}")
    denom = norm_sq(p) - m * m + 1j * eps
    return (slash(p) + m * _I4) / denom


def check_inverse(p, m: float, eps: float = DEFAULT_EPS) -> float:
    """max |(gamma.p - m) S_F(p) - I|, which should not exceed eps / |p^2 - m^2|."""
    off = norm_sq(p) - m * m
    if abs(off) <= ON_SHELL_TOL:
        raise OnShellError(
            f"p is on shell (p^2 - m^2 = {off:.3e}); the propagator has a pole there")
    prod = (slash(p) - m * _I4) @ momentum_propagator(p, m, eps)
    return float(np.max(np.abs(prod - _I4)))


def inverse_bound(p, m: float, eps: float = DEFAULT_EPS) -> float:
    return eps / abs(norm_sq(p) - m * m) + 1e-12


def _j1_series(x: float) -> float:
    half = 0.5 * x
    term = half
    total = term
    k = 0
    q = -half * half
    while True:
        k += 1
        term *= q / (k * (k + 1))
        total += term
        if abs(term) <= 1e-17 * abs(total):
            return total


def _j1_asymptotic(x: float) -> float:
    # Hankel expansion for nu = 1: J1 = sqrt(2/(pi x)) (P cos chi - Q sin chi).
    mu = 4.0
    p_sum = q_sum = 0.0
    term = 1.0
    k = 0
    smallest = math.inf
    while True:
        if k % 2 == 0:
            p_sum += term if (k // 2) % 2 == 0 else -term
        else:
            q_sum += term if (k // 2) % 2 == 0 else -term
        k += 1
        nxt = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(nxt) >= smallest or abs(nxt) < 1e-17:
            break
        smallest = abs(nxt)
        term = nxt
    chi = x - 0.75 * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p_sum * math.cos(chi) - q_sum * math.sin(chi))


def bessel_j1(x: float) -> float:
    """Bessel function of the first kind of order one, for x >= 0."""
    x = float(x)
    if x < 0 or not math.isfinite(x):
        raise ValueError(f"bessel_j1 needs a finite x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if x < BESSEL_SWITCH:
        return _j1_series(x)
    return _j1_asymptotic(x)


def position_propagator_paper(dx, m: float) -> np.ndarray:
    """(gamma^mu dx_mu / r^5 + m / r^3) J1(m r), evaluated exactly as printed.

    ``r`` is the Euclidean norm of the four separation components. This is a
    literal evaluation of a closed form, not a verified Fourier transform of
    the momentum-space propagator.
    """
    comps = np.asarray(dx, dtype=float)
    r = float(np.linalg.norm(comps))
    if r == 0.0:
        raise ValueError("zero separation: the closed form is singular")
    return (slash(comps) / r ** 5 + (m / r ** 3) * _I4) * bessel_j1(m * r)
