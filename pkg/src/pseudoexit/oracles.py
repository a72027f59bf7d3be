"""Closed-form reference values, kept independent of the determinant code.

Nothing here imports :mod:`pseudoexit.laplace_domain`; the formulas are
evaluated directly with real elementary functions so that agreement with the
determinant route is a genuine cross-check.
"""
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BiharmonicClosedForms",
    "SlowConvergenceError",
    "asymptotic_slope",
    "biharmonic_delta",
    "biharmonic_delta_k",
    "brownian_exit_series",
    "brownian_exit_transform",
]

SQRT2 = math.sqrt(2.0)


class SlowConvergenceError(ValueError):
    """The eigenfunction series needs too many terms at this small time."""


@dataclass(frozen=True)
class BiharmonicClosedForms:
    """Closed forms for N = 2 on ``(a, b)`` at a fixed ``lambda > 0``.

    ``nu = lambda / 4`` and ``q = nu**(1/4)``; ``L = (b - a) / 2`` is the
    half-length used by the midpoint forms.
    """

    a: float
    b: float
    lam: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("need a < b")
        if not self.lam > 0:
            raise ValueError("closed forms need lambda > 0")

    @property
    def nu(self):
        return self.lam / 4.0

    @property
    def q(self):
        return self.nu ** 0.25

    @property
    def half_length(self):
        return (self.b - self.a) / 2.0

    def delta(self):
        w = 2.0 * self.q * (self.b - self.a)
        return 4.0 * (math.cosh(w) + math.cos(w) - 2.0)

    def delta_k(self, x, k, side):
        if not self.a <= x <= self.b:
            raise ValueError("x outside [a, b]")
        q = self.q
        if side == "minus":
            u, v = q * (x - self.a), q * (x + self.a - 2.0 * self.b)
        elif side == "plus":
            u, v = q * (x - self.b), q * (x + self.b - 2.0 * self.a)
        else:
            raise ValueError(f"side must be 'minus' or 'plus', got {side!r}")
        ch, sh, c, s = math.cosh, math.sinh, math.cos, math.sin
        if k == 0:
            return 4.0 * (ch(u) * c(v) + sh(u) * s(v) + ch(v) * c(u) - sh(v) * s(u)
                          - 2.0 * ch(u) * c(u))
        if k == 1:
            return 4.0 * SQRT2 * (ch(v) * s(u) + sh(u) * c(v) - ch(u) * s(u) - sh(u) * c(u))
        raise ValueError("k must be 0 or 1 when N = 2")

    def midpoint_delta(self):
        w = self.q * self.half_length
        return 32.0 * (math.cosh(w) ** 2 * math.sinh(w) ** 2 - math.cos(w) ** 2 * math.sin(w) ** 2)

    def midpoint_delta_k(self, k, side):
        w = self.q * self.half_length
        ch, sh, c, s = math.cosh(w), math.sinh(w), math.cos(w), math.sin(w)
        if k == 0:
            return 16.0 * (ch * c * (ch ** 2 + c ** 2 - 2.0) + sh * s * (ch ** 2 - c ** 2))
        if k == 1:
            val = 16.0 * SQRT2 * (ch * s * sh ** 2 - sh * c * s ** 2)
            return val if side == "minus" else -val
        raise ValueError("k must be 0 or 1 when N = 2")


def biharmonic_delta(a, b, lam):
    """``Delta(lambda)`` for N = 2 on ``(a, b)``."""
    return BiharmonicClosedForms(a, b, lam).delta()


def biharmonic_delta_k(a, b, x, lam, k, side):
    """``Delta_k^side(lambda; x)`` for N = 2, k in {0, 1}."""
    return BiharmonicClosedForms(a, b, lam).delta_k(x, k, side)


def brownian_exit_transform(a, b, x, lam):
    """``E_x[exp(-lam tau)]`` for the generator ``d^2/dx^2`` on ``(a, b)``."""
    r = math.sqrt(lam)
    L = b - a
    # ratio of sinh's written with decaying exponentials to avoid overflow
    def sinh_ratio(d):
        return math.exp(r * (d - L)) * (-math.expm1(-2.0 * r * d)) / (-math.expm1(-2.0 * r * L))

    return sinh_ratio(b - x) + sinh_ratio(x - a)


def brownian_exit_series(a, b, x, t, terms=10_000):
    """Exit-time density and survival probability for ``u_t = u_xx`` on ``(a, b)``.

    Sine-series solution with absorbing ends.  Summation stops once the
    envelope of the remaining terms drops below 1e-16 (relative to the
    partial sums), or after ``terms`` terms.

    Returns
    -------
    density, survival : float

    Raises
    ------
    SlowConvergenceError
        If ``t < 1e-3 (b - a)**2``, where the series becomes impractical.
    """
    if not a < x < b:
        raise ValueError("need a < x < b")
    if not t > 0:
        raise ValueError("need t > 0")
    L = b - a
    if t < 1e-3 * L * L:
        raise SlowConvergenceError(f"t={t} below 1e-3 (b-a)^2; series impractical")
    dens = 0.0
    surv = 0.0
    for n in range(1, terms + 1, 2):  # even terms vanish
        w = n * math.pi / L
        decay = math.exp(-w * w * t)
        coef = 4.0 / (n * math.pi)
        sn = math.sin(w * (x - a))
        surv += coef * sn * decay
        dens += coef * w * w * sn * decay
        env = coef * w * w * decay
        # envelope n^2 exp(-n^2 c) is decreasing once 2 n^2 c > 1
        if 2.0 * w * w * t > 1.0 and env < 1e-16 * max(abs(dens), 1e-300) \
                and coef * decay < 1e-16 * max(abs(surv), 1e-300):
            break
    return dens, surv


def asymptotic_slope(values):
    """Least-squares slope of ``log|v|`` against ``log lambda``.

    Parameters
    ----------
    values : sequence of (lambda, v) pairs, at least 3
    """
    pairs = list(values)
    if len(pairs) < 3:
        raise ValueError("need at least 3 (lambda, value) pairs")
    lam = np.array([p[0] for p in pairs], dtype=float)
    v = np.abs(np.array([p[1] for p in pairs], dtype=complex))
    if np.any(lam <= 0) or np.any(v <= 0):
        raise ValueError("lambda and |value| must be positive")
    slope, _ = np.polyfit(np.log(lam), np.log(v), 1)
    return float(slope)
