"""Numerical Laplace inversion of the exit-time transforms.

Each method is a quadrature rule ``f(t) ~ Re sum_k w_k F(s_k)`` over nodes
``s_k`` that depend on ``t``.  In double precision the transform is called
once on the whole array of nodes for a block of times; in extended precision
(``precision_digits`` set) it is called node by node with mpmath numbers.
"""
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from .core import ProcessParams, compute_roots
from .laplace_domain import transform_batch, transform_mp

__all__ = [
    "DensityTable",
    "InversionConfig",
    "LaplaceTransform",
    "PrecisionLossWarning",
    "exit_joint_weights",
    "exit_time_density",
    "invert",
    "invert_scalar",
    "survival_probability",
]

METHODS = ("talbot", "gaver_stehfest", "euler_bromwich")
_ALIASES = {"gs": "gaver_stehfest", "euler": "euler_bromwich", "stehfest": "gaver_stehfest"}
CROSS_CHECK_RTOL = 1e-4


class PrecisionLossWarning(RuntimeWarning):
    """Two inversion methods disagree by more than the cross-check tolerance."""


@dataclass(frozen=True)
class InversionConfig:
    """Inversion settings.

    Parameters
    ----------
    method : {'talbot', 'gaver_stehfest', 'euler_bromwich'}
    node_count : int
        Number of transform evaluations per time point (at least 8).
    precision_digits : int or None
        Decimal digits for extended precision; ``None`` means double
        precision.  Gaver-Stehfest always runs extended, and defaults to
        ``2 * node_count`` digits.
    time_grid : sequence of float
        Strictly increasing positive times.
    cross_check : bool
        Also invert with a second method and warn on disagreement.
    zero_before : float
        Times below ``zero_before * (b - a)**(2N)`` are reported as 0
        without inversion.  Off (0) by default.
    """

    method: str = "talbot"
    node_count: int = 32
    precision_digits: int = None
    time_grid: tuple = ()
    cross_check: bool = False
    zero_before: float = 0.0

    def __post_init__(self):
        method = _ALIASES.get(self.method, self.method)
        if method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        object.__setattr__(self, "method", method)
        if int(self.node_count) != self.node_count or self.node_count < 8:
            raise ValueError(f"node_count must be an integer >= 8, got {self.node_count!r}")
        object.__setattr__(self, "node_count", int(self.node_count))
        digits = self.precision_digits
        if method == "gaver_stehfest":
            if digits is None:
                digits = 2 * self.node_count
            if digits < 1.5 * self.node_count:
                raise ValueError(
                    f"gaver_stehfest needs precision_digits >= 1.5 * node_count "
                    f"= {1.5 * self.node_count:g}, got {digits}")
        if digits is not None:
            if int(digits) != digits or digits < 15:
                raise ValueError(f"precision_digits must be an integer >= 15, got {digits!r}")
            digits = int(digits)
        object.__setattr__(self, "precision_digits", digits)
        grid = tuple(float(t) for t in self.time_grid)
        if any(not (t > 0 and math.isfinite(t)) for t in grid):
            raise ValueError("time grid must be positive and finite")
        if any(t1 <= t0 for t0, t1 in zip(grid, grid[1:])):
            raise ValueError("time grid must be strictly increasing")
        object.__setattr__(self, "time_grid", grid)
        if self.zero_before < 0:
            raise ValueError("zero_before must be >= 0")

    @property
    def extended(self):
        return self.precision_digits is not None

    def with_grid(self, times):
        return InversionConfig(self.method, self.node_count, self.precision_digits, tuple(times),
                               self.cross_check, self.zero_before)


@dataclass(frozen=True)
class DensityTable:
    """Inverted exit statistics on a time grid.

    ``I`` is the exit-time density, ``J`` its distribution function and
    ``S = 1 - J`` the probability of staying in ``(a, b)`` up to ``t``.
    ``I_minus[k]`` / ``I_plus[k]`` are the multipole weights at a / b (only
    filled by :func:`exit_joint_weights`).  ``flagged`` marks time points
    where the cross-check reported a disagreement.
    """

    t: np.ndarray
    I: np.ndarray
    J: np.ndarray
    S: np.ndarray
    I_minus: np.ndarray = None
    I_plus: np.ndarray = None
    flagged: np.ndarray = field(default=None)

    def columns(self):
        """Ordered ``name -> array`` mapping used for serialization."""
        cols = {"t": self.t, "I": self.I, "J": self.J, "S": self.S}
        if self.I_minus is not None:
            for k in range(self.I_minus.shape[0]):
                cols[f"I{k}_minus"] = self.I_minus[k]
            for k in range(self.I_plus.shape[0]):
                cols[f"I{k}_plus"] = self.I_plus[k]
        return cols


# --------------------------------------------------------------------------
# quadrature rules
# --------------------------------------------------------------------------

def _talbot_rule(M, t):
    r = 2.0 * M / 5.0
    k = np.arange(1, M)
    th = k * np.pi / M
    cot = 1.0 / np.tan(th)
    s = np.concatenate([[r / t + 0j], (r / t) * th * (cot + 1j)])
    sigma = th + (th * cot - 1.0) * cot
    w = np.concatenate([[0.5 * math.exp(r) + 0j], np.exp(t * s[1:]) * (1.0 + 1j * sigma)])
    return s, w * (r / (M * t))


def _talbot_rule_mp(M, t):
    r = mpmath.mpf(2 * M) / 5
    t = mpmath.mpf(t)
    nodes = [r / t]
    weights = [mpmath.exp(r) / 2]
    for k in range(1, M):
        th = k * mpmath.pi / M
        cot = mpmath.cot(th)
        s = (r / t) * th * mpmath.mpc(cot, 1)
        sigma = th + (th * cot - 1) * cot
        nodes.append(s)
        weights.append(mpmath.exp(t * s) * mpmath.mpc(1, sigma))
    c = r / (M * t)
    return nodes, [w * c for w in weights]


@lru_cache(maxsize=None)
def _euler_xi(M):
    xi = [Fraction(0)] * (2 * M + 1)
    xi[0] = Fraction(1, 2)
    for k in range(1, M + 1):
        xi[k] = Fraction(1)
    xi[2 * M] = Fraction(1, 2 ** M)
    for k in range(1, M):
        xi[2 * M - k] = xi[2 * M - k + 1] + Fraction(math.comb(M, k), 2 ** M)
    return tuple((-1) ** k * x for k, x in enumerate(xi))


def _euler_rule(M, t):
    eta = np.array([float(e) for e in _euler_xi(M)])
    beta = M * math.log(10.0) / 3.0 + 1j * math.pi * np.arange(2 * M + 1)
    return beta / t, eta * (10.0 ** (M / 3.0) / t) + 0j


def _euler_rule_mp(M, t):
    t = mpmath.mpf(t)
    base = M * mpmath.log(10) / 3
    nodes = [mpmath.mpc(base, mpmath.pi * k) / t for k in range(2 * M + 1)]
    scale = mpmath.power(10, mpmath.mpf(M) / 3) / t
    weights = [scale * mpmath.mpf(e.numerator) / e.denominator for e in _euler_xi(M)]
    return nodes, weights


@lru_cache(maxsize=None)
def stehfest_coefficients(M):
    """Exact Gaver-Stehfest weights ``V_1..V_2M``."""
    out = []
    for k in range(1, 2 * M + 1):
        acc = Fraction(0)
        for j in range((k + 1) // 2, min(k, M) + 1):
            acc += Fraction(j ** (M + 1) * math.comb(M, j) * math.comb(2 * j, j) * math.comb(j, k - j),
                            math.factorial(M))
        out.append((-1) ** (M + k) * acc)
    return tuple(out)


def _stehfest_rule_mp(M, t):
    t = mpmath.mpf(t)
    ln2 = mpmath.log(2)
    V = stehfest_coefficients(M)
    nodes = [k * ln2 / t for k in range(1, 2 * M + 1)]
    weights = [ln2 / t * mpmath.mpf(v.numerator) / v.denominator for v in V]
    return nodes, weights


def _rule(cfg, t, extended):
    n = cfg.node_count
    if cfg.method == "talbot":
        return (_talbot_rule_mp if extended else _talbot_rule)(n, t)
    if cfg.method == "euler_bromwich":
        return (_euler_rule_mp if extended else _euler_rule)(max(n // 2, 4), t)
    return _stehfest_rule_mp(max(n // 2, 4), t)


# --------------------------------------------------------------------------
# drivers
# --------------------------------------------------------------------------

def _threads():
    raw = os.environ.get("PSEUDOEXIT_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"PSEUDOEXIT_THREADS must be an integer, got {raw!r}") from None


def _invert_double(F, times, cfg):
    out = np.empty(len(times))
    if not len(times):
        return out
    rules = [_rule(cfg, t, False) for t in times]
    nodes = np.concatenate([r[0] for r in rules])
    vals = np.asarray(F(nodes), dtype=np.complex128)
    pos = 0
    for i, (s, w) in enumerate(rules):
        out[i] = float(np.sum(w * vals[pos:pos + len(s)]).real)
        pos += len(s)
    return out


def _invert_mp(F, times, cfg):
    out = np.empty(len(times))
    with mpmath.workdps(cfg.precision_digits):
        for i, t in enumerate(times):
            nodes, weights = _rule(cfg, t, True)
            acc = mpmath.fsum(w * F(s) for s, w in zip(nodes, weights))
            out[i] = float(mpmath.re(acc))
    return out


def _invert_block(F, times, cfg):
    if cfg.extended or cfg.method == "gaver_stehfest":
        return _invert_mp(F, times, cfg)
    return _invert_double(F, times, cfg)


def invert(F, times, cfg):
    """Invert ``F`` at each time in ``times``.

    ``F`` must accept an ndarray of complex nodes in double precision and a
    single mpmath number in extended precision.  Work is split over
    ``PSEUDOEXIT_THREADS`` threads (default 1).
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times <= 0):
        raise ValueError("inversion times must be positive")
    nthreads = min(_threads(), len(times))
    if nthreads <= 1:
        values = _invert_block(F, times, cfg)
    else:
        chunks = np.array_split(times, nthreads)
        with ThreadPoolExecutor(nthreads) as pool:
            values = np.concatenate(list(pool.map(lambda c: _invert_block(F, c, cfg), chunks)))
    if cfg.cross_check:
        _cross_check(F, times, cfg, values)
    return values


def _cross_check(F, times, cfg, values):
    other = "euler_bromwich" if cfg.method != "euler_bromwich" else "talbot"
    alt_cfg = InversionConfig(other, cfg.node_count,
                              cfg.precision_digits if cfg.extended else None)
    alt = _invert_block(F, times, alt_cfg)
    bad = np.abs(values - alt) > CROSS_CHECK_RTOL * np.maximum(np.abs(values), np.abs(alt))
    if np.any(bad):
        worst = times[bad][0]
        warnings.warn(
            f"{cfg.method} and {other} disagree beyond {CROSS_CHECK_RTOL:g} relative "
            f"at {int(bad.sum())} time point(s), first t={worst:g}",
            PrecisionLossWarning, stacklevel=3)
    return bad


def invert_scalar(F, t, cfg=None):
    """Inverse Laplace transform of ``F`` at a single time ``t > 0``.

    >>> round(invert_scalar(lambda s: 1 / (s + 1), 1.0), 12) == round(math.exp(-1), 12)
    True
    """
    cfg = cfg or InversionConfig()
    if not t > 0:
        raise ValueError("t must be positive")
    return float(invert(F, [t], cfg)[0])


class LaplaceTransform:
    """Transform of one exit statistic, callable on arrays or mpmath numbers.

    ``kind`` is ``'density'``, ``'cdf'``, ``'survival'`` or a pair
    ``(side, k)``.  With ``cumulative=True`` the transform is divided by
    lambda, i.e. it becomes the transform of the running time integral.
    """

    def __init__(self, params, x, kind, cumulative=False):
        self.params = params
        self.roots = compute_roots(params)
        self.x = float(x)
        self.kind = kind
        self.cumulative = cumulative

    def __call__(self, lam):
        if isinstance(lam, (mpmath.mpf, mpmath.mpc)):
            v = transform_mp(self.params, self.roots, lam, self.x, self.kind, mpmath.mp.dps)
            return v / lam if self.cumulative else v
        lam = np.asarray(lam, dtype=np.complex128)
        v = transform_batch(self.params, self.roots, lam, self.x, self.kind)
        return v / lam if self.cumulative else v


def _check_point(params, x):
    if not isinstance(params, ProcessParams):
        raise TypeError("expected ProcessParams")
    if not params.a < x < params.b:
        raise ValueError(f"x={x!r} must lie strictly inside ({params.a}, {params.b})")


def _grid(params, cfg, times=None):
    t = np.asarray(cfg.time_grid if times is None else times, dtype=float)
    if t.size == 0:
        raise ValueError("empty time grid")
    cutoff = cfg.zero_before * float(params.b - params.a) ** (2 * params.N)
    return t, t >= cutoff


def _invert_on(params, x, kind, t, live, cfg, cumulative=False):
    out = np.zeros(t.shape)
    if np.any(live):
        out[live] = invert(LaplaceTransform(params, x, kind, cumulative), t[live], cfg)
    return out


def _flags(params, x, t, live, cfg):
    if not cfg.cross_check:
        return np.zeros(t.shape, dtype=bool)
    flags = np.zeros(t.shape, dtype=bool)
    if np.any(live):
        F = LaplaceTransform(params, x, "density")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PrecisionLossWarning)
            values = _invert_block(F, t[live], cfg)
        flags[live] = _cross_check(F, t[live], cfg, values)
    return flags


def exit_time_density(params, x, cfg):
    """Exit-time density ``I``, distribution ``J`` and ``S = 1 - J`` on ``cfg.time_grid``."""
    _check_point(params, x)
    t, live = _grid(params, cfg)
    I = _invert_on(params, x, "density", t, live, cfg)
    J = _invert_on(params, x, "cdf", t, live, cfg)
    return DensityTable(t, I, J, 1.0 - J, flagged=_flags(params, x, t, live, cfg))


def exit_joint_weights(params, x, cfg):
    """As :func:`exit_time_density`, plus every multipole weight ``I_k^+-``."""
    table = exit_time_density(params, x, cfg)
    t, live = _grid(params, cfg)
    N = params.N
    minus = np.array([_invert_on(params, x, ("minus", k), t, live, cfg) for k in range(N)])
    plus = np.array([_invert_on(params, x, ("plus", k), t, live, cfg) for k in range(N)])
    return DensityTable(table.t, table.I, table.J, table.S, minus, plus, table.flagged)


def cumulative_weight(params, x, side, k, t, cfg):
    """``int_0^t I_k^side(s; x) ds`` by inverting the transform divided by lambda."""
    _check_point(params, x)
    return float(invert(LaplaceTransform(params, x, (side, k), cumulative=True), [t], cfg)[0])


def survival_probability(params, x, t, cfg):
    """Probability of staying inside ``(a, b)`` up to time ``t``, inverted directly."""
    _check_point(params, x)
    if not t > 0:
        raise ValueError("t must be positive")
    if t < cfg.zero_before * float(params.b - params.a) ** (2 * params.N):
        return 1.0
    return float(invert(LaplaceTransform(params, x, "survival"), [t], cfg)[0])
