"""Self-verification suites behind the ``verify`` command.

Each suite checks one group of identities against an independent reference
(closed forms, exact rational algebra, an eigenfunction series, or a second
inversion method) and reports a single pass/fail line.
"""
import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import hermite_exact as he
from . import laplace_domain as ld
from . import oracles
from .core import ProcessParams, compute_roots
from .inversion import InversionConfig, cumulative_weight, exit_joint_weights, exit_time_density, \
    invert_scalar, survival_probability

LAMBDA_GRID = np.logspace(-3, 3, 25)
X_FRACTIONS = np.linspace(0.1, 0.9, 9)

TOL_CLOSED_FORM = 1e-10
TOL_BOUNDARY = 1e-10
TOL_ODE = 1e-8
TOL_SYMMETRY = 1e-10
TOL_REAL = 1e-10
TOL_LIMIT = 1e-6
TOL_LAGRANGE = 1e-12
TOL_SLOPE = 0.01
TOL_DECAY = 1e-8
TOL_BROWNIAN = 1e-6
TOL_MASS = 1e-4
TOL_SPLIT = 1e-5
TOL_ABEL = 1e-5
TOL_METHODS = 1e-5
TOL_SELF_TEST = 1e-7


@dataclass
class SuiteResult:
    name: str
    orders: tuple
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        ns = ",".join(str(n) for n in self.orders) or "-"
        return f"[{tag}] {self.name:<20} N={ns:<16} {self.detail} ({self.seconds:.2f}s)"


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def _ratio(p, q):
    """``p / q`` for (mantissa, log_scale) arrays."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return (p[0] / q[0]) * np.exp(p[1] - q[1])


# --------------------------------------------------------------------------
# suites; each returns (passed, detail)
# --------------------------------------------------------------------------

def suite_roots(N):
    r = compute_roots(N)
    kappa = r.kappa
    worst = max(np.max(np.abs(r.roots ** (2 * N) - kappa)), abs(np.sum(r.roots)),
                np.max(np.abs(r.roots[N:] + r.roots[:N])))
    ok = worst < 1e-13 and np.all(r.negative.real < 0) and np.all(r.positive.real > 0)
    return ok, f"max root residual {worst:.1e}"


def suite_closed_forms(N=2):
    params = ProcessParams(2, 0.0, 1.0)
    roots = compute_roots(params)
    lams = np.logspace(-2, 2, 17)
    worst = 0.0
    d = ld.delta_batch(params, roots, lams)
    dval = d[0].real * np.exp(d[1])
    for i, lam in enumerate(lams):
        worst = max(worst, _rel(dval[i], oracles.biharmonic_delta(0.0, 1.0, lam)))
    for x in (0.25, 0.5, 0.75):
        for side in ("minus", "plus"):
            for k in (0, 1):
                m, s = ld.derivative_delta_batch(params, roots, lams, x, side, k)
                vals = m.real * np.exp(s)
                for i, lam in enumerate(lams):
                    ref = oracles.biharmonic_delta_k(0.0, 1.0, x, lam, k, side)
                    worst = max(worst, _rel(vals[i], ref))
    return worst < TOL_CLOSED_FORM, f"max rel err {worst:.1e} (tol {TOL_CLOSED_FORM:g})"


def suite_hermite(N):
    params = ProcessParams(N, Fraction(-1, 3), Fraction(5, 2))
    basis = he.build_hermite_basis(params)
    a, b = basis.params.a, basis.params.b
    for k in range(N):
        for ell in range(N):
            delta = Fraction(int(k == ell))
            hm, hp = basis.h_minus[k].derivative(ell), basis.h_plus[k].derivative(ell)
            if hm(a) != delta or hm(b) != 0 or hp(b) != delta or hp(a) != 0:
                return False, f"interpolation condition fails at k={k}, l={ell}"
        if basis.h_plus[k] != (-1) ** k * basis.h_minus[k].compose_reflect(a, b):
            return False, f"reflection identity fails at k={k}"
        if basis.h_minus[k].degree > 2 * N - 1:
            return False, "degree exceeds 2N-1"
    if basis.h_minus[0] + basis.h_plus[0] != 1:
        return False, "H_0^- + H_0^+ != 1"
    x = Fraction(1, 3)
    if he.ruin_probability_closed_form(params, x) != basis.h_minus[0](x):
        return False, "two closed forms of H_0^- disagree"
    return True, "exact"


def suite_moments(N):
    params = ProcessParams(N, Fraction(-2, 3), Fraction(7, 5))
    basis = he.build_hermite_basis(params)
    a, b = basis.params.a, basis.params.b
    x = Fraction(1, 7)
    node = basis.node_polynomial()
    X = he.RationalPoly.monomial
    for p in range(2 * N):
        if he.expected_exit_polynomial(basis, X(p), x) != x ** p:
            return False, f"E[X^{p}] != x^{p}"
    c = he.moment_quotient_coefficients(params, 6)
    if c[0] != 1 or c[1] != N * (a + b) or \
            c[2] != Fraction(N * (N + 1), 2) * (a * a + b * b) + N * N * a * b:
        return False, "c_0..c_2 closed forms"
    nodex = node(x)
    if he.expected_exit_polynomial(basis, X(2 * N), x) != x ** (2 * N) - nodex:
        return False, "E[X^2N]"
    if he.expected_exit_polynomial(basis, X(2 * N + 1), x) != x ** (2 * N + 1) - (x + c[1]) * nodex:
        return False, "E[X^(2N+1)]"
    if he.expected_exit_polynomial(basis, X(2 * N + 2), x) != \
            x ** (2 * N + 2) - (x * x + c[1] * x + c[2]) * nodex:
        return False, "E[X^(2N+2)]"
    for p in range(7):
        q, _ = divmod(X(2 * N + p), node)
        if q != he.RationalPoly([c[p - n] for n in range(p + 1)]):
            return False, f"quotient coefficients at p={p}"
    return True, "exact"


def suite_bvp(N, lams=LAMBDA_GRID):
    params = ProcessParams(N, 0.0, 1.0)
    roots = compute_roots(params)
    kappa = params.kappa
    d = ld.delta_batch(params, roots, lams)
    s = lams ** (1.0 / (2 * N))
    worst_bc = worst_ode = 0.0
    for side in ("minus", "plus"):
        home, away = (params.a, params.b) if side == "minus" else (params.b, params.a)
        for k in range(N):
            for ell in range(N):
                target = (k == ell) * s ** ell
                scale = s ** ell
                at_home = _ratio(ld.derivative_delta_batch(params, roots, lams, home, side, k, ell), d)
                at_away = _ratio(ld.derivative_delta_batch(params, roots, lams, away, side, k, ell), d)
                worst_bc = max(worst_bc, np.max(np.abs(at_home - target) / scale),
                               np.max(np.abs(at_away) / scale))
            for x in X_FRACTIONS:
                base = ld.derivative_delta_batch(params, roots, lams, x, side, k, 0)
                top = ld.derivative_delta_batch(params, roots, lams, x, side, k, 2 * N)
                res = _ratio(top, base) - kappa * lams
                worst_ode = max(worst_ode, np.max(np.abs(res) / lams))
    ok = worst_bc < TOL_BOUNDARY and worst_ode < TOL_ODE
    return ok, f"boundary {worst_bc:.1e} (tol {TOL_BOUNDARY:g}), ODE {worst_ode:.1e} (tol {TOL_ODE:g})"


def suite_symmetry(N, lams=LAMBDA_GRID):
    params = ProcessParams(N, 0.0, 1.0)
    roots = compute_roots(params)
    d = ld.delta_batch(params, roots, lams)
    worst_im = np.max(np.abs(d[0].imag) / np.abs(d[0]))
    worst_sym = 0.0
    for x in X_FRACTIONS:
        for k in range(N):
            p = ld.derivative_delta_batch(params, roots, lams, x, "plus", k)
            m = ld.derivative_delta_batch(params, roots, lams, 1.0 - x, "minus", k)
            worst_sym = max(worst_sym, np.max(np.abs(_ratio(p, m) - (-1) ** k)))
            for v in (p, m):
                worst_im = max(worst_im, np.max(np.abs(v[0].imag) / np.abs(v[0])))
    ok = worst_sym < TOL_SYMMETRY and worst_im < TOL_REAL
    return ok, f"reflection {worst_sym:.1e}, |Im|/|val| {worst_im:.1e} (tol {TOL_SYMMETRY:g})"


def suite_limit(N=2):
    roots = compute_roots(N)
    coef = ld.limit_coefficients(roots)
    neg = roots.negative
    lag = max(abs(sum(coef.alpha[k, ell] * neg[j] ** k for k in range(N)) - (j == ell))
              for j in range(N) for ell in range(N))
    params = ProcessParams(N, 0.0, 10.0)
    ev = ld.evaluate(params, roots, 1.0, 0.5)
    lim = max(abs(ev.ratio_minus[k] - ld.limit_ratio(roots, coef, 1.0, 0.5, k)) for k in range(N))
    ok = lag < TOL_LAGRANGE and lim < TOL_LIMIT
    return ok, f"b-a=10 limit {lim:.1e} (tol {TOL_LIMIT:g}), Lagrange {lag:.1e} (tol {TOL_LAGRANGE:g})"


def suite_scaling(N):
    params = ProcessParams(N, 0.0, 1.0)
    roots = compute_roots(params)
    lams = np.logspace(-6, -3, 13)
    m, s = ld.delta_batch(params, roots, lams)
    slope = oracles.asymptotic_slope(zip(lams, np.abs(m) * np.exp(s)))
    slope_ok = abs(slope - N / 2) <= TOL_SLOPE * N / 2
    worst = 0.0
    for x in (0.3, 0.5):
        dist = min(x, 1.0 - x)
        big = (np.array([41.0, 60.0, 100.0, 200.0]) / dist) ** (2 * N)
        d = ld.delta_batch(params, roots, big)
        for side in ("minus", "plus"):
            for k in range(N):
                r = np.abs(_ratio(ld.derivative_delta_batch(params, roots, big, x, side, k), d))
                if np.any(np.diff(r) > 0):
                    return False, f"ratio not decreasing for side={side}, k={k}"
                worst = max(worst, np.max(r))
    ok = slope_ok and worst < TOL_DECAY
    return ok, f"slope {slope:.4f} vs {N / 2:g}, max decayed ratio {worst:.1e} (tol {TOL_DECAY:g})"


def ratio_slopes(N, x=0.3):
    """Observed small-lambda slopes of ``|Delta_k^-/Delta|``, k = 0..N-1."""
    params = ProcessParams(N, 0.0, 1.0)
    roots = compute_roots(params)
    lams = np.logspace(-6, -3, 13)
    d = ld.delta_batch(params, roots, lams)
    out = []
    for k in range(N):
        r = _ratio(ld.derivative_delta_batch(params, roots, lams, x, "minus", k), d)
        out.append(oracles.asymptotic_slope(zip(lams, r)))
    return out


def suite_self_test(N=None):
    cfg = InversionConfig()
    pairs = (
        (lambda s: 1 / s, lambda t: 1.0),
        (lambda s: 1 / s ** 2, lambda t: t),
        (lambda s: 1 / (s + 1), lambda t: math.exp(-t)),
        (lambda s: 1 / (s * s + 1), math.sin),
    )
    worst = max(_rel(invert_scalar(F, t, cfg), f(t)) for F, f in pairs for t in (0.1, 1.0, 5.0))
    return worst < TOL_SELF_TEST, f"max rel err {worst:.1e} (tol {TOL_SELF_TEST:g})"


def suite_brownian_inversion(N=1, times=None):
    params = ProcessParams(1, 0.0, 1.0)
    times = np.linspace(0.05, 2.0, 12) if times is None else np.asarray(times)
    cfg = InversionConfig(node_count=48, precision_digits=30, time_grid=tuple(times))
    worst = 0.0
    for x in (0.3, 0.5):
        table = exit_time_density(params, x, cfg)
        for i, t in enumerate(times):
            dens, surv = oracles.brownian_exit_series(0.0, 1.0, x, t)
            worst = max(worst, _rel(table.I[i], dens), _rel(table.S[i], surv),
                        _rel(survival_probability(params, x, t, cfg), surv))
    return worst < TOL_BROWNIAN, f"max rel err {worst:.1e} (tol {TOL_BROWNIAN:g})"


MASS_INSTANCES = {
    # N: (time grid covering the bulk of the exit mass, horizon for lim J)
    1: (np.geomspace(1e-3, 1.0, 12), 5.0),
    2: (np.geomspace(1e-4, 0.05, 12), 0.5),
    3: (np.geomspace(1e-6, 1e-3, 12), 0.01),
}


def suite_total_mass(N):
    params = ProcessParams(N, 0.0, 1.0)
    x = 0.3
    grid, horizon = MASS_INSTANCES[N]
    cfg = InversionConfig(time_grid=tuple(grid))
    table = exit_joint_weights(params, x, cfg)
    J = exit_time_density(params, x, cfg.with_grid([horizon])).J[0]
    split = np.max(np.abs(table.I - table.I_minus[0] - table.I_plus[0])) / np.max(np.abs(table.I))
    law = he.exit_location_law(he.build_hermite_basis(params), Fraction(x))
    abel = 0.0
    for k in range(N):
        abel = max(abel,
                   abs(cumulative_weight(params, x, "minus", k, horizon, cfg) - float(law.weights_a[k])),
                   abs(cumulative_weight(params, x, "plus", k, horizon, cfg) - float(law.weights_b[k])))
    ok = abs(J - 1) < TOL_MASS and split < TOL_SPLIT and abel < TOL_ABEL
    return ok, f"|J(T)-1| {abs(J - 1):.1e}, I split {split:.1e}, Abel {abel:.1e}"


CROSS_INSTANCE = (0.0, 5.0, 2.0)


def suite_cross_validation(N):
    a, b, x = CROSS_INSTANCE
    params = ProcessParams(N, a, b)
    times = tuple(np.linspace(0.1, 2.0, 8))
    talbot = exit_time_density(params, x, InversionConfig(time_grid=times)).I
    gs = exit_time_density(params, x, InversionConfig("gaver_stehfest", node_count=40,
                                                      precision_digits=60, time_grid=times)).I
    worst = float(np.max(np.abs(talbot - gs) / np.abs(gs)))
    return worst < TOL_METHODS, f"talbot vs gaver-stehfest {worst:.1e} (tol {TOL_METHODS:g})"


@dataclass(frozen=True)
class Suite:
    name: str
    func: object
    default_orders: tuple
    supported: tuple


SUITES = (
    Suite("roots", suite_roots, (1, 2, 3), tuple(range(1, 17))),
    Suite("self-test", suite_self_test, (None,), (None,)),
    Suite("closed-forms", suite_closed_forms, (2,), (2,)),
    Suite("hermite", suite_hermite, tuple(range(1, 9)), tuple(range(1, 13))),
    Suite("moments", suite_moments, tuple(range(1, 6)), tuple(range(1, 9))),
    Suite("bvp", suite_bvp, (2, 3, 4), (1, 2, 3, 4)),
    Suite("symmetry-realness", suite_symmetry, (2, 3, 4), (1, 2, 3, 4)),
    Suite("large-interval", suite_limit, (2,), (2,)),
    Suite("small-lambda", suite_scaling, (2, 3), (1, 2, 3)),
    Suite("brownian-inversion", suite_brownian_inversion, (1,), (1,)),
    Suite("total-mass", suite_total_mass, (2, 3), (1, 2, 3)),
    Suite("method-agreement", suite_cross_validation, (2,), (2, 3)),
)


def run(orders=None, names=None):
    """Run the suites; ``orders`` restricts to the given N values."""
    unknown = set(names or ()) - {s.name for s in SUITES}
    if unknown:
        raise ValueError(f"unknown suite(s): {', '.join(sorted(unknown))}")
    results = []
    for suite in SUITES:
        if names and suite.name not in names:
            continue
        if orders is None:
            chosen = suite.default_orders
        elif suite.supported == (None,):
            chosen = (None,)
        else:
            chosen = tuple(n for n in orders if n in suite.supported)
        if not chosen:
            continue
        t0 = time.perf_counter()
        passed, details = True, []
        for n in chosen:
            try:
                ok, detail = suite.func(n)
            except Exception as exc:  # a crash is a failed suite, not a crashed run
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            passed &= bool(ok)
            details.append(detail if len(chosen) == 1 else f"N={n}: {detail}")
        results.append(SuiteResult(suite.name, tuple(n for n in chosen if n is not None),
                                   passed, "; ".join(details), time.perf_counter() - t0))
    return results
