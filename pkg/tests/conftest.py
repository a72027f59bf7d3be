"""Shared reference implementations for the tests.

The determinant reference below is deliberately naive: the literal matrix
built entry by entry in mpmath at 60 digits, columns equilibrated, and
expanded with mpmath's LU.  It shares no code with the package.
"""
import itertools

import mpmath
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

REF_DPS = 60


def mp_theta(N):
    return [mpmath.expjpi(mpmath.mpf(2 * ell + N - 1) / (2 * N)) for ell in range(1, 2 * N + 1)]


def mp_determinant(N, a, b, lam, replace=None, x=None, order=0):
    """Reference determinant as a Python complex (may overflow to inf)."""
    return complex(_mp_det(N, a, b, lam, replace, x, order))


def _mp_det(N, a, b, lam, replace=None, x=None, order=0):
    """Reference determinant as an mpmath number.

    ``replace`` is the row index (0..2N-1) swapped for the x-row
    ``lam**(order/2N) theta**order exp(s theta x)``; ``None`` gives Delta.
    """
    with mpmath.workdps(REF_DPS):
        lam = mpmath.mpf(lam)
        s = mpmath.root(lam, 2 * N)
        theta = mp_theta(N)
        a, b = mpmath.mpf(a), mpmath.mpf(b)
        rows = []
        for r in range(N):
            rows.append([t ** r * mpmath.exp(s * t * a) for t in theta])
        for r in range(N):
            rows.append([t ** r * mpmath.exp(s * t * b) for t in theta])
        if replace is not None:
            xm = mpmath.mpf(x)
            rows[replace] = [(s * t) ** order * mpmath.exp(s * t * xm) for t in theta]
        m = mpmath.matrix(rows)
        scale = []
        for j in range(2 * N):
            c = max(abs(m[i, j]) for i in range(2 * N))
            scale.append(c)
            for i in range(2 * N):
                m[i, j] /= c
        return mpmath.det(m) * mpmath.fprod(scale)


def mp_ratio(N, a, b, lam, x, side, k):
    """Reference ``Delta_k^side / Delta``."""
    row = k if side == "minus" else N + k
    with mpmath.workdps(REF_DPS):
        return complex(_mp_det(N, a, b, lam, row, x) / _mp_det(N, a, b, lam))


def leibniz_det(m):
    """Determinant by the permutation expansion (n <= 6)."""
    n = len(m)
    total = 0j
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        prod = 1 + 0j
        for i, p in enumerate(perm):
            prod *= m[i][p]
        total += -prod if inv % 2 else prod
    return total


@pytest.fixture(params=["numba", "numpy"])
def kernel_backend(request, monkeypatch):
    """Run a test under each kernel backend."""
    from pseudoexit import _kernels

    if request.param == "numba" and not _kernels.HAS_NUMBA:
        pytest.skip("numba not installed")
    monkeypatch.setattr(_kernels, "HAS_NUMBA", request.param == "numba")
    return request.param


_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one ``PASS/FAIL criterion N: ...`` line; they are echoed at the end of the run."""

    def record(number, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
        print(line)
        _ACCEPTANCE.append((number, line))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
