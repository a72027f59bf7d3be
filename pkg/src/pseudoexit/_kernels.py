"""Hot numeric kernels.

Two interchangeable implementations are provided for each kernel: a numba
``@njit`` version and a pure-numpy version.  The numba path is used when numba
imports and ``PSEUDOEXIT_DISABLE_NUMBA`` is unset (or ``0``).  Both paths
return identical shapes and dtypes, so callers never branch on the backend.
"""
import math
import os

import numpy as np

_LN2 = math.log(2.0)

# Series cutoff for the generalized hyperbolic basis.  Below it the Taylor
# series is used (64 terms leave a tail under 1e-30 at |u| = 8); above it the
# exponential sum, which cancels more for moderate |u|.
SERIES_RADIUS = 8.0
_SERIES_TERMS = 64


def _numba_requested():
    flag = os.environ.get("PSEUDOEXIT_DISABLE_NUMBA", "").strip().lower()
    return flag in ("", "0", "false", "no")


try:
    if not _numba_requested():
        raise ImportError("numba disabled by PSEUDOEXIT_DISABLE_NUMBA")
    import numba
    from numba import njit
    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False


# --------------------------------------------------------------------------
# pure numpy implementations
# --------------------------------------------------------------------------

def lu_logdet_numpy(mats):
    """Batched determinant as ``(mantissa, log_scale)`` pairs.

    Parameters
    ----------
    mats : ndarray, shape (B, n, n), complex
        Stack of square matrices with finite entries.

    Returns
    -------
    mantissa : ndarray, shape (B,), complex
        ``|mantissa|`` in ``[1, 2)``, or exactly 0 for singular input.
    log_scale : ndarray, shape (B,), float
        Natural-log scale, so ``det = mantissa * exp(log_scale)``.
    """
    mats = np.asarray(mats, dtype=np.complex128)
    phase, logabs = np.linalg.slogdet(mats)
    phase = np.atleast_1d(phase)
    logabs = np.atleast_1d(logabs)
    mant = np.zeros(phase.shape, dtype=np.complex128)
    scale = np.zeros(phase.shape, dtype=np.float64)
    ok = np.isfinite(logabs) & (phase != 0)
    # split logabs into an integer power of two and a remainder in [0, ln 2)
    e = np.floor(logabs[ok] / _LN2)
    rem = logabs[ok] - e * _LN2
    m = phase[ok] * np.exp(rem)
    # guard the rounding edge where |m| lands on 2.0
    over = np.abs(m) >= 2.0
    m[over] /= 2.0
    e[over] += 1.0
    mant[ok] = m
    scale[ok] = e * _LN2
    return mant, scale


def hyperbolic_basis_numpy(powers, u, order):
    """Generalized hyperbolic functions of order ``2N``.

    ``H(p, u) = sum_{m >= 0, m = p mod 2N} kappa**((m - p) / 2N) u**m / m!``
    which equals ``(1/2N) sum_l theta_l**(-p) exp(theta_l u)``.

    Parameters
    ----------
    powers : ndarray, shape (R, C), int
        Index ``p`` for each matrix slot.
    u : ndarray, shape (B, R), complex
        Argument for each batch item and row.
    order : int
        ``N``; the basis has period ``2N`` in ``p``.

    Returns
    -------
    ndarray, shape (B, R, C), complex
    """
    powers = np.asarray(powers, dtype=np.int64)
    u = np.asarray(u, dtype=np.complex128)
    two_n = 2 * order
    kappa = 1 if order % 2 == 1 else -1
    B, R = u.shape
    C = powers.shape[1]
    out = np.empty((B, R, C), dtype=np.complex128)

    small = np.abs(u) <= SERIES_RADIUS
    # Taylor series branch
    m = np.arange(1, _SERIES_TERMS)
    uu = np.where(small, u, 0)
    with np.errstate(over="ignore", invalid="ignore"):
        pw = np.concatenate(
            [np.ones((B, R, 1), dtype=np.complex128),
             np.cumprod(uu[:, :, None] / m[None, None, :], axis=2)],
            axis=2,
        )
    start = np.mod(powers, two_n)
    for idx in range(C):
        p = powers[:, idx]
        m0 = start[:, idx]
        acc = np.zeros((B, R), dtype=np.complex128)
        for q in range(_SERIES_TERMS // two_n + 1):
            mm = m0 + q * two_n
            valid = mm < _SERIES_TERMS
            ex = (mm - p) // two_n
            sign = np.where(ex % 2 == 0, 1.0, float(kappa))
            sel = np.where(valid, mm, 0)
            term = pw[:, np.arange(R), sel] * (sign * valid)[None, :]
            acc += term
        out[:, :, idx] = acc

    # exponential-sum branch
    if not np.all(small):
        ell = np.arange(1, two_n + 1)
        phi = np.pi * (2 * ell + order - 1) / two_n
        theta = np.exp(1j * phi)
        ex = np.exp(theta[None, None, :] * u[:, :, None])  # (B, R, 2N)
        for idx in range(C):
            coef = np.exp(-1j * powers[:, idx, None] * phi[None, :])  # (R, 2N)
            val = np.einsum("brl,rl->br", ex, coef) / two_n
            out[:, :, idx] = np.where(small, out[:, :, idx], val)
    return out


# --------------------------------------------------------------------------
# numba implementations
# --------------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True, nogil=True)
    def _renorm(m, s):
        a = abs(m)
        if a == 0.0:
            return 0j, 0.0
        e = int(math.floor(math.log2(a)))
        m = complex(math.ldexp(m.real, -e), math.ldexp(m.imag, -e))
        s = s + e * _LN2
        a = abs(m)
        if a >= 2.0:
            m = m / 2.0
            s += _LN2
        elif a < 1.0:
            m = m * 2.0
            s -= _LN2
        return m, s

    @njit(cache=True, nogil=True)
    def lu_logdet_numba(mats):
        B, n, _ = mats.shape
        mant = np.zeros(B, dtype=np.complex128)
        scale = np.zeros(B, dtype=np.float64)
        a = np.empty((n, n), dtype=np.complex128)
        for b in range(B):
            for i in range(n):
                for j in range(n):
                    a[i, j] = mats[b, i, j]
            m = 1.0 + 0j
            s = 0.0
            singular = False
            for k in range(n):
                piv = k
                best = abs(a[k, k])
                for i in range(k + 1, n):
                    v = abs(a[i, k])
                    if v > best:
                        best = v
                        piv = i
                if best == 0.0:
                    singular = True
                    break
                if piv != k:
                    for j in range(n):
                        tmp = a[k, j]
                        a[k, j] = a[piv, j]
                        a[piv, j] = tmp
                    m = -m
                pk = a[k, k]
                m, s = _renorm(m * pk, s)
                # complex division by a subnormal pivot overflows; rescale by 2**-e exactly
                e = 0
                if best < 1e-290:
                    e = int(math.floor(math.log2(best)))
                    pk = complex(math.ldexp(pk.real, -e), math.ldexp(pk.imag, -e))
                for i in range(k + 1, n):
                    if e == 0:
                        f = a[i, k] / pk
                    else:
                        f = complex(math.ldexp(a[i, k].real, -e), math.ldexp(a[i, k].imag, -e)) / pk
                    if f != 0:
                        for j in range(k + 1, n):
                            a[i, j] -= f * a[k, j]
            if not singular:
                mant[b] = m
                scale[b] = s
        return mant, scale

    @njit(cache=True, nogil=True)
    def hyperbolic_basis_numba(powers, u, order):
        two_n = 2 * order
        kappa = 1.0 if order % 2 == 1 else -1.0
        B, R = u.shape
        C = powers.shape[1]
        out = np.empty((B, R, C), dtype=np.complex128)
        pw = np.empty(_SERIES_TERMS, dtype=np.complex128)
        theta = np.empty(two_n, dtype=np.complex128)
        phi = np.empty(two_n, dtype=np.float64)
        for ell in range(two_n):
            phi[ell] = np.pi * (2 * (ell + 1) + order - 1) / two_n
            theta[ell] = complex(math.cos(phi[ell]), math.sin(phi[ell]))
        ex = np.empty(two_n, dtype=np.complex128)
        for b in range(B):
            for r in range(R):
                z = u[b, r]
                if abs(z) <= SERIES_RADIUS:
                    pw[0] = 1.0
                    for m in range(1, _SERIES_TERMS):
                        pw[m] = pw[m - 1] * z / m
                    for c in range(C):
                        p = powers[r, c]
                        m = p % two_n
                        acc = 0j
                        while m < _SERIES_TERMS:
                            e = (m - p) // two_n
                            if e % 2 == 0:
                                acc += pw[m]
                            else:
                                acc += kappa * pw[m]
                            m += two_n
                        out[b, r, c] = acc
                else:
                    for ell in range(two_n):
                        ex[ell] = np.exp(theta[ell] * z)
                    for c in range(C):
                        p = powers[r, c]
                        acc = 0j
                        for ell in range(two_n):
                            ang = -p * phi[ell]
                            acc += complex(math.cos(ang), math.sin(ang)) * ex[ell]
                        out[b, r, c] = acc / two_n
        return out


def lu_logdet(mats):
    """Dispatch to the active backend; see :func:`lu_logdet_numpy`."""
    mats = np.ascontiguousarray(mats, dtype=np.complex128)
    if HAS_NUMBA:
        return lu_logdet_numba(mats)
    return lu_logdet_numpy(mats)


def hyperbolic_basis(powers, u, order):
    """Dispatch to the active backend; see :func:`hyperbolic_basis_numpy`."""
    powers = np.ascontiguousarray(powers, dtype=np.int64)
    u = np.ascontiguousarray(u, dtype=np.complex128)
    if HAS_NUMBA:
        return hyperbolic_basis_numba(powers, u, int(order))
    return hyperbolic_basis_numpy(powers, u, int(order))


def backend():
    return "numba" if HAS_NUMBA else "numpy"
