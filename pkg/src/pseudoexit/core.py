"""Problem instances, root systems and overflow-safe complex determinants."""
import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real

import numpy as np

from . import _kernels

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class ProcessParams:
    """Order ``N`` of the pseudo-process and the interval ``(a, b)``.

    ``a`` and ``b`` may be ``Fraction`` (the exact Hermite machinery keeps
    them exact) or floats.
    """

    N: int
    a: Real = 0
    b: Real = 1

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"order N must be an integer >= 1, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if not self.a < self.b:
            raise ValueError(f"need a < b, got a={self.a}, b={self.b}")

    @property
    def kappa(self):
        return 1 if self.N % 2 == 1 else -1

    @property
    def length(self):
        return self.b - self.a

    def exact(self):
        """Copy with ``a`` and ``b`` converted to ``Fraction``."""
        return ProcessParams(self.N, Fraction(self.a), Fraction(self.b))


@dataclass(frozen=True)
class RootSystem:
    """The ``2N`` roots ``theta_l = exp(i pi (2l + N - 1) / 2N)``, l = 1..2N.

    Stored in index order; ``roots[l - 1]`` is ``theta_l``.  The first ``N``
    have negative real part, the last ``N`` positive.
    """

    N: int
    roots: np.ndarray = field(repr=False)
    angles: np.ndarray = field(repr=False)

    @property
    def negative(self):
        return self.roots[: self.N]

    @property
    def positive(self):
        return self.roots[self.N:]

    @property
    def kappa(self):
        return 1 if self.N % 2 == 1 else -1

    def __len__(self):
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)

    def __getitem__(self, i):
        return self.roots[i]


def compute_roots(params):
    N = params.N if isinstance(params, ProcessParams) else int(params)
    ell = np.arange(1, 2 * N + 1)
    angles = np.pi * (2 * ell + N - 1) / (2 * N)
    roots = np.cos(angles) + 1j * np.sin(angles)
    roots.setflags(write=False)
    angles.setflags(write=False)
    return RootSystem(N, roots, angles)


@dataclass(frozen=True)
class ScaledComplex:
    """``mantissa * exp(log_scale)`` with ``|mantissa|`` in ``[1, 2)``.

    Zero is stored canonically as ``(0, 0)``.
    """

    mantissa: complex = 0j
    log_scale: float = 0.0

    @classmethod
    def from_parts(cls, mantissa, log_scale=0.0):
        m = complex(mantissa)
        s = float(log_scale)
        a = abs(m)
        if a == 0.0 or not math.isfinite(s):
            if a == 0.0 or s == -math.inf:
                return cls(0j, 0.0)
            raise OverflowError("log scale must be finite")
        if not math.isfinite(a):
            raise OverflowError("mantissa must be finite")
        _, e = math.frexp(a)
        e -= 1
        m = complex(math.ldexp(m.real, -e), math.ldexp(m.imag, -e))
        # ldexp is exact, but |m| can still round to 2.0 on the boundary
        if abs(m) >= 2.0:
            m /= 2.0
            e += 1
        elif abs(m) < 1.0:
            m *= 2.0
            e -= 1
        return cls(m, s + e * _LN2)

    @classmethod
    def from_value(cls, value):
        return cls.from_parts(value, 0.0)

    @classmethod
    def from_log(cls, log_value):
        """Build ``exp(log_value)`` for a complex logarithm without overflow."""
        w = complex(log_value)
        return cls.from_parts(cmath.exp(1j * w.imag), w.real)

    def normalized(self):
        return ScaledComplex.from_parts(self.mantissa, self.log_scale)

    @property
    def is_zero(self):
        return self.mantissa == 0

    @property
    def value(self):
        """Plain complex value; overflows to ``inf`` for huge scales."""
        if self.is_zero:
            return 0j
        try:
            return self.mantissa * math.exp(self.log_scale)
        except OverflowError:
            return complex(math.copysign(math.inf, self.mantissa.real) if self.mantissa.real else 0.0,
                           math.copysign(math.inf, self.mantissa.imag) if self.mantissa.imag else 0.0)

    @property
    def log_abs(self):
        if self.is_zero:
            return -math.inf
        return math.log(abs(self.mantissa)) + self.log_scale

    def __mul__(self, other):
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex.from_value(other)
        return ScaledComplex.from_parts(self.mantissa * other.mantissa,
                                        self.log_scale + other.log_scale)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex.from_value(other)
        if other.is_zero:
            raise ZeroDivisionError("division by a zero ScaledComplex")
        return ScaledComplex.from_parts(self.mantissa / other.mantissa,
                                        self.log_scale - other.log_scale)

    def __neg__(self):
        return ScaledComplex(-self.mantissa, self.log_scale)

    def ratio(self, other):
        """``self / other`` as a plain complex (finite whenever the ratio is)."""
        q = self / other
        return q.value

    def isclose(self, other, rel=1e-12):
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex.from_value(other)
        if self.is_zero or other.is_zero:
            return self.is_zero and other.is_zero
        return abs(self.ratio(other) - 1.0) <= rel


@dataclass(frozen=True)
class ComplexMatrix:
    """Square complex matrix with per-column log scales.

    The represented matrix is ``entries[:, j] * exp(col_log_scale[j])``.
    Column scales keep entries such as ``exp(lambda**(1/2N) theta z)``
    representable when the plain values overflow.
    """

    entries: np.ndarray
    col_log_scale: np.ndarray = None

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.complex128)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError(f"matrix must be square, got shape {e.shape}")
        if not np.all(np.isfinite(e)):
            raise ValueError("matrix entries must be finite")
        object.__setattr__(self, "entries", e)
        cls_ = self.col_log_scale
        cls_ = np.zeros(e.shape[0]) if cls_ is None else np.asarray(cls_, dtype=float)
        object.__setattr__(self, "col_log_scale", cls_)

    @property
    def n(self):
        return self.entries.shape[0]

    def to_array(self):
        with np.errstate(over="ignore"):
            return self.entries * np.exp(self.col_log_scale)[None, :]


def _det_small(e):
    if e.shape[0] == 0:
        return 1.0 + 0j
    if e.shape[0] == 1:
        return complex(e[0, 0])
    return complex(e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0])


def det_scaled(m):
    """Determinant of a square complex matrix as a :class:`ScaledComplex`.

    Dimensions up to 2 use the direct formula.  Larger matrices go through LU
    with partial pivoting, renormalizing the running pivot product at every
    elimination step.  A singular matrix gives the zero value, never an
    exception.
    """
    if not isinstance(m, ComplexMatrix):
        m = ComplexMatrix(m)
    shift = float(np.sum(m.col_log_scale))
    if m.n <= 2:
        return ScaledComplex.from_parts(_det_small(m.entries), shift)
    mant, scale = _kernels.lu_logdet(m.entries[None, :, :])
    return ScaledComplex.from_parts(mant[0], scale[0] + shift)


def det_scaled_batch(entries, col_log_scale=None):
    """Vectorized :func:`det_scaled` over a ``(B, n, n)`` stack.

    Returns ``(mantissa, log_scale)`` arrays rather than objects.
    """
    entries = np.asarray(entries, dtype=np.complex128)
    B, n, _ = entries.shape
    row_log = np.zeros(B)
    if n:
        # row equilibration keeps tiny (even subnormal) rows away from overflowing pivots
        rmax = np.max(np.abs(entries), axis=2)
        dead = np.any(rmax == 0, axis=1)
        rmax = np.where(rmax == 0, 1.0, rmax)
        r = rmax[:, :, None]
        entries = entries.real / r + 1j * (entries.imag / r)
        row_log = np.sum(np.log(rmax), axis=1)
    if n <= 2:
        if n == 0:
            raw = np.ones(B, dtype=np.complex128)
        elif n == 1:
            raw = entries[:, 0, 0].copy()
        else:
            raw = entries[:, 0, 0] * entries[:, 1, 1] - entries[:, 0, 1] * entries[:, 1, 0]
        mant, scale = _normalize_array(raw, np.zeros(B))
    else:
        mant, scale = _kernels.lu_logdet(entries)
    scale = scale + row_log
    if n:
        mant = np.where(dead, 0, mant)
    if col_log_scale is not None:
        scale = scale + np.sum(col_log_scale, axis=-1)
    scale = np.where(mant == 0, 0.0, scale)
    return mant, scale


def _normalize_array(values, log_scale):
    values = np.asarray(values, dtype=np.complex128)
    a = np.abs(values)
    nz = a > 0
    e = np.zeros(values.shape)
    e[nz] = np.floor(np.log2(a[nz]))
    ie = -e.astype(np.int64)
    mant = np.where(nz, np.ldexp(values.real, ie) + 1j * np.ldexp(values.imag, ie), 0)
    over = np.abs(mant) >= 2.0
    mant[over] /= 2.0
    e[over] += 1
    under = nz & (np.abs(mant) < 1.0)
    mant[under] *= 2.0
    e[under] -= 1
    scale = np.where(nz, log_scale + e * _LN2, 0.0)
    return mant, scale


def lambda_root(lam, N):
    """``lam ** (1 / 2N)``: the real root for real ``lam >= 0``, principal otherwise."""
    if isinstance(lam, complex) and lam.imag != 0:
        return complex(lam) ** (1.0 / (2 * N))
    lam = float(lam.real if isinstance(lam, complex) else lam)
    if lam < 0:
        return complex(lam) ** (1.0 / (2 * N))
    return lam ** (1.0 / (2 * N))


def exp_lambda(lam, theta, z, N):
    """``exp(lam ** (1/2N) * theta * z)`` in scaled form; 1 at ``lam = 0``."""
    if lam == 0:
        return ScaledComplex.from_value(1.0)
    s = lambda_root(lam, N)
    return ScaledComplex.from_log(s * complex(theta) * float(z))
