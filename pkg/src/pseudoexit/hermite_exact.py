"""Exact Hermite interpolation, exit-location law and pseudo-moments.

Everything is done in ``fractions.Fraction`` arithmetic so the identities of
the lambda = 0 problem hold exactly rather than to a tolerance.
"""
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

from .core import ProcessParams

__all__ = [
    "ExitLocationLaw",
    "HermiteBasis",
    "RationalPoly",
    "build_hermite_basis",
    "exit_location_law",
    "expected_exit_polynomial",
    "moment_quotient_coefficients",
    "overshoot_moment",
    "ruin_probabilities",
    "ruin_probability_closed_form",
]


def _frac(v):
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        return Fraction(v.strip())
    return Fraction(v)


class RationalPoly:
    """Univariate polynomial with ``Fraction`` coefficients, ascending degree.

    >>> p = RationalPoly([1, 0, 1])        # 1 + x^2
    >>> p(Fraction(1, 2))
    Fraction(5, 4)
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        c = [_frac(v) for v in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.coeffs = tuple(c)

    # constructors ---------------------------------------------------------
    @classmethod
    def constant(cls, v):
        return cls([v])

    @classmethod
    def monomial(cls, degree, coef=1):
        return cls([0] * degree + [coef])

    @classmethod
    def from_roots(cls, roots):
        p = cls([1])
        for r in roots:
            p = p * cls([-_frac(r), 1])
        return p

    # basic protocol ---------------------------------------------------------
    @property
    def degree(self):
        return len(self.coeffs) - 1  # -1 for the zero polynomial

    def is_zero(self):
        return not self.coeffs

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, i):
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else Fraction(0)

    def __eq__(self, other):
        if not isinstance(other, RationalPoly):
            other = RationalPoly([other])
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"RationalPoly([{', '.join(str(c) for c in self.coeffs)}])"

    def __call__(self, x):
        x = x if isinstance(x, (Fraction, int)) else _frac(x)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def eval_float(self, x):
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + float(c)
        return acc

    # arithmetic ---------------------------------------------------------------
    def _coerce(self, other):
        return other if isinstance(other, RationalPoly) else RationalPoly([other])

    def __add__(self, other):
        other = self._coerce(other)
        n = max(len(self), len(other))
        return RationalPoly([self[i] + other[i] for i in range(n)])

    __radd__ = __add__

    def __neg__(self):
        return RationalPoly([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        if self.is_zero() or other.is_zero():
            return RationalPoly()
        out = [Fraction(0)] * (len(self) + len(other) - 1)
        for i, ci in enumerate(self.coeffs):
            if ci:
                for j, cj in enumerate(other.coeffs):
                    out[i + j] += ci * cj
        return RationalPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        out = RationalPoly([1])
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __divmod__(self, other):
        other = self._coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = other.degree
        lead = other.coeffs[-1]
        quot = [Fraction(0)] * max(len(rem) - dq, 0)
        for i in range(len(rem) - 1, dq - 1, -1):
            f = rem[i] / lead
            if f:
                quot[i - dq] = f
                for j, cj in enumerate(other.coeffs):
                    rem[i - dq + j] -= f * cj
        return RationalPoly(quot), RationalPoly(rem[:dq] if dq > 0 else [])

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def derivative(self, order=1):
        c = list(self.coeffs)
        for _ in range(order):
            c = [i * c[i] for i in range(1, len(c))]
        return RationalPoly(c)

    def compose_reflect(self, a, b):
        """``x -> self(a + b - x)``."""
        return self.compose(RationalPoly([_frac(a) + _frac(b), -1]))

    def compose(self, inner):
        acc = RationalPoly()
        for c in reversed(self.coeffs):
            acc = acc * inner + c
        return acc


@dataclass(frozen=True)
class HermiteBasis:
    """The 2N Hermite interpolating polynomials of an exact instance."""

    params: ProcessParams
    h_minus: tuple
    h_plus: tuple

    @property
    def N(self):
        return self.params.N

    def node_polynomial(self):
        """``(x - a)^N (x - b)^N``."""
        a, b = self.params.a, self.params.b
        return RationalPoly([-a, 1]) ** self.N * RationalPoly([-b, 1]) ** self.N


@dataclass(frozen=True)
class ExitLocationLaw:
    """Weights of the multipoles at a and b for a start point x.

    The law is ``sum_k (-1)^k weights_a[k] delta_a^(k) + sum_k (-1)^k weights_b[k] delta_b^(k)``.
    """

    x: Fraction
    weights_a: tuple
    weights_b: tuple


def _exact(params):
    if not isinstance(params, ProcessParams):
        raise TypeError("expected ProcessParams")
    return params.exact()


def build_hermite_basis(params):
    """Build ``H_k^-`` and ``H_k^+``, k = 0..N-1, from their binomial-sum forms."""
    p = _exact(params)
    N, a, b = p.N, p.a, p.b
    L = b - a
    xa = RationalPoly([-a, 1])   # x - a
    xb = RationalPoly([-b, 1])   # x - b
    bx = RationalPoly([b, -1])   # b - x
    left = (bx * (1 / L)) ** N
    right = (xa * (1 / L)) ** N
    h_minus, h_plus = [], []
    for k in range(N):
        s_m = RationalPoly()
        s_p = RationalPoly()
        for ell in range(N - k):
            c = comb(ell + N - 1, ell)
            s_m = s_m + c * (xa * (1 / L)) ** ell
            s_p = s_p + c * (bx * (1 / L)) ** ell
        inv_fact = Fraction(1, factorial(k))
        h_minus.append(left * xa ** k * s_m * inv_fact)
        h_plus.append(right * xb ** k * s_p * inv_fact)
    return HermiteBasis(p, tuple(h_minus), tuple(h_plus))


def exit_location_law(basis, x):
    x = _frac(x)
    if not basis.params.a <= x <= basis.params.b:
        raise ValueError(f"x={x} outside [{basis.params.a}, {basis.params.b}]")
    return ExitLocationLaw(x, tuple(h(x) for h in basis.h_minus), tuple(h(x) for h in basis.h_plus))


def ruin_probabilities(basis, x):
    """``(P_x{exit through a first}, P_x{exit through b first})``, exactly."""
    law = exit_location_law(basis, x)
    return law.weights_a[0], law.weights_b[0]


def ruin_probability_closed_form(params, x):
    """``H_0^-(x)`` from the single binomial sum over ``(x-a)^m (b-x)^(2N-1-m)``."""
    p = _exact(params)
    N, a, b = p.N, p.a, p.b
    x = _frac(x)
    total = sum(comb(2 * N - 1, m) * (x - a) ** m * (b - x) ** (2 * N - 1 - m) for m in range(N))
    return total / (b - a) ** (2 * N - 1)


def expected_exit_polynomial(basis, P, x):
    """``E_x[P(X)]`` at the exit position, via ``P mod (x-a)^N (x-b)^N``."""
    if not isinstance(P, RationalPoly):
        P = RationalPoly(P)
    _, rem = divmod(P, basis.node_polynomial())
    return rem(_frac(x))


def moment_quotient_coefficients(params, p):
    """``c_0..c_p`` with ``x^(2N+p) = (sum_n c_(p-n) x^n)(x-a)^N(x-b)^N + remainder``."""
    if p < 0:
        raise ValueError("p must be >= 0")
    q = _exact(params)
    N, a, b = q.N, q.a, q.b
    return tuple(
        sum(comb(N + k - 1, k) * comb(N + n - 1 - k, n - k) * a ** k * b ** (n - k) for k in range(n + 1))
        for n in range(p + 1)
    )


def overshoot_moment(basis, p, x):
    """``E_x[(X - b)^p ; exit through b]``.

    ``p! H_p^+(x)`` for ``p <= N - 1`` and 0 for ``p >= N + 1``.  At ``p = N``
    the b-side part of the general Euclidean reduction of ``(z - b)^N`` is
    returned.
    """
    if p < 0:
        raise ValueError("p must be >= 0")
    N = basis.N
    x = _frac(x)
    if p <= N - 1:
        return factorial(p) * basis.h_plus[p](x)
    if p >= N + 1:
        return Fraction(0)
    # pair (z - b)^N with the b-side multipoles only: sum_k P^(k)(b) H_k^+(x)
    b = basis.params.b
    P = RationalPoly([-b, 1]) ** N
    derivs = [P.derivative(k)(b) for k in range(N)]
    return sum(derivs[k] * basis.h_plus[k](x) for k in range(N))
