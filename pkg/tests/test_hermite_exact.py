from fractions import Fraction as F
from math import comb, factorial

import pytest
from hypothesis import given, strategies as st

from pseudoexit.core import ProcessParams
from pseudoexit.hermite_exact import (
    RationalPoly,
    build_hermite_basis,
    exit_location_law,
    expected_exit_polynomial,
    moment_quotient_coefficients,
    overshoot_moment,
    ruin_probabilities,
    ruin_probability_closed_form,
)

X = RationalPoly.monomial(1)
fractions = st.fractions(min_value=-5, max_value=5, max_denominator=50)


def basis(N, a=0, b=1):
    return build_hermite_basis(ProcessParams(N, F(a), F(b)))


class TestRationalPoly:
    def test_normalized(self):
        assert RationalPoly([1, 2, 0, 0]).degree == 1
        assert RationalPoly([0, 0]).is_zero() and RationalPoly().degree == -1

    def test_evaluate_and_arith(self):
        p = RationalPoly([1, 0, 1])
        assert p(F(1, 2)) == F(5, 4)
        assert (p * p - p ** 2).is_zero()
        assert (p - 1) == X ** 2
        assert p.derivative(2) == RationalPoly.constant(2)

    def test_from_roots(self):
        p = RationalPoly.from_roots([1, 2])
        assert p == RationalPoly([2, -3, 1])

    @given(st.lists(fractions, min_size=1, max_size=8), st.lists(fractions, min_size=1, max_size=5))
    def test_divmod_identity(self, num, den):
        n, d = RationalPoly(num), RationalPoly(den)
        if d.is_zero():
            with pytest.raises(ZeroDivisionError):
                divmod(n, d)
            return
        q, r = divmod(n, d)
        assert q * d + r == n
        assert r.degree < d.degree

    @given(st.lists(fractions, max_size=6), fractions, fractions)
    def test_reflect(self, coeffs, a, x):
        p = RationalPoly(coeffs)
        assert p.compose_reflect(a, 1)(x) == p(a + 1 - x)


class TestBasis:
    def test_order_two_closed_forms(self):
        a, b = F(-1, 3), F(2)
        h = basis(2, a, b)
        L = b - a
        assert h.h_minus[1] == (X - a) * (X - b) ** 2 * (1 / L ** 2)
        assert h.h_minus[0] == (X - b) ** 2 * (2 * X - 3 * a + b) * (1 / L ** 3)

    def test_order_one(self):
        h = basis(1)
        assert h.h_minus[0] == RationalPoly([1, -1]) and h.h_plus[0] == X

    @pytest.mark.parametrize("N", range(1, 9))
    def test_interpolation_conditions(self, N):
        a, b = F(-2, 7), F(5, 3)
        h = basis(N, a, b)
        for k in range(N):
            assert h.h_minus[k].degree <= 2 * N - 1 and h.h_plus[k].degree <= 2 * N - 1
            for ell in range(N):
                dm, dp = h.h_minus[k].derivative(ell), h.h_plus[k].derivative(ell)
                assert dm(a) == (k == ell) and dm(b) == 0
                assert dp(b) == (k == ell) and dp(a) == 0
        assert h.h_minus[0] + h.h_plus[0] == RationalPoly.constant(1)

    @pytest.mark.parametrize("N", range(1, 9))
    def test_symmetry(self, N):
        a, b = F(1, 2), F(9, 4)
        h = basis(N, a, b)
        for k in range(N):
            assert h.h_plus[k] == (-1) ** k * h.h_minus[k].compose_reflect(a, b)

    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_half_line_limit(self, k):
        x = F(3, 2)
        errs = []
        for b in (10, 100, 1000):
            h = basis(3, 0, b)
            errs.append(abs(h.h_minus[k](x) - x ** k / factorial(k)))
            assert abs(h.h_plus[k](x)) < F(10, b)
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < F(1, 10)


class TestExitLaw:
    def test_at_endpoint(self):
        law = exit_location_law(basis(3, 0, 2), 0)
        assert law.weights_a == (1, 0, 0) and law.weights_b == (0, 0, 0)

    @pytest.mark.parametrize("a,b", [(0, 1), (-1, 3), (F(1, 3), F(1, 2))])
    def test_midpoint_order_two(self, a, b):
        a, b = F(a), F(b)
        law = exit_location_law(basis(2, a, b), (a + b) / 2)
        assert law.weights_a == (F(1, 2), (b - a) / 8)
        assert law.weights_b == (F(1, 2), -(b - a) / 8)

    def test_outside(self):
        with pytest.raises(ValueError):
            exit_location_law(basis(2), F(3, 2))

    @given(st.integers(1, 6), st.fractions(0, 1, max_denominator=100))
    def test_total_mass(self, N, x):
        law = exit_location_law(basis(N), x)
        assert law.weights_a[0] + law.weights_b[0] == 1


class TestRuin:
    def test_midpoint(self):
        assert ruin_probabilities(basis(2), F(1, 2)) == (F(1, 2), F(1, 2))

    def test_upper_endpoint(self):
        assert ruin_probabilities(basis(4, 0, 3), 3) == (0, 1)

    def test_order_three_third(self):
        # hand evaluation of the binomial sum: (32 + 80 + 80) / 243
        assert ruin_probabilities(basis(3), F(1, 3))[0] == F(64, 81)

    @given(st.integers(1, 8), st.fractions(-1, 2, max_denominator=64))
    def test_two_formula_paths(self, N, x):
        params = ProcessParams(N, F(-1), F(2))
        assert ruin_probability_closed_form(params, x) == build_hermite_basis(params).h_minus[0](x)


class TestMoments:
    @pytest.mark.parametrize("N", range(1, 6))
    def test_low_degree_reproduction(self, N):
        a, b, x = F(-1, 2), F(3, 2), F(2, 7)
        h = basis(N, a, b)
        for p in range(2 * N):
            assert expected_exit_polynomial(h, X ** p, x) == x ** p
        for poly in h.h_minus + h.h_plus:
            assert expected_exit_polynomial(h, poly, x) == poly(x)

    @pytest.mark.parametrize("N", range(1, 6))
    def test_higher_displays(self, N):
        a, b, x = F(1, 3), F(5, 2), F(3, 4)
        h = basis(N, a, b)
        node = (x - a) ** N * (x - b) ** N
        c1 = N * (a + b)
        c2 = F(N * (N + 1), 2) * (a ** 2 + b ** 2) + N ** 2 * a * b
        assert expected_exit_polynomial(h, X ** (2 * N), x) == x ** (2 * N) - node
        assert expected_exit_polynomial(h, X ** (2 * N + 1), x) == x ** (2 * N + 1) - (x + c1) * node
        assert expected_exit_polynomial(h, X ** (2 * N + 2), x) == x ** (2 * N + 2) - (x ** 2 + c1 * x + c2) * node

    def test_moments_example(self):
        assert expected_exit_polynomial(basis(2), X ** 3, F(3, 10)) == F(27, 1000)

    def test_coefficient_head(self):
        a, b = F(2, 3), F(7, 5)
        for N in range(1, 5):
            c = moment_quotient_coefficients(ProcessParams(N, a, b), 2)
            assert c[0] == 1 and c[1] == N * (a + b)
            assert c[2] == F(N * (N + 1), 2) * (a ** 2 + b ** 2) + N ** 2 * a * b

    @pytest.mark.parametrize("N,a,b", [(2, 0, 1), (1, -1, 2), (3, F(1, 2), 3), (5, -2, F(1, 3))])
    @pytest.mark.parametrize("p", range(7))
    def test_coefficients_match_division(self, N, a, b, p):
        params = ProcessParams(N, F(a), F(b))
        q, _ = divmod(X ** (2 * N + p), build_hermite_basis(params).node_polynomial())
        c = moment_quotient_coefficients(params, p)
        assert q == RationalPoly([c[p - n] for n in range(p + 1)])

    def test_negative_p(self):
        with pytest.raises(ValueError):
            moment_quotient_coefficients(ProcessParams(2), -1)


class TestOvershoot:
    def test_zero_is_ruin(self):
        h = basis(3)
        assert overshoot_moment(h, 0, F(2, 5)) == ruin_probabilities(h, F(2, 5))[1]

    def test_order_two_first(self):
        a, b, x = F(0), F(1), F(1, 4)
        assert overshoot_moment(basis(2, a, b), 1, x) == (x - a) ** 2 * (x - b) / (b - a) ** 2

    @pytest.mark.parametrize("N", [1, 2, 3, 4])
    def test_vanishes_beyond(self, N):
        h = basis(N)
        for p in range(N, N + 4):
            assert overshoot_moment(h, p, F(3, 7)) == 0

    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_matches_b_side_weights(self, N):
        a, b, x = F(0), F(2), F(5, 7)
        h = basis(N, a, b)
        law = exit_location_law(h, x)
        for p in range(N):
            # the (-1)^k delta_b^(k) weights paired with (z - b)^p pick p! H_p^+
            P = (X - b) ** p
            pairing = sum(P.derivative(k)(b) * law.weights_b[k] for k in range(N))
            assert overshoot_moment(h, p, x) == pairing == factorial(p) * h.h_plus[p](x)

    def test_negative(self):
        with pytest.raises(ValueError):
            overshoot_moment(basis(2), -1, F(1, 2))


def test_coefficients_unit_interval():
    # with a = 0 only the k = 0 term survives
    assert moment_quotient_coefficients(ProcessParams(3, F(0), F(1)), 4) == tuple(
        comb(3 + n - 1, n) for n in range(5))
