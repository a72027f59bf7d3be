import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import mp_determinant, mp_ratio
from pseudoexit import laplace_domain as ld
from pseudoexit.core import ProcessParams, compute_roots, det_scaled
from pseudoexit.hermite_exact import build_hermite_basis


def setup(N, a=0.0, b=1.0):
    params = ProcessParams(N, a, b)
    return params, compute_roots(params)


class TestDeltaMatrix:
    def test_order_one_literal(self):
        params, roots = setup(1)
        m = ld.build_delta_matrix(params, roots, 1.0).to_array()
        assert np.allclose(m, [[1, 1], [math.exp(-1), math.e]], rtol=1e-15)

    def test_vanishes_at_zero(self):
        params, roots = setup(3)
        m = ld.build_delta_matrix(params, roots, 0.0)
        assert np.array_equal(m.entries[0], m.entries[3])
        assert ld.delta(params, roots, 0.0).is_zero

    def test_order_two_closed_form(self):
        params, roots = setup(2)
        q = 0.25 ** 0.25
        ref = 4 * (math.cosh(2 * q) + math.cos(2 * q) - 2)
        assert det_scaled(ld.build_delta_matrix(params, roots, 1.0)).value.real == pytest.approx(ref, rel=1e-10)

    @pytest.mark.parametrize("N", [1, 2, 3, 4])
    @pytest.mark.parametrize("lam", [1e-6, 1e-3, 0.5, 30.0, 1e4, 1e8])
    def test_delta_reference(self, N, lam):
        params, roots = setup(N, -0.5, 0.75)
        got = ld.delta(params, roots, lam).value
        ref = mp_determinant(N, -0.5, 0.75, lam)
        assert abs(got - ref) <= 1e-11 * abs(ref)

    def test_huge_lambda_no_overflow(self):
        params, roots = setup(2)
        d = ld.delta(params, roots, 1e16)
        assert math.isfinite(d.log_scale) and d.log_scale > 700


class TestEvaluate:
    @pytest.mark.parametrize("N", [1, 2, 3, 4])
    @pytest.mark.parametrize("lam", [1e-5, 0.2, 50.0, 3e3, 1e7])
    @pytest.mark.parametrize("x", [0.0, 0.13, 0.5, 0.81, 1.0])
    def test_ratios_reference(self, N, lam, x):
        params, roots = setup(N)
        ev = ld.evaluate(params, roots, lam, x)
        for k in range(N):
            for side, got in (("minus", ev.ratio_minus[k]), ("plus", ev.ratio_plus[k])):
                ref = mp_ratio(N, 0.0, 1.0, lam, x, side, k)
                assert abs(got - ref) <= 1e-10 * abs(ref) + 1e-15

    @pytest.mark.parametrize("lam", [0.3, 4.0, 900.0])
    @pytest.mark.parametrize("x", [0.2, 0.5, 0.9])
    def test_brownian_reduction(self, lam, x):
        params, roots = setup(1)
        ev = ld.evaluate(params, roots, lam, x)
        r = math.sqrt(lam)
        assert ev.ratio_minus[0].real == pytest.approx(math.sinh(r * (1 - x)) / math.sinh(r), rel=1e-12)
        assert ev.ratio_plus[0].real == pytest.approx(math.sinh(r * x) / math.sinh(r), rel=1e-12)

    def test_midpoint_pattern(self):
        params, roots = setup(2)
        ev = ld.evaluate(params, roots, 4.0, 0.5)
        assert ev.delta_minus[0].isclose(ev.delta_plus[0], rel=1e-12)
        assert ev.delta_minus[1].isclose(-ev.delta_plus[1], rel=1e-12)

    def test_degenerate_at_zero(self):
        params, roots = setup(2)
        ev = ld.evaluate(params, roots, 0.0, 0.4)
        assert ev.degenerate and np.all(np.isnan(ev.ratio_minus))

    def test_x_outside(self):
        params, roots = setup(2)
        with pytest.raises(ValueError):
            ld.evaluate(params, roots, 1.0, 1.5)

    @pytest.mark.parametrize("route", ["literal", "hyperbolic"])
    def test_routes_agree(self, route):
        params, roots = setup(3)
        for lam in (0.5, 40.0, 2e3):
            for x in (0.1, 0.6):
                a = ld.evaluate(params, roots, lam, x, route=route)
                b = ld.evaluate(params, roots, lam, x)
                assert np.allclose(a.ratio_minus, b.ratio_minus, rtol=1e-8)
                assert np.allclose(a.ratio_plus, b.ratio_plus, rtol=1e-8)

    @given(st.integers(2, 4), st.floats(-6, 6), st.floats(0.0, 1.0))
    def test_symmetry_and_realness(self, N, loglam, x):
        # reflect onto (-1, 0) so the mirrored point -x is exact
        params, roots = setup(N)
        mparams, _ = setup(N, -1.0, 0.0)
        lam = 10.0 ** loglam
        ev = ld.evaluate(params, roots, lam, x)
        mirror = ld.evaluate(mparams, roots, lam, -x)
        scale = np.max(np.abs(np.concatenate([ev.ratio_minus, ev.ratio_plus])))
        for k in range(N):
            assert abs(ev.ratio_plus[k] - (-1) ** k * mirror.ratio_minus[k]) <= 1e-9 * scale
            assert abs(ev.ratio_plus[k].imag) <= 1e-10 * scale
        assert abs(ev.delta.mantissa.imag) <= 1e-10 * abs(ev.delta.mantissa)


class TestDerivatives:
    @pytest.mark.parametrize("N", [2, 3])
    @pytest.mark.parametrize("lam", [0.01, 10.0, 1e5])
    def test_boundary_conditions(self, N, lam):
        params, roots = setup(N)
        d = ld.delta(params, roots, lam)
        s = lam ** (1 / (2 * N))
        for k in range(N):
            for ell in range(N):
                at_a = ld.derivative_delta(params, roots, lam, 0.0, "minus", k, ell)
                at_b = ld.derivative_delta(params, roots, lam, 1.0, "minus", k, ell)
                target = s ** ell if k == ell else 0.0
                assert abs((at_a / d).value - target) <= 1e-10 * s ** ell
                assert abs((at_b / d).value) <= 1e-10 * s ** ell

    @pytest.mark.parametrize("lam", [0.7, 250.0, 1e6])
    def test_ode_residual(self, lam):
        params, roots = setup(3)
        for x in (0.2, 0.55):
            for k in range(3):
                base = ld.derivative_delta(params, roots, lam, x, "plus", k, 0)
                top = ld.derivative_delta(params, roots, lam, x, "plus", k, 6)
                assert abs(top.ratio(base) - params.kappa * lam) <= 1e-8 * lam

    def test_first_derivative_matches_finite_difference(self):
        params, roots = setup(2)
        lam, x, h = 5.0, 0.4, 1e-5
        f = lambda y: ld.derivative_delta(params, roots, lam, y, "minus", 1, 0).value.real
        d1 = ld.derivative_delta(params, roots, lam, x, "minus", 1, 1).value.real
        assert d1 == pytest.approx((f(x + h) - f(x - h)) / (2 * h), rel=1e-7)

    def test_order_zero_is_evaluate(self):
        params, roots = setup(2)
        ev = ld.evaluate(params, roots, 3.0, 0.3)
        assert ld.derivative_delta(params, roots, 3.0, 0.3, "plus", 1, 0).isclose(ev.delta_plus[1])

    def test_order_out_of_range(self):
        params, roots = setup(2)
        with pytest.raises(ValueError):
            ld.derivative_delta(params, roots, 1.0, 0.3, "minus", 0, 5)


class TestFeynmanKac:
    @pytest.mark.parametrize("lam", [0.1, 2.0, 75.0])
    @pytest.mark.parametrize("x", [0.25, 0.6])
    def test_brownian_laplace_of_exit_time(self, lam, x):
        params, roots = setup(1)
        r = math.sqrt(lam)
        ref = (math.sinh(r * (1 - x)) + math.sinh(r * x)) / math.sinh(r)
        assert ld.feynman_kac(params, roots, lam, x, ld.BoundaryData.constant(1)) == pytest.approx(ref, rel=1e-12)

    def test_boundary_value(self):
        params, roots = setup(3)
        bd = ld.BoundaryData([0.7, -1.0, 2.0], [0.1, 0.3, 0.2])
        assert ld.feynman_kac(params, roots, 2.0, 0.0, bd) == pytest.approx(0.7, rel=1e-12)
        assert ld.feynman_kac(params, roots, 2.0, 1.0, bd) == pytest.approx(0.1, rel=1e-12)

    @pytest.mark.parametrize("N", [2, 3])
    @pytest.mark.parametrize("lam", [0.05, 3.0, 400.0])
    def test_cramer_consistency(self, N, lam):
        params, roots = setup(N)
        rng = np.random.default_rng(N)
        bd = ld.BoundaryData(rng.standard_normal(N), rng.standard_normal(N))
        for x in (0.15, 0.5, 0.85):
            fk = ld.feynman_kac(params, roots, lam, x, bd)
            direct = ld.cramer_solution(params, roots, lam, bd, x)
            assert abs(direct - fk) <= 1e-9 * max(abs(fk), 1e-3)

    @pytest.mark.parametrize("side", ["minus", "plus"])
    @pytest.mark.parametrize("k", [0, 1])
    def test_small_lambda_tends_to_hermite(self, side, k):
        params, roots = setup(2)
        h = build_hermite_basis(params)
        x = 0.3
        target = float((h.h_minus if side == "minus" else h.h_plus)[k](x))
        values = [ld.feynman_kac(params, roots, lam, x, ld.BoundaryData.unit(2, side, k))
                  for lam in (1e-2, 1e-3, 1e-4)]
        errs = [abs(v - target) for v in values]
        assert errs[2] < errs[1] < errs[0] and errs[2] < 1e-4

    def test_degenerate_raises(self):
        params, roots = setup(2)
        with pytest.raises(ld.DegenerateError):
            ld.feynman_kac(params, roots, 0.0, 0.5, ld.BoundaryData.constant(2))

    def test_length_mismatch(self):
        params, roots = setup(3)
        with pytest.raises(ValueError):
            ld.feynman_kac(params, roots, 1.0, 0.5, ld.BoundaryData.constant(2))


class TestLimit:
    def test_order_one(self):
        assert ld.limit_coefficients(compute_roots(1)).alpha[0, 0] == 1

    @pytest.mark.parametrize("N", [2, 3, 5])
    def test_lagrange_property(self, N):
        roots = compute_roots(N)
        alpha = ld.limit_coefficients(roots).alpha
        V = np.array([[t ** k for k in range(N)] for t in roots.negative])
        assert np.allclose(V @ alpha, np.eye(N), atol=1e-12)

    def test_large_interval(self):
        params, roots = setup(2, 0.0, 10.0)
        coef = ld.limit_coefficients(roots)
        ev = ld.evaluate(params, roots, 1.0, 0.5)
        for k in range(2):
            assert abs(ev.ratio_minus[k] - ld.limit_ratio(roots, coef, 1.0, 0.5, k)) < 1e-6


class TestBatch:
    def test_transform_batch_matches_scalar(self):
        params, roots = setup(3)
        lams = np.array([0.2 + 1j, 5.0 - 3j, 80.0 + 0j, 1e4 + 2e3j])
        got = ld.transform_batch(params, roots, lams, 0.35, ("plus", 2))
        for lam, g in zip(lams, got):
            ref = ld.transform_mp(params, roots, lam, 0.35, ("plus", 2), 40)
            assert abs(g - complex(ref)) <= 1e-10 * abs(complex(ref))

    def test_conjugate_symmetry(self):
        params, roots = setup(2)
        lams = np.array([3.0 + 4.0j, 3.0 - 4.0j])
        v = ld.transform_batch(params, roots, lams, 0.3, "density")
        assert v[0] == pytest.approx(np.conj(v[1]), rel=1e-12)

    def test_survival_kind(self):
        params, roots = setup(2)
        lam = np.array([2.0])
        dens = ld.transform_batch(params, roots, lam, 0.3, "density")
        surv = ld.transform_batch(params, roots, lam, 0.3, "survival")
        assert surv[0] == pytest.approx((1 - dens[0]) / 2.0)

    def test_unknown_kind(self):
        params, roots = setup(2)
        with pytest.raises(ValueError):
            ld.transform_batch(params, roots, np.array([1.0]), 0.3, "bogus")


def test_imaginary_residue_warns():
    params, roots = setup(2)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ld.feynman_kac(params, roots, 1.0, 0.3, ld.BoundaryData.constant(2))
