import pytest

from pseudoexit import verify


@pytest.mark.parametrize("N", [2, 3])
def test_ratio_slopes_attain_bound(N):
    # |Delta_k^-/Delta| ~ lambda^(k/2N) as lambda -> 0, with the exponent attained
    slopes = verify.ratio_slopes(N)
    assert slopes == pytest.approx([k / (2 * N) for k in range(N)], abs=1e-4)


@pytest.mark.parametrize("name", ["roots", "hermite", "moments", "bvp", "symmetry-realness", "small-lambda"])
def test_fast_suites_pass(name):
    results = verify.run(names=[name])
    assert results and all(r.passed for r in results), [r.line() for r in results]


def test_result_line_format():
    (result,) = verify.run(orders=[2], names=["closed-forms"])
    assert result.line().startswith("[PASS] closed-forms")


def test_unknown_suite():
    with pytest.raises(ValueError):
        verify.run(names=["nope"])
