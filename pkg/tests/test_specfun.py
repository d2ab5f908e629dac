import math

import numpy as np
import pytest
from scipy import integrate

from ginolap.specfun import e_trunc, ie, ie_scaled

SQRT2PI = math.sqrt(2 * math.pi)


def ie_by_quadrature(s: float, x: float) -> float:
    """Test-local oracle: direct adaptive quadrature of the defining integral,
    written independently of the library's own quadrature fallback."""
    body = lambda v: v**s * math.exp(-0.5 * (v + x) ** 2)
    pieces = sorted({0.0, 1.0, max(1.0, -x), abs(x) + 40.0})
    total = 0.0
    for a, b in zip(pieces, pieces[1:]):
        val, _ = integrate.quad(body, a, b, epsabs=1e-300, epsrel=1e-12, limit=300)
        total += val
    return total / (SQRT2PI * math.gamma(s + 1))


def test_point_values():
    assert ie(0, 0.0) == pytest.approx(0.5, abs=1e-14)
    assert ie(-1, 0.0) == pytest.approx(1.0 / SQRT2PI, abs=1e-14)
    assert ie(1, 0.0) == pytest.approx(1.0 / SQRT2PI, abs=1e-14)


def test_order_two_reduction():
    # IE_2 = (IE_0 - z IE_1)/2, validated against direct quadrature
    for z in (-3.0, -1.0, 0.0, 1.0, 3.0):
        lhs = ie(2, z)
        rhs = (ie(0, z) - z * ie(1, z)) / 2.0
        assert lhs == pytest.approx(rhs, rel=1e-11)
        assert lhs == pytest.approx(ie_by_quadrature(2, z), rel=1e-10)


def test_recurrence_residual_grid():
    for s in range(0, 9):
        for z in np.arange(-6.0, 6.0 + 1e-9, 0.25):
            z = float(z)
            resid = (s + 1) * ie(s + 1, z) + z * ie(s, z) - ie(s - 1, z)
            assert abs(resid) < 1e-10


def test_integer_path_matches_quadrature():
    for s in range(0, 7):
        for z in np.arange(-6.0, 6.0 + 1e-9, 0.5):
            z = float(z)
            a, b = ie(s, z), ie_by_quadrature(s, z)
            assert a == pytest.approx(b, rel=1e-9)


def test_positivity():
    for s in (-1, 0, 3, 8, 0.5, 2.5):
        for z in (-30.0, -6.0, 0.0, 2.0, 6.0, 20.0):
            if z > 35 or (s == -1 and abs(z) > 35):
                continue
            assert ie(s, z) > 0.0
            assert ie_scaled(s, z) > 0.0


def test_noninteger_order_quadrature_path():
    for s in (-0.5, 0.5, 1.7):
        for z in (-4.0, 0.0, 2.0, 5.0):
            assert ie(s, z) == pytest.approx(ie_by_quadrature(s, z), rel=1e-9)


def test_scaled_is_constant_at_minus_one():
    for x in (-300.0, -5.0, 0.0, 7.0, 200.0):
        assert ie_scaled(-1, x) == pytest.approx(1.0 / SQRT2PI, abs=1e-15)


def test_scaled_point_value():
    assert ie_scaled(0, 0.0) == pytest.approx(0.5, abs=1e-14)


def test_scaled_consistency_with_plain():
    for s in (0, 1, 4, 1.3):
        for x in range(-5, 6):
            lhs = ie_scaled(s, float(x)) * math.exp(-0.5 * x * x)
            assert lhs == pytest.approx(ie(s, float(x)), rel=1e-12)


def test_scaled_no_overflow_on_decaying_side():
    # the exp(x^2/2) prefactor alone is ~1e8686 at x = 200; the scaled form
    # never builds it
    v = ie_scaled(4, 200.0)
    assert 0.0 < v < 1.0
    assert np.isfinite(ie_scaled(0, 120.0))


def test_domain_errors():
    with pytest.raises(ValueError):
        ie(-1.5, 0.0)
    with pytest.raises(ValueError):
        ie_scaled(-2, 1.0)
    with pytest.raises(ValueError):
        e_trunc(-1, 1.0)


def test_e_trunc_examples():
    assert e_trunc(1, 5.0) == 1.0
    assert e_trunc(3, 1.0) == 2.5
    assert e_trunc(0, 9.9) == 0.0


def test_e_trunc_monotone_to_exp():
    a = 1.0
    prev = -1.0
    for r in range(1, 21):
        val = e_trunc(r, a)
        assert val > prev
        assert val < math.exp(a)
        prev = val
    assert e_trunc(20, a) == pytest.approx(math.exp(a), rel=1e-12)
