import math

import numpy as np
import pytest

from ginolap.asymptotics import (
    EvaluationPoint,
    Scaling,
    TheoryCurve,
    edge_density,
    edge_density_classical,
    microscopic_scale,
    outlier_identity_density,
    outlier_jordan_density,
    outlier_one_point_density,
    physical_point,
    theory_curve,
)
from ginolap.model import JordanBlockGroup, JordanSpec


def single_block(z0, r, P=None):
    return JordanSpec((JordanBlockGroup(z0, r, 1),), similarity=P)


def test_edge_value_at_zero():
    assert edge_density(0, 1.0, 0.0) == pytest.approx(1.0 / (math.pi * math.sqrt(2 * math.pi)), rel=1e-12)


def test_edge_matches_classical_form():
    for u in np.arange(-4.0, 4.0 + 1e-9, 0.05):
        assert abs(edge_density(0, 1.0, float(u)) - edge_density_classical(1.0, float(u))) < 1e-10


def test_edge_ignores_imaginary_part_exactly():
    for t in (0, 1, 4):
        assert edge_density(t, 1.0, 1.3 + 57.0j) == edge_density(t, 1.0, 1.3)


def test_edge_tau_scaling_exact():
    for t in (0, 2):
        for u in (-1.0, 0.4):
            assert edge_density(t, 2.5, u) == edge_density(t, 1.0, u) / 2.5


def test_edge_deep_tail():
    assert edge_density(0, 1.0, 8.0) < 1e-10


def test_edge_rejects_bad_arguments():
    with pytest.raises(ValueError):
        edge_density(-1, 1.0, 0.0)
    with pytest.raises(ValueError):
        edge_density(0, 0.0, 0.0)


def test_outlier_jordan_point_value():
    spec = single_block(2.0, 1)
    assert outlier_jordan_density(spec, 1.0, 0.0) == pytest.approx(4.0 / (3.0 * math.pi), rel=1e-12)


def test_outlier_jordan_similarity_scale_invariance():
    rng = np.random.default_rng(3)
    P = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) + 2 * np.eye(3)
    base = outlier_jordan_density(single_block(2.0, 3, P), 1.0, 1.1 - 0.4j)
    for c in (2.0, 1j, 0.5 - 0.5j):
        val = outlier_jordan_density(single_block(2.0, 3, c * P), 1.0, 1.1 - 0.4j)
        assert val == pytest.approx(base, rel=1e-10)


def test_outlier_jordan_decay_and_domain():
    spec = single_block(2.0, 2)
    assert outlier_jordan_density(spec, 1.0, 10.0) < 1e-12
    with pytest.raises(ValueError):
        outlier_jordan_density(single_block(0.5, 2), 1.0, 0.0)  # inside the disk
    with pytest.raises(ValueError):
        outlier_jordan_density(JordanSpec((JordanBlockGroup(2.0, 1, 2),)), 1.0, 0.0)  # n != 1


def test_outlier_identity_values():
    # r = 1 reduces to a pure Gaussian profile
    for zh in (0.0, 0.7 + 0.1j):
        v = outlier_identity_density(1, 1.0, 2.0, zh)
        assert v == pytest.approx(4.0 / (3.0 * math.pi) * math.exp(-abs(zh) ** 2), rel=1e-12)
    assert outlier_identity_density(2, 1.0, 2.0, 0.0) == pytest.approx(8.0 / (3.0 * math.pi), rel=1e-12)
    with pytest.raises(ValueError):
        outlier_identity_density(1, 1.0, 0.9, 0.0)


def test_outlier_laws_agree_at_rank_one_after_rescaling():
    # Jordan window N^{-1/2} vs normalized window (N(1/tau-1/|z0|^2))^{-1/2}:
    # zhat_jordan = sqrt(tau) (1 - tau/|z0|^2)^{-1/2} zhat_norm aligns them
    tau, z0 = 0.7, 1.9 - 0.3j
    a = 1.0 - tau / abs(z0) ** 2
    spec = single_block(z0, 1)
    for zh in (0.0, 0.3 + 0.2j, 1.5):
        zj = math.sqrt(tau) * a**-0.5 * zh
        assert outlier_jordan_density(spec, tau, zj) == pytest.approx(
            outlier_identity_density(1, tau, z0, zh), rel=1e-12
        )


def test_one_point_values_and_domain():
    assert outlier_one_point_density(single_block(2.0, 1), 2.0, 0.0) == pytest.approx(
        3.0 / (4.0 * math.pi), rel=1e-12
    )
    assert outlier_one_point_density(single_block(2.0, 2), 2.0, 0.0) == 0.0
    assert outlier_one_point_density(single_block(2.0, 3), 2.0, 0.0) == 0.0
    with pytest.raises(ValueError):
        outlier_one_point_density(single_block(0.5, 1), 0.5, 0.0)
    with pytest.raises(ValueError):
        outlier_one_point_density(single_block(2.0, 1), 3.0, 0.0)  # z0 mismatch


def plane_integral_radial(f, radius=12.0, n_ang=64, n_rad=240):
    """2-D tensor quadrature over a disk (angular x split radial panels)."""
    from numpy.polynomial.legendre import leggauss

    xs, ws = leggauss(n_rad)
    total = 0.0
    for a, b in ((0.0, 2.0), (2.0, radius)):
        r = a + 0.5 * (b - a) * (xs + 1.0)
        wr = 0.5 * (b - a) * ws
        xa, wa = leggauss(n_ang)
        th = math.pi * (xa + 1.0)
        wth = math.pi * wa
        for rr, w1 in zip(r, wr):
            vals = np.array([f(rr * math.cos(t) + 1j * rr * math.sin(t)) for t in th])
            total += w1 * rr * float(wth @ vals)
    return total


@pytest.mark.parametrize("r", [1, 2, 3])
def test_one_point_plane_integral_is_rank(r):
    spec = single_block(2.0, r)
    val = plane_integral_radial(lambda zh: outlier_one_point_density(spec, 2.0, zh))
    assert val == pytest.approx(r, abs=1e-6)


def test_densities_nonnegative_and_decaying():
    spec = single_block(2.0, 2)
    for zh in np.linspace(-3, 3, 13):
        assert edge_density(1, 1.0, float(zh)) >= 0.0
        assert outlier_jordan_density(spec, 1.0, complex(zh)) >= 0.0
        assert outlier_identity_density(2, 1.0, 2.0, complex(zh)) >= 0.0
        assert outlier_one_point_density(spec, 2.0, complex(zh)) >= 0.0
    assert edge_density(1, 1.0, 10.0) < 1e-10
    assert outlier_jordan_density(spec, 1.0, 10.0) < 1e-10
    assert outlier_identity_density(2, 1.0, 2.0, 10.0) < 1e-10
    assert outlier_one_point_density(spec, 2.0, 10.0) < 1e-10


def test_scalings():
    N, tau = 100, 1.0
    edge = EvaluationPoint(z0=1.0, zhat=2.0, rho=0.5, scaling=Scaling.EDGE_MULTIPLICATIVE)
    assert physical_point(edge, N, tau) == pytest.approx(1.0 * (1 + 0.1 * 2.0))
    assert microscopic_scale(edge, N, tau) == pytest.approx(0.1)

    add = EvaluationPoint(z0=2.0, zhat=1.0, rho=0.25, scaling=Scaling.OUTLIER_ADDITIVE)
    assert physical_point(add, N, tau) == pytest.approx(2.0 + 100**-0.25)

    norm = EvaluationPoint(z0=2.0, zhat=1.0, rho=0.5, scaling=Scaling.OUTLIER_ADDITIVE_NORMALIZED)
    assert microscopic_scale(norm, N, tau) == pytest.approx((100 * (1 - 0.25)) ** -0.5)
    bad = EvaluationPoint(z0=0.5, zhat=1.0, rho=0.5, scaling=Scaling.OUTLIER_ADDITIVE_NORMALIZED)
    with pytest.raises(ValueError):
        microscopic_scale(bad, N, tau)


def test_theory_curve_builders():
    zh = [complex(u, 0.0) for u in (-1.0, 0.0, 1.0)]
    c = theory_curve("edge", zh, tau=1.0, t=0)
    assert len(c.points) == 3
    assert c.meta["theorem"] == "edge" and c.meta["t"] == 0
    assert c.points[1][1] == pytest.approx(0.12698727186848197)

    c = theory_curve("outlier-identity", [0.0], tau=1.0, r=2, z0=2.0)
    assert c.points[0][1] == pytest.approx(8.0 / (3.0 * math.pi))

    spec = single_block(2.0, 1)
    c = theory_curve("outlier-jordan", [0.0], tau=1.0, spec=spec)
    assert c.points[0][1] == pytest.approx(4.0 / (3.0 * math.pi))

    c = theory_curve("one-point", [0.0], tau=1.0, spec=spec)
    assert c.points[0][1] == pytest.approx(3.0 / (4.0 * math.pi))

    with pytest.raises(ValueError):
        theory_curve("one-point", [0.0], tau=2.0, spec=spec)
    with pytest.raises(ValueError):
        theory_curve("nope", [0.0], tau=1.0)
    with pytest.raises(ValueError):
        TheoryCurve(points=((0.0, -1.0),), meta={})
