import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ginolap.model import (
    InvalidSpecError,
    JordanBlockGroup,
    JordanSpec,
    ModelParams,
    build_x0,
    geometric_multiplicity,
    index_sets,
    jordan_block,
    jordan_matrix,
    kernel_multiplicity,
    spec_from_json,
    spec_to_json,
)

Z0 = 0.6 + 0.8j
W = -0.3 + 0.1j


def test_jordan_block_shape():
    R = jordan_block(Z0, 3)
    assert R.shape == (3, 3)
    assert np.allclose(np.diag(R), Z0)
    assert np.allclose(np.diag(R, 1), 1.0)
    assert R[2, 0] == 0


def test_build_x0_empty_groups_is_zero():
    X0 = build_x0(JordanSpec(()), 4)
    assert X0.shape == (4, 4)
    assert np.all(X0 == 0)


def test_build_x0_block_in_top_left_corner():
    spec = JordanSpec((JordanBlockGroup(Z0, 2, 1),))
    X0 = build_x0(spec, 4)
    assert np.allclose(X0[:2, :2], jordan_block(Z0, 2))
    X0[:2, :2] = 0
    assert np.all(X0 == 0)


def test_build_x0_scalar_similarity_cancels():
    spec = JordanSpec((JordanBlockGroup(1.0, 1, 1),), similarity=np.array([[2.0]]))
    assert np.allclose(build_x0(spec, 2), np.diag([1.0, 0.0]))


def test_build_x0_dimension_error():
    spec = JordanSpec((JordanBlockGroup(Z0, 3, 2),))
    with pytest.raises(ValueError, match="exceeds"):
        build_x0(spec, 5)


def test_singular_similarity_rejected():
    with pytest.raises(InvalidSpecError):
        JordanSpec((JordanBlockGroup(Z0, 2, 1),), similarity=np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_similarity_shape_must_match_rank():
    with pytest.raises(InvalidSpecError):
        JordanSpec((JordanBlockGroup(Z0, 2, 1),), similarity=np.eye(3))


def test_rank_and_characteristic_polynomial():
    # char poly of the top block equals the product over groups of (x - theta)^(p n),
    # checked at sample points through an LU determinant (independent of the
    # Jordan assembly path)
    rng = np.random.default_rng(5)
    P = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)) + 3 * np.eye(4)
    spec = JordanSpec(
        (JordanBlockGroup(Z0, 2, 1), JordanBlockGroup(W, 1, 2)), similarity=P
    )
    X0 = build_x0(spec, 6)
    assert np.linalg.matrix_rank(X0, tol=1e-9) <= 4
    A0 = X0[:4, :4]
    for x in (0.0, 1.0, 1j, -2.0 + 0.5j):
        det = np.linalg.det(x * np.eye(4) - A0)
        expected = (x - Z0) ** 2 * (x - W) ** 2
        assert abs(det - expected) < 1e-8 * max(1.0, abs(expected))


def test_geometric_multiplicity_examples():
    spec = JordanSpec(
        (JordanBlockGroup(Z0, 2, 1), JordanBlockGroup(Z0, 1, 2), JordanBlockGroup(W, 3, 1))
    )
    assert geometric_multiplicity(spec, Z0) == 3
    assert geometric_multiplicity(spec, W) == 1
    assert geometric_multiplicity(spec, 123.0) == 0
    assert geometric_multiplicity(JordanSpec(()), Z0) == 0
    assert geometric_multiplicity(JordanSpec((JordanBlockGroup(Z0, 3, 2),)), Z0) == 2


def test_geometric_multiplicity_matches_numeric_kernel():
    rng = np.random.default_rng(11)
    thetas = [0.5, -0.25 + 0.4j, 1.0j]
    for _ in range(20):
        groups = []
        r = 0
        while r < 4:
            g = JordanBlockGroup(
                theta=thetas[rng.integers(len(thetas))],
                p=int(rng.integers(1, 3)),
                n=int(rng.integers(1, 3)),
            )
            groups.append(g)
            r += g.width
        P = rng.standard_normal((r, r)) + 1j * rng.standard_normal((r, r)) + 3 * np.eye(r)
        spec = JordanSpec(tuple(groups), similarity=P)
        if spec.r > 6:
            continue
        for theta in thetas:
            assert geometric_multiplicity(spec, theta) == kernel_multiplicity(spec, theta)


def test_index_sets_examples():
    assert index_sets(JordanSpec((JordanBlockGroup(Z0, 2, 1),)), Z0) == ([1], [2])
    assert index_sets(JordanSpec((JordanBlockGroup(Z0, 1, 2),)), Z0) == ([1, 2], [1, 2])
    spec = JordanSpec((JordanBlockGroup(W, 2, 1), JordanBlockGroup(Z0, 2, 1)))
    assert index_sets(spec, Z0) == ([3], [4])
    assert index_sets(spec, W) == ([1], [2])
    assert index_sets(spec, 5.0) == ([], [])


@st.composite
def jordan_specs(draw):
    thetas = (0.0, 1.0, -0.5 + 0.5j, 2.0j)
    n_groups = draw(st.integers(1, 4))
    groups = tuple(
        JordanBlockGroup(
            theta=draw(st.sampled_from(thetas)),
            p=draw(st.integers(1, 3)),
            n=draw(st.integers(1, 2)),
        )
        for _ in range(n_groups)
    )
    return JordanSpec(groups)


@given(jordan_specs(), st.sampled_from([0.0, 1.0, -0.5 + 0.5j, 2.0j, 7.0]))
@settings(max_examples=80, deadline=None)
def test_index_sets_are_increasing_and_sized(spec, z0):
    i1, i2 = index_sets(spec, z0)
    t = geometric_multiplicity(spec, z0)
    assert len(i1) == len(i2) == t
    assert all(1 <= a <= spec.r for a in i1 + i2)
    assert all(x < y for x, y in zip(i1, i1[1:]))
    assert all(x < y for x, y in zip(i2, i2[1:]))
    assert all(b - a >= 0 for a, b in zip(i1, i2))
    # jordan_matrix really has z0 at those diagonal slots
    if t:
        J = jordan_matrix(spec)
        for a in i1:
            assert J[a - 1, a - 1] == complex(z0)


def test_json_round_trip():
    P = np.array([[1.0, 2.0 + 1j], [0.0, 1.0 - 0.5j]])
    spec = JordanSpec((JordanBlockGroup(Z0, 2, 1),), similarity=P)
    again = spec_from_json(spec_to_json(spec))
    assert again.groups == spec.groups
    assert np.allclose(again.similarity, P)
    bare = JordanSpec((JordanBlockGroup(1.0, 1, 1),))
    assert spec_from_json(spec_to_json(bare)) == bare


def test_json_malformed_rejected():
    with pytest.raises(InvalidSpecError):
        spec_from_json({"groups": [{"theta": [0.0], "p": 1, "n": 1}]})


def test_model_params_validation():
    spec = JordanSpec((JordanBlockGroup(Z0, 2, 1),))
    with pytest.raises(ValueError):
        ModelParams(N=2, tau=1.0, spec=spec)  # r = 2 > N - 1
    with pytest.raises(ValueError):
        ModelParams(N=8, tau=0.0, spec=spec)
    with pytest.raises(ValueError):
        ModelParams(N=1, tau=1.0)
    p = ModelParams(N=8, tau=4.0, spec=spec)
    assert p.edge_radius == 2.0
    assert p.r == 2
