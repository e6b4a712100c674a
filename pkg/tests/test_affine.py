import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ptolemykit import (
    AffineFamily,
    AnalyticFamily,
    EuclideanIsometry,
    InvalidInput,
    LinearFunctional,
    Verdict,
    evaluation_embed,
    hl_isometry_check,
    inner_product_detect,
    is_affine,
    parse_space,
    separates_points,
)
from ptolemykit.affine import (
    BusemannFunctional,
    CallableFunction,
    affine_rank,
    covering_distortion,
    embed_coordinates,
    lipschitz_audit,
    midpoint_sample,
    random_unit_functionals,
    spread_unit_functionals,
)
from ptolemykit.busemann import Ray
from ptolemykit.errors import UnsupportedSpace
from ptolemykit.metric import FiniteMetricSpace

E2, E3 = parse_space("euclidean(2)"), parse_space("euclidean(3)")
coords = st.floats(-50, 50, allow_nan=False)


def busemann_family(space=E2):
    dirs = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    return AffineFamily([BusemannFunctional(Ray(space, [0, 0], d)) for d in dirs])


# is_affine --------------------------------------------------------------------


def test_linear_is_affine():
    assert is_affine(LinearFunctional([1.0, -2.0, 0.5], 3.0), E3).passed


def test_busemann_function_is_affine():
    rep = is_affine(BusemannFunctional(Ray(E2, [1, 1], [3, 4])), E2, scale=10)
    assert rep.passed and rep.statistics["max_residual"] <= 1e-12


def test_square_norm_is_not_affine():
    rep = is_affine(lambda P: np.sum(P * P, axis=-1), E2)
    assert rep.verdict is Verdict.FAIL
    w = rep.witness
    assert w["residual"] == pytest.approx(0.25 * np.sum((w["x"] - w["y"]) ** 2))


def test_lipschitz_audit():
    f = LinearFunctional([3.0, 4.0])
    assert lipschitz_audit(f, 5.0, E2).passed
    assert lipschitz_audit(f, 4.0, E2).verdict is Verdict.FAIL


# separation -------------------------------------------------------------------


def test_separation_examples():
    s = separates_points(AffineFamily.coordinates(2, signed=False), [0, 0], [0, 1])
    assert s.separated and s.index == 1
    first = AffineFamily([LinearFunctional([1.0, 0.0])])
    assert not separates_points(first, [0, 0], [0, 1]).separated
    with pytest.raises(InvalidInput):
        separates_points(first, [1, 2], [1, 2])


@given(arrays(np.float64, 2, elements=coords), arrays(np.float64, 2, elements=coords))
def test_busemann_functionals_separate(x, y):
    if np.max(np.abs(x - y)) <= 1e-6:
        return
    assert separates_points(busemann_family(), x, y).separated


def test_zero_lipschitz_rejected():
    with pytest.raises(InvalidInput):
        AffineFamily([LinearFunctional([0.0, 0.0])])
    with pytest.raises(InvalidInput):
        AffineFamily([])


def test_family_json_roundtrip():
    F = busemann_family().union(AffineFamily([LinearFunctional([1.0, 2.0], 0.5)]))
    G = AffineFamily.from_dict(json.loads(F.to_json()))
    P = np.random.default_rng(0).normal(size=(20, 2))
    np.testing.assert_allclose(G.evaluate(P), F.evaluate(P), atol=1e-12)
    with pytest.raises(InvalidInput):
        AffineFamily.from_dict({"functions": [{"type": "nope"}]})


def test_callable_functions_are_not_serialized():
    f = CallableFunction(lambda P: P[:, 0], 1.0, "x")
    assert AffineFamily([f]).seminorm([[1, 0]], [[0, 0]])[0] == 1


# evaluation embedding -----------------------------------------------------------


def test_coordinate_family_gives_linf():
    F = AffineFamily.coordinates(2)
    fs = evaluation_embed(F, [[0, 0], [1, 1], [1, 1]])
    assert fs.dist[0, 1] == 1 < math.sqrt(2)
    assert fs.dist[1, 2] == 0


def test_verify_affine_rejects_nonaffine():
    F = AffineFamily([CallableFunction(lambda P: np.sum(P * P, axis=-1), 1.0)])
    with pytest.raises(InvalidInput):
        evaluation_embed(F, np.zeros((2, 2)), E2, verify_affine=True)


def test_embedding_is_one_lipschitz(rng):
    P = rng.normal(scale=5, size=(60, 3))
    D = np.linalg.norm(P[:, None] - P[None], axis=-1)
    F = AffineFamily.unit_functionals(random_unit_functionals(3, 16, seed=1))
    assert np.all(evaluation_embed(F, P).dist <= D * (1 + 1e-12) + 1e-12)


def test_enlarging_family_is_monotone(rng):
    P = rng.normal(size=(40, 3))
    F = AffineFamily.unit_functionals(random_unit_functionals(3, 8, seed=2))
    G = F.union(AffineFamily.unit_functionals(random_unit_functionals(3, 8, seed=3)))
    assert np.all(evaluation_embed(G, P).dist >= evaluation_embed(F, P).dist)


def test_midpoints_map_to_averages(rng):
    X, Y = rng.normal(size=(50, 3)), rng.normal(size=(50, 3))
    M = E3.midpoint(X, Y)
    F = AffineFamily.unit_functionals(random_unit_functionals(3, 10)).union(AffineFamily([LinearFunctional([1.0, 0, 0], 7.0)]))
    for fam in (F, AnalyticFamily(3)):
        cm = embed_coordinates(fam, M)
        np.testing.assert_allclose(cm, 0.5 * (embed_coordinates(fam, X) + embed_coordinates(fam, Y)), atol=1e-12)


def test_analytic_family_is_equivariant(rng):
    X, Y = rng.normal(scale=3, size=(100, 3)), rng.normal(scale=3, size=(100, 3))
    g = EuclideanIsometry.screw(0.7, 2.5) * EuclideanIsometry.translation([1, -4, 2])
    A = AnalyticFamily(3)
    np.testing.assert_allclose(A.seminorm(g(X), g(Y)), A.seminorm(X, Y), atol=1e-12)


def test_affine_rank():
    P = np.random.default_rng(0).normal(size=(30, 3))
    assert affine_rank(AnalyticFamily(3), P) == 3
    assert affine_rank(AffineFamily([LinearFunctional([1.0, 0, 0])]), P) == 1


# HL isometry --------------------------------------------------------------------


def test_hl_analytic_exact(rng):
    rep = hl_isometry_check(AnalyticFamily(3), rng.normal(size=(60, 3)), E3)
    assert rep.passed and rep.statistics["distortion"] <= 1e-12


def test_hl_spread_functionals(rng):
    U = spread_unit_functionals(3, 64, seed=0)
    F = AffineFamily.unit_functionals(U)
    rep = hl_isometry_check(F, rng.normal(size=(200, 3)), E3, budget=0.02, pairs=1000, seed=1)
    assert rep.passed and rep.statistics["lipschitz_violations"] == 0
    assert rep.statistics["distortion"] <= covering_distortion(U) < 0.02
    # independent uniform directions leave much larger holes
    assert covering_distortion(random_unit_functionals(3, 64, seed=0)) > 0.05


@given(st.integers(4, 20), st.integers(0, 2**32 - 1))
def test_covering_distortion_bounds_probes(k, seed):
    r = np.random.default_rng(seed)
    U = random_unit_functionals(3, k, seed)
    V = r.normal(size=(2000, 3))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    probe = 1 - np.abs(V @ U.T).max(axis=1)
    assert probe.max() <= covering_distortion(U) + 1e-12


def test_covering_distortion_examples():
    # coordinate axes: the worst direction is (1,1,1)/sqrt(3)
    assert covering_distortion(np.eye(3)) == pytest.approx(1 - 1 / math.sqrt(3))
    assert covering_distortion(np.eye(2)) == pytest.approx(1 - 1 / math.sqrt(2))
    assert covering_distortion([[1.0, 0.0, 0.0]]) == 1.0


def test_hl_first_coordinate_is_hnm():
    grid = np.array([[i, j] for i in range(3) for j in range(3)], dtype=float)
    rep = hl_isometry_check(AffineFamily([LinearFunctional([1.0, 0.0])]), grid, E2)
    assert rep.verdict is Verdict.HYPOTHESIS_NOT_MET
    assert rep.witness["x"][0] == rep.witness["y"][0]


def test_hl_linf_family_fails_with_witness():
    rep = hl_isometry_check(AffineFamily.coordinates(2), [[0, 0], [1, 1]], E2)
    assert rep.verdict is Verdict.FAIL
    assert rep.statistics["distortion"] == pytest.approx(1 - 1 / math.sqrt(2))


# inner-product detection -----------------------------------------------------------


def test_inner_product_euclidean(rng):
    E4 = parse_space("euclidean(4)")
    fs, o, mids = midpoint_sample(E4, rng.normal(size=(8, 4)))
    rep = inner_product_detect(fs, o, mids)
    assert rep.passed and rep.statistics["pairs"] == 28


def test_inner_product_l1():
    fs, o, mids = midpoint_sample(parse_space("lp(2,1)"), [[1, 0], [0, 1]])
    rep = inner_product_detect(fs, o, mids)
    assert rep.verdict is Verdict.FAIL and rep.statistics["residual"] == pytest.approx(4)


def test_inner_product_edge_cases():
    assert inner_product_detect(FiniteMetricSpace([[0.0]])).verdict is Verdict.VACUOUS
    with pytest.raises(UnsupportedSpace):
        inner_product_detect(FiniteMetricSpace([[0.0, 1.0], [1.0, 0.0]]))
