import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ptolemykit import EuclideanIsometry as Iso
from ptolemykit import GroupPresentation, InvalidInput, Verdict
from ptolemykit.errors import UnsupportedGroup
from ptolemykit.groups import (
    axis_translation_residual,
    busemann_invariance_check,
    displacement,
    is_torsion,
    lattice_covering_constant,
    min_displacement,
    preset,
    random_isometry,
    rough_isometry_verify,
    straightness_report,
    word_ball,
    word_norm,
    word_norm_bidirectional,
)

GLIDE = Iso.translation([1, 0]) * Iso.reflection([0, 1])
SCREW = Iso.screw(math.pi / 2, 1)


# isometries ------------------------------------------------------------------


def test_constructors_are_exact():
    assert Iso.translation([2, 0]).is_exact
    assert Iso.rotation(math.pi / 2, [1, 1]).is_exact
    assert GLIDE.is_exact and SCREW.is_exact
    assert not Iso.rotation(1.0).is_exact


def test_rejects_non_orthogonal():
    with pytest.raises(InvalidInput):
        Iso([[1, 1], [0, 1]], [0, 0])
    with pytest.raises(InvalidInput):
        Iso(np.array([[1.0, 1e-6], [0, 1]]), [0.0, 0.0])


def test_dict_roundtrip_uses_integer_pairs():
    g = Iso.reflection([1, 2], Fraction(1, 3))
    data = json.loads(json.dumps(g.to_dict()))
    assert data["t"][0] == [2, 15]
    assert Iso.from_dict(data).key() == g.key()


exact_elements = st.lists(st.sampled_from(preset("p4m").generators), min_size=1, max_size=6).map(
    lambda ws: math.prod(ws[1:], start=ws[0])
)


@given(exact_elements, exact_elements, exact_elements)
def test_group_axioms_exact(a, b, c):
    assert ((a * b) * c).key() == (a * (b * c)).key()
    assert (a * a.inverse()).key() == Iso.identity(2).key()
    assert (a.inverse() * a).key() == Iso.identity(2).key()


def test_float_keys_are_refused():
    with pytest.raises(UnsupportedGroup):
        Iso.rotation(1.0).key()


# displacement and axes -----------------------------------------------------------


def test_displacement_examples():
    assert displacement(Iso.translation([2, 0]), [5, -7]) == 2
    assert displacement(Iso.rotation(math.pi / 2), [1, 0]) == pytest.approx(math.sqrt(2))
    assert displacement(GLIDE, [0, 3]) == pytest.approx(math.sqrt(37))


def test_min_displacement_examples():
    t = min_displacement(Iso.translation([2, 0]))
    assert t.L == 2 and t.kind == "affine-subspace" and len(t.span) == 2
    r = min_displacement(Iso.rotation(math.pi / 2, [1, 1]))
    assert r.L == 0 and r.kind == "empty"
    np.testing.assert_allclose(r.witness, [1, 1], atol=1e-12)
    g = min_displacement(GLIDE)
    assert g.L == pytest.approx(1, abs=1e-12) and g.kind == "line"
    assert g.contains([7, 0]) and not g.contains([0, 1])
    s = min_displacement(SCREW)
    assert s.L == pytest.approx(1) and s.contains([0, 0, 5])


def test_torsion():
    assert is_torsion(Iso.rotation(2 * math.pi / 3)) == 3
    assert is_torsion(Iso.rotation(math.pi / 2, [1, 1])) == 4
    assert is_torsion(Iso.translation([1, 0])) is None
    assert is_torsion(GLIDE) is None
    assert (GLIDE**2).key() == Iso.translation([2, 0]).key()
    with pytest.raises(InvalidInput):
        is_torsion(GLIDE, 0)


def test_torsion_agrees_with_fixed_points():
    for g in preset("p4m").generators + [GLIDE, Iso.rotation(math.pi, [3, 1])]:
        assert (is_torsion(g) is not None) == (min_displacement(g).L == 0)


@pytest.mark.parametrize("seed", range(5))
def test_min_displacement_is_minimal(seed):
    rng = np.random.default_rng(seed)
    for d in (2, 3, 4):
        g = random_isometry(rng, d)
        ax = min_displacement(g)
        X = 5 * rng.uniform(-1, 1, size=(1000, d))
        assert displacement(g, X).min() >= ax.L - 1e-9
        assert displacement(g, ax.witness) == pytest.approx(ax.L, abs=1e-9)


@pytest.mark.parametrize("g", [GLIDE, SCREW, Iso.translation([1, 2]), Iso.reflection([1, 1], 2) * Iso.translation([3, -3])])
def test_axis_translation_property(g):
    ax = min_displacement(g)
    assert axis_translation_residual(g, ax, np.linspace(-50, 50, 41)) <= 1e-9


def test_commuting_isometry_preserves_axes():
    g, alpha = Iso.translation([2, 0]), Iso.translation([0, 3])
    ax = min_displacement(g)
    pts = alpha.apply(ax.axis_point(np.linspace(-5, 5, 11)))
    np.testing.assert_allclose(displacement(g, pts), ax.L, atol=1e-12)


def test_axes_of_one_isometry_stay_close():
    g = Iso.translation([2, 1])
    ax = min_displacement(g)
    t = np.linspace(-100, 100, 201)
    other = ax.witness + np.array([3.0, -1.0]) + np.multiply.outer(t, ax.direction)
    gaps = np.linalg.norm(ax.axis_point(t) - other, axis=1)
    assert gaps.max() - gaps.min() <= 1e-9


# word metrics -------------------------------------------------------------------


def test_word_norm_examples():
    Z2 = preset("Z2")
    assert word_norm(Z2, Iso.translation([3, -2]), 10) == 5
    assert word_norm(Z2, Iso.identity(2), 0) == 0
    assert word_norm(Z2, Iso.translation([9, 9]), 5) is None
    p4 = preset("p4")
    assert word_norm(p4, Iso.translation([2, 0]), 12) == word_norm_bidirectional(p4, Iso.translation([2, 0]), 12)


def test_word_norm_refuses_float_generators():
    G = GroupPresentation([Iso.rotation(1.0)])
    with pytest.raises(UnsupportedGroup):
        word_norm(G, Iso.rotation(2.0), 3)


@pytest.mark.parametrize("name", ["p2", "p4", "p4m"])
def test_search_implementations_agree(name):
    G = preset(name)
    for _, (n, g) in word_ball(G, 5).items():
        assert word_norm(G, g, 6) == n
        assert word_norm_bidirectional(G, g, 6) == n


def test_word_norm_is_a_norm():
    G = preset("p4")
    ball = word_ball(G, 6)
    small = [(n, g) for n, g in ball.values() if n <= 3]
    for n, g in small:
        assert (n == 0) == (g.key() == Iso.identity(2).key())
        assert ball[g.inverse().key()][0] == n
        for m, h in small:
            assert ball[(g * h).key()][0] <= n + m


def test_presentation_json(tmp_path):
    G = preset("p4m")
    p = tmp_path / "g.json"
    p.write_text(json.dumps(G.to_dict()))
    H = GroupPresentation.load(p)
    assert [g.key() for g in H.generators] == [g.key() for g in G.generators]
    p.write_text('{"generators": [')
    with pytest.raises(InvalidInput, match="1:"):
        GroupPresentation.load(p)


def test_unknown_preset():
    with pytest.raises(InvalidInput):
        preset("p6")


def test_straightness_examples():
    rep = straightness_report(preset("Z2"), m_max=4)
    assert rep.passed and rep.statistics["min_ratio"] == rep.statistics["c"] == 1
    rep = straightness_report(preset("p4"), m_max=4, radius=12)
    assert rep.passed and 1 <= rep.statistics["c"] < math.inf
    assert straightness_report(preset("p4"), [Iso.identity(2)]).verdict is Verdict.VACUOUS


# Busemann functions along axes ----------------------------------------------------


def test_busemann_invariance_translation():
    rep = busemann_invariance_check(Iso.translation([2, 0]), Iso.translation([0, 3]))
    assert rep.passed
    assert abs(rep.statistics["alpha_shift_mean"]) <= 1e-6
    assert rep.statistics["max_shift_error"] <= 1e-6


def test_busemann_invariance_identity_alpha():
    rep = busemann_invariance_check(GLIDE)
    assert rep.passed and rep.statistics["alpha_shift_deviation"] == 0


def test_busemann_invariance_screw():
    rep = busemann_invariance_check(SCREW, SCREW**2)
    assert rep.passed and rep.statistics["L"] == pytest.approx(1)


def test_busemann_invariance_hypotheses():
    with pytest.raises(InvalidInput):
        busemann_invariance_check(Iso.rotation(math.pi / 2))
    rep = busemann_invariance_check(Iso.translation([2, 0]), Iso.rotation(math.pi / 2))
    assert rep.verdict is Verdict.HYPOTHESIS_NOT_MET


# rough isometries --------------------------------------------------------------------


def test_rough_identity(rng):
    X = rng.uniform(-10, 10, size=(200, 2))
    T = Iso.translation([1, 0])
    rep = rough_isometry_verify(lambda P: P, X, [(T, T)], codomain_sample=X)
    assert rep.passed and rep.statistics["A"] == 0 and rep.statistics["equivariance_defect"] == 0


def test_rough_periodic_perturbation(rng):
    X = rng.uniform(-20, 20, size=(300, 2))

    def phi(P):
        return P + 0.3 * np.c_[np.sin(2 * np.pi * P[:, 0]), np.zeros(len(P))]

    rep = rough_isometry_verify(phi, X, [(Iso.translation([1, 0]), Iso.translation([1, 0]))], budget=0.6)
    assert rep.passed and rep.statistics["A"] <= 0.6
    assert rep.statistics["equivariance_defect"] <= 1e-9


def test_rough_collapse_is_flagged(rng):
    X = rng.uniform(-50, 50, size=(300, 2))
    rep = rough_isometry_verify(lambda P: np.c_[P[:, 0], 0 * P[:, 1]], X)
    assert rep.verdict is Verdict.FAIL and rep.statistics["distortion_grows"]
    assert rep.witness["image_distance"] < rep.witness["distance"]


def test_rough_rejects_empty():
    with pytest.raises(InvalidInput):
        rough_isometry_verify(lambda P: P, np.zeros((0, 2)))


def test_lattice_covering_constant():
    out = lattice_covering_constant(preset("Z2").abelian, samples=500)
    assert out["C"] <= math.sqrt(2) / 2 + 1e-12
