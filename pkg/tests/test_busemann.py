import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ptolemykit import BoundaryPoint, InvalidInput, Line, ModelSpace, Ray, Verdict, busemann
from ptolemykit.busemann import (
    busemann_convergence_report,
    busemann_difference_scan,
    busemann_line_sum,
    convergence_series,
    line_sum,
)

E2, E3 = ModelSpace.euclidean(2), ModelSpace.euclidean(3)
DISK = ModelSpace.hyperbolic_disk()
vec2 = st.tuples(st.floats(-5, 5), st.floats(-5, 5)).map(np.array)


def truncated_oracle(x, T):
    # |x - T e1| - T for the ray along e1 from the origin, by the plain formula
    return math.hypot(x[0] - T, x[1]) - T


def test_euclidean_example():
    ray = Ray(E2, [0, 0], [1, 0])
    est = busemann(ray, [3, 4], 100)
    assert est.value == pytest.approx(truncated_oracle([3, 4], 100), abs=1e-12)
    assert est.exact == -3
    assert abs(est.value - est.exact) < 0.09
    assert abs(busemann(ray, [3, 4], 1000).value + 3) < 0.009


def test_points_on_ray():
    ray = Ray(E2, [1, 1], [0, 2])
    for s in (0.0, 2.5, 40.0):
        assert busemann(ray, ray.point(s), 100).value == pytest.approx(-s, abs=1e-12)


def test_disk_center_is_zero():
    ray = Ray(DISK, [0, 0], BoundaryPoint(0.7))
    for T in (5, 20, 40):
        assert busemann(ray, [0, 0], T).value == pytest.approx(0, abs=1e-12)


def test_invalid_ray_and_truncation():
    with pytest.raises(InvalidInput):
        Ray(E2, [0, 0], [0, 0])
    with pytest.raises(InvalidInput):
        busemann(Ray(E2, [0, 0], [1, 0]), [1, 1], T=0)


def test_error_bound_covers_doubling():
    ray = Ray(E2, [0, 0], [1, 0])
    rows = convergence_series(ray, [3, 4], [50, 100, 200, 400])
    for (T, v, err), (_, v2, _) in zip(rows, rows[1:]):
        assert abs(v2 - v) <= err


def test_convergence_rate_is_one_over_T():
    rep = busemann_convergence_report(Ray(E2, [0, 0], [1, 0]), [3, 4], [100, 1000, 10000])
    assert -2 <= rep.statistics["slope"] <= -0.5


def test_hyperbolic_convergence_is_fast():
    rep = busemann_convergence_report(Ray(DISK, [0, 0], BoundaryPoint(0.0)), [0.2, 0.3], [2, 4, 6, 8])
    assert rep.statistics["slope"] < -2


@given(vec2, vec2)
def test_busemann_is_one_lipschitz(x, y):
    ray = Ray(E2, [0, 0], [0.6, 0.8])
    bx, by = busemann(ray, x, 1e3), busemann(ray, y, 1e3)
    assert abs(bx.value - by.value) <= np.linalg.norm(x - y) + 2 * (bx.error + by.error) + 1e-12


@given(st.tuples(st.floats(0, 0.9), st.floats(0, 6.3)), st.tuples(st.floats(0, 0.9), st.floats(0, 6.3)))
def test_busemann_convex_along_disk_geodesics(a, b):
    x = a[0] * np.array([math.cos(a[1]), math.sin(a[1])])
    y = b[0] * np.array([math.cos(b[1]), math.sin(b[1])])
    ray = Ray(DISK, [0.1, -0.2], BoundaryPoint(1.0))
    m = DISK.midpoint(x, y)
    bm, bx, by = (busemann(ray, p).value for p in (m, x, y))
    assert bm <= 0.5 * (bx + by) + 1e-9


def test_difference_scan_parallel_rays():
    r1, r2 = Ray(E2, [0, 0], [1, 0]), Ray(E2, [0, 5], [1, 0])
    assert busemann_difference_scan(r1, r2, seed=1).verdict is Verdict.PASS
    # the deviation is pure truncation error and vanishes as T grows
    assert busemann_difference_scan(r1, r2, seed=1, T=1e8).statistics["max_deviation"] <= 1e-6


def test_difference_scan_identical_rays():
    r = Ray(E2, [0, 0], [1, 0])
    assert busemann_difference_scan(r, r).statistics["max_deviation"] == 0


def test_difference_scan_diverging_rays():
    rep = busemann_difference_scan(Ray(E2, [0, 0], [1, 0]), Ray(E2, [0, 0], [0, 1]))
    assert rep.verdict is Verdict.HYPOTHESIS_NOT_MET


def test_difference_scan_asymptotic_disk_rays():
    rep = busemann_difference_scan(Ray(DISK, [0, 0], BoundaryPoint(0.0)), Ray(DISK, [0.3, 0.4], BoundaryPoint(0.0)))
    assert rep.verdict is Verdict.PASS


def test_line_sum_euclidean_is_identically_zero(rng):
    line = Line(E3, [1, 2, 3], [1, -1, 0.5])
    B, err = line_sum(line, rng.normal(size=(50, 3)) * 10, 1e3)
    assert np.all(np.abs(B) <= 2 * err + 1e-9)
    assert busemann_line_sum(line).passed


@pytest.mark.parametrize("r", [0.3, 1.0, 2.5])
def test_line_sum_disk_oracle(r):
    line = Line(DISK, [0, 0], BoundaryPoint(0.0))
    x = math.tanh(r / 2) * np.array([0.0, 1.0])
    B, err = line_sum(line, x[None], 30)
    assert B[0] == pytest.approx(2 * math.log(math.cosh(r)), abs=1e-9 + err[0])
    assert busemann_line_sum(line, seed=2).passed


def test_line_sum_two_parallel_lines():
    rep = busemann_line_sum(Line(E2, [0, 0], [1, 0]), other=Line(E2, [0, 1], [1, 0]))
    assert rep.passed


def test_line_from_rays_checks_opposite():
    with pytest.raises(InvalidInput):
        busemann_line_sum((Ray(E2, [0, 0], [1, 0]), Ray(E2, [0, 0], [0, 1])))
    assert busemann_line_sum((Ray(E2, [0, 0], [1, 0]), Ray(E2, [0, 0], [-1, 0]))).passed
