"""Busemann functions of rays and lines, estimated by truncation."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInput
from .models import ModelSpace, hyperboloid_distance
from .report import PropertyReport, Verdict, default_tol, stamp

FLAT_T = 1e3
HYPERBOLIC_T = 30.0
SUBLINEAR_THRESHOLD = 0.05
# |v(T) - v(T/2)| matches the remaining truncation error only to leading
# order, so verdicts allow twice the estimate
ERROR_SAFETY = 2.0


def default_truncation(space: ModelSpace) -> float:
    """Flat spaces converge like 1/T, hyperbolic ones like exp(-T)."""
    return FLAT_T if space.flat else HYPERBOLIC_T


@dataclass(frozen=True)
class Ray:
    """Unit-speed geodesic ray ``t -> ray_point(origin, direction, t)``, t >= 0."""

    space: ModelSpace
    origin: np.ndarray
    direction: object

    def __post_init__(self):
        object.__setattr__(self, "origin", self.space.point(self.origin))
        # fail early on a bad direction
        self.space.ray_point(self.origin, self.direction, 0.0)

    def point(self, t):
        return self.space.ray_point(self.origin, self.direction, t)

    def distance_to(self, x, t):
        return self.space.ray_distance(x, self.origin, self.direction, t)

    def reversed(self) -> "Ray":
        return Ray(self.space, self.origin, self.space.opposite_direction(self.origin, self.direction))

    def exact_busemann(self, x):
        """Closed form -<x - origin, u> on Euclidean spaces, else None."""
        if not self.space.inner_product:
            return None
        u = np.asarray(self.direction, dtype=np.float64)
        u = u / np.linalg.norm(u)
        return -(np.asarray(x, dtype=np.float64) - self.origin) @ u

    def describe(self) -> dict:
        d = self.direction
        return {
            "space": self.space.describe(),
            "origin": self.origin,
            "direction": getattr(d, "angle", d),
        }


@dataclass(frozen=True)
class Line:
    """Unit-speed line through ``origin``; ``plus`` follows ``direction``, ``minus`` the opposite end."""

    space: ModelSpace
    origin: np.ndarray
    direction: object

    @property
    def plus(self) -> Ray:
        return Ray(self.space, self.origin, self.direction)

    @property
    def minus(self) -> Ray:
        return self.plus.reversed()

    def point(self, s: float):
        return self.plus.point(s) if s >= 0 else self.minus.point(-s)

    @classmethod
    def from_rays(cls, plus: Ray, minus: Ray, atol: float = 1e-9) -> "Line":
        if plus.space != minus.space or not np.allclose(plus.origin, minus.origin, atol=atol):
            raise InvalidInput("rays of a line must share space and origin")
        opp = plus.reversed().direction
        other = minus.direction
        if hasattr(opp, "same_as"):
            same = opp.same_as(other if hasattr(other, "same_as") else type(opp)(float(other)), atol)
        else:
            o = np.asarray(other, dtype=np.float64)
            same = np.allclose(opp, o / plus.space._norm(o), atol=atol)
        if not same:
            raise InvalidInput("ray directions are not opposite")
        return cls(plus.space, plus.origin, plus.direction)


@dataclass(frozen=True)
class BusemannEstimate:
    """Truncated value |x c(T)| - T with error from the Cauchy difference to T/2."""

    value: float | np.ndarray
    T: float
    error: float | np.ndarray
    exact: float | np.ndarray | None = None


def busemann(ray: Ray, x, T: float | None = None) -> BusemannEstimate:
    T = default_truncation(ray.space) if T is None else float(T)
    if not T > 0:
        raise InvalidInput(f"truncation T must be positive, got {T}")
    x = ray.space.point(x)
    value, half = _truncated(ray, x, T), _truncated(ray, x, T / 2)
    return BusemannEstimate(value, T, np.abs(value - half), ray.exact_busemann(x))


def _truncated(ray: Ray, x: np.ndarray, T: float):
    if ray.space.inner_product:
        # |w - Tu| - T without cancellation
        w = x - ray.origin
        u = ray.space._unit(ray.direction)
        return (np.einsum("...i,...i", w, w) - 2 * T * (w @ u)) / (np.linalg.norm(w - T * u, axis=-1) + T)
    return ray.distance_to(x, T) - T


def convergence_series(ray: Ray, x, Ts: Sequence[float]) -> list[tuple[float, float, float]]:
    """(T, estimate, error) rows for plotting convergence."""
    rows = []
    for T in Ts:
        est = busemann(ray, x, T)
        rows.append((float(T), float(est.value), float(est.error)))
    return rows


def loglog_slope(Ts: Sequence[float], devs: Sequence[float]) -> tuple[float, float]:
    """Least-squares fit dev ~ C T^slope; returns (slope, C)."""
    slope, icept = np.polyfit(np.log(Ts), np.log(devs), 1)
    return float(slope), float(np.exp(icept))


def _ray_gap(r1: Ray, r2: Ray, t: float) -> float:
    space = r1.space
    if space.flat:
        return float(space.distance(r1.point(t), r2.point(t)))
    return float(hyperboloid_distance(space._hyper_ray(r1.origin, r1.direction, t), space._hyper_ray(r2.origin, r2.direction, t)))


def sublinearity(r1: Ray, r2: Ray, T: float) -> list[float]:
    """(1/t)|c1(t) c2(t)| at t = T/4, T/2, T."""
    return [_ray_gap(r1, r2, t) / t for t in (T / 4, T / 2, T)]


def _points(space: ModelSpace, points, samples: int, seed: int, params: dict) -> np.ndarray:
    if points is not None:
        return space.point(np.atleast_2d(points))
    params.update(samples=samples, seed=seed, rng="numpy.PCG64")
    return space.sample(np.random.default_rng(seed), samples)


def busemann_difference_scan(
    ray1: Ray,
    ray2: Ray,
    points=None,
    T: float | None = None,
    samples: int = 100,
    seed: int = 0,
    tol: float | None = None,
    threshold: float = SUBLINEAR_THRESHOLD,
) -> PropertyReport:
    """Is b1 - b2 constant for rays at sublinear distance?"""
    start = time.perf_counter()
    tol = default_tol() if tol is None else tol
    if ray1.space != ray2.space:
        raise InvalidInput("rays live in different spaces")
    T = default_truncation(ray1.space) if T is None else float(T)
    params = {"T": T, "tol": tol, "sublinear_threshold": threshold, "ray1": ray1.describe(), "ray2": ray2.describe()}
    ratios = sublinearity(ray1, ray2, T)
    if ratios[-1] > threshold:
        stats = {"sublinearity": ratios}
        return stamp(PropertyReport("busemann_difference_scan", Verdict.HYPOTHESIS_NOT_MET, stats, params), start)
    P = _points(ray1.space, points, samples, seed, params)
    b1, b2 = busemann(ray1, P, T), busemann(ray2, P, T)
    diff = np.atleast_1d(b1.value - b2.value)
    err = np.atleast_1d(b1.error + b2.error)
    hi, lo = int(np.argmax(diff)), int(np.argmin(diff))
    deviation = float(diff[hi] - diff[lo])
    bound = ERROR_SAFETY * float(err[hi] + err[lo])
    allowed = tol * max(1.0, float(np.max(np.abs(diff)))) + bound
    stats = {"sublinearity": ratios, "max_deviation": deviation, "error_bound": bound, "mean_difference": float(diff.mean())}
    witness = {"p": P[hi], "q": P[lo], "difference_p": diff[hi], "difference_q": diff[lo]}
    verdict = Verdict.PASS if deviation <= allowed else Verdict.FAIL
    return stamp(PropertyReport("busemann_difference_scan", verdict, stats, params, witness), start)


def line_sum(line: Line, P, T: float) -> tuple[np.ndarray, np.ndarray]:
    """B = b+ + b- at the rows of ``P`` and the combined error estimate."""
    bp, bm = busemann(line.plus, P, T), busemann(line.minus, P, T)
    return np.atleast_1d(bp.value + bm.value), np.atleast_1d(bp.error + bm.error)


def busemann_line_sum(
    line,
    points=None,
    T: float | None = None,
    samples: int = 100,
    seed: int = 0,
    tol: float | None = None,
    other: Line | None = None,
    on_line: Sequence[float] = tuple(np.linspace(-5.0, 5.0, 11)),
    threshold: float = SUBLINEAR_THRESHOLD,
) -> PropertyReport:
    """B = b+ + b- is >= 0 everywhere and 0 on the line.

    With ``other`` (a second line at sublinear distance at both ends) also
    checks that both lines produce the same B.
    """
    start = time.perf_counter()
    tol = default_tol() if tol is None else tol
    if isinstance(line, tuple):
        line = Line.from_rays(*line)
    space = line.space
    T = default_truncation(space) if T is None else float(T)
    params = {"T": T, "tol": tol, "line": line.plus.describe()}
    P = _points(space, points, samples, seed, params)
    B, err = line_sum(line, P, T)
    slack = B + tol + ERROR_SAFETY * err
    k = int(np.argmin(slack))
    L = np.array([line.point(s) for s in on_line])
    BL, errL = line_sum(line, L, T)
    kl = int(np.argmax(np.abs(BL) - errL))
    stats = {
        "min_B": float(B.min()),
        "max_B": float(B.max()),
        "max_error": float(err.max()),
        "max_abs_B_on_line": float(np.abs(BL).max()),
        "points": len(P),
        "line_points": len(L),
    }
    ok = bool(slack[k] >= 0) and bool(np.all(np.abs(BL) <= tol + ERROR_SAFETY * errL))
    witness = {"x": P[k], "B": B[k], "line_point": L[kl], "B_on_line": BL[kl]}
    if other is not None:
        ratios = sublinearity(line.plus, other.plus, T) + sublinearity(line.minus, other.minus, T)
        stats["sublinearity"] = ratios
        if max(ratios[2], ratios[5]) > threshold:
            return stamp(PropertyReport("busemann_line_sum", Verdict.HYPOTHESIS_NOT_MET, stats, params, witness), start)
        B2, err2 = line_sum(other, P, T)
        gap = np.abs(B - B2)
        kg = int(np.argmax(gap - err - err2))
        stats["max_line_disagreement"] = float(gap.max())
        witness["disagreement_point"] = P[kg]
        ok = ok and bool(np.all(gap <= tol * np.maximum(1.0, np.abs(B)) + ERROR_SAFETY * (err + err2)))
    return stamp(PropertyReport("busemann_line_sum", Verdict.PASS if ok else Verdict.FAIL, stats, params, witness), start)


def busemann_convergence_report(ray: Ray, x, Ts: Sequence[float], exact: float | None = None) -> PropertyReport:
    """Fit the decay of the truncation error against T on a log-log scale.

    Uses |estimate - exact| when a closed form is known, otherwise the
    Cauchy differences |v(2T) - v(T)|.
    """
    start = time.perf_counter()
    Ts = [float(T) for T in Ts]
    x = ray.space.point(x)
    if exact is None:
        exact = ray.exact_busemann(x)
    values = [float(busemann(ray, x, T).value) for T in Ts]
    if exact is not None:
        devs = [abs(v - float(exact)) for v in values]
    else:
        devs = [abs(float(busemann(ray, x, 2 * T).value) - v) for T, v in zip(Ts, values)]
    params = {"T": Ts, "ray": ray.describe(), "x": x, "exact": exact}
    stats = {"values": values, "deviations": devs}
    if min(devs) <= 0:
        stats["slope"] = None
        return stamp(PropertyReport("busemann_convergence", Verdict.PASS, stats, params), start)
    slope, C = loglog_slope(Ts, devs)
    stats.update(slope=slope, fitted_C=C)
    verdict = Verdict.PASS if slope < 0 else Verdict.FAIL
    return stamp(PropertyReport("busemann_convergence", verdict, stats, params), start)
