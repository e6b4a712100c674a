"""Distance convexity, midpoints, enclosing balls and convex projections."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import InvalidInput, UnsupportedSet, UnsupportedSpace
from .metric import FiniteMetricSpace
from .models import ModelSpace
from .report import DEFAULT_FLOOR, PropertyReport, Verdict, default_tol, stamp

STRICT_FLOOR = 1e-9


@dataclass(frozen=True)
class ConvexityWitness:
    """One midpoint test of d_p: ``lhs = |pm|``, ``rhs = (|px| + |py|) / 2``.

    ``status`` is ``strict``, ``non-strict`` (margin within the strictness
    floor) or ``hypothesis-not-met`` (| |px| - |py| | is not below |xy|).
    """

    p: np.ndarray
    x: np.ndarray
    y: np.ndarray
    m: np.ndarray
    lhs: float
    rhs: float
    margin: float
    status: str

    @property
    def strict(self) -> bool:
        return self.status == "strict"

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("p", "x", "y", "m", "lhs", "rhs", "margin", "status")}


@dataclass(frozen=True)
class GeodesicFiniteSpace:
    """A finite metric space together with declared midpoints ``{(i, j): m}``."""

    space: FiniteMetricSpace
    midpoints: Mapping[tuple[int, int], int] = field(default_factory=dict)


def _margin(space: ModelSpace, p, x, y, m):
    lhs = space.distance(p, m)
    rhs = 0.5 * (space.distance(p, x) + space.distance(p, y))
    return lhs, rhs


def distance_convexity_scan(
    space,
    samples: int = 1000,
    seed: int = 0,
    tol: float | None = None,
    triples: Iterable[Sequence] | None = None,
    floor: float = DEFAULT_FLOOR,
) -> PropertyReport:
    """Check d_p(m) <= (d_p(x) + d_p(y)) / 2 over sampled or given (p, x, y).

    ``space`` is a :class:`ModelSpace` (midpoints from its geodesics) or a
    :class:`GeodesicFiniteSpace` (every point p against every declared midpoint).
    """
    start = time.perf_counter()
    tol = default_tol() if tol is None else tol
    params: dict = {"tol": tol, "floor": floor}
    if isinstance(space, FiniteMetricSpace):
        raise UnsupportedSpace("a bare finite metric space has no geodesics; wrap it in GeodesicFiniteSpace")
    if isinstance(space, GeodesicFiniteSpace):
        D = space.space.dist
        rows = []
        for (i, j), m in sorted(space.midpoints.items()):
            for p in range(space.space.n):
                rows.append((p, i, j, m, D[p, m], 0.5 * (D[p, i] + D[p, j])))
        if not rows:
            return stamp(PropertyReport("distance_convexity_scan", Verdict.VACUOUS, {"triples": 0}, params), start)
        arr = np.array(rows)
        lhs, rhs = arr[:, 4], arr[:, 5]
        margin = rhs - lhs
        rel = margin / np.maximum(rhs, floor)
        k = int(np.argmin(rel))
        p, i, j, m = (int(v) for v in arr[k, :4])
        witness = {"p": p, "x": i, "y": j, "m": m, "lhs": lhs[k], "rhs": rhs[k], "margin": margin[k]}
        n_triples = len(rows)
    elif isinstance(space, ModelSpace):
        params["space"] = space.describe()
        params["geodesics"] = "affine segments" if space.kind == "lp" else "unique"
        if triples is not None:
            T = np.array([[space.point(v) for v in t] for t in triples])
        else:
            rng = np.random.default_rng(seed)
            T = space.sample(rng, 3 * samples).reshape(samples, 3, -1)
            params.update(samples=samples, seed=seed, rng="numpy.PCG64")
        P, X, Y = T[:, 0], T[:, 1], T[:, 2]
        M = space.midpoint(X, Y)
        lhs, rhs = _margin(space, P, X, Y, M)
        margin = rhs - lhs
        rel = margin / np.maximum(rhs, floor)
        k = int(np.argmin(rel))
        witness = {"p": P[k], "x": X[k], "y": Y[k], "m": M[k], "lhs": lhs[k], "rhs": rhs[k], "margin": margin[k]}
        n_triples = len(T)
    else:
        raise UnsupportedSpace(f"no geodesic structure on {type(space).__name__}")
    stats = {"triples": n_triples, "min_margin": float(margin.min()), "min_relative_margin": float(rel[k])}
    verdict = Verdict.PASS if rel[k] >= -tol else Verdict.FAIL
    return stamp(PropertyReport("distance_convexity_scan", verdict, stats, params, witness), start)


def strict_convexity_probe(
    space: ModelSpace, p, x, y, tol: float | None = None, strict_floor: float = STRICT_FLOOR
) -> ConvexityWitness:
    """Midpoint test for strict convexity of d_p when | |px| - |py| | < |xy|."""
    tol = default_tol() if tol is None else tol
    p, x, y = space.point(p), space.point(x), space.point(y)
    xy = space.distance(x, y)
    if xy == 0:
        raise InvalidInput("x and y coincide; the probe needs a nondegenerate segment")
    px, py = space.distance(p, x), space.distance(p, y)
    m = space.midpoint(x, y)
    lhs = space.distance(p, m)
    rhs = 0.5 * (px + py)
    margin = rhs - lhs
    if xy - abs(px - py) <= tol * max(xy, DEFAULT_FLOOR):
        status = "hypothesis-not-met"
    elif margin > strict_floor * max(rhs, DEFAULT_FLOOR):
        status = "strict"
    else:
        status = "non-strict"
    return ConvexityWitness(p, x, y, m, lhs, rhs, margin, status)


def strict_convexity_scan(
    space: ModelSpace, samples: int = 10**4, seed: int = 0, tol: float | None = None, strict_floor: float = STRICT_FLOOR
) -> PropertyReport:
    """Sample (p, x, y), keep those meeting the excess hypothesis, and require positive margins."""
    start = time.perf_counter()
    tol = default_tol() if tol is None else tol
    rng = np.random.default_rng(seed)
    T = space.sample(rng, 3 * samples).reshape(samples, 3, -1)
    P, X, Y = T[:, 0], T[:, 1], T[:, 2]
    xy = space.distance(X, Y)
    px, py = space.distance(P, X), space.distance(P, Y)
    M = space.midpoint(X, Y)
    lhs = space.distance(P, M)
    rhs = 0.5 * (px + py)
    margin = rhs - lhs
    met = (xy - np.abs(px - py)) > tol * np.maximum(xy, DEFAULT_FLOOR)
    strict = margin > strict_floor * np.maximum(rhs, DEFAULT_FLOOR)
    params = {"space": space.describe(), "samples": samples, "seed": seed, "rng": "numpy.PCG64", "tol": tol, "strict_floor": strict_floor}
    if not met.any():
        return stamp(PropertyReport("strict_convexity_scan", Verdict.HYPOTHESIS_NOT_MET, {"hypothesis_met": 0}, params), start)
    idx = np.flatnonzero(met)
    k = idx[int(np.argmin(margin[idx]))]
    stats = {
        "hypothesis_met": int(met.sum()),
        "positive_margin": int((margin[idx] > 0).sum()),
        "strict": int(strict[idx].sum()),
        "min_margin": float(margin[k]),
        "min_relative_margin": float(margin[k] / max(rhs[k], DEFAULT_FLOOR)),
    }
    witness = {"p": P[k], "x": X[k], "y": Y[k], "m": M[k], "margin": margin[k]}
    verdict = Verdict.PASS if stats["positive_margin"] == stats["hypothesis_met"] else Verdict.FAIL
    return stamp(PropertyReport("strict_convexity_scan", verdict, stats, params, witness), start)


# ---------------------------------------------------------------------------
# minimal enclosing ball


class Ball(NamedTuple):
    center: np.ndarray
    radius: float
    support: tuple[int, ...]


def circumball(S: np.ndarray) -> tuple[np.ndarray, float]:
    """Smallest ball with every row of ``S`` on its boundary (center in their affine hull)."""
    if len(S) == 0:
        return np.zeros(0), -1.0
    if len(S) == 1:
        return S[0].copy(), 0.0
    A = S[1:] - S[0]
    rhs = 0.5 * np.sum(A * A, axis=1)
    lam = np.linalg.lstsq(A @ A.T, rhs, rcond=None)[0]
    c = S[0] + lam @ A
    return c, float(np.sqrt(np.max(np.sum((S - c) ** 2, axis=1))))


def min_enclosing_ball(points, eps: float = 1e-12) -> Ball:
    """Smallest enclosing ball by Welzl's move-to-front recursion (depth <= d + 1)."""
    P = np.asarray(points, dtype=np.float64)
    if P.ndim != 2 or len(P) == 0:
        raise InvalidInput("need a nonempty (n, d) point array")
    d = P.shape[1]
    order = list(range(len(P)))

    def inside(ball, i):
        c, r = ball
        if r < 0:
            return False
        return float(np.sum((P[i] - c) ** 2)) <= r * r * (1 + eps) + eps

    def mtf(end: int, support: list[int]):
        ball = circumball(P[support]) if support else (np.zeros(d), -1.0)
        best = support
        if len(support) == d + 1:
            return ball, best
        k = 0
        while k < end:
            i = order[k]
            if not inside(ball, i):
                ball, best = mtf(k, support + [i])
                order.pop(k)
                order.insert(0, i)
            k += 1
        return ball, best

    (c, r), support = mtf(len(P), [])
    return Ball(c, r, tuple(sorted(support)))


# ---------------------------------------------------------------------------
# convex sets and projections


@dataclass(frozen=True)
class AffineSubspace:
    point: np.ndarray
    directions: np.ndarray  # (k, d) spanning set


@dataclass(frozen=True)
class HalfSpace:
    """{x : <normal, x> <= offset}."""

    normal: np.ndarray
    offset: float


@dataclass(frozen=True)
class BallSet:
    center: np.ndarray
    radius: float


@dataclass(frozen=True)
class ConvexHull:
    vertices: np.ndarray


def min_norm_point(P: np.ndarray, eps: float = 1e-12, max_iter: int = 1000) -> np.ndarray:
    """Point of smallest norm in the convex hull of the rows of ``P`` (Wolfe's algorithm)."""
    scale = max(float(np.max(np.sum(P * P, axis=1))), 1e-300)
    S = [int(np.argmin(np.sum(P * P, axis=1)))]
    w = np.array([1.0])
    for _ in range(max_iter):
        x = w @ P[S]
        j = int(np.argmin(P @ x))
        if x @ x - P[j] @ x <= eps * scale or j in S:
            return x
        S.append(j)
        w = np.append(w, 0.0)
        while True:
            Q = P[S]
            k = len(S)
            K = np.zeros((k + 1, k + 1))
            K[:k, :k] = Q @ Q.T
            K[:k, k] = K[k, :k] = 1.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            alpha = np.linalg.lstsq(K, rhs, rcond=None)[0][:k]
            if np.all(alpha > eps):
                w = alpha
                break
            neg = alpha <= eps
            theta = min(1.0, float(np.min(w[neg] / (w[neg] - alpha[neg]))))
            w = w + theta * (alpha - w)
            keep = w > eps
            S = [s for s, kp in zip(S, keep) if kp]
            w = w[keep] / w[keep].sum()
    return w @ P[S]


def project_convex(x, A, tol: float | None = None) -> np.ndarray:
    """Nearest point of the convex set ``A`` to ``x``; returns ``x`` itself when already in ``A``."""
    tol = default_tol() if tol is None else tol
    x = np.asarray(x, dtype=np.float64)
    if isinstance(A, AffineSubspace):
        p = np.asarray(A.point, dtype=np.float64)
        B = np.atleast_2d(np.asarray(A.directions, dtype=np.float64))
        coef = np.linalg.lstsq(B.T, x - p, rcond=None)[0]
        proj = p + coef @ B
        scale = max(float(np.linalg.norm(x - p)), 1.0)
    elif isinstance(A, HalfSpace):
        a = np.asarray(A.normal, dtype=np.float64)
        excess = float(a @ x - A.offset)
        if excess <= tol * max(abs(A.offset), float(np.linalg.norm(a) * np.linalg.norm(x)), DEFAULT_FLOOR):
            return x.copy()
        return x - excess / float(a @ a) * a
    elif isinstance(A, BallSet):
        c = np.asarray(A.center, dtype=np.float64)
        r = float(np.linalg.norm(x - c))
        if r <= A.radius * (1 + tol):
            return x.copy()
        return c + (A.radius / r) * (x - c)
    elif isinstance(A, ConvexHull):
        V = np.atleast_2d(np.asarray(A.vertices, dtype=np.float64))
        proj = x + min_norm_point(V - x)
        scale = max(float(np.max(np.linalg.norm(V - x, axis=1))), 1.0)
    else:
        raise UnsupportedSet(f"cannot project onto {type(A).__name__}")
    if np.linalg.norm(proj - x) <= tol * scale:
        return x.copy()
    return proj


def projection_lipschitz_probe(
    A, samples: int = 1000, seed: int = 0, scale: float = 3.0, pairs=None, tol: float | None = None
) -> PropertyReport:
    """Largest observed |pi(x) pi(y)| / |xy| over random pairs (an experiment, not a theorem check)."""
    start = time.perf_counter()
    tol = default_tol() if tol is None else tol
    dim = _dim_of(A)
    if pairs is None:
        rng = np.random.default_rng(seed)
        pairs = scale * rng.uniform(-1, 1, size=(samples, 2, dim))
    pairs = np.asarray(pairs, dtype=np.float64)
    ratios, where, skipped = [], [], 0
    for i, (x, y) in enumerate(pairs):
        dxy = float(np.linalg.norm(x - y))
        if dxy == 0:
            skipped += 1
            continue
        ratios.append(float(np.linalg.norm(project_convex(x, A, tol) - project_convex(y, A, tol))) / dxy)
        where.append(i)
    params = {"set": type(A).__name__, "samples": len(pairs), "seed": seed, "rng": "numpy.PCG64", "tol": tol}
    if not ratios:
        return stamp(PropertyReport("projection_lipschitz_probe", Verdict.VACUOUS, {"skipped": skipped}, params), start)
    k = int(np.argmax(ratios))
    stats = {"max_ratio": ratios[k], "min_ratio": min(ratios), "pairs": len(ratios), "skipped": skipped}
    witness = {"x": pairs[where[k]][0], "y": pairs[where[k]][1], "ratio": ratios[k]}
    verdict = Verdict.PASS if ratios[k] <= 1 + tol else Verdict.FAIL
    return stamp(PropertyReport("projection_lipschitz_probe", verdict, stats, params, witness), start)


def _dim_of(A) -> int:
    for attr in ("point", "normal", "center"):
        if hasattr(A, attr):
            return len(np.asarray(getattr(A, attr)))
    if isinstance(A, ConvexHull):
        return np.atleast_2d(A.vertices).shape[1]
    raise UnsupportedSet(f"cannot project onto {type(A).__name__}")


# ---------------------------------------------------------------------------
# scalar inequality behind strict convexity


class LemmaAux(NamedTuple):
    lhs: float
    rhs: float
    holds: bool | None
    hypothesis_met: bool


def lemma_aux_check(alpha: float, beta: float, a: float, b: float, tol: float = 1e-12) -> LemmaAux:
    """alpha b + beta a >= (alpha + beta) min(a, b) - |a - b| min(|alpha|, |beta|).

    Valid when alpha + beta, a, b >= 0; otherwise ``hypothesis_met`` is False
    and ``holds`` is None.
    """
    lhs = alpha * b + beta * a
    rhs = (alpha + beta) * min(a, b) - abs(a - b) * min(abs(alpha), abs(beta))
    if alpha + beta < 0 or a < 0 or b < 0:
        return LemmaAux(lhs, rhs, None, False)
    return LemmaAux(lhs, rhs, lhs >= rhs - tol, True)


def lemma_aux_scan(n: int = 10**6, seed: int = 0, atol: float = 1e-12, bound: float = 10.0) -> PropertyReport:
    """Fuzz the scalar inequality on ``n`` seeded tuples satisfying its hypothesis.

    Ten percent of tuples sit on the edges alpha + beta = 0 or a = b.
    """
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(-bound, bound, n)
    s = rng.uniform(0, bound, n)
    s[rng.uniform(size=n) < 0.05] = 0.0
    beta = s - alpha
    a = rng.uniform(0, bound, n)
    b = rng.uniform(0, bound, n)
    tie = rng.uniform(size=n) < 0.05
    b[tie] = a[tie]
    ok = (alpha + beta >= 0) & (a >= 0) & (b >= 0)
    alpha, beta, a, b = alpha[ok], beta[ok], a[ok], b[ok]
    lhs = alpha * b + beta * a
    rhs = (alpha + beta) * np.minimum(a, b) - np.abs(a - b) * np.minimum(np.abs(alpha), np.abs(beta))
    gap = lhs - rhs
    k = int(np.argmin(gap))
    violations = int(np.sum(gap < -atol))
    params = {"samples": n, "seed": seed, "rng": "numpy.PCG64", "atol": atol, "bound": bound}
    stats = {"tested": int(ok.sum()), "violations": violations, "min_gap": float(gap[k])}
    witness = {"alpha": alpha[k], "beta": beta[k], "a": a[k], "b": b[k], "lhs": lhs[k], "rhs": rhs[k]}
    verdict = Verdict.PASS if violations == 0 else Verdict.FAIL
    return stamp(PropertyReport("lemma_aux_scan", verdict, stats, params, witness), start)
