"""Affine functions, point separation and the evaluation embedding.

A finite family ``F`` of affine Lipschitz functions induces the seminorm
``||E(x, y)||_F = max_f |f(x) - f(y)| / Lip(f)``. It never exceeds
``|xy|``, and on a Euclidean space the family of *all* unit functionals
recovers the distance exactly. ``AnalyticFamily`` stands in for that
infinite family with the closed form ``|x - y|``.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull, QhullError

from .busemann import Ray, busemann
from .errors import InvalidInput, UnsupportedSpace
from .metric import FiniteMetricSpace
from .models import ModelSpace
from .report import DEFAULT_FLOOR, PropertyReport, Verdict, default_tol, stamp


@dataclass(frozen=True)
class LinearFunctional:
    """``x -> <u, x> + c`` with Lipschitz constant ``|u|`` unless declared."""

    u: np.ndarray
    c: float = 0.0
    lipschitz: float | None = None

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        object.__setattr__(self, "u", u)
        if self.lipschitz is None:
            object.__setattr__(self, "lipschitz", float(np.linalg.norm(u)))

    def __call__(self, x):
        return np.asarray(x, dtype=np.float64) @ self.u + self.c

    def to_dict(self) -> dict:
        return {"type": "linear", "u": self.u.tolist(), "c": self.c, "lipschitz": self.lipschitz}


@dataclass(frozen=True)
class BusemannFunctional:
    """Busemann function of a ray (1-Lipschitz); exact on Euclidean spaces."""

    ray: Ray
    T: float | None = None
    lipschitz: float = 1.0

    def __call__(self, x):
        exact = self.ray.exact_busemann(self.ray.space.point(x))
        if exact is not None:
            return exact
        return busemann(self.ray, x, self.T).value

    def to_dict(self) -> dict:
        d = self.ray.describe()
        d["direction"] = np.asarray(d["direction"]).tolist()
        return {"type": "busemann", "space": d["space"], "origin": self.ray.origin.tolist(), "direction": d["direction"], "T": self.T}


@dataclass(frozen=True)
class CallableFunction:
    """Arbitrary vectorized scalar function with a declared Lipschitz constant."""

    fn: Callable
    lipschitz: float
    name: str = "f"

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=np.float64))

    def to_dict(self) -> dict:
        return {"type": "callable", "name": self.name, "lipschitz": self.lipschitz}


def function_from_dict(data: dict):
    kind = data.get("type")
    if kind == "linear":
        return LinearFunctional(data["u"], data.get("c", 0.0), data.get("lipschitz"))
    if kind == "busemann":
        space = ModelSpace.parse(data["space"])
        return BusemannFunctional(Ray(space, data["origin"], data["direction"]), data.get("T"))
    raise InvalidInput(f"unknown function type {kind!r}; expected 'linear' or 'busemann'")


@dataclass
class AffineFamily:
    """Finite family of affine Lipschitz functions with a basepoint."""

    functions: list
    basepoint: np.ndarray | None = None

    def __post_init__(self):
        if not self.functions:
            raise InvalidInput("a family needs at least one function")
        lip = np.array([float(f.lipschitz) for f in self.functions])
        if np.any(~(lip > 0)):
            k = int(np.argmin(lip))
            raise InvalidInput(f"function {k} has Lipschitz constant {lip[k]}; it must be positive")
        self.lipschitz = lip

    def __len__(self) -> int:
        return len(self.functions)

    def evaluate(self, P) -> np.ndarray:
        """(n, k) matrix of values f_j(p_i)."""
        P = np.atleast_2d(np.asarray(P, dtype=np.float64))
        return np.stack([np.broadcast_to(f(P), (len(P),)) for f in self.functions], axis=1)

    def seminorm(self, x, y) -> np.ndarray:
        """||E(x, y)||_F, vectorized over rows."""
        diff = self.evaluate(x) - self.evaluate(y)
        return np.max(np.abs(diff) / self.lipschitz, axis=1)

    def union(self, other: "AffineFamily") -> "AffineFamily":
        return AffineFamily(self.functions + other.functions, self.basepoint)

    def to_dict(self) -> dict:
        bp = None if self.basepoint is None else np.asarray(self.basepoint).tolist()
        return {"basepoint": bp, "functions": [f.to_dict() for f in self.functions]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "AffineFamily":
        try:
            fns = [function_from_dict(f) for f in data["functions"]]
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"malformed family JSON: {exc}") from None
        return cls(fns, data.get("basepoint"))

    @classmethod
    def coordinates(cls, d: int, signed: bool = True) -> "AffineFamily":
        """Coordinate functionals, optionally with their negatives."""
        eye = np.eye(d)
        rows = [eye[i] for i in range(d)] + ([-eye[i] for i in range(d)] if signed else [])
        return cls([LinearFunctional(u) for u in rows])

    @classmethod
    def unit_functionals(cls, U: np.ndarray) -> "AffineFamily":
        return cls([LinearFunctional(u / np.linalg.norm(u)) for u in np.atleast_2d(U)])


@dataclass
class AnalyticFamily:
    """All unit linear functionals on R^d, evaluated in closed form.

    The supremum of ``<u, x - y>`` over unit ``u`` is ``|x - y|`` and the
    embedded coordinates are ``x - o`` themselves.
    """

    d: int
    basepoint: np.ndarray | None = None
    functions: list = field(default_factory=list)

    def evaluate(self, P) -> np.ndarray:
        return np.atleast_2d(np.asarray(P, dtype=np.float64))

    def seminorm(self, x, y) -> np.ndarray:
        x, y = np.atleast_2d(x), np.atleast_2d(y)
        return np.linalg.norm(np.asarray(x, dtype=np.float64) - y, axis=1)

    def __len__(self) -> int:
        return self.d


def _repel(U: np.ndarray, iters: int) -> np.ndarray:
    """Spread unit vectors by inverse-square repulsion from the others and all antipodes."""
    k = len(U)
    own = np.arange(k)
    for _ in range(iters):
        diff = U[:, None, :] - np.vstack([U, -U])[None, :, :]
        dist2 = np.einsum("ijk,ijk->ij", diff, diff)
        dist2[own, own] = np.inf
        force = np.sum(diff / dist2[..., None] ** 1.5, axis=1)
        force -= np.sum(force * U, axis=1, keepdims=True) * U
        U = U + 0.05 * force / np.linalg.norm(force, axis=1).max()
        U /= np.linalg.norm(U, axis=1, keepdims=True)
    return U


def _facets(U: np.ndarray) -> np.ndarray:
    """Simplices of the convex hull of +-U, indexing rows of vstack([U, -U])."""
    return ConvexHull(np.vstack([U, -U])).simplices


def _cap_radii(X: np.ndarray, S: np.ndarray, grad: bool = False):
    """``1 - cos`` of each facet's circumscribed cap, optionally with the gradient in X.

    For a facet with vertex columns P the plane through them is
    ``{p : w.p = 1}`` with ``w = P^-T 1``; the cap centre is ``w/|w|`` and its
    radius satisfies ``cos = 1/|w|``.
    """
    k, d = X.shape
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    U = X / norms
    Pall = np.vstack([U, -U])
    P = Pall[S].transpose(0, 2, 1)  # (m, d, d), columns are vertices
    w = np.linalg.solve(P.transpose(0, 2, 1), np.ones((len(S), d, 1)))[..., 0]
    wn = np.linalg.norm(w, axis=1)
    r = 1 - 1 / wn
    if not grad:
        return r
    z = np.linalg.solve(P, (w / wn[:, None])[..., None])[..., 0]
    # dr/dp_j = -z_j w / |w|^2
    dP = -z[:, :, None] * (w / wn[:, None] ** 2)[:, None, :]
    idx, sign = S % k, np.where(S < k, 1.0, -1.0)
    dU = sign[..., None] * dP
    # through u = x / |x|
    Uv, nv = U[idx], norms[idx]
    dX = (dU - np.sum(dU * Uv, axis=-1, keepdims=True) * Uv) / nv
    J = np.zeros((len(S), k, d))
    rows = np.repeat(np.arange(len(S)), d)
    np.add.at(J, (rows, idx.ravel()), dX.reshape(-1, d))
    return r, J.reshape(len(S), k * d)


def covering_distortion(U: np.ndarray) -> float:
    """Exact worst case of ``1 - max_u |<u, v>|`` over unit ``v`` for unit rows ``U``.

    The worst direction is a vertex of the spherical Voronoi diagram of
    ``+-U``, i.e. the centre of a facet cap of their convex hull.
    """
    U = np.atleast_2d(np.asarray(U, dtype=np.float64))
    U = U / np.linalg.norm(U, axis=1, keepdims=True)
    if 2 * len(U) <= U.shape[1]:
        return 1.0
    try:
        return float(_cap_radii(U, _facets(U)).max())
    except QhullError:
        return 1.0


def _minimax(U: np.ndarray, rounds: int, maxiter: int) -> np.ndarray:
    """Minimise the largest cap radius; the hull combinatorics are refreshed each round."""
    k, d = U.shape
    for _ in range(rounds):
        S = _facets(U)
        z0 = np.r_[U.ravel(), _cap_radii(U, S).max()]
        grad_obj = np.r_[np.zeros(k * d), 1.0]

        def fun(z):
            return z[-1] - _cap_radii(z[:-1].reshape(k, d), S)

        def jac(z):
            _, J = _cap_radii(z[:-1].reshape(k, d), S, grad=True)
            return np.c_[-J, np.ones(len(S))]

        res = minimize(
            lambda z: z[-1],
            z0,
            jac=lambda z: grad_obj,
            constraints=[{"type": "ineq", "fun": fun, "jac": jac}],
            method="SLSQP",
            options={"maxiter": maxiter},
        )
        V = res.x[:-1].reshape(k, d)
        V = V / np.linalg.norm(V, axis=1, keepdims=True)
        if covering_distortion(V) < covering_distortion(U):
            U = V
    return U


def spread_unit_functionals(
    d: int, k: int, seed: int = 0, starts: int = 8, iters: int = 300, rounds: int = 3, maxiter: int = 400
) -> np.ndarray:
    """``k`` seeded unit vectors in R^d covering the sphere well up to sign.

    Independent uniform directions leave large caps uncovered. Each of
    ``starts`` seeded starts is spread by repulsion from the other vectors and
    their antipodes, then the largest uncovered cap (computed exactly from
    the convex hull of ``+-U``) is minimised with SLSQP. The start with the
    smallest :func:`covering_distortion` wins. ``|f(x) - f(y)|`` ignores the
    sign of ``u``, hence the antipodes.
    """
    if k < 1 or d < 1:
        raise InvalidInput("need at least one functional in dimension >= 1")
    best, best_r = None, np.inf
    for child in np.random.SeedSequence(seed).spawn(max(starts, 1)):
        rng = np.random.default_rng(child)
        U = rng.normal(size=(k, d))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        if k > 1:
            U = _repel(U, iters)
        if 2 * k > d and rounds:
            try:
                U = _minimax(U, rounds, maxiter)
            except QhullError:
                pass
        r = covering_distortion(U)
        if r < best_r:
            best, best_r = U, r
    return best


def random_unit_functionals(d: int, k: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    U = rng.normal(size=(k, d))
    return U / np.linalg.norm(U, axis=1, keepdims=True)


def _pairs(space: ModelSpace, samples: int, seed: int, scale: float):
    rng = np.random.default_rng(seed)
    return space.sample(rng, samples, scale), space.sample(rng, samples, scale)


def is_affine(f, space: ModelSpace, samples: int = 1000, seed: int = 0, tol: float | None = None, scale: float = 1.0) -> PropertyReport:
    """Midpoint residual |f(m) - (f(x) + f(y))/2| over sampled pairs."""
    start = time.perf_counter()
    tol = default_tol() if tol is None else tol
    X, Y = _pairs(space, samples, seed, scale)
    M = space.midpoint(X, Y)
    fx, fy, fm = (np.broadcast_to(f(P), (samples,)) for P in (X, Y, M))
    res = np.abs(fm - 0.5 * (fx + fy))
    size = max(1.0, float(np.max(np.abs(np.concatenate([fx, fy])))))
    k = int(np.argmax(res))
    stats = {"max_residual": float(res[k]), "value_scale": size, "samples": samples}
    params = {"space": space.describe(), "samples": samples, "seed": seed, "tol": tol, "scale": scale, "rng": "numpy.PCG64"}
    witness = {"x": X[k], "y": Y[k], "midpoint": M[k], "residual": res[k]}
    verdict = Verdict.PASS if res[k] <= tol * size else Verdict.FAIL
    return stamp(PropertyReport("is_affine", verdict, stats, params, witness), start)


def lipschitz_audit(f, lipschitz: float, space: ModelSpace, samples: int = 1000, seed: int = 0, tol: float | None = None) -> PropertyReport:
    """Largest sampled ratio |f(x) - f(y)| / |xy| against the declared constant."""
    start = time.perf_counter()
    tol = default_tol() if tol is None else tol
    X, Y = _pairs(space, samples, seed, 1.0)
    d = np.asarray(space.distance(X, Y))
    keep = d > DEFAULT_FLOOR
    ratio = np.abs(f(X) - f(Y))[keep] / d[keep]
    k = int(np.argmax(ratio))
    stats = {"max_ratio": float(ratio[k]), "declared": lipschitz}
    params = {"space": space.describe(), "samples": samples, "seed": seed, "tol": tol}
    verdict = Verdict.PASS if ratio[k] <= lipschitz * (1 + tol) else Verdict.FAIL
    return stamp(PropertyReport("lipschitz_audit", verdict, stats, params, {"x": X[keep][k], "y": Y[keep][k]}), start)


@dataclass(frozen=True)
class Separation:
    separated: bool
    index: int | None
    gap: float


def separates_points(F: AffineFamily, x, y, tol: float | None = None) -> Separation:
    """First function in ``F`` telling ``x`` and ``y`` apart."""
    tol = default_tol() if tol is None else tol
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    if np.array_equal(x, y):
        raise InvalidInput("separation needs two distinct points")
    gaps = np.abs(F.evaluate(x)[0] - F.evaluate(y)[0])
    hits = np.flatnonzero(gaps > tol)
    if len(hits):
        return Separation(True, int(hits[0]), float(gaps[hits[0]]))
    return Separation(False, None, float(gaps.max()))


def embed_coordinates(F: AffineFamily, points, basepoint=None) -> np.ndarray:
    """Rows ``(f(x) - f(o)) / Lip(f)``, the image of each point in the embedding."""
    P = np.atleast_2d(np.asarray(points, dtype=np.float64))
    o = basepoint if basepoint is not None else F.basepoint
    V = F.evaluate(P)
    if o is not None:
        V = V - F.evaluate(np.atleast_2d(o))
    return V / getattr(F, "lipschitz", 1.0)


def evaluation_embed(F, points, space: ModelSpace | None = None, verify_affine: bool = False, tol: float | None = None) -> FiniteMetricSpace:
    """Pseudometric ``||E(x, y)||_F`` on the sample points."""
    P = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if verify_affine:
        if space is None:
            raise InvalidInput("affinity verification needs the ambient space")
        for j, f in enumerate(F.functions):
            rep = is_affine(f, space, samples=200, tol=tol)
            if not rep.passed:
                raise InvalidInput(f"function {j} is not affine (midpoint residual {rep.statistics['max_residual']:.3g})")
    C = embed_coordinates(F, P)
    if isinstance(F, AnalyticFamily):
        D = np.linalg.norm(C[:, None, :] - C[None, :, :], axis=-1)
    else:
        D = np.max(np.abs(C[:, None, :] - C[None, :, :]), axis=-1)
    return FiniteMetricSpace(D, tol=default_tol() if tol is None else tol)


def affine_rank(F, points, tol: float = 1e-9) -> int:
    """Affine dimension of the embedded sample (a lower bound for the full image)."""
    C = embed_coordinates(F, points)
    C = C - C.mean(axis=0)
    if not C.size:
        return 0
    s = np.linalg.svd(C, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


def hl_isometry_check(
    F,
    points,
    space: ModelSpace,
    budget: float = 0.0,
    pairs: int | None = None,
    seed: int = 0,
    tol: float = 1e-12,
) -> PropertyReport:
    """Does the evaluation embedding preserve distances on the sample?

    Distortion is ``max(1 - ||E(x, y)|| / |xy|)`` over pairs. The verdict
    passes iff distortion <= budget + tol and no pair is stretched beyond
    ``|xy|`` by more than tol (relative). Unseparated pairs make the
    hypothesis fail.
    """
    start = time.perf_counter()
    P = space.point(np.atleast_2d(points))
    n = len(P)
    if pairs is None:
        I, J = np.triu_indices(n, 1)
    else:
        rng = np.random.default_rng(seed)
        I = rng.integers(0, n, size=pairs)
        J = (I + rng.integers(1, n, size=pairs)) % n
    params = {"space": space.describe(), "budget": budget, "tol": tol, "pairs": len(I), "seed": seed, "family_size": len(F)}
    d = np.asarray(space.distance(P[I], P[J]))
    e = F.seminorm(P[I], P[J])
    distinct = d > DEFAULT_FLOOR
    unsep = distinct & (e <= tol * np.maximum(d, 1.0))
    if np.any(unsep):
        k = int(np.flatnonzero(unsep)[0])
        witness = {"x": P[I[k]], "y": P[J[k]], "distance": d[k]}
        stats = {"unseparated_pairs": int(unsep.sum())}
        return stamp(PropertyReport("hl_isometry", Verdict.HYPOTHESIS_NOT_MET, stats, params, witness), start)
    ratio = np.ones_like(d)
    ratio[distinct] = e[distinct] / d[distinct]
    distortion = 1 - ratio
    k = int(np.argmax(distortion))
    stretch = float(np.max(ratio - 1))
    stats = {
        "distortion": float(distortion[k]),
        "max_stretch": stretch,
        "lipschitz_violations": int(np.sum(ratio > 1 + tol)),
        "pairs": len(I),
    }
    witness = {"x": P[I[k]], "y": P[J[k]], "distance": d[k], "embedded": e[k]}
    ok = distortion[k] <= budget + tol and stretch <= tol
    return stamp(PropertyReport("hl_isometry", Verdict.PASS if ok else Verdict.FAIL, stats, params, witness), start)


def midpoint_sample(space: ModelSpace, points, pairs: Sequence[tuple[int, int]] | None = None, origin=None):
    """Finite space on origin + points + midpoints for inner-product detection.

    Returns ``(finite_space, origin_index, midpoints)`` where ``midpoints``
    maps a pair of point indices to the index of their geodesic midpoint.
    """
    P = np.atleast_2d(np.asarray(points, dtype=np.float64))
    o = np.zeros(space.dim) if origin is None else np.asarray(origin, dtype=np.float64)
    n = len(P)
    if pairs is None:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    mids = [space.midpoint(P[i], P[j]) for i, j in pairs]
    allp = np.vstack([o[None, :], P] + ([np.array(mids)] if mids else []))
    D = np.asarray(space.distance(allp[:, None, :], allp[None, :, :]))
    fs = FiniteMetricSpace(D)
    midpoints = {(i + 1, j + 1): n + 1 + k for k, (i, j) in enumerate(pairs)}
    return fs, 0, midpoints


def inner_product_detect(
    space: FiniteMetricSpace,
    origin: int = 0,
    midpoints: dict | None = None,
    tol: float | None = None,
) -> PropertyReport:
    """Parallelogram law read off distances.

    With ``m`` the midpoint of ``x, y``: ``||x + y|| = 2|om|`` and
    ``||x - y|| = |xy|``, so the residual is
    ``4|om|^2 + |xy|^2 - 2|ox|^2 - 2|oy|^2``.
    """
    start = time.perf_counter()
    tol = default_tol() if tol is None else tol
    params = {"origin": origin, "tol": tol}
    if space.n < 2:
        stats = {"pairs": 0}
        return stamp(PropertyReport("inner_product_detect", Verdict.VACUOUS, stats, params), start)
    if not midpoints:
        raise UnsupportedSpace("inner-product detection needs midpoint samples for point pairs")
    D = space.dist
    worst, rel_worst, wit = 0.0, -1.0, None
    for (i, j), m in sorted(midpoints.items()):
        for idx in (i, j, m):
            if not 0 <= idx < space.n:
                raise InvalidInput(f"midpoint table index {idx} out of range")
        res = 4 * D[origin, m] ** 2 + D[i, j] ** 2 - 2 * D[origin, i] ** 2 - 2 * D[origin, j] ** 2
        scale = max(2 * D[origin, i] ** 2 + 2 * D[origin, j] ** 2, DEFAULT_FLOOR)
        rel = abs(res) / scale
        if rel > rel_worst:
            worst, rel_worst, wit = res, rel, (i, j, m)
    stats = {"max_relative_residual": rel_worst, "residual": worst, "pairs": len(midpoints)}
    witness = {"x": wit[0], "y": wit[1], "midpoint": wit[2], "residual": worst}
    verdict = Verdict.PASS if rel_worst <= tol else Verdict.FAIL
    return stamp(PropertyReport("inner_product_detect", verdict, stats, params, witness), start)
