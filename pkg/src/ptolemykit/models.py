"""Analytic model spaces: l^p on R^d, Euclidean space and the hyperbolic plane/space.

Hyperbolic points far out along rays are represented on the hyperboloid
internally; in disk coordinates their norm rounds to 1 and distances lose
every significant digit.
"""
from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .errors import DivergentProduct, InvalidInput, UnsupportedSpace
from .metric import FiniteMetricSpace
from .report import DEFAULT_FLOOR, PropertyReport, Verdict, default_tol, stamp

DISK_EDGE = 1 - 1e-6
DEFAULT_GROMOV_T = 20.0


# ---------------------------------------------------------------------------
# hyperboloid helpers


def mink(a, b):
    """Minkowski pairing -a0 b0 + sum a_i b_i along the last axis."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return -a[..., 0] * b[..., 0] + np.sum(a[..., 1:] * b[..., 1:], axis=-1)


def hyperboloid_distance(X, Y):
    """Distance on the upper sheet, switching formulas to avoid cancellation.

    Far apart: arcosh(-<X,Y>). Close together: 2 asinh(|X-Y|_M / 2), since
    <X-Y, X-Y> = 4 sinh^2(d/2) on the sheet.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    z = -mink(X, Y)
    diff = X - Y
    q = np.maximum(mink(diff, diff), 0.0)
    near = 2.0 * np.arcsinh(np.sqrt(q) / 2.0)
    far = np.arccosh(np.maximum(z, 1.0))
    out = np.where(z > 2.0, far, near)
    return float(out) if out.ndim == 0 else out


def disk_to_hyperboloid(x):
    x = np.asarray(x, dtype=np.float64)
    r2 = np.sum(x * x, axis=-1, keepdims=True)
    return np.concatenate([(1 + r2) / (1 - r2), 2 * x / (1 - r2)], axis=-1)


def hyperboloid_to_disk(X):
    X = np.asarray(X, dtype=np.float64)
    return X[..., 1:] / (1 + X[..., :1])


def lift(spatial):
    """Hyperboloid point with the given spatial coordinates."""
    s = np.asarray(spatial, dtype=np.float64)
    x0 = np.sqrt(1 + np.sum(s * s, axis=-1, keepdims=True))
    return np.concatenate([x0, s], axis=-1)


@dataclass(frozen=True)
class BoundaryPoint:
    """Point of the circle at infinity of the disk, by angle (mod 2 pi)."""

    angle: float

    def __post_init__(self):
        if not math.isfinite(self.angle):
            raise InvalidInput(f"boundary angle must be finite, got {self.angle}")
        object.__setattr__(self, "angle", float(self.angle) % (2 * math.pi))

    def same_as(self, other: "BoundaryPoint", atol: float = 1e-15) -> bool:
        gap = abs(self.angle - other.angle)
        return min(gap, 2 * math.pi - gap) <= atol

    def null_vector(self) -> np.ndarray:
        return np.array([1.0, math.cos(self.angle), math.sin(self.angle)])


# ---------------------------------------------------------------------------
# model spaces

_KINDS = ("lp", "euclidean", "disk", "hyperboloid")


@dataclass(frozen=True)
class ModelSpace:
    """A computable geodesic metric space.

    ``kind`` is one of ``lp`` (with exponent ``p``), ``euclidean``, ``disk``
    (Poincare disk, dim 2) or ``hyperboloid`` (points are (dim+1)-vectors on
    the upper sheet).
    """

    kind: str
    dim: int
    p: float = 2.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidInput(f"unknown space kind {self.kind!r}")
        if self.dim < 1:
            raise InvalidInput(f"dimension must be positive, got {self.dim}")
        if self.kind == "lp" and not (self.p >= 1):
            raise InvalidInput(f"l^p needs p >= 1, got p = {self.p}")
        if self.kind == "disk" and self.dim != 2:
            raise InvalidInput("the Poincare disk model is two-dimensional")

    # constructors -----------------------------------------------------

    @classmethod
    def lp(cls, d: int, p: float) -> "ModelSpace":
        return cls("lp", d, float(p))

    @classmethod
    def euclidean(cls, d: int) -> "ModelSpace":
        return cls("euclidean", d)

    @classmethod
    def hyperbolic_disk(cls) -> "ModelSpace":
        return cls("disk", 2)

    @classmethod
    def hyperboloid(cls, d: int) -> "ModelSpace":
        return cls("hyperboloid", d)

    @classmethod
    def parse(cls, text: str) -> "ModelSpace":
        """Parse ``lp:d:p`` (p may be ``inf``), ``euclidean:d``, ``disk`` or ``hyperboloid:d``.

        The call form ``lp(d, p)``, ``euclidean(d)`` is accepted too.
        """
        norm = text.strip().lower().replace(" ", "")
        m = re.fullmatch(r"([a-z-]+)\((.*)\)", norm)
        if m:
            norm = ":".join([m.group(1)] + ([m.group(2)] if m.group(2) else []))
            norm = norm.replace(",", ":")
        parts = norm.replace("∞", "inf").split(":")
        try:
            if parts[0] == "lp" and len(parts) == 3:
                return cls.lp(int(parts[1]), float(parts[2]))
            if parts[0] == "euclidean" and len(parts) == 2:
                return cls.euclidean(int(parts[1]))
            if parts[0] in ("disk", "hyperbolic-disk") and len(parts) == 1:
                return cls.hyperbolic_disk()
            if parts[0] == "hyperboloid" and len(parts) == 2:
                return cls.hyperboloid(int(parts[1]))
        except ValueError:
            pass
        raise InvalidInput(f"cannot parse space {text!r}")

    def describe(self) -> str:
        if self.kind == "lp":
            return f"lp:{self.dim}:{'inf' if math.isinf(self.p) else repr(self.p)}"
        if self.kind == "disk":
            return "disk"
        return f"{self.kind}:{self.dim}"

    # properties -------------------------------------------------------

    @property
    def flat(self) -> bool:
        return self.kind in ("lp", "euclidean")

    @property
    def hyperbolic(self) -> bool:
        return not self.flat

    @property
    def inner_product(self) -> bool:
        return self.kind == "euclidean" or (self.kind == "lp" and self.p == 2)

    @property
    def ambient_dim(self) -> int:
        return self.dim + 1 if self.kind == "hyperboloid" else self.dim

    def point(self, x) -> np.ndarray:
        """Validate and return ``x`` as a float array (leading batch axes allowed)."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1:] != (self.ambient_dim,):
            raise InvalidInput(f"{self.describe()} points have {self.ambient_dim} coordinates, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidInput("point has non-finite coordinates")
        if self.kind == "disk" and np.any(np.sum(x * x, axis=-1) >= 1):
            raise InvalidInput("disk points must have norm < 1")
        if self.kind == "hyperboloid":
            resid = np.abs(mink(x, x) + 1)
            if np.any(x[..., 0] <= 0) or np.any(resid > 1e-9 * x[..., 0] ** 2):
                raise InvalidInput("hyperboloid points must lie on the upper sheet <X,X> = -1")
        return x

    def _norm(self, v):
        if self.kind == "euclidean":
            return np.sqrt(np.sum(v * v, axis=-1))
        return np.linalg.norm(v, ord=self.p, axis=-1)

    # metric -----------------------------------------------------------

    def distance(self, x, y):
        """Model distance; broadcasts over leading axes."""
        x, y = self.point(x), self.point(y)
        if self.flat:
            out = self._norm(x - y)
        elif self.kind == "hyperboloid":
            out = hyperboloid_distance(x, y)
        else:
            out = self._disk_distance(x, y)
        return float(out) if np.ndim(out) == 0 else out

    def _disk_distance(self, x, y):
        nx = np.sum(x * x, axis=-1)
        ny = np.sum(y * y, axis=-1)
        diff = x - y
        dd = np.sum(diff * diff, axis=-1)
        den = np.sqrt(dd + (1 - nx) * (1 - ny))
        ratio = np.where(den > 0, np.sqrt(dd) / np.where(den > 0, den, 1.0), 0.0)
        direct = 2.0 * np.arctanh(np.minimum(ratio, 1.0))
        edge = (nx > DISK_EDGE**2) | (ny > DISK_EDGE**2)
        if np.any(edge):
            return np.where(edge, hyperboloid_distance(disk_to_hyperboloid(x), disk_to_hyperboloid(y)), direct)
        return direct

    def geodesic(self, x, y, t: float) -> np.ndarray:
        """Constant-speed geodesic from x (t=0) to y (t=1); affine for l^p."""
        if not 0 <= t <= 1:
            raise InvalidInput(f"geodesic parameter must lie in [0, 1], got {t}")
        x, y = self.point(x), self.point(y)
        if self.flat:
            return (1 - t) * x + t * y
        X = disk_to_hyperboloid(x) if self.kind == "disk" else x
        Y = disk_to_hyperboloid(y) if self.kind == "disk" else y
        d = np.asarray(hyperboloid_distance(X, Y))
        s = np.where(d > 0, np.sinh(d), 1.0)
        w1 = np.where(d > 0, np.sinh((1 - t) * d) / s, 1 - t)[..., None]
        w2 = np.where(d > 0, np.sinh(t * d) / s, t)[..., None]
        Z = w1 * X + w2 * Y
        return hyperboloid_to_disk(Z) if self.kind == "disk" else Z

    def midpoint(self, x, y) -> np.ndarray:
        return self.geodesic(x, y, 0.5)

    # rays -------------------------------------------------------------

    def _null(self, direction) -> np.ndarray:
        if isinstance(direction, BoundaryPoint):
            if self.dim != 2:
                raise InvalidInput("boundary angles only address the hyperbolic plane")
            return direction.null_vector()
        if self.kind == "disk" and np.ndim(direction) == 0:
            return BoundaryPoint(float(direction)).null_vector()
        u = np.asarray(direction, dtype=np.float64)
        if u.shape != (self.dim,) or not np.any(u):
            raise InvalidInput(f"direction must be a nonzero {self.dim}-vector or a boundary point")
        return np.concatenate([[1.0], u / np.linalg.norm(u)])

    def _hyper_origin(self, origin) -> np.ndarray:
        o = self.point(origin)
        return disk_to_hyperboloid(o) if self.kind == "disk" else o

    def _hyper_ray(self, origin, direction, t):
        X = self._hyper_origin(origin)
        N = self._null(direction)
        lam = -1.0 / mink(N, X)
        t = np.asarray(t, dtype=np.float64)[..., None]
        # cosh t X + sinh t (lam N - X), rearranged to keep precision for large t
        return np.exp(-t) * X + np.sinh(t) * lam * N

    def _unit(self, direction) -> np.ndarray:
        u = np.asarray(direction, dtype=np.float64)
        if u.shape != (self.dim,):
            raise InvalidInput(f"direction must be a {self.dim}-vector")
        n = self._norm(u)
        if n == 0:
            raise InvalidInput("direction vector is zero")
        return u / n

    def ray_point(self, origin, direction, t: float) -> np.ndarray:
        """Point at arclength ``t`` along the unit-speed ray from ``origin``.

        Flat spaces take a direction vector; hyperbolic spaces take a
        boundary point (angle) or a spatial direction naming the endpoint.
        """
        if np.any(np.asarray(t) < 0):
            raise InvalidInput(f"ray parameter must be nonnegative, got {t}")
        if self.flat:
            o = self.point(origin)
            return o + np.multiply.outer(np.asarray(t, dtype=np.float64), self._unit(direction))
        Z = self._hyper_ray(origin, direction, t)
        return hyperboloid_to_disk(Z) if self.kind == "disk" else Z

    def ray_distance(self, x, origin, direction, t: float):
        """Distance from ``x`` to the ray point at ``t``, computed without disk round-off."""
        if self.flat:
            return self.distance(x, self.ray_point(origin, direction, t))
        X = self._hyper_origin(x)
        return hyperboloid_distance(X, self._hyper_ray(origin, direction, t))

    def opposite_direction(self, origin, direction):
        """Direction of the ray from ``origin`` completing the given one to a line."""
        if self.flat:
            return -self._unit(direction)
        X = self._hyper_origin(origin)
        N = self._null(direction)
        lam = -1.0 / mink(N, X)
        # the other endpoint of the line: reflect the null direction through X
        M = 2 * X - lam * N
        M = M / M[0]
        if self.dim == 2 and (isinstance(direction, BoundaryPoint) or np.ndim(direction) == 0):
            return BoundaryPoint(math.atan2(M[2], M[1]))
        return M[1:]

    # sampling ---------------------------------------------------------

    def sample(self, rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
        """``n`` random points: uniform cube for flat spaces, bounded region for hyperbolic ones."""
        if self.flat:
            return scale * rng.uniform(-1.0, 1.0, size=(n, self.dim))
        if self.kind == "disk":
            r = 0.9 * np.sqrt(rng.uniform(0, 1, size=n))
            a = rng.uniform(0, 2 * math.pi, size=n)
            return np.stack([r * np.cos(a), r * np.sin(a)], axis=1)
        return lift(scale * rng.normal(size=(n, self.dim)))


def parse_space(text: str) -> ModelSpace:
    return ModelSpace.parse(text)


def distance(space: ModelSpace, x, y):
    return space.distance(x, y)


def geodesic(space: ModelSpace, x, y, t: float):
    return space.geodesic(x, y, t)


def ray_point(space: ModelSpace, origin, direction, t: float):
    return space.ray_point(origin, direction, t)


def sample_space(space: ModelSpace, n: int, seed: int) -> tuple[np.ndarray, FiniteMetricSpace]:
    """Seeded point sample and its distance matrix, for export to the metric-core pipeline."""
    rng = np.random.default_rng(seed)
    pts = space.sample(rng, n)
    D = space.distance(pts[:, None, :], pts[None, :, :])
    return pts, FiniteMetricSpace(D)


# ---------------------------------------------------------------------------
# boundary of the hyperbolic plane


def _boundary(direction) -> BoundaryPoint:
    return direction if isinstance(direction, BoundaryPoint) else BoundaryPoint(float(direction))


def gromov_product(space: ModelSpace, o, xi, eta, T: float = DEFAULT_GROMOV_T) -> float:
    """Truncated Gromov product of two boundary points seen from ``o``.

    Evaluates 1/2 (|o xi_T| + |o eta_T| - |xi_T eta_T|) with xi_T, eta_T at
    arclength T on the rays from ``o``; the error decays like exp(-2T).
    """
    if not space.hyperbolic:
        raise UnsupportedSpace("Gromov products of boundary points need a hyperbolic space")
    if not T > 0:
        raise InvalidInput(f"truncation T must be positive, got {T}")
    if space.dim == 2:
        xi, eta = _boundary(xi), _boundary(eta)
        if xi.same_as(eta):
            raise DivergentProduct(f"boundary points coincide (angle {xi.angle})")
    else:
        a, b = space._null(xi), space._null(eta)
        if np.allclose(a, b, rtol=0, atol=1e-15):
            raise DivergentProduct("boundary points coincide")
    O = space._hyper_origin(o)
    A = space._hyper_ray(o, xi, T)
    B = space._hyper_ray(o, eta, T)
    return 0.5 * (hyperboloid_distance(O, A) + hyperboloid_distance(O, B) - hyperboloid_distance(A, B))


def bourdon_metric(space: ModelSpace, o, boundary, T: float = DEFAULT_GROMOV_T) -> FiniteMetricSpace:
    """Visual metric exp(-(xi|eta)_o) on a finite sample of boundary points."""
    pts = [_boundary(b) for b in boundary]
    if len(pts) < 2:
        raise InvalidInput("need at least two boundary points")
    for i, j in combinations(range(len(pts)), 2):
        if pts[i].same_as(pts[j]):
            raise InvalidInput(f"duplicate boundary points {i} and {j} (angle {pts[i].angle})")
    n = len(pts)
    D = np.zeros((n, n))
    for i, j in combinations(range(n), 2):
        D[i, j] = D[j, i] = math.exp(-gromov_product(space, o, pts[i], pts[j], T))
    return FiniteMetricSpace(D, [f"{b.angle:.12g}" for b in pts])


# ---------------------------------------------------------------------------
# sampled Ptolemy / parallelogram scans


def _quad_rel_defects(space: ModelSpace, Q: np.ndarray, floor: float) -> np.ndarray:
    """Minimum relative defect per quadruple for an (N, 4, d) array."""
    x, y, u, v = (Q[:, i] for i in range(4))
    d = space.distance
    p1 = d(x, y) * d(u, v)
    p2 = d(x, u) * d(y, v)
    p3 = d(x, v) * d(y, u)
    scale = np.maximum(np.maximum(np.maximum(p1, p2), p3), floor)
    return np.minimum(np.minimum((p2 + p3) - p1, (p1 + p3) - p2), (p1 + p2) - p3) / scale


def ptolemy_sample_scan(
    space: ModelSpace, samples: int = 10**5, seed: int = 0, tol: float | None = None, floor: float = DEFAULT_FLOOR
) -> PropertyReport:
    """Minimum relative Ptolemy defect over seeded random quadruples of ``space``."""
    start = time.perf_counter()
    tol = default_tol() if tol is None else tol
    if samples < 1:
        raise InvalidInput("sample count must be at least 1")
    rng = np.random.default_rng(seed)
    Q = space.sample(rng, 4 * samples).reshape(samples, 4, -1)
    rel = _quad_rel_defects(space, Q, floor)
    k = int(np.argmin(rel))
    params = {"space": space.describe(), "samples": samples, "seed": seed, "rng": "numpy.PCG64", "tol": tol, "floor": floor}
    stats = {"min_relative_defect": float(rel[k]), "quadruples": samples}
    witness = {"points": Q[k], "relative_defect": float(rel[k])}
    verdict = Verdict.PASS if rel[k] >= -tol else Verdict.FAIL
    return stamp(PropertyReport("ptolemy_sample_scan", verdict, stats, params, witness), start)


def parallelogram_residual(space: ModelSpace, x, y) -> float:
    """| |x+y|^2 + |x-y|^2 - 2|x|^2 - 2|y|^2 | for a flat space."""
    if not space.flat:
        raise UnsupportedSpace("the parallelogram law needs a normed space")
    x, y = space.point(x), space.point(y)
    n = space._norm
    return float(abs(n(x + y) ** 2 + n(x - y) ** 2 - 2 * n(x) ** 2 - 2 * n(y) ** 2))


def _grid(space: ModelSpace) -> np.ndarray:
    k = min(space.dim, 2)
    pts = np.zeros((3**k, space.dim))
    pts[:, :k] = np.array(list(product((-1.0, 0.0, 1.0), repeat=k)))
    return pts


def schoenberg_test(
    space: ModelSpace, samples: int = 10**5, seed: int = 0, tol: float | None = None, floor: float = DEFAULT_FLOOR
) -> PropertyReport:
    """Ptolemy and parallelogram checks on a normed space.

    Random quadruples and pairs are followed by a deterministic sweep of the
    {-1, 0, 1} grid in the first two coordinates, which contains the extremal
    configurations of l^1 and l^inf. Pass means inner-product compatible.
    """
    start = time.perf_counter()
    tol = default_tol() if tol is None else tol
    if not space.flat:
        raise UnsupportedSpace("schoenberg_test needs an l^p or Euclidean space")
    if samples < 1:
        raise InvalidInput("sample count must be at least 1")
    rng = np.random.default_rng(seed)
    Q = space.sample(rng, 4 * samples).reshape(samples, 4, -1)
    grid = _grid(space)
    GQ = grid[np.array(list(combinations(range(len(grid)), 4)))]
    rel_grid = _quad_rel_defects(space, GQ, floor)
    rel_rand = _quad_rel_defects(space, Q, floor)
    kg, kr = int(np.argmin(rel_grid)), int(np.argmin(rel_rand))
    if rel_grid[kg] <= rel_rand[kr]:
        worst_quad, worst_def, source = GQ[kg], float(rel_grid[kg]), "grid"
    else:
        worst_quad, worst_def, source = Q[kr], float(rel_rand[kr]), "random"

    n = space._norm
    pairs = np.concatenate([GQ[:, :2], Q[:, :2]], axis=0)
    x, y = pairs[:, 0], pairs[:, 1]
    lhs = n(x + y) ** 2 + n(x - y) ** 2
    rhs = 2 * n(x) ** 2 + 2 * n(y) ** 2
    par = np.abs(lhs - rhs) / np.maximum(rhs, floor)
    kp = int(np.argmax(par))

    params = {"space": space.describe(), "samples": samples, "seed": seed, "rng": "numpy.PCG64", "tol": tol, "floor": floor}
    stats = {
        "min_relative_defect": worst_def,
        "max_parallelogram_residual": float(par[kp]),
        "quadruples": samples + len(GQ),
        "pairs": len(pairs),
        "geodesics": "affine segments",
    }
    witness = {
        "quadruple": worst_quad,
        "quadruple_source": source,
        "pair": pairs[kp],
        "pair_residual": float(par[kp]),
    }
    ok = worst_def >= -tol and par[kp] <= tol
    return stamp(PropertyReport("schoenberg_test", Verdict.PASS if ok else Verdict.FAIL, stats, params, witness), start)
