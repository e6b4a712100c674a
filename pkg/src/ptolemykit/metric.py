"""Finite metric spaces, the Ptolemy inequality, cross-ratio triples and circles."""
from __future__ import annotations

import csv
import enum
import io
import json
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import DegenerateQuadruple, InvalidInput
from .report import DEFAULT_FLOOR, PropertyReport, Verdict, default_tol, stamp


class ZeroDistance(InvalidInput, ZeroDivisionError):
    """A point other than the base point sits at distance zero from it."""


@dataclass(frozen=True)
class FiniteMetricSpace:
    """Symmetric distance matrix on ``n`` points, validated on construction.

    Set ``validate=False`` to skip the triangle-inequality check (used for
    derived matrices such as the involutive metric, which may fail it).
    """

    dist: np.ndarray
    labels: tuple[str, ...] | None = None
    tol: float = field(default_factory=default_tol)
    floor: float = DEFAULT_FLOOR
    validate: bool = True

    def __post_init__(self):
        D = np.array(self.dist, dtype=np.float64)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise InvalidInput(f"distance matrix must be square, got shape {D.shape}")
        if not np.all(np.isfinite(D)):
            raise InvalidInput("distance matrix contains non-finite entries")
        if np.any(D < 0):
            i, j = np.argwhere(D < 0)[0]
            raise InvalidInput(f"negative distance at [{i}][{j}] = {D[i, j]}")
        scale = max(float(D.max(initial=0.0)), self.floor)
        asym = np.abs(D - D.T)
        if np.any(asym > self.tol * np.maximum(np.maximum(D, D.T), self.floor)):
            i, j = np.unravel_index(int(np.argmax(asym)), D.shape)
            raise InvalidInput(f"asymmetric distances at [{i}][{j}]: {D[i, j]} vs {D[j, i]}")
        diag = np.abs(np.diag(D))
        if np.any(diag > self.tol * scale):
            i = int(np.argmax(diag))
            raise InvalidInput(f"nonzero self-distance at [{i}][{i}] = {D[i, i]}")
        D = (D + D.T) / 2
        np.fill_diagonal(D, 0.0)
        D.setflags(write=False)
        object.__setattr__(self, "dist", D)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != D.shape[0]:
                raise InvalidInput(f"{len(labels)} labels for {D.shape[0]} points")
            object.__setattr__(self, "labels", labels)
        if self.validate:
            slack, i, j, k, side, _ = kernels.triangle_scan(D, self.floor)
            if D.shape[0] >= 3 and slack < -self.tol:
                raise InvalidInput(
                    f"triangle inequality fails on points ({i}, {j}, {k}): relative slack {slack:.3e}"
                )

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def __len__(self) -> int:
        return self.n

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else str(i)

    def d(self, i: int, j: int) -> float:
        return float(self.dist[i, j])

    def scaled(self, factor: float) -> "FiniteMetricSpace":
        return FiniteMetricSpace(self.dist * factor, self.labels, self.tol, self.floor, self.validate)

    def subspace(self, idx: Sequence[int]) -> "FiniteMetricSpace":
        idx = list(idx)
        labels = None if self.labels is None else [self.labels[i] for i in idx]
        return FiniteMetricSpace(self.dist[np.ix_(idx, idx)], labels, self.tol, self.floor, self.validate)

    def triangle_slack(self) -> tuple[float, tuple[int, int, int]]:
        """Minimum relative triangle slack and the triple attaining it."""
        slack, i, j, k, _, _ = kernels.triangle_scan(self.dist, self.floor)
        return slack, (i, j, k)

    def is_metric(self) -> bool:
        return self.n < 3 or self.triangle_slack()[0] >= -self.tol

    @classmethod
    def from_points(cls, points, metric: Callable | None = None, labels=None, **kw) -> "FiniteMetricSpace":
        """Distance matrix of ``points`` under ``metric`` (Euclidean by default)."""
        P = np.asarray(points, dtype=np.float64)
        if metric is None:
            diff = P[:, None, :] - P[None, :, :]
            D = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        else:
            n = len(P)
            D = np.zeros((n, n))
            for i in range(n):
                for j in range(i + 1, n):
                    D[i, j] = D[j, i] = metric(P[i], P[j])
        return cls(D, labels, **kw)

    def to_dict(self) -> dict:
        out = {"n": self.n, "dist": self.dist.tolist()}
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return out


# ---------------------------------------------------------------------------
# ingestion


def _parse_json(text: str, tol: float) -> FiniteMetricSpace:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"line {exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict) or "dist" not in obj:
        raise InvalidInput('field "dist": missing (expected {"n":..., "labels":[...], "dist":[[...]]})')
    dist = obj["dist"]
    if not isinstance(dist, list) or not all(isinstance(r, list) for r in dist):
        raise InvalidInput('field "dist": expected a list of rows')
    for r, row in enumerate(dist):
        for c, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise InvalidInput(f'field "dist"[{r}][{c}]: expected a number, got {v!r}')
    if "n" in obj and obj["n"] != len(dist):
        raise InvalidInput(f'field "n": {obj["n"]} does not match {len(dist)} rows')
    if any(len(row) != len(dist) for row in dist):
        raise InvalidInput('field "dist": rows must all have length n')
    labels = obj.get("labels")
    if labels is not None and (not isinstance(labels, list) or len(labels) != len(dist)):
        raise InvalidInput('field "labels": expected a list of n names')
    return FiniteMetricSpace(np.array(dist, dtype=np.float64).reshape(len(dist), len(dist)), labels, tol=tol)


def _parse_csv(text: str, tol: float) -> FiniteMetricSpace:
    rows = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            rows.append([float(c) for c in row])
        except ValueError:
            raise InvalidInput(f"line {lineno}: non-numeric entry in {row!r}") from None
    n = len(rows)
    for lineno, row in enumerate(rows, start=1):
        if len(row) != n:
            raise InvalidInput(f"line {lineno}: expected {n} values, got {len(row)}")
    return FiniteMetricSpace(np.array(rows).reshape(n, n), tol=tol)


def load_space(path: str | Path, tol: float | None = None) -> FiniteMetricSpace:
    """Read a distance matrix from ``.csv`` (n rows of n reals) or ``.json``."""
    path = Path(path)
    tol = default_tol() if tol is None else tol
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        return _parse_csv(text, tol)
    return _parse_json(text, tol)


def dump_space(space: FiniteMetricSpace, path: str | Path) -> None:
    Path(path).write_text(json.dumps(space.to_dict(), indent=2))


# ---------------------------------------------------------------------------
# quadruples


@dataclass(frozen=True)
class Quadruple:
    """Four point indices (x, y, u, v); admissible unless one index fills 3+ slots."""

    indices: tuple[int, int, int, int]

    @property
    def admissible(self) -> bool:
        return max(Counter(self.indices).values()) <= 2


def quadruple_distances(space: FiniteMetricSpace, quad: Sequence[int]) -> tuple[float, ...]:
    """The six distances (xy, xu, xv, yu, yv, uv) of ``quad = (x, y, u, v)``."""
    x, y, u, v = quad
    D = space.dist
    return (D[x, y], D[x, u], D[x, v], D[y, u], D[y, v], D[u, v])


def _check_six(six):
    vals = [float(s) for s in six]
    if len(vals) != 6:
        raise InvalidInput(f"expected six distances, got {len(vals)}")
    for name, v in zip(("xy", "xu", "xv", "yu", "yv", "uv"), vals):
        if not np.isfinite(v) or v < 0:
            raise InvalidInput(f"distance |{name}| = {v} is not a nonnegative real")
    return vals


def ptolemy_defect(xy: float, xu: float, xv: float, yu: float, yv: float, uv: float) -> float:
    """|xu||yv| + |xv||yu| - |xy||uv|; negative iff this pairing breaks Ptolemy."""
    xy, xu, xv, yu, yv, uv = _check_six((xy, xu, xv, yu, yv, uv))
    return xu * yv + xv * yu - xy * uv


class Region(str, enum.Enum):
    INTERIOR = "interior-Δ"
    BOUNDARY = "boundary-∂Δ"
    OUTSIDE = "outside-Δ"


def classify_triple(a: float, b: float, c: float, tol: float, floor: float = DEFAULT_FLOOR) -> Region:
    """Place (a : b : c) relative to the triangle-inequality region Δ."""
    m = max(a, b, c)
    excess = m - (a + b + c - m)
    if abs(excess) <= tol * max(m, floor):
        return Region.BOUNDARY
    return Region.OUTSIDE if excess > 0 else Region.INTERIOR


@dataclass(frozen=True)
class CrossRatioTriple:
    coords: tuple[float, float, float]
    classification: Region
    tol: float

    @property
    def in_delta(self) -> bool:
        return self.classification != Region.OUTSIDE


def crt(xy: float, xz: float, xw: float, yz: float, yw: float, zw: float, tol: float | None = None) -> CrossRatioTriple:
    """Cross-ratio triple (|xy||zw| : |xz||yw| : |xw||yz|) normalized to sum 1."""
    tol = default_tol() if tol is None else tol
    xy, xz, xw, yz, yw, zw = _check_six((xy, xz, xw, yz, yw, zw))
    raw = (xy * zw, xz * yw, xw * yz)
    total = raw[0] + raw[1] + raw[2]
    if total == 0:
        raise DegenerateQuadruple("all three cross-ratio products vanish")
    coords = tuple(r / total for r in raw)
    return CrossRatioTriple(coords, classify_triple(*coords, tol), tol)


def crt_of(space: FiniteMetricSpace, quad: Sequence[int], tol: float | None = None) -> CrossRatioTriple:
    if not Quadruple(tuple(quad)).admissible:
        raise InvalidInput(f"quadruple {tuple(quad)} lies on the diagonal (a point fills 3+ slots)")
    return crt(*quadruple_distances(space, quad), tol=space.tol if tol is None else tol)


# ---------------------------------------------------------------------------
# scans

_PAIRING_ORDER = {0: (0, 1, 2, 3), 1: (0, 2, 1, 3), 2: (0, 3, 1, 2)}


def ptolemy_scan(space: FiniteMetricSpace, tol: float | None = None, backend: str | None = None) -> PropertyReport:
    """Brute-force the Ptolemy inequality over every 4-subset and pairing."""
    start = time.perf_counter()
    tol = space.tol if tol is None else tol
    params = {"tol": tol, "floor": space.floor}
    if space.n < 4:
        rep = PropertyReport("ptolemy_scan", Verdict.VACUOUS, {"quadruples": 0, "n": space.n}, params)
        return stamp(rep, start)
    best, i, j, k, l, pairing, count = kernels.ptolemy_scan(space.dist, space.floor, backend)
    subset = (i, j, k, l)
    x, y, u, v = (subset[p] for p in _PAIRING_ORDER[pairing])
    six = quadruple_distances(space, (x, y, u, v))
    defect = ptolemy_defect(*six)
    witness = {
        "quadruple": [x, y, u, v],
        "labels": [space.label(t) for t in (x, y, u, v)],
        "distances": dict(zip(("xy", "xu", "xv", "yu", "yv", "uv"), six)),
        "defect": defect,
        "relative_defect": best,
    }
    stats = {"n": space.n, "quadruples": count, "min_relative_defect": best}
    verdict = Verdict.PASS if best >= -tol else Verdict.FAIL
    return stamp(PropertyReport("ptolemy_scan", verdict, stats, params, witness), start)


def is_circle(space: FiniteMetricSpace, cycle: Sequence[int], tol: float | None = None, backend: str | None = None) -> PropertyReport:
    """Check the ordered Ptolemy equality on every cyclically ordered quadruple of ``cycle``."""
    start = time.perf_counter()
    tol = space.tol if tol is None else tol
    cycle = [int(c) for c in cycle]
    params = {"tol": tol, "floor": space.floor, "cycle": cycle}
    if len(set(cycle)) != len(cycle):
        raise InvalidInput(f"cycle repeats points: {cycle}")
    if any(c < 0 or c >= space.n for c in cycle):
        raise InvalidInput(f"cycle index out of range for {space.n} points")
    if len(cycle) < 4:
        return stamp(PropertyReport("is_circle", Verdict.VACUOUS, {"quadruples": 0}, params), start)
    worst, a, b, c, d, count = kernels.circle_scan(space.dist, cycle, space.floor, backend)
    x, y, z, w = (cycle[p] for p in (a, b, c, d))
    D = space.dist
    witness = {
        "quadruple": [x, y, z, w],
        "labels": [space.label(t) for t in (x, y, z, w)],
        "lhs": D[x, y] * D[z, w] + D[y, z] * D[w, x],
        "rhs": D[x, z] * D[y, w],
        "relative_violation": worst,
    }
    stats = {"quadruples": count, "max_relative_violation": worst}
    verdict = Verdict.PASS if worst <= tol else Verdict.FAIL
    return stamp(PropertyReport("is_circle", verdict, stats, params, witness), start)


@dataclass(frozen=True)
class InvolutiveMetric:
    """ρ_x(y, z) = |yz| / (|yx||zx|) on the points other than ``base``."""

    space: FiniteMetricSpace
    base: int
    indices: tuple[int, ...]
    is_metric: bool
    min_relative_slack: float
    witness: tuple[int, int, int] | None


def involutive_metric(space: FiniteMetricSpace, x: int) -> InvolutiveMetric:
    n = space.n
    if not 0 <= x < n:
        raise InvalidInput(f"base point {x} out of range for {n} points")
    rest = tuple(i for i in range(n) if i != x)
    to_x = space.dist[x, list(rest)]
    for idx, dx in zip(rest, to_x):
        if dx == 0:
            raise ZeroDistance(f"point {space.label(idx)} coincides with base point {space.label(x)}")
    D = space.dist[np.ix_(rest, rest)] / np.outer(to_x, to_x)
    labels = None if space.labels is None else [space.labels[i] for i in rest]
    rho = FiniteMetricSpace(D, labels, tol=space.tol, floor=space.floor, validate=False)
    if len(rest) < 3:
        return InvolutiveMetric(rho, x, rest, True, float("inf"), None)
    slack, (i, j, k) = rho.triangle_slack()
    return InvolutiveMetric(rho, x, rest, slack >= -space.tol, slack, (rest[i], rest[j], rest[k]))


def involutive_scan(space: FiniteMetricSpace) -> PropertyReport:
    """Pass iff ρ_x is a metric for every base point x."""
    start = time.perf_counter()
    params = {"tol": space.tol, "floor": space.floor}
    if space.n < 4:
        return stamp(PropertyReport("involutive_scan", Verdict.VACUOUS, {"bases": space.n}, params), start)
    worst = None
    for x in range(space.n):
        inv = involutive_metric(space, x)
        if worst is None or inv.min_relative_slack < worst.min_relative_slack:
            worst = inv
    stats = {"bases": space.n, "min_relative_slack": worst.min_relative_slack}
    witness = {"base": worst.base, "triple": list(worst.witness)}
    verdict = Verdict.PASS if worst.min_relative_slack >= -space.tol else Verdict.FAIL
    return stamp(PropertyReport("involutive_scan", verdict, stats, params, witness), start)
