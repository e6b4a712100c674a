"""Euclidean isometries, crystallographic presentations and word metrics.

Isometries act as ``x -> Q x + t``. When every entry of ``Q`` and ``t`` is
rational the isometry also carries an exact copy in ``Fraction`` arithmetic,
which gives sound hash keys for breadth-first enumeration of group elements.
"""
from __future__ import annotations

import heapq
import json
import math
import time
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .busemann import Line, Ray, busemann
from .errors import InvalidInput, UnsupportedGroup
from .models import ModelSpace
from .report import PropertyReport, Verdict, default_tol, plain, stamp

ORTHO_TOL = 1e-12
FLOAT_EQ_TOL = 1e-9


def _rational(v) -> Fraction | None:
    if isinstance(v, (bool, np.bool_)):
        return None
    if isinstance(v, (Rational, np.integer)):
        return Fraction(int(v)) if isinstance(v, np.integer) else Fraction(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(a, (int, np.integer)) for a in v):
        if v[1] == 0:
            raise InvalidInput(f"zero denominator in rational pair {list(v)}")
        return Fraction(int(v[0]), int(v[1]))
    return None


def _exact_array(a, shape) -> np.ndarray | None:
    """Object array of Fractions if every entry is rational, else None."""
    flat = np.empty(int(np.prod(shape)), dtype=object)
    items = _leaves(a, len(shape))
    if len(items) != flat.size:
        return None
    for i, v in enumerate(items):
        f = _rational(v)
        if f is None:
            return None
        flat[i] = f
    return flat.reshape(shape)


def _leaves(a, depth: int) -> list:
    if depth == 0:
        return [a]
    if isinstance(a, np.ndarray):
        a = list(a) if a.dtype == object else a.tolist()
    out = []
    for row in a:
        out.extend(_leaves(row, depth - 1))
    return out


@dataclass(frozen=True, eq=False)
class EuclideanIsometry:
    """The map ``x -> Q x + t`` on R^d.

    ``Q`` and ``t`` are always available as float arrays; ``exact`` holds
    Fraction-valued copies when all entries are rational.
    """

    Q: np.ndarray
    t: np.ndarray
    exact: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        Qraw, traw = self.Q, self.t
        # products of exact orthogonal matrices need no re-check
        internal = Qraw is None and self.exact is not None
        if self.exact is None:
            d = len(_leaves(traw, 1))
            Qe = _exact_array(Qraw, (d, d))
            te = _exact_array(traw, (d,))
            if Qe is not None and te is not None:
                object.__setattr__(self, "exact", (Qe, te))
        if self.exact is not None:
            Qe, te = self.exact
            Q = np.array([[float(v) for v in row] for row in Qe])
            t = np.array([float(v) for v in te])
        else:
            Q = np.array([[float(v) for v in row] for row in _rows(Qraw)])
            t = np.array([float(v) for v in _leaves(traw, 1)])
        d = len(t)
        if Q.shape != (d, d) or d == 0:
            raise InvalidInput(f"Q must be {d}x{d} to match t, got shape {Q.shape}")
        if not np.all(np.isfinite(Q)) or not np.all(np.isfinite(t)):
            raise InvalidInput("isometry entries must be finite")
        if internal:
            pass
        elif self.exact is not None:
            Qe = self.exact[0]
            if not np.array_equal(Qe.T.dot(Qe), _eye_exact(d)):
                raise InvalidInput("Q is not orthogonal (exact check)")
        elif np.max(np.abs(Q.T @ Q - np.eye(d))) > ORTHO_TOL:
            raise InvalidInput(f"Q is not orthogonal within {ORTHO_TOL}")
        Q.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "t", t)

    # construction -------------------------------------------------------

    @classmethod
    def _from_exact(cls, Qe: np.ndarray, te: np.ndarray) -> "EuclideanIsometry":
        return cls(None, None, (Qe, te))

    @classmethod
    def identity(cls, d: int) -> "EuclideanIsometry":
        return cls._from_exact(_eye_exact(d), np.array([Fraction(0)] * d, dtype=object))

    @classmethod
    def translation(cls, t) -> "EuclideanIsometry":
        d = len(t)
        return cls(_eye_exact(d), list(t))

    @classmethod
    def rotation(cls, angle: float, center=None) -> "EuclideanIsometry":
        """Planar rotation by ``angle`` about ``center``; exact for multiples of pi/2."""
        quarter = 2 * angle / math.pi
        k = round(quarter)
        if abs(quarter - k) < 1e-12:
            c, s = [(1, 0), (0, 1), (-1, 0), (0, -1)][k % 4]
        else:
            c, s = math.cos(angle), math.sin(angle)
        R = [[c, -s], [s, c]]
        rot = cls(R, [0, 0])
        if center is None:
            return rot
        return cls.translation(center) * rot * cls.translation([-_neg_ok(v) for v in center])

    @classmethod
    def reflection(cls, normal, offset=0) -> "EuclideanIsometry":
        """Mirror across the hyperplane ``<normal, x> = offset``."""
        n = [_rational(v) for v in normal]
        off = _rational(offset)
        if all(v is not None for v in n) and off is not None:
            nn = sum(v * v for v in n)
            if nn == 0:
                raise InvalidInput("reflection normal is zero")
            d = len(n)
            Q = [[Fraction(int(i == j)) - 2 * n[i] * n[j] / nn for j in range(d)] for i in range(d)]
            return cls(Q, [2 * off * v / nn for v in n])
        nv = np.asarray(normal, dtype=np.float64)
        nn = float(nv @ nv)
        if nn == 0:
            raise InvalidInput("reflection normal is zero")
        return cls(np.eye(len(nv)) - 2 * np.outer(nv, nv) / nn, 2 * float(offset) * nv / nn)

    @classmethod
    def screw(cls, angle: float, lift) -> "EuclideanIsometry":
        """Rotation about the z-axis of R^3 followed by a shift along it."""
        R = cls.rotation(angle)
        if R.exact is not None:
            Qe = R.exact[0]
            Q = [[Qe[0, 0], Qe[0, 1], 0], [Qe[1, 0], Qe[1, 1], 0], [0, 0, 1]]
        else:
            Q = np.eye(3)
            Q[:2, :2] = R.Q
        return cls(Q, [0, 0, lift])

    # algebra ------------------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.t)

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise InvalidInput(f"point dimension {x.shape[-1]} does not match isometry dimension {self.dim}")
        return x @ self.Q.T + self.t

    __call__ = apply

    def __mul__(self, other: "EuclideanIsometry") -> "EuclideanIsometry":
        """``(self * other)(x) = self(other(x))``."""
        if self.dim != other.dim:
            raise InvalidInput("cannot compose isometries of different dimension")
        if self.is_exact and other.is_exact:
            Q1, t1 = self.exact
            Q2, t2 = other.exact
            return EuclideanIsometry._from_exact(Q1.dot(Q2), Q1.dot(t2) + t1)
        return EuclideanIsometry(self.Q @ other.Q, self.Q @ other.t + self.t)

    compose = __mul__

    def inverse(self) -> "EuclideanIsometry":
        if self.is_exact:
            Q, t = self.exact
            return EuclideanIsometry._from_exact(Q.T.copy(), -Q.T.dot(t))
        return EuclideanIsometry(self.Q.T, -self.Q.T @ self.t)

    def __pow__(self, m: int) -> "EuclideanIsometry":
        base = self if m >= 0 else self.inverse()
        out = EuclideanIsometry.identity(self.dim) if base.is_exact else EuclideanIsometry(np.eye(self.dim), np.zeros(self.dim))
        for _ in range(abs(m)):
            out = out * base
        return out

    def key(self) -> tuple:
        """Canonical hashable key; exact mode only."""
        if not self.is_exact:
            raise UnsupportedGroup("float isometries have no sound canonical key")
        Q, t = self.exact
        return tuple(Q.ravel()) + tuple(t)

    def equals(self, other: "EuclideanIsometry", atol: float = FLOAT_EQ_TOL) -> bool:
        if self.is_exact and other.is_exact:
            return self.key() == other.key()
        return bool(np.allclose(self.Q, other.Q, rtol=0, atol=atol) and np.allclose(self.t, other.t, rtol=0, atol=atol))

    def is_identity(self, atol: float = FLOAT_EQ_TOL) -> bool:
        return self.equals(EuclideanIsometry.identity(self.dim), atol)

    def commutes_with(self, other: "EuclideanIsometry", atol: float = FLOAT_EQ_TOL) -> bool:
        return (self * other).equals(other * self, atol)

    def to_dict(self) -> dict:
        if self.is_exact:
            Q, t = self.exact
            pair = lambda f: [f.numerator, f.denominator]  # noqa: E731
            return {"Q": [[pair(v) for v in row] for row in Q], "t": [pair(v) for v in t]}
        return {"Q": self.Q.tolist(), "t": self.t.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "EuclideanIsometry":
        try:
            return cls(data["Q"], data["t"])
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"isometry needs fields 'Q' and 't': {exc}") from None

    def __repr__(self) -> str:
        mode = "exact" if self.is_exact else "float"
        return f"EuclideanIsometry(Q={self.Q.tolist()}, t={self.t.tolist()}, {mode})"


def _rows(a):
    if isinstance(a, np.ndarray):
        return a.tolist() if a.dtype != object else [list(r) for r in a]
    return a


def _neg_ok(v):
    f = _rational(v)
    return f if f is not None else float(v)


def _eye_exact(d: int) -> np.ndarray:
    E = np.empty((d, d), dtype=object)
    for i in range(d):
        for j in range(d):
            E[i, j] = Fraction(int(i == j))
    return E


# displacement and axes --------------------------------------------------


def displacement(g: EuclideanIsometry, x) -> float | np.ndarray:
    """|x g(x)|, vectorized over leading axes."""
    x = np.asarray(x, dtype=np.float64)
    return np.linalg.norm(g.apply(x) - x, axis=-1)


@dataclass(frozen=True)
class AxisResult:
    """Minimum displacement ``L`` and the set where it is attained.

    ``kind`` is ``"empty"`` when ``L = 0`` (no axis: the minimum set is the
    fixed set), ``"line"`` for a single axis and ``"affine-subspace"`` when
    the axes sweep out a higher-dimensional flat, as for translations.
    ``span`` is an orthonormal basis of the minimum set's directions and
    ``direction`` the unit translation direction along the axes.
    """

    L: float
    witness: np.ndarray
    kind: str
    span: np.ndarray
    direction: np.ndarray | None

    def contains(self, x, atol: float = 1e-9) -> bool:
        v = np.asarray(x, dtype=np.float64) - self.witness
        r = v - self.span.T @ (self.span @ v) if len(self.span) else v
        return bool(np.linalg.norm(r) <= atol * max(1.0, np.linalg.norm(v)))

    def axis_point(self, s) -> np.ndarray:
        if self.direction is None:
            raise InvalidInput("a torsion isometry has no axis")
        return self.witness + np.multiply.outer(np.asarray(s, dtype=np.float64), self.direction)

    def to_dict(self) -> dict:
        return plain({"L": self.L, "witness": self.witness, "kind": self.kind, "span": self.span, "direction": self.direction})


def min_displacement(g: EuclideanIsometry, rtol: float = 1e-10) -> AxisResult:
    """Least-squares minimum of |(Q - I)x + t| and the set attaining it."""
    d = g.dim
    A = g.Q - np.eye(d)
    U, sv, Vt = np.linalg.svd(A)
    rank = int(np.sum(sv > rtol * max(1.0, sv.max(initial=0.0))))
    Ur = U[:, :rank]
    t_perp = g.t - Ur @ (Ur.T @ g.t)
    L = float(np.linalg.norm(t_perp))
    witness = -(Vt[:rank].T @ ((Ur.T @ g.t) / sv[:rank]))
    kernel = Vt[rank:]
    if L <= FLOAT_EQ_TOL:
        return AxisResult(0.0, witness, "empty", kernel, None)
    kind = "line" if len(kernel) == 1 else "affine-subspace"
    return AxisResult(L, witness, kind, kernel, t_perp / L)


def is_torsion(g: EuclideanIsometry, max_order: int = 12) -> int | None:
    """Smallest ``m <= max_order`` with ``g^m = id``, else None."""
    if max_order < 1:
        raise InvalidInput("max_order must be at least 1")
    p = g
    for m in range(1, max_order + 1):
        if p.is_identity():
            return m
        p = p * g
    return None


def axis_translation_residual(g: EuclideanIsometry, axis: AxisResult, s: Sequence[float]) -> float:
    """max |g(c(s)) - c(s + L)| over the given parameters."""
    s = np.asarray(s, dtype=np.float64)
    return float(np.max(np.linalg.norm(g.apply(axis.axis_point(s)) - axis.axis_point(s + axis.L), axis=-1)))


# presentations and word metrics -----------------------------------------


@dataclass
class GroupPresentation:
    """Generating set with inverses, plus declared free abelian subgroup generators."""

    generators: list
    name: str = "group"
    abelian: list = field(default_factory=list)
    labels: list = field(default_factory=list)

    def __post_init__(self):
        if not self.generators:
            raise InvalidInput("a presentation needs at least one generator")
        dims = {g.dim for g in self.generators} | {g.dim for g in self.abelian}
        if len(dims) != 1:
            raise InvalidInput(f"generators of mixed dimension {sorted(dims)}")
        if not self.labels:
            self.labels = [f"g{i}" for i in range(len(self.generators))]
        gens, labels = list(self.generators), list(self.labels)
        if self.exact:
            seen = {g.key() for g in gens}
            for g, lab in zip(list(gens), list(labels)):
                h = g.inverse()
                if h.key() not in seen:
                    seen.add(h.key())
                    gens.append(h)
                    labels.append(lab + "^-1")
        self.generators, self.labels = gens, labels

    @property
    def dim(self) -> int:
        return self.generators[0].dim

    @property
    def exact(self) -> bool:
        return all(g.is_exact for g in self.generators) and all(g.is_exact for g in self.abelian)

    def identity(self) -> EuclideanIsometry:
        return EuclideanIsometry.identity(self.dim)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "generators": [g.to_dict() for g in self.generators],
            "labels": self.labels,
            "abelian": [g.to_dict() for g in self.abelian],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GroupPresentation":
        if not isinstance(data, dict) or "generators" not in data:
            raise InvalidInput("presentation JSON needs a 'generators' list")
        gens = [EuclideanIsometry.from_dict(g) for g in data["generators"]]
        ab = [EuclideanIsometry.from_dict(g) for g in data.get("abelian", [])]
        return cls(gens, data.get("name", "group"), ab, list(data.get("labels", [])))

    @classmethod
    def load(cls, path) -> "GroupPresentation":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        return cls.from_dict(data)


def preset(name: str) -> GroupPresentation:
    """Wallpaper groups ``p1, p2, p4, p4m`` and lattices ``Zn`` (e.g. ``Z3``)."""
    T = EuclideanIsometry.translation
    e1, e2 = T([1, 0]), T([0, 1])
    key = name.lower()
    if key == "p1":
        return GroupPresentation([e1, e2], "p1", [e1, e2], ["e1", "e2"])
    if key == "p2":
        return GroupPresentation([EuclideanIsometry.rotation(math.pi), e1, e2], "p2", [e1, e2], ["h", "e1", "e2"])
    if key == "p4":
        return GroupPresentation([EuclideanIsometry.rotation(math.pi / 2), e1], "p4", [e1, e2], ["r", "e1"])
    if key == "p4m":
        r, m = EuclideanIsometry.rotation(math.pi / 2), EuclideanIsometry.reflection([0, 1])
        return GroupPresentation([r, m, e1], "p4m", [e1, e2], ["r", "m", "e1"])
    if key.startswith("z") and key[1:].isdigit() and int(key[1:]) >= 1:
        n = int(key[1:])
        gens = [T([int(i == j) for j in range(n)]) for i in range(n)]
        return GroupPresentation(gens, f"Z{n}", list(gens), [f"e{i + 1}" for i in range(n)])
    raise InvalidInput(f"unknown preset {name!r}; expected p1, p2, p4, p4m or Zn")


def _require_exact(G: GroupPresentation, *elements: EuclideanIsometry) -> None:
    if not G.exact or not all(g.is_exact for g in elements):
        raise UnsupportedGroup("word metrics need exact rational generators")


def word_ball(G: GroupPresentation, radius: int) -> dict:
    """All elements of word length <= radius: ``key -> (length, element)``.

    Frontier order follows the generator list, so the enumeration is
    deterministic.
    """
    _require_exact(G)
    e = G.identity()
    ball = {e.key(): (0, e)}
    frontier = [e]
    for r in range(1, radius + 1):
        nxt = []
        for g in frontier:
            for s in G.generators:
                h = g * s
                k = h.key()
                if k not in ball:
                    ball[k] = (r, h)
                    nxt.append(h)
        frontier = nxt
        if not frontier:
            break
    return ball


def word_norm(G: GroupPresentation, g: EuclideanIsometry, radius: int) -> int | None:
    """|g| in the generators of ``G`` by breadth-first search, or None beyond ``radius``."""
    if radius < 0:
        raise InvalidInput("radius must be nonnegative")
    _require_exact(G, g)
    target = g.key()
    e = G.identity()
    if e.key() == target:
        return 0
    seen = {e.key()}
    queue = deque([(e, 0)])
    while queue:
        h, r = queue.popleft()
        if r == radius:
            continue
        for s in G.generators:
            x = h * s
            k = x.key()
            if k == target:
                return r + 1
            if k not in seen:
                seen.add(k)
                queue.append((x, r + 1))
    return None


def word_norm_bidirectional(G: GroupPresentation, g: EuclideanIsometry, radius: int) -> int | None:
    """Meet-in-the-middle search from the identity and from ``g``.

    Expands whole layers of the smaller side; the first layer where the two
    visited sets meet gives the exact distance.
    """
    if radius < 0:
        raise InvalidInput("radius must be nonnegative")
    _require_exact(G, g)
    fwd = {G.identity().key(): (0, G.identity())}
    bwd = {g.key(): (0, g)}
    if g.key() in fwd:
        return 0
    layers = [[G.identity()], [g]]
    depth = [0, 0]
    sides = [fwd, bwd]
    while depth[0] + depth[1] < radius and layers[0] and layers[1]:
        i = 0 if len(layers[0]) <= len(layers[1]) else 1
        mine, other = sides[i], sides[1 - i]
        depth[i] += 1
        nxt, best = [], None
        for h in layers[i]:
            for s in G.generators:
                x = h * s
                k = x.key()
                if k in mine:
                    continue
                mine[k] = (depth[i], x)
                nxt.append(x)
                if k in other:
                    total = depth[i] + other[k][0]
                    best = total if best is None else min(best, total)
        layers[i] = nxt
        if best is not None:
            return best if best <= radius else None
    return None


def _expanded_norms(G: GroupPresentation, gens0: list, weights: list, limit: float) -> dict:
    """Dijkstra over the subgroup, each generator costing its ambient word length."""
    e = G.identity()
    dist = {e.key(): 0}
    elem = {e.key(): e}
    heap = [(0, 0, e.key())]
    tick = 1
    while heap:
        c, _, k = heapq.heappop(heap)
        if c > dist[k]:
            continue
        for s, w in zip(gens0, weights):
            x = elem[k] * s
            kx = x.key()
            nc = c + w
            if nc <= limit and nc < dist.get(kx, math.inf):
                dist[kx] = nc
                elem[kx] = x
                heapq.heappush(heap, (nc, tick, kx))
                tick += 1
    return {k: (dist[k], elem[k]) for k in dist}


def straightness_report(
    G: GroupPresentation,
    gens0: Sequence[EuclideanIsometry] | None = None,
    m_max: int = 6,
    radius: int = 12,
    cross_check: bool = True,
) -> PropertyReport:
    """Compare the subgroup word norm with the ambient one.

    Subgroup elements are enumerated up to subgroup word length ``m_max``.
    The subgroup norm charges each subgroup generator its ambient word
    length, so subgroup words are ambient words and every ratio is at least
    1; the empirical upper constant ``c`` is reported. The plain subgroup
    word norm (each generator costing 1) is reported alongside.
    """
    start = time.perf_counter()
    gens0 = list(G.abelian if gens0 is None else gens0)
    params = {"group": G.name, "m_max": m_max, "radius": radius, "cross_check": cross_check}
    if not gens0 or all(h.is_identity() for h in gens0):
        stats = {"elements": 0, "c": None}
        return stamp(PropertyReport("straightness", Verdict.VACUOUS, stats, params), start)
    _require_exact(G, *gens0)
    H = GroupPresentation(gens0, "subgroup")
    weights = []
    for h in H.generators:
        w = word_norm(G, h, radius)
        if w is None:
            raise InvalidInput(f"subgroup generator {h} not reached within radius {radius}")
        weights.append(w)
    plain_ball = word_ball(H, m_max)
    ambient = word_ball(G, radius)
    expanded = _expanded_norms(G, H.generators, weights, limit=m_max * max(weights))
    ratios, plain_ratios, rows = [], [], []
    excluded = disagreements = 0
    for k, (m, h) in plain_ball.items():
        if m == 0:
            continue
        n = ambient[k][0] if k in ambient else None
        if n is None:
            excluded += 1
            continue
        if cross_check and word_norm_bidirectional(G, h, radius) != n:
            disagreements += 1
        big = expanded[k][0] if k in expanded else None
        if big is None:
            excluded += 1
            continue
        ratios.append(big / n)
        plain_ratios.append(m / n)
        rows.append({"t": h.t, "subgroup_norm": big, "plain_subgroup_norm": m, "ambient_norm": n})
    if not ratios:
        stats = {"elements": 0, "excluded": excluded, "c": None}
        return stamp(PropertyReport("straightness", Verdict.VACUOUS, stats, params), start)
    worst = int(np.argmax(ratios))
    c = max(ratios)
    stats = {
        "elements": len(ratios),
        "excluded": excluded,
        "min_ratio": min(ratios),
        "c": c,
        "plain_ratio_range": [min(plain_ratios), max(plain_ratios)],
        "generator_weights": weights,
        "oracle_disagreements": disagreements,
        "ratio_histogram": [[r, ratios.count(r)] for r in sorted(set(ratios))],
    }
    ok = min(ratios) >= 1 and math.isfinite(c) and disagreements == 0
    verdict = Verdict.PASS if ok else Verdict.FAIL
    return stamp(PropertyReport("straightness", verdict, stats, params, rows[worst]), start)


# Busemann functions along axes ------------------------------------------


def axis_line(g: EuclideanIsometry) -> Line:
    ax = min_displacement(g)
    if ax.direction is None:
        raise InvalidInput("torsion isometry: displacement minimum is 0, so there is no axis")
    return Line(ModelSpace.euclidean(g.dim), ax.witness, ax.direction)


def busemann_invariance_check(
    g: EuclideanIsometry,
    alpha: EuclideanIsometry | None = None,
    samples: int = 100,
    seed: int = 0,
    T: float = 1e8,
    tol: float = 1e-6,
    scale: float = 3.0,
) -> PropertyReport:
    """Busemann function of an axis of ``g`` under ``g`` and a commuting ``alpha``.

    ``b`` is taken along the axis ray pointing against the translation, so
    ``b(g x) - b(x) = +L``. Checks (1) ``b(alpha x) - b(x)`` is constant,
    (2) ``b(g x) - b(x) = L``, (3) ``B = b+ + b-`` vanishes on the axis and
    (4) the axis of ``g^-1`` gives the same ``B``.
    """
    start = time.perf_counter()
    alpha = EuclideanIsometry.identity(g.dim) if alpha is None else alpha
    if alpha.dim != g.dim:
        raise InvalidInput("g and alpha act on different dimensions")
    line = axis_line(g)
    L = min_displacement(g).L
    params = {"g": g.to_dict(), "alpha": alpha.to_dict(), "samples": samples, "seed": seed, "T": T, "tol": tol}
    if not g.commutes_with(alpha):
        stats = {"commutator_defect": float(np.max(np.abs((g * alpha).t - (alpha * g).t)))}
        return stamp(PropertyReport("busemann_invariance", Verdict.HYPOTHESIS_NOT_MET, stats, params), start)
    rng = np.random.default_rng(seed)
    X = scale * rng.uniform(-1, 1, size=(samples, g.dim))
    ray = line.minus

    def b(P):
        est = busemann(ray, P, T)
        return est.value, est.error

    bx, ex = b(X)
    ba, ea = b(alpha.apply(X))
    bg, eg = b(g.apply(X))
    diff_a = ba - bx
    dev_a = float(diff_a.max() - diff_a.min())
    err_a = float(np.max(ea + ex))
    shift = bg - bx
    dev_g = np.abs(shift - L)
    s = np.linspace(-10.0, 10.0, 21)
    A = np.array([line.point(v) for v in s])
    B_axis = np.abs(_line_B(line, A, T))
    inv_line = axis_line(g.inverse())
    B1, B2 = _line_B(line, X, T), _line_B(inv_line, X, T)
    dev_inv = np.abs(B1 - B2)
    k = int(np.argmax(dev_g))
    stats = {
        "L": L,
        "alpha_shift_deviation": dev_a,
        "alpha_shift_mean": float(diff_a.mean()),
        "max_shift_error": float(dev_g.max()),
        "max_B_on_axis": float(B_axis.max()),
        "max_B_inverse_gap": float(dev_inv.max()),
        "max_truncation_error": float(max(err_a, np.max(eg + ex))),
    }
    checks = {
        "alpha_constant": dev_a <= tol + err_a,
        "g_shift_equals_L": bool(np.all(dev_g <= tol)),
        "B_zero_on_axis": bool(np.all(B_axis <= tol)),
        "B_inverse_equal": bool(np.all(dev_inv <= tol)),
    }
    stats["checks"] = checks
    witness = {"x": X[k], "g_shift": shift[k]}
    verdict = Verdict.PASS if all(checks.values()) else Verdict.FAIL
    return stamp(PropertyReport("busemann_invariance", verdict, stats, params, witness), start)


def _line_B(line: Line, P: np.ndarray, T: float) -> np.ndarray:
    return busemann(line.plus, P, T).value + busemann(line.minus, P, T).value


# rough isometries -------------------------------------------------------


def _pairwise(P: np.ndarray) -> np.ndarray:
    diff = P[:, None, :] - P[None, :, :]
    return np.linalg.norm(diff, axis=-1)


def rough_isometry_verify(
    phi,
    points,
    actions: Iterable[tuple[EuclideanIsometry, EuclideanIsometry]] = (),
    codomain_sample=None,
    budget: float | None = None,
    growth_factor: float = 1.5,
    tol: float | None = None,
) -> PropertyReport:
    """Additive distortion, image density and equivariance of a sampled map.

    ``phi`` is a callable on point arrays or an array of images matching
    ``points``. Each action pair ``(g, g2)`` asks that ``phi(g x)`` equal
    ``g2 phi(x)``; with an array ``phi`` only sample points whose image
    under ``g`` is also in the sample are used. Without a ``budget`` the
    verdict flags distortion that keeps growing with sample diameter.
    """
    start = time.perf_counter()
    tol = default_tol() if tol is None else tol
    X = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if X.size == 0 or len(X) < 2:
        raise InvalidInput("rough isometry check needs at least two sample points")
    if callable(phi):
        F = np.atleast_2d(np.asarray(phi(X), dtype=np.float64))
    else:
        F = np.atleast_2d(np.asarray(phi, dtype=np.float64))
    if len(F) != len(X):
        raise InvalidInput(f"{len(F)} images for {len(X)} sample points")
    DX, DF = _pairwise(X), _pairwise(F)
    gap = np.abs(DF - DX)
    i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
    A = float(gap[i, j])
    # distortion on nested samples of growing radius
    r = np.linalg.norm(X - X.mean(axis=0), axis=1)
    scales = []
    for q in (0.25, 0.5, 1.0):
        m = r <= np.quantile(r, q)
        if m.sum() >= 2:
            scales.append({"diameter": float(DX[np.ix_(m, m)].max()), "A": float(gap[np.ix_(m, m)].max())})
    growing = len(scales) == 3 and scales[-1]["A"] > tol and scales[-1]["A"] >= growth_factor * max(scales[0]["A"], tol)
    density = None
    if codomain_sample is not None:
        Y = np.atleast_2d(np.asarray(codomain_sample, dtype=np.float64))
        dens = np.min(np.linalg.norm(Y[:, None, :] - F[None, :, :], axis=-1), axis=1)
        density = float(dens.max())
    eq_defect, eq_count = 0.0, 0
    for g, g2 in actions:
        GX = g.apply(X)
        if callable(phi):
            lhs = np.atleast_2d(phi(GX))
            rhs = g2.apply(F)
        else:
            Dm = np.linalg.norm(GX[:, None, :] - X[None, :, :], axis=-1)
            hit = Dm.min(axis=1) <= 1e-9
            lhs = F[np.argmin(Dm, axis=1)][hit]
            rhs = g2.apply(F[hit])
        if len(lhs):
            eq_defect = max(eq_defect, float(np.max(np.linalg.norm(lhs - rhs, axis=-1))))
            eq_count += len(lhs)
    stats = {
        "A": A,
        "A_by_scale": scales,
        "distortion_grows": bool(growing),
        "density": density,
        "equivariance_defect": eq_defect,
        "equivariance_samples": eq_count,
        "points": len(X),
    }
    params = {"budget": budget, "growth_factor": growth_factor, "tol": tol}
    if budget is None:
        ok = not growing and eq_defect <= tol * max(1.0, A)
    else:
        ok = A <= budget and (density is None or density <= budget) and eq_defect <= budget
    witness = {"x": X[i], "x2": X[j], "distance": DX[i, j], "image_distance": DF[i, j]}
    return stamp(PropertyReport("rough_isometry", Verdict.PASS if ok else Verdict.FAIL, stats, params, witness), start)


def lattice_covering_constant(
    gens: Sequence[EuclideanIsometry],
    samples: int = 200,
    seed: int = 0,
    radius: int = 6,
    box: float = 1.0,
) -> dict:
    """Empirical ``C`` with: for sampled p, q some lattice element a has |p a(q)| <= C.

    Lattice elements are enumerated up to word length ``radius`` and
    ``p, q`` drawn uniformly from ``[0, box)^d``.
    """
    G = GroupPresentation(list(gens), "lattice")
    elems = [h for _, h in word_ball(G, radius).values()]
    rng = np.random.default_rng(seed)
    P = box * rng.uniform(0, 1, size=(samples, G.dim))
    Qs = box * rng.uniform(0, 1, size=(samples, G.dim))
    best = np.full(samples, np.inf)
    for h in elems:
        best = np.minimum(best, np.linalg.norm(P - h.apply(Qs), axis=1))
    k = int(np.argmax(best))
    return {"C": float(best[k]), "p": P[k], "q": Qs[k], "elements": len(elems), "samples": samples, "seed": seed}


def random_isometry(rng: np.random.Generator, d: int, scale: float = 3.0) -> EuclideanIsometry:
    """Haar-random orthogonal part and uniform translation (float mode)."""
    M = rng.normal(size=(d, d))
    Qm, R = np.linalg.qr(M)
    Qm = Qm * np.sign(np.diag(R))
    return EuclideanIsometry(Qm, scale * rng.uniform(-1, 1, size=d))

