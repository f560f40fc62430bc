"""Finite metric spaces, glue metrics on disjoint unions, and their calculus.

A glue metric on ``X ⊔ Y`` is stored as its cross block only: ``cross[i, j]``
is the distance from the i-th point of X to the j-th point of Y. The X and Y
blocks are the metrics of the two spaces.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from ._parallel import parallel_map
from .errors import PositivityViolation, StructuralError

TOL = 1e-9
MAX_WITNESSES = 100

# bytes of scratch per min-plus block
_MINPLUS_BLOCK = 1 << 25


def _frozen(array):
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Labeled points with a dense distance matrix."""

    points: tuple
    dist: np.ndarray
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        points = tuple(self.points)
        if len(set(points)) != len(points):
            raise StructuralError("point labels must be distinct")
        dist = np.array(self.dist, dtype=float, copy=True)
        if dist.ndim != 2 or dist.shape != (len(points), len(points)):
            raise StructuralError(
                f"distance matrix has shape {dist.shape}, expected "
                f"({len(points)}, {len(points)})"
            )
        if np.isnan(dist).any() or np.isinf(dist).any():
            raise StructuralError("distance matrix contains NaN or infinite entries")
        if (dist < 0).any():
            i, j = np.argwhere(dist < 0)[0]
            raise StructuralError(
                f"negative distance d({points[i]!r}, {points[j]!r}) = {dist[i, j]}"
            )
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "dist", _frozen(dist))
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(points)})

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        if not isinstance(other, FiniteMetricSpace):
            return NotImplemented
        return self.points == other.points and np.array_equal(self.dist, other.dist)

    def __hash__(self):
        return hash((self.points, self.dist.tobytes()))

    def __repr__(self):
        return f"FiniteMetricSpace(<{len(self)} points>)"

    def index(self, label: Hashable) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise StructuralError(f"unknown point label {label!r}") from None

    def d(self, p, q) -> float:
        return float(self.dist[self.index(p), self.index(q)])

    @property
    def diameter(self) -> float:
        return float(self.dist.max()) if len(self) else 0.0

    def restrict(self, labels: Iterable) -> FiniteMetricSpace:
        idx = [self.index(p) for p in labels]
        return FiniteMetricSpace(tuple(self.points[i] for i in idx), self.dist[np.ix_(idx, idx)])


@dataclass(frozen=True, eq=False)
class GlueMetric:
    """A metric on ``left ⊔ right`` given by its cross-distance block."""

    left: FiniteMetricSpace
    right: FiniteMetricSpace
    cross: np.ndarray

    def __post_init__(self):
        cross = np.array(self.cross, dtype=float, copy=True)
        if cross.ndim == 1 and cross.size == 0:
            cross = cross.reshape(len(self.left), len(self.right))
        if cross.shape != (len(self.left), len(self.right)):
            raise StructuralError(
                f"cross matrix has shape {cross.shape}, expected "
                f"({len(self.left)}, {len(self.right)})"
            )
        if not np.isfinite(cross).all():
            raise StructuralError("cross matrix contains NaN or infinite entries")
        object.__setattr__(self, "cross", _frozen(cross))

    def __eq__(self, other):
        if not isinstance(other, GlueMetric):
            return NotImplemented
        return (
            self.left == other.left
            and self.right == other.right
            and np.array_equal(self.cross, other.cross)
        )

    def __hash__(self):
        return hash((self.left, self.right, self.cross.tobytes()))

    def __repr__(self):
        return f"GlueMetric(<{len(self.left)} x {len(self.right)}>)"

    def d(self, x, y) -> float:
        return float(self.cross[self.left.index(x), self.right.index(y)])


@dataclass(frozen=True)
class Violation:
    kind: str
    witness: tuple
    lhs: float
    rhs: float


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple
    min_separation: float
    total: int = 0

    def to_dict(self):
        return {
            "ok": self.ok,
            "min_separation": self.min_separation,
            "total_violations": self.total,
            "violations": [
                {"kind": v.kind, "witness": list(v.witness), "lhs": v.lhs, "rhs": v.rhs}
                for v in self.violations
            ],
        }


class _Collector:
    def __init__(self, cap=MAX_WITNESSES):
        self.cap = cap
        self.items = []
        self.total = 0

    def add_mask(self, mask, make):
        """Count every True cell of ``mask``; keep witnesses up to the cap."""
        count = int(np.count_nonzero(mask))
        if not count:
            return
        room = self.cap - len(self.items)
        if room > 0:
            for cell in np.argwhere(mask)[:room]:
                self.items.append(make(*cell))
        self.total += count

    def add(self, violation):
        if len(self.items) < self.cap:
            self.items.append(violation)
        self.total += 1


def _min_offdiag(dist):
    n = dist.shape[0]
    if n < 2:
        return math.inf
    masked = dist + np.diag(np.full(n, np.inf))
    return float(masked.min())


def _scan_metric(space, out, prefix=""):
    dist = space.dist
    pts = space.points
    n = len(pts)
    for p in range(n):
        if abs(dist[p, p]) > TOL:
            out.add(Violation(prefix + "diagonal", (pts[p],), float(dist[p, p]), 0.0))
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    asym = (np.abs(dist - dist.T) > TOL) & upper
    out.add_mask(
        asym,
        lambda p, q: Violation(
            prefix + "symmetry", (pts[p], pts[q]), float(dist[p, q]), float(dist[q, p])
        ),
    )
    out.add_mask(
        (dist <= TOL) & upper,
        lambda p, q: Violation(prefix + "positivity", (pts[p], pts[q]), float(dist[p, q]), 0.0),
    )
    # d(p, r) <= d(p, q) + d(q, r), scanned row by row so witnesses come out sorted
    cols = np.arange(n)
    for p in range(n):
        via = dist[p][:, None] + dist  # via[q, r] = d(p,q) + d(q,r)
        bad = dist[p][None, :] > via + TOL
        bad &= (cols[None, :] > p) & (cols[:, None] != p) & (cols[:, None] != cols[None, :])
        out.add_mask(
            bad,
            lambda q, r, p=p: Violation(
                prefix + "triangle",
                (pts[p], pts[q], pts[r]),
                float(dist[p, r]),
                float(dist[p, q] + dist[q, r]),
            ),
        )


def validate_metric(space: FiniteMetricSpace) -> ValidationReport:
    """Check the metric axioms exhaustively.

    Every symmetry, positivity and triangle violation is counted; the first
    ``MAX_WITNESSES`` are kept as witnesses. A triangle witness ``(p, q, r)``
    means ``d(p, r) > d(p, q) + d(q, r)``.
    """
    if not isinstance(space, FiniteMetricSpace):
        raise StructuralError("expected a FiniteMetricSpace")
    out = _Collector()
    _scan_metric(space, out)
    return ValidationReport(
        ok=out.total == 0,
        violations=tuple(out.items),
        min_separation=_min_offdiag(space.dist),
        total=out.total,
    )


def validate_glue(glue: GlueMetric) -> ValidationReport:
    """Check that ``glue`` is a metric on the disjoint union.

    Raises PositivityViolation when some cross distance is not positive.
    Other failures are reported with witnesses:

    * ``separation_X`` ``(x, y, x')``: d_X(x, x') > d(x, y) + d(x', y)
    * ``separation_Y`` ``(y, x, y')``: d_Y(y, y') > d(x, y) + d(x, y')
    * ``detour_X`` ``(x, x', y)``: d(x, y) > d_X(x, x') + d(x', y)
    * ``detour_Y`` ``(x, y', y)``: d(x, y) > d(x, y') + d_Y(y', y)

    Violations inside X or Y carry the prefixes ``left:`` / ``right:``.
    """
    cross = glue.cross
    if cross.size and (cross <= 0).any():
        i, j = np.argwhere(cross <= 0)[0]
        raise PositivityViolation(glue.left.points[i], glue.right.points[j], float(cross[i, j]))

    dx, dy = glue.left.dist, glue.right.dist
    xs, ys = glue.left.points, glue.right.points
    nx, ny = cross.shape
    out = _Collector()
    _scan_metric(glue.left, out, "left:")
    _scan_metric(glue.right, out, "right:")

    xcols = np.arange(nx)
    for i in range(nx):
        bad = dx[i][:, None] > cross[i][None, :] + cross + TOL  # [x', y]
        bad &= (xcols > i)[:, None]
        out.add_mask(
            bad,
            lambda k, j, i=i: Violation(
                "separation_X",
                (xs[i], ys[j], xs[k]),
                float(dx[i, k]),
                float(cross[i, j] + cross[k, j]),
            ),
        )
    ycols = np.arange(ny)
    for j in range(ny):
        bad = dy[j][None, :] > cross[:, j][:, None] + cross + TOL  # [x, y']
        bad &= (ycols > j)[None, :]
        out.add_mask(
            bad,
            lambda i, k, j=j: Violation(
                "separation_Y",
                (ys[j], xs[i], ys[k]),
                float(dy[j, k]),
                float(cross[i, j] + cross[i, k]),
            ),
        )
    for i in range(nx):
        bad = cross[i][None, :] > dx[i][:, None] + cross + TOL  # [x', y]
        bad[i, :] = False
        out.add_mask(
            bad,
            lambda k, j, i=i: Violation(
                "detour_X",
                (xs[i], xs[k], ys[j]),
                float(cross[i, j]),
                float(dx[i, k] + cross[k, j]),
            ),
        )
    for j in range(ny):
        bad = cross[:, j][:, None] > cross + dy[:, j][None, :] + TOL  # [x, y']
        bad[:, j] = False
        out.add_mask(
            bad,
            lambda i, k, j=j: Violation(
                "detour_Y",
                (xs[i], ys[k], ys[j]),
                float(cross[i, j]),
                float(cross[i, k] + dy[k, j]),
            ),
        )
    seps = [_min_offdiag(dx), _min_offdiag(dy)]
    if cross.size:
        seps.append(float(cross.min()))
    return ValidationReport(
        ok=out.total == 0,
        violations=tuple(out.items),
        min_separation=min(seps),
        total=out.total,
    )


def minplus(a, b, *, with_argmin=False):
    """Min-plus product ``c[i, j] = min_k a[i, k] + b[k, j]``.

    With ``with_argmin`` also returns the smallest minimizing ``k`` per cell.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise StructuralError(f"cannot min-plus multiply shapes {a.shape} and {b.shape}")
    n, k = a.shape
    m = b.shape[1]
    if k == 0:
        raise StructuralError("min-plus product over an empty middle index")
    out = np.full((n, m), np.inf)
    arg = np.zeros((n, m), dtype=np.intp)
    step = max(1, _MINPLUS_BLOCK // (8 * max(1, n * m)))
    for start in range(0, k, step):
        stop = min(k, start + step)
        block = a[:, start:stop, None] + b[None, start:stop, :]
        idx = block.argmin(axis=1)
        vals = np.take_along_axis(block, idx[:, None, :], axis=1)[:, 0, :]
        better = vals < out
        out[better] = vals[better]
        arg[better] = idx[better] + start
    if with_argmin:
        return out, arg
    return out


def compose_glue(g_xy: GlueMetric, g_yz: GlueMetric) -> GlueMetric:
    """Glue ``X ⊔ Z`` through Y: ``d(x, z) = min_y d_XY(x, y) + d_YZ(y, z)``."""
    if g_xy.right != g_yz.left:
        raise StructuralError("middle spaces of the two glue metrics differ")
    if len(g_xy.right) == 0:
        raise StructuralError("cannot compose through an empty middle space")
    return GlueMetric(g_xy.left, g_yz.right, minplus(g_xy.cross, g_yz.cross))


def adjoint_glue(g: GlueMetric) -> GlueMetric:
    return GlueMetric(g.right, g.left, g.cross.T)


def identity_glue(space: FiniteMetricSpace) -> GlueMetric:
    """Two copies of ``space`` with ``d(x, y') = d(x, y) + 1``."""
    return GlueMetric(space, space, space.dist + 1.0)


def shift_glue(g: GlueMetric, c: float) -> GlueMetric:
    """Add ``c >= 0`` to every cross distance; the result is again a glue."""
    if c < 0:
        raise ValueError("shift must be nonnegative")
    return GlueMetric(g.left, g.right, g.cross + c)


def _same_sides(g1, g2):
    if g1.left != g2.left or g1.right != g2.right:
        raise StructuralError("glue metrics live on different spaces")


def meet_glue(g1: GlueMetric, g2: GlueMetric) -> GlueMetric:
    """Pointwise maximum of two glues; a lower bound for both in the order."""
    _same_sides(g1, g2)
    return GlueMetric(g1.left, g1.right, np.maximum(g1.cross, g2.cross))


def growth_function(space: FiniteMetricSpace, radii: Sequence[float]) -> list:
    """``(R, max_x |B_R(x)|)`` for each radius, closed balls."""
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    if not len(space):
        return [(r, 0) for r in radii]
    return [(r, int((space.dist <= r + TOL).sum(axis=1).max())) for r in radii]


def embeds_isometrically(small: FiniteMetricSpace, big: FiniteMetricSpace) -> bool:
    """True when every label of ``small`` is in ``big`` with the same distances."""
    try:
        idx = [big.index(p) for p in small.points]
    except StructuralError:
        return False
    return np.array_equal(big.dist[np.ix_(idx, idx)], small.dist)


class MetricFamily:
    """Glue metrics indexed by truncation size, generated lazily and cached."""

    def __init__(self, indices: Iterable[int], generator: Callable[[int], GlueMetric], tag: str = ""):
        self.indices = tuple(indices)
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("family indices must be strictly increasing")
        self.generator = generator
        self.tag = tag
        self._cache = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self.indices)

    def __repr__(self):
        return f"MetricFamily({self.tag!r}, indices={self.indices})"

    def __getitem__(self, n) -> GlueMetric:
        if n not in self.indices:
            raise KeyError(n)
        with self._lock:
            if n in self._cache:
                return self._cache[n]
        member = self.generator(n)
        with self._lock:
            return self._cache.setdefault(n, member)

    def members(self) -> list:
        glues = parallel_map(self.__getitem__, self.indices)
        return list(zip(self.indices, glues))

    def __iter__(self):
        return iter(self.members())

    def map(self, fn: Callable[[GlueMetric], GlueMetric], tag: str = "") -> MetricFamily:
        return MetricFamily(self.indices, lambda n: fn(self[n]), tag or self.tag)

    def check_coherence(self) -> list:
        """Problems found: invalid members or non-nested consecutive spaces."""
        problems = []
        members = self.members()
        for n, g in members:
            if not validate_glue(g).ok:
                problems.append((n, "invalid glue"))
        for (n, g), (_, h) in zip(members, members[1:]):
            if not embeds_isometrically(g.left, h.left):
                problems.append((n, "left space does not embed"))
            if not embeds_isometrically(g.right, h.right):
                problems.append((n, "right space does not embed"))
        return problems


def self_isometries(space: FiniteMetricSpace, limit: int = None) -> list:
    """All distance-preserving bijections of ``space``, as image tuples.

    Complete backtracking: a partial assignment is extended only while it
    preserves every distance fixed so far, so no bijection is skipped.
    """
    dist = space.dist
    n = len(space)
    found = []
    image = [-1] * n
    used = [False] * n

    def extend(i):
        if limit is not None and len(found) >= limit:
            return
        if i == n:
            found.append(tuple(space.points[j] for j in image))
            return
        for j in range(n):
            if used[j]:
                continue
            if all(abs(dist[i, k] - dist[j, image[k]]) <= TOL for k in range(i)):
                image[i] = j
                used[j] = True
                extend(i + 1)
                used[j] = False
        image[i] = -1

    extend(0)
    return found
