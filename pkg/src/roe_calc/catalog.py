"""Deterministic spaces, maps, glues and families, plus catalog references.

Random generators use numpy's PCG64 (``numpy.random.default_rng``) with an
explicit seed; the same arguments always give bit-identical objects.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .almost_isometry import PartialMap, glue_from_map
from .errors import StructuralError
from .metric import (
    FiniteMetricSpace,
    GlueMetric,
    MetricFamily,
    identity_glue,
    minplus,
    shift_glue,
)
from .operators import Band, FinitePropagationOperator

RNG_NAME = "numpy.PCG64"


def line_space(labels: Sequence, coords: Sequence[float]) -> FiniteMetricSpace:
    c = np.asarray(coords, dtype=float)
    return FiniteMetricSpace(tuple(labels), np.abs(c[:, None] - c[None, :]))


def _check_n(n):
    if int(n) != n or n < 1:
        raise ValueError(f"truncation size must be a positive integer, got {n!r}")
    return int(n)


def z_interval(N: int) -> FiniteMetricSpace:
    """Integers ``-N..N`` with ``|n - m|``."""
    N = _check_n(N)
    pts = list(range(-N, N + 1))
    return line_space(pts, pts)


def halfline(N: int) -> FiniteMetricSpace:
    N = _check_n(N)
    pts = list(range(N + 1))
    return line_space(pts, pts)


def z2_grid(N: int) -> FiniteMetricSpace:
    """``[-N, N]²`` with the ℓ¹ metric; labels are ``"i,j"`` strings."""
    N = _check_n(N)
    coords = [(i, j) for i in range(-N, N + 1) for j in range(-N, N + 1)]
    c = np.array(coords, dtype=float)
    dist = np.abs(c[:, None, :] - c[None, :, :]).sum(axis=2)
    return FiniteMetricSpace(tuple(f"{i},{j}" for i, j in coords), dist)


def sparse_coordinate(n: int, convention: str = "mirrored") -> int:
    """Position of the n-th point of the sparse line.

    Positive indices: ``x_{2k} = 4k`` and ``x_{2k-1} = 4k - 3``. Nonpositive
    indices: ``x_n = 2n`` under ``"mirrored"``, ``x_n = -2n`` under
    ``"literal"``. The literal rule puts ``x_n`` and ``x_{-n}`` on the same
    integer for every even n.
    """
    if n > 0:
        return 2 * n if n % 2 == 0 else 2 * n - 1
    if convention == "mirrored":
        return 2 * n
    if convention == "literal":
        return -2 * n
    raise ValueError(f"unknown sparse line convention {convention!r}")


@dataclass(frozen=True)
class SparseLine:
    space: FiniteMetricSpace
    reflection: PartialMap
    coordinates: dict
    injective: bool
    injective_up_to: int
    convention: str


def sparse_line(N: int, convention: str = "mirrored") -> SparseLine:
    """Points ``x_n``, ``|n| <= N``, labelled by n, with the map ``x_n -> x_{-n}``."""
    N = _check_n(N)
    idx = list(range(-N, N + 1))
    coords = {n: sparse_coordinate(n, convention) for n in idx}
    up_to = 0
    for m in range(1, N + 1):
        if len({coords[n] for n in range(-m, m + 1)}) != 2 * m + 1:
            break
        up_to = m
    space = line_space(idx, [coords[n] for n in idx])
    reflection = PartialMap(space, space, tuple((n, -n) for n in idx))
    return SparseLine(space, reflection, coords, up_to == N, up_to, convention)


def default_indices(N: int) -> tuple:
    """Up to ten evenly spaced truncation sizes ending at N."""
    N = _check_n(N)
    lo = max(1, N // 10)
    return tuple(sorted({int(round(v)) for v in np.linspace(lo, N, 10)}))


def negation(N: int) -> PartialMap:
    space = z_interval(N)
    return PartialMap(space, space, tuple((n, -n) for n in space.points))


def idem_map(N: int) -> PartialMap:
    """Identity on ``0..N`` seen as a partial map of ``z_interval(N)``."""
    return PartialMap.identity(z_interval(N), range(0, N + 1))


def idem_glue(N: int) -> GlueMetric:
    return glue_from_map(idem_map(N), epsilon=1.0)


def dzero_family(N: int, indices=None) -> MetricFamily:
    return MetricFamily(indices or default_indices(N), lambda n: identity_glue(z_interval(n)), "dzero")


def idem_scenario(N: int, indices=None) -> MetricFamily:
    return MetricFamily(indices or default_indices(N), idem_glue, "idem")


def nonupper_scenario(N: int, indices=None):
    """Families ``d_{id}`` and ``d_{-id}`` on growing integer intervals."""
    indices = indices or default_indices(N)
    f1 = MetricFamily(indices, lambda n: glue_from_map(PartialMap.identity(z_interval(n))), "df_id")
    f2 = MetricFamily(indices, lambda n: glue_from_map(negation(n)), "df_neg")
    return f1, f2


def random_bounded_geometry(n: int, max_degree: int, seed: int, max_weight: int = 3) -> FiniteMetricSpace:
    """Shortest-path metric of a random connected graph with degrees ``<= max_degree``.

    Edge weights are integers in ``1..max_weight``.
    """
    n = _check_n(n)
    if max_degree < 2 and n > 2:
        raise ValueError("a connected graph on more than two points needs max_degree >= 2")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    deg = np.zeros(n, dtype=int)
    weights = np.full((n, n), np.inf)
    np.fill_diagonal(weights, 0)

    def link(a, b):
        w = int(rng.integers(1, max_weight + 1))
        weights[a, b] = weights[b, a] = w
        deg[a] += 1
        deg[b] += 1

    for i in range(1, n):
        open_ = [int(v) for v in order[:i] if deg[v] < max_degree]
        link(int(order[i]), open_[int(rng.integers(len(open_)))])
    for _ in range(n):
        a, b = (int(v) for v in rng.integers(0, n, size=2))
        if a != b and np.isinf(weights[a, b]) and deg[a] < max_degree and deg[b] < max_degree:
            link(a, b)
    dense = np.where(np.isinf(weights), 0, weights)
    dist = shortest_path(dense, method="FW", directed=False)
    return FiniteMetricSpace(tuple(range(n)), dist)


def random_chain(sizes: Sequence[int], seed: int, max_degree: int = 4):
    """Spaces ``X_0, X_1, ...`` and composable glues ``X_k ⊔ X_{k+1}``.

    All pieces are restrictions of one random graph metric on the union, so
    every glue is valid and consecutive glues share their middle space.
    """
    sizes = [_check_n(s) for s in sizes]
    union = random_bounded_geometry(sum(sizes), max_degree, seed)
    cuts = np.cumsum([0] + sizes)
    blocks = [np.arange(cuts[k], cuts[k + 1]) for k in range(len(sizes))]
    spaces = [
        FiniteMetricSpace(tuple(range(len(b))), union.dist[np.ix_(b, b)]) for b in blocks
    ]
    glues = [
        GlueMetric(spaces[k], spaces[k + 1], union.dist[np.ix_(blocks[k], blocks[k + 1])])
        for k in range(len(sizes) - 1)
    ]
    return spaces, glues


def random_glue(nx: int, ny: int, seed: int) -> GlueMetric:
    return random_chain([nx, ny], seed)[1][0]


def random_self_glue(space: FiniteMetricSpace, seed: int, max_diag: int = 8, extra_edges: int = None) -> GlueMetric:
    """A glue on ``space ⊔ space`` with ``d(x, x') <= max_diag``.

    Built as a shortest-path glue from edges ``(a, b')`` of integer weight at
    least ``d(a, b)`` and positive, which keeps both copies isometric; every
    diagonal pair gets an edge of weight ``<= max_diag``.
    """
    rng = np.random.default_rng(seed)
    n = len(space)
    link = np.full((n, n), np.inf)
    link[np.arange(n), np.arange(n)] = rng.integers(1, max_diag + 1, size=n)
    extra = n if extra_edges is None else extra_edges
    for _ in range(extra):
        a, b = (int(v) for v in rng.integers(0, n, size=2))
        w = space.dist[a, b] + int(rng.integers(0, max_diag + 1))
        link[a, b] = min(link[a, b], max(w, 1.0))
    cross = minplus(minplus(space.dist, link), space.dist)
    return GlueMetric(space, space, cross)


def random_partial_map(domain: FiniteMetricSpace, codomain: FiniteMetricSpace, seed: int, size: int = None) -> PartialMap:
    rng = np.random.default_rng(seed)
    k = size or int(rng.integers(1, len(domain) + 1))
    support = sorted(rng.choice(len(domain), size=k, replace=False).tolist())
    images = rng.integers(0, len(codomain), size=k)
    return PartialMap(
        domain, codomain,
        tuple((domain.points[i], codomain.points[int(j)]) for i, j in zip(support, images)),
    )


def _random_values(rng, k, complex_values):
    if complex_values:
        return rng.standard_normal(k) + 1j * rng.standard_normal(k)
    return np.ones(k)


def random_operator(source, target, seed: int, max_degree: int = 3, density: float = 0.3,
                    complex_values: bool = True) -> FinitePropagationOperator:
    """Random sparse operator whose rows and columns have ``<= max_degree`` entries."""
    rng = np.random.default_rng(seed)
    nx, ny = len(source), len(target)
    col_deg = np.zeros(nx, dtype=int)
    row_deg = np.zeros(ny, dtype=int)
    cells = []
    for c in rng.permutation(nx * ny):
        if rng.random() >= density:
            continue
        x, y = divmod(int(c), ny)
        if col_deg[x] < max_degree and row_deg[y] < max_degree:
            cells.append((y, x))
            col_deg[x] += 1
            row_deg[y] += 1
    vals = _random_values(rng, len(cells), complex_values)
    return FinitePropagationOperator.from_entries(
        source, target,
        ((target.points[y], source.points[x], v) for (y, x), v in zip(cells, vals)),
    )


def random_band(source, target, seed: int, size: int = None) -> Band:
    """Random width-1 band with complex coefficients."""
    rng = np.random.default_rng(seed)
    k = size or int(rng.integers(1, min(len(source), len(target)) + 1))
    xs = rng.choice(len(source), size=k, replace=False)
    ys = rng.choice(len(target), size=k, replace=False)
    lam = _random_values(rng, k, True)
    return Band(source, target, tuple(
        (source.points[int(x)], target.points[int(y)], v) for x, y, v in zip(xs, ys, lam)
    ))


# catalog references -------------------------------------------------------

_SPACES = {
    "z_interval": lambda a: z_interval(int(a[0])),
    "halfline": lambda a: halfline(int(a[0])),
    "z2_grid": lambda a: z2_grid(int(a[0])),
    "sparse_line": lambda a: sparse_line(int(a[0])).space,
    "sparse_line_literal": lambda a: sparse_line(int(a[0]), "literal").space,
    "random_space": lambda a: random_bounded_geometry(int(a[0]), int(a[1]), int(a[2])),
}

_MAPS = {
    "id": lambda a: PartialMap.identity(resolve_space(":".join(a))),
    "neg": lambda a: negation(int(a[0])),
    "sparse_f": lambda a: sparse_line(int(a[0])).reflection,
    "idem_map": lambda a: idem_map(int(a[0])),
}

_DF = {
    "id": lambda n: PartialMap.identity(z_interval(n)),
    "neg": negation,
    "sparse": lambda n: sparse_line(n).reflection,
    "idem": idem_map,
}

_GLUES = {
    "dzero": lambda a: identity_glue(resolve_space(":".join(a))),
    "df": lambda a: glue_from_map(_DF[a[0]](int(a[1]))),
    "idem": lambda a: idem_glue(int(a[0])),
    "random_glue": lambda a: random_glue(int(a[0]), int(a[1]), int(a[2])),
}

_FAMILIES = {
    "dzero": lambda a: dzero_family(int(a[0])),
    "idem": lambda a: idem_scenario(int(a[0])),
    "df_id": lambda a: nonupper_scenario(int(a[0]))[0],
    "df_neg": lambda a: nonupper_scenario(int(a[0]))[1],
    "dzero_shift": lambda a: dzero_family(int(a[1])).map(
        lambda g: shift_glue(g, float(a[0])), f"dzero+{a[0]}"
    ),
}

KINDS = {"space": _SPACES, "map": _MAPS, "glue": _GLUES, "family": _FAMILIES}


def resolve(ref: str, kind: str):
    """Build the object named by a reference such as ``"z_interval:21"``.

    Family references may carry a ``family:`` prefix.
    """
    table = KINDS[kind]
    parts = ref.split(":")
    if kind == "family" and parts[0] == "family":
        parts = parts[1:]
    name, args = parts[0], parts[1:]
    if name not in table:
        raise StructuralError(f"unknown {kind} reference {ref!r}; known: {', '.join(sorted(table))}")
    try:
        return table[name](args)
    except (IndexError, ValueError, KeyError) as exc:
        raise StructuralError(f"bad {kind} reference {ref!r}: {exc}") from None


def resolve_space(ref: str) -> FiniteMetricSpace:
    return resolve(ref, "space")
