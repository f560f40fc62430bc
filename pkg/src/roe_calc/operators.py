"""Finite-propagation operators ``l²(X) -> l²(Y)`` as sparse complex matrices.

Rows index the target space, columns the source space, so the entry at
``(y, x)`` is the coefficient of ``δ_y`` in ``T δ_x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np
from scipy.sparse import coo_array, csr_array

from .bipartite import edge_coloring, max_degree
from .errors import EmptySupportError, StructuralError
from .metric import TOL, FiniteMetricSpace, GlueMetric, compose_glue


def _canonical(matrix, shape):
    m = csr_array(matrix, dtype=np.complex128)
    if m.shape != shape:
        raise StructuralError(f"operator matrix has shape {m.shape}, expected {shape}")
    m.sum_duplicates()
    m.eliminate_zeros()
    m.sort_indices()
    return m


class FinitePropagationOperator:
    """Sparse operator from ``source`` to ``target`` with no stored zeros."""

    __slots__ = ("source", "target", "matrix")

    def __init__(self, source: FiniteMetricSpace, target: FiniteMetricSpace, matrix=None):
        shape = (len(target), len(source))
        if matrix is None:
            matrix = csr_array(shape, dtype=np.complex128)
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "matrix", _canonical(matrix, shape))

    def __setattr__(self, name, value):
        raise AttributeError("operators are immutable")

    @classmethod
    def from_entries(cls, source, target, entries: Iterable) -> FinitePropagationOperator:
        """Build from ``(y, x, value)`` triples; repeated positions are summed."""
        rows, cols, vals = [], [], []
        for y, x, value in entries:
            rows.append(target.index(y))
            cols.append(source.index(x))
            vals.append(complex(value))
        shape = (len(target), len(source))
        return cls(source, target, coo_array((vals, (rows, cols)), shape=shape))

    @classmethod
    def from_dense(cls, source, target, array) -> FinitePropagationOperator:
        return cls(source, target, csr_array(np.asarray(array, dtype=np.complex128)))

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def support(self):
        """Index pairs ``(row, col)`` of the nonzero entries, row-major."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]

    def entries(self) -> list:
        rows, cols, vals = self.support()
        ys, xs = self.target.points, self.source.points
        return [(ys[r], xs[c], complex(v)) for r, c, v in zip(rows, cols, vals)]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply(self, vector) -> np.ndarray:
        return self.matrix @ np.asarray(vector, dtype=np.complex128)

    def __eq__(self, other):
        if not isinstance(other, FinitePropagationOperator):
            return NotImplemented
        return (
            self.source == other.source
            and self.target == other.target
            and (self.matrix != other.matrix).nnz == 0
        )

    __hash__ = None

    def __repr__(self):
        return f"FinitePropagationOperator(<{len(self.target)} x {len(self.source)}, nnz={self.nnz}>)"

    def __add__(self, other):
        return add(self, other)

    def __matmul__(self, other):
        return compose(self, other)

    def __mul__(self, c):
        return scale(c, self)

    __rmul__ = __mul__


def elementary(source, target, x, y) -> FinitePropagationOperator:
    """``e_{x,y}``: the rank-one operator sending ``δ_x`` to ``δ_y``."""
    return FinitePropagationOperator.from_entries(source, target, [(y, x, 1)])


def zero(source, target) -> FinitePropagationOperator:
    return FinitePropagationOperator(source, target)


def propagation(T: FinitePropagationOperator, metric: Union[GlueMetric, FiniteMetricSpace]) -> float:
    """Largest distance between ``x`` and ``y`` over the nonzero entries ``T_{yx}``.

    ``metric`` is a glue on ``source ⊔ target``, or a single space for
    operators acting on that space. "Propagation less than L" means the
    returned value is ``< L``. The zero operator has propagation 0.
    """
    if isinstance(metric, GlueMetric):
        if metric.left != T.source or metric.right != T.target:
            raise StructuralError("glue metric does not match the operator's spaces")
        table = metric.cross  # [x, y]
    else:
        if T.source != metric or T.target != metric:
            raise StructuralError("operator does not act on this space")
        table = metric.dist
    if T.nnz == 0:
        return 0.0
    rows, cols, _ = T.support()
    return float(table[cols, rows].max())


def compose(S: FinitePropagationOperator, T: FinitePropagationOperator) -> FinitePropagationOperator:
    """``S ∘ T``: first T, then S."""
    if T.target != S.source:
        raise StructuralError("cannot compose: target of T differs from source of S")
    return FinitePropagationOperator(T.source, S.target, S.matrix @ T.matrix)


def adjoint(T: FinitePropagationOperator) -> FinitePropagationOperator:
    return FinitePropagationOperator(T.target, T.source, T.matrix.conj().T)


def add(T: FinitePropagationOperator, S: FinitePropagationOperator) -> FinitePropagationOperator:
    if T.source != S.source or T.target != S.target:
        raise StructuralError("cannot add operators between different spaces")
    return FinitePropagationOperator(T.source, T.target, T.matrix + S.matrix)


def scale(c, T: FinitePropagationOperator) -> FinitePropagationOperator:
    return FinitePropagationOperator(T.source, T.target, T.matrix * complex(c))


def operator_norm(T: FinitePropagationOperator, *, dense_limit=512, rtol=1e-8, max_iter=10000) -> float:
    """Largest singular value.

    Dense SVD when the smaller dimension is at most ``dense_limit``,
    otherwise power iteration on ``T*T`` from a fixed start vector.
    """
    if T.nnz == 0:
        return 0.0
    if min(T.matrix.shape) <= dense_limit:
        return float(np.linalg.norm(T.toarray(), 2))
    A = T.matrix
    AH = A.conj().T
    rng = np.random.default_rng(0)
    v = rng.standard_normal(A.shape[1]) + 1j * rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = AH @ (A @ v)
        new = float(np.vdot(v, w).real)
        norm_w = np.linalg.norm(w)
        if norm_w == 0:
            return 0.0
        v = w / norm_w
        if abs(new - lam) <= rtol * abs(new):
            lam = new
            break
        lam = new
    return float(np.sqrt(max(lam, 0.0)))


@dataclass(frozen=True)
class Band:
    """Width-1 band ``Σ λ_x e_{x, σ(x)}`` with σ injective.

    ``terms`` holds ``(x, σ(x), λ_x)`` in source point order.
    """

    source: FiniteMetricSpace
    target: FiniteMetricSpace
    terms: tuple

    def __post_init__(self):
        terms = tuple(sorted(
            ((x, y, complex(lam)) for x, y, lam in self.terms),
            key=lambda t: self.source.index(t[0]),
        ))
        xs = [t[0] for t in terms]
        ys = [t[1] for t in terms]
        for y in ys:
            self.target.index(y)
        if len(set(xs)) != len(xs) or len(set(ys)) != len(ys):
            raise StructuralError("a width-1 band needs an injective assignment")
        object.__setattr__(self, "terms", terms)

    def __len__(self):
        return len(self.terms)

    @property
    def coefficients(self) -> dict:
        return {x: lam for x, _, lam in self.terms}

    @property
    def assignment(self) -> dict:
        return {x: y for x, y, _ in self.terms}

    def operator(self) -> FinitePropagationOperator:
        return FinitePropagationOperator.from_entries(
            self.source, self.target, ((y, x, lam) for x, y, lam in self.terms)
        )

    @classmethod
    def from_operator(cls, T: FinitePropagationOperator) -> Band:
        rows, cols, vals = T.support()
        if len(set(rows.tolist())) != len(rows) or len(set(cols.tolist())) != len(cols):
            raise StructuralError("operator is not a width-1 band")
        xs, ys = T.source.points, T.target.points
        return cls(T.source, T.target, tuple((xs[c], ys[r], v) for r, c, v in zip(rows, cols, vals)))


@dataclass(frozen=True)
class BandDecomposition:
    source: FiniteMetricSpace
    target: FiniteMetricSpace
    bands: tuple

    @property
    def count(self) -> int:
        return len(self.bands)

    def reassemble(self) -> FinitePropagationOperator:
        total = zero(self.source, self.target)
        for band in self.bands:
            total = add(total, band.operator())
        return total


def support_degree(T: FinitePropagationOperator) -> int:
    """Maximum row or column count of nonzero entries."""
    rows, cols, _ = T.support()
    return max_degree(list(zip(cols.tolist(), rows.tolist())), len(T.source), len(T.target))


def band_decompose(T: FinitePropagationOperator) -> BandDecomposition:
    """Write ``T`` as a sum of width-1 bands, as few as its support degree.

    Each band is one colour class of a Kőnig edge colouring of the bipartite
    support graph (source points on the left, target points on the right).
    """
    rows, cols, vals = T.support()
    value = {(int(c), int(r)): v for r, c, v in zip(rows, cols, vals)}
    classes = edge_coloring(value.keys(), len(T.source), len(T.target))
    xs, ys = T.source.points, T.target.points
    bands = tuple(
        Band(T.source, T.target, tuple((xs[c], ys[r], value[(c, r)]) for c, r in cls))
        for cls in classes
    )
    return BandDecomposition(T.source, T.target, bands)


@dataclass(frozen=True)
class FactorPiece:
    band: Band
    R: FinitePropagationOperator
    S: FinitePropagationOperator


@dataclass(frozen=True)
class Factorization:
    """Factor pieces with ``piece.S ∘ piece.R == piece.band`` each.

    The pieces' bands sum to the input band. ``relay`` maps every source point
    of the band to its middle point; ``injective`` says whether one piece was
    enough.
    """

    pieces: tuple
    relay: dict
    injective: bool


def factor_through(band, g_xy: GlueMetric, g_yz: GlueMetric) -> Factorization:
    """Factor a width-1 band ``X -> Z`` through the middle space Y.

    The relay of ``x`` is the first ``y`` minimizing
    ``d_XY(x, y) + d_YZ(y, σ(x))``. When two source points share a relay the
    band is split by relay fibres (the k-th point of every fibre goes to
    piece k) so that each piece factors exactly.
    """
    if isinstance(band, FinitePropagationOperator):
        band = Band.from_operator(band)
    if g_xy.right != g_yz.left:
        raise StructuralError("middle spaces of the two glue metrics differ")
    if len(g_xy.right) == 0:
        raise StructuralError("cannot factor through an empty middle space")
    if band.source != g_xy.left or band.target != g_yz.right:
        raise StructuralError("band spaces do not match the glue metrics")
    if not len(band):
        raise EmptySupportError("cannot factor the zero band")
    middle = g_xy.right
    relay = {}
    for x, z, _ in band.terms:
        sums = g_xy.cross[band.source.index(x), :] + g_yz.cross[:, band.target.index(z)]
        relay[x] = middle.points[int(sums.argmin())]

    fibre_rank = {}
    seen = {}
    for x, _, _ in band.terms:
        y = relay[x]
        fibre_rank[x] = seen.get(y, 0)
        seen[y] = fibre_rank[x] + 1
    n_pieces = max(seen.values())
    pieces = []
    for k in range(n_pieces):
        terms = tuple(t for t in band.terms if fibre_rank[t[0]] == k)
        sub = Band(band.source, band.target, terms)
        R = FinitePropagationOperator.from_entries(
            band.source, middle, ((relay[x], x, lam) for x, _, lam in terms)
        )
        S = FinitePropagationOperator.from_entries(
            middle, band.target, ((z, relay[x], 1) for x, z, _ in terms)
        )
        pieces.append(FactorPiece(sub, R, S))
    return Factorization(tuple(pieces), relay, n_pieces == 1)


@dataclass(frozen=True)
class PropagationBoundReport:
    lhs: float
    prop_T: float
    prop_S: float
    holds: bool

    @property
    def rhs(self) -> float:
        return self.prop_T + self.prop_S

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "prop_T": self.prop_T,
                "prop_S": self.prop_S, "holds": self.holds}


def propagation_bound_check(S, T, g_xy: GlueMetric, g_yz: GlueMetric) -> PropagationBoundReport:
    """``prop(S∘T)`` under the composed glue versus ``prop(T) + prop(S)``."""
    lhs = propagation(compose(S, T), compose_glue(g_xy, g_yz))
    pt = propagation(T, g_xy)
    ps = propagation(S, g_yz)
    return PropagationBoundReport(lhs, pt, ps, lhs <= pt + ps + TOL)
