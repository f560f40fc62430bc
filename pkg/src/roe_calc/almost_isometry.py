"""Partial almost isometries and the glue metrics they induce."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import EmptySupportError, StructuralError
from .metric import (
    TOL,
    FiniteMetricSpace,
    GlueMetric,
    compose_glue,
    identity_glue,
    minplus,
)


@dataclass(frozen=True, eq=False)
class PartialMap:
    """A map from a nonempty subset of ``domain`` into ``codomain``.

    ``pairs`` is kept in domain point order.
    """

    domain: FiniteMetricSpace
    codomain: FiniteMetricSpace
    pairs: tuple
    _src: np.ndarray = field(init=False, repr=False)
    _dst: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        raw = list(self.pairs.items()) if isinstance(self.pairs, dict) else list(self.pairs)
        seen = {}
        for x, y in raw:
            if x in seen and seen[x] != y:
                raise StructuralError(f"point {x!r} is assigned twice")
            self.codomain.index(y)
            seen[x] = y
        if not seen:
            raise EmptySupportError("a partial map needs a nonempty support")
        pairs = tuple(sorted(seen.items(), key=lambda kv: self.domain.index(kv[0])))
        object.__setattr__(self, "pairs", pairs)
        src = np.array([self.domain.index(x) for x, _ in pairs], dtype=np.intp)
        dst = np.array([self.codomain.index(y) for _, y in pairs], dtype=np.intp)
        src.flags.writeable = False
        dst.flags.writeable = False
        object.__setattr__(self, "_src", src)
        object.__setattr__(self, "_dst", dst)

    @classmethod
    def identity(cls, space: FiniteMetricSpace, support: Optional[Iterable] = None) -> PartialMap:
        support = space.points if support is None else support
        return cls(space, space, tuple((x, x) for x in support))

    def __eq__(self, other):
        if not isinstance(other, PartialMap):
            return NotImplemented
        return (
            self.domain == other.domain
            and self.codomain == other.codomain
            and self.pairs == other.pairs
        )

    def __hash__(self):
        return hash((self.domain, self.codomain, self.pairs))

    def __repr__(self):
        return f"PartialMap(<{len(self.pairs)} of {len(self.domain)} points>)"

    def __call__(self, x):
        return dict(self.pairs)[x]

    @property
    def support(self) -> tuple:
        return tuple(x for x, _ in self.pairs)

    @property
    def image(self) -> tuple:
        return tuple(y for _, y in self.pairs)

    @property
    def is_total(self) -> bool:
        return len(self.pairs) == len(self.domain)

    def as_dict(self) -> dict:
        return dict(self.pairs)


@dataclass(frozen=True)
class DefectReport:
    defect: float
    witness: tuple


def defect(f: PartialMap) -> DefectReport:
    """Smallest C with ``|d_Y(f x, f x') - d_X(x, x')| <= C`` on the support."""
    dx = f.domain.dist[np.ix_(f._src, f._src)]
    dy = f.codomain.dist[np.ix_(f._dst, f._dst)]
    gap = np.abs(dy - dx)
    i, j = np.unravel_index(int(gap.argmax()), gap.shape)
    support = f.support
    return DefectReport(float(gap[i, j]), (support[i], support[j]))


def effective_constant(f: PartialMap, epsilon: float = 1.0) -> float:
    """``max(defect(f), epsilon)``; keeps the induced glue strictly positive."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return max(defect(f).defect, float(epsilon))


def glue_from_map(f: PartialMap, epsilon: float = 1.0, *, constant: Optional[float] = None) -> GlueMetric:
    """The glue ``d_f(x, y) = min_a d_X(x, a) + C/2 + d_Y(f(a), y)`` over the support.

    ``C`` defaults to ``max(defect(f), epsilon)``. An explicit ``constant`` must
    be positive and at least the defect, otherwise the result is not a metric.
    """
    if constant is None:
        c = effective_constant(f, epsilon)
    else:
        c = float(constant)
        if c <= 0 or c + TOL < defect(f).defect:
            raise ValueError(f"constant {c} is below the defect of the map or not positive")
    cross = minplus(f.domain.dist[:, f._src], f.codomain.dist[f._dst, :]) + c / 2
    return GlueMetric(f.domain, f.codomain, cross)


def compose_maps(f: PartialMap, g: PartialMap) -> PartialMap:
    """``g ∘ f`` on ``{x in supp f : f(x) in supp g}``."""
    if f.codomain != g.domain:
        raise StructuralError("codomain of f differs from domain of g")
    gmap = g.as_dict()
    pairs = tuple((x, gmap[y]) for x, y in f.pairs if y in gmap)
    if not pairs:
        raise EmptySupportError("the image of f misses the support of g")
    return PartialMap(f.domain, g.codomain, pairs)


@dataclass(frozen=True)
class SandwichReport:
    passed: bool
    constant_f: float
    constant_g: float
    lower_gap: float
    upper_gap: float
    min_upper_gap: float
    bound: Optional[float]
    constant_gap: bool
    inverse_defect: Optional[float]

    def to_dict(self):
        return dict(self.__dict__)


def sandwich_check(f: PartialMap, g: PartialMap, epsilon: float = 1.0) -> SandwichReport:
    """Compare ``d_g ∘ d_f`` with ``d_{g∘f}`` pointwise.

    The maps get constants ``C_f``, ``C_g`` from :func:`effective_constant`
    and the composite uses ``C_f + C_g``, which dominates its defect. Then
    ``d_g ∘ d_f <= d_{g∘f}`` always, and when ``f`` maps into the support of
    ``g`` the excess is at most ``C_g``; that constant is reported as ``bound``
    (``None`` when the image of ``f`` leaves the support of ``g``).

    ``lower_gap`` is ``max(d_g∘d_f - d_{g∘f})`` and should be ``<= 0``;
    ``upper_gap`` is ``max(d_{g∘f} - d_g∘d_f)``. ``inverse_defect`` measures
    how far ``g ∘ f`` is from the identity of X, when it maps X to itself.
    """
    gf = compose_maps(f, g)
    cf = effective_constant(f, epsilon)
    cg = effective_constant(g, epsilon)
    composed = compose_glue(glue_from_map(f, constant=cf), glue_from_map(g, constant=cg))
    direct = glue_from_map(gf, constant=cf + cg)
    diff = direct.cross - composed.cross
    lower_gap = float((-diff).max())
    upper_gap = float(diff.max())
    min_upper = float(diff.min())
    support_g = set(g.support)
    bound = cg if all(y in support_g for y in f.image) else None
    passed = lower_gap <= TOL and (bound is None or upper_gap <= bound + TOL)
    inverse_defect = None
    if gf.codomain == f.domain:
        d = f.domain.dist
        inverse_defect = float(d[gf._src, gf._dst].max())
    return SandwichReport(
        passed=passed,
        constant_f=cf,
        constant_g=cg,
        lower_gap=lower_gap,
        upper_gap=upper_gap,
        min_upper_gap=min_upper,
        bound=bound,
        constant_gap=upper_gap - min_upper <= TOL,
        inverse_defect=inverse_defect,
    )


@dataclass(frozen=True)
class CloseMapFailure:
    """No point of X has a partner in Y within the bound."""

    witness: object
    nearest: float
    bound: float

    def __bool__(self):
        return False


def extract_close_map(g: GlueMetric, bound: float):
    """Send each x within ``bound`` of Y to its nearest y.

    Ties go to the earliest point of Y. Returns a :class:`PartialMap`, or a
    :class:`CloseMapFailure` when no x qualifies.
    """
    if g.cross.size == 0:
        raise StructuralError("glue has an empty side")
    nearest = g.cross.min(axis=1)
    choice = g.cross.argmin(axis=1)
    keep = nearest <= bound + TOL
    if not keep.any():
        i = int(nearest.argmin())
        return CloseMapFailure(g.left.points[i], float(nearest[i]), float(bound))
    pairs = tuple(
        (g.left.points[i], g.right.points[choice[i]]) for i in np.flatnonzero(keep)
    )
    return PartialMap(g.left, g.right, pairs)


@dataclass(frozen=True)
class NearIdentityReport:
    """Comparison of a glue on ``X ⊔ X`` with the identity glue.

    ``upper_slack`` is ``min(d0 + L - 1 - d)`` and ``lower_slack`` is
    ``min(d + L + 1 - d0)``; both inequalities hold when the slacks are >= 0.
    """

    bound: float
    upper_slack: float
    lower_slack: float
    holds: bool

    def to_dict(self):
        return dict(self.__dict__)


def near_identity_check(g: GlueMetric) -> NearIdentityReport:
    if g.left != g.right:
        raise StructuralError("near-identity check needs the same space on both sides")
    d0 = identity_glue(g.left).cross
    L = float(np.diag(g.cross).max())
    upper = float((d0 + L - 1 - g.cross).min())
    lower = float((g.cross + L + 1 - d0).min())
    return NearIdentityReport(L, upper, lower, upper >= -TOL and lower >= -TOL)
