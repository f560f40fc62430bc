"""Order and equivalence of glue metrics, checked over families of truncations.

``g ⪯ g'`` is evidenced by domination profiles: for each probe radius R,
``h_n(R) = max{g'(x, y) : g(x, y) <= R}`` must stay bounded along the family.
A finite sweep cannot prove boundedness, so verdicts are three-valued.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._parallel import parallel_map
from .almost_isometry import PartialMap, effective_constant, glue_from_map
from .bipartite import maximum_matching
from .errors import StructuralError
from .metric import (
    TOL,
    GlueMetric,
    MetricFamily,
    _same_sides,
    adjoint_glue,
    compose_glue,
)

DEFAULT_PROBES = (1.0, 2.0, 4.0, 8.0, 16.0)

HOLDS = "holds-bounded"
FAILS = "fails-growing"
INCONCLUSIVE = "inconclusive"


def profile_values(g: GlueMetric, g_prime: GlueMetric, radii: Sequence[float]) -> np.ndarray:
    """``h(R)`` for each radius; ``-inf`` where no pair has ``g <= R``."""
    _same_sides(g, g_prime)
    order = np.argsort(g.cross, axis=None, kind="stable")
    keys = g.cross.ravel()[order]
    best = np.maximum.accumulate(g_prime.cross.ravel()[order]) if keys.size else keys
    out = np.full(len(radii), -np.inf)
    for i, r in enumerate(radii):
        k = int(np.searchsorted(keys, r + TOL, side="right"))
        if k:
            out[i] = best[k - 1]
    return out


def default_radii(g: GlueMetric) -> tuple:
    """Probes 1, 2, 4, 8, 16 kept inside the range of cross distances of ``g``."""
    lo, hi = float(g.cross.min()), float(g.cross.max())
    probes = tuple(r for r in DEFAULT_PROBES if lo - TOL <= r <= hi + TOL)
    return probes or (hi,)


@dataclass(frozen=True)
class DominationProfile:
    radii: tuple
    indices: tuple
    values: np.ndarray  # [index, radius]
    direction: str = "g -> g'"

    def row(self, n=None) -> np.ndarray:
        i = 0 if n is None else self.indices.index(n)
        return self.values[i]

    @property
    def maxima(self) -> np.ndarray:
        """Largest finite ``h_n(R)`` over the probes, per index."""
        return self.values.max(axis=1)

    def rows(self) -> list:
        return [
            [n, r, _finite_or_none(self.values[i, j])]
            for i, n in enumerate(self.indices)
            for j, r in enumerate(self.radii)
        ]


def _finite_or_none(v):
    v = float(v)
    return v if math.isfinite(v) else None


def domination_profile(g: GlueMetric, g_prime: GlueMetric, radii=None, *, index=0) -> DominationProfile:
    radii = tuple(float(r) for r in (default_radii(g) if radii is None else radii))
    values = profile_values(g, g_prime, radii)[None, :]
    return DominationProfile(radii, (index,), values)


def _check_indices(fam_a: MetricFamily, fam_b: MetricFamily):
    if fam_a.indices != fam_b.indices:
        raise StructuralError("families have different index sets")


def family_profile(fam_g: MetricFamily, fam_gp: MetricFamily, radii=None) -> DominationProfile:
    _check_indices(fam_g, fam_gp)
    if radii is None:
        radii = default_radii(fam_g[fam_g.indices[0]])
    radii = tuple(float(r) for r in radii)
    rows = parallel_map(lambda n: profile_values(fam_g[n], fam_gp[n], radii), fam_g.indices)
    values = np.vstack(rows) if rows else np.empty((0, len(radii)))
    return DominationProfile(radii, fam_g.indices, values, f"{fam_g.tag} -> {fam_gp.tag}")


def classify_growth(values: Sequence[float], threshold: float = 2.0) -> str:
    """Three-valued boundedness verdict for a per-index sequence.

    Bounded: the running maximum did not move over the last three indices.
    Growing: the values strictly increase over at least the last three
    indices and the last exceeds ``threshold`` times the first finite value.
    """
    vals = np.asarray(values, dtype=float)
    finite = vals[np.isfinite(vals)]
    if len(vals) < 3 or len(finite) < 3:
        return INCONCLUSIVE
    running = np.maximum.accumulate(vals)
    if running[-1] <= running[-3] + TOL:
        return HOLDS
    streak = 1
    for a, b in zip(vals[-2::-1], vals[::-1]):
        if not b > a + TOL:
            break
        streak += 1
    if streak >= 3 and vals[-1] > threshold * finite[0] + TOL:
        return FAILS
    return INCONCLUSIVE


def _slope(indices, values) -> Optional[float]:
    pts = [(n, v) for n, v in zip(indices, values) if math.isfinite(v)]
    if len(pts) < 2:
        return None
    n, v = np.array(pts, dtype=float).T
    return float(np.polyfit(n, v, 1)[0])


@dataclass(frozen=True)
class OrderVerdict:
    relation: str
    profile: DominationProfile
    maxima: tuple
    slope: Optional[float]

    def to_dict(self):
        return {
            "relation": self.relation,
            "direction": self.profile.direction,
            "probes": list(self.profile.radii),
            "indices": list(self.profile.indices),
            "maxima": [_finite_or_none(m) for m in self.maxima],
            "slope": self.slope,
            "per_index": self.profile.rows(),
        }


def order_check(fam_g: MetricFamily, fam_gp: MetricFamily, radii=None, growth_threshold: float = 2.0) -> OrderVerdict:
    """Evidence for ``g ⪯ g'``: finite propagation for g stays finite for g'."""
    profile = family_profile(fam_g, fam_gp, radii)
    maxima = profile.maxima
    relation = classify_growth(maxima, growth_threshold)
    return OrderVerdict(relation, profile, tuple(float(m) for m in maxima), _slope(profile.indices, maxima))


@dataclass(frozen=True)
class EquivalenceVerdict:
    relation: str
    forward: OrderVerdict
    backward: OrderVerdict

    def to_dict(self):
        return {
            "relation": self.relation,
            "forward": self.forward.to_dict(),
            "backward": self.backward.to_dict(),
        }


def equivalence_check(fam_g, fam_gp, radii=None, growth_threshold: float = 2.0) -> EquivalenceVerdict:
    fwd = order_check(fam_g, fam_gp, radii, growth_threshold)
    bwd = order_check(fam_gp, fam_g, radii, growth_threshold)
    if fwd.relation == HOLDS and bwd.relation == HOLDS:
        relation = "equivalent"
    elif FAILS in (fwd.relation, bwd.relation):
        relation = "not-equivalent"
    else:
        relation = INCONCLUSIVE
    return EquivalenceVerdict(relation, fwd, bwd)


@dataclass(frozen=True)
class InvSemiReport:
    lower_slack: float
    upper_slack: float
    holds: bool
    triple: GlueMetric = field(repr=False)

    def to_dict(self):
        return {"lower_slack": self.lower_slack, "upper_slack": self.upper_slack, "holds": self.holds}


def inv_semi_check(g: GlueMetric) -> InvSemiReport:
    """``g <= g∘g*∘g <= 3g`` entrywise.

    ``lower_slack = min(g∘g*∘g - g)`` and ``upper_slack = min(3g - g∘g*∘g)``.
    """
    triple = compose_glue(compose_glue(g, adjoint_glue(g)), g)
    lower = float((triple.cross - g.cross).min())
    upper = float((3 * g.cross - triple.cross).min())
    return InvSemiReport(lower, upper, lower >= -TOL and upper >= -TOL, triple)


@dataclass(frozen=True)
class UniformBoundReport:
    """Entrywise distance between two glues, tracked along a family."""

    verdict: str
    indices: tuple
    bounds: tuple
    bound: float
    exact: bool
    growth: str

    def to_dict(self):
        return dict(self.__dict__)


def _uniform_bound(family: MetricFamily, other, yes: str, no: str, threshold: float) -> UniformBoundReport:
    def gap(n):
        g = family[n]
        if g.left != g.right:
            raise StructuralError("member is not a glue of a space with itself")
        return float(np.abs(other(g).cross - g.cross).max())

    bounds = parallel_map(gap, family.indices)
    growth = classify_growth(bounds, threshold)
    verdict = {HOLDS: yes, FAILS: no}.get(growth, INCONCLUSIVE)
    return UniformBoundReport(
        verdict=verdict,
        indices=family.indices,
        bounds=tuple(bounds),
        bound=max(bounds) if bounds else 0.0,
        exact=all(b == 0 for b in bounds),
        growth=growth,
    )


def idempotent_check(family: MetricFamily, growth_threshold: float = 2.0) -> UniformBoundReport:
    """Is ``|g∘g - g|`` uniformly bounded along the family?"""
    return _uniform_bound(family, lambda g: compose_glue(g, g), "idempotent", "not-idempotent", growth_threshold)


def selfadjoint_check(family: MetricFamily, growth_threshold: float = 2.0) -> UniformBoundReport:
    """Is ``|g* - g|`` uniformly bounded along the family?"""
    return _uniform_bound(family, adjoint_glue, "selfadjoint", "not-selfadjoint", growth_threshold)


@dataclass(frozen=True)
class ObstructionCertificate:
    """Required closeness that contradicts a triangle inequality.

    ``triangle``: witness ``(c, p, q)`` where ``p`` and ``q`` must both lie
    within the bound of ``c`` but ``lhs = d(p, q) > rhs = 2 * bound``.
    ``side`` names the space holding ``p`` and ``q``.
    ``cycle``: ``witness`` is a path of ``[side, label]`` steps whose two
    ends lie in the same space at distance ``lhs`` while the path is only
    ``rhs`` long.
    """

    kind: str
    witness: tuple
    lhs: float
    rhs: float
    side: str

    def to_dict(self):
        witness = [list(w) if isinstance(w, tuple) else w for w in self.witness]
        return {"kind": self.kind, "witness": witness, "lhs": self.lhs, "rhs": self.rhs, "side": self.side}


def _nearest_pair_certificate(g1, g2, bound):
    """Triangles ``(c, p, q)`` with p nearest to c under g1 and q under g2.

    Among those that contradict the bound, the one with the smallest
    ``d(p, q)`` is returned (earliest center on ties).
    """
    best = None
    for cross1, cross2, far, near_pts, center_pts, side in (
        (g1.cross, g2.cross, g1.right.dist, g1.right.points, g1.left.points, "Y"),
        (g1.cross.T, g2.cross.T, g1.left.dist, g1.left.points, g1.right.points, "X"),
    ):
        p = cross1.argmin(axis=1)
        q = cross2.argmin(axis=1)
        rows = np.arange(cross1.shape[0])
        ok = (cross1[rows, p] <= bound + TOL) & (cross2[rows, q] <= bound + TOL)
        lhs = far[p, q]
        bad = np.flatnonzero(ok & (lhs > 2 * bound + TOL))
        if len(bad):
            c = bad[int(lhs[bad].argmin())]
            if best is None or lhs[c] < best.lhs:
                best = ObstructionCertificate(
                    "triangle", (center_pts[c], near_pts[p[c]], near_pts[q[c]]),
                    float(lhs[c]), 2.0 * bound, side,
                )
    return best


def _triangle_certificate(required, g, bound):
    dx, dy = g.left.dist, g.right.dist
    for i in range(required.shape[0]):
        near = np.flatnonzero(required[i])
        sub = dy[np.ix_(near, near)]
        bad = np.argwhere(sub > 2 * bound + TOL)
        if len(bad):
            a, b = near[bad[0][0]], near[bad[0][1]]
            return ObstructionCertificate(
                "triangle", (g.left.points[i], g.right.points[a], g.right.points[b]),
                float(dy[a, b]), 2.0 * bound, "Y",
            )
    for j in range(required.shape[1]):
        near = np.flatnonzero(required[:, j])
        sub = dx[np.ix_(near, near)]
        bad = np.argwhere(sub > 2 * bound + TOL)
        if len(bad):
            a, b = near[bad[0][0]], near[bad[0][1]]
            return ObstructionCertificate(
                "triangle", (g.right.points[j], g.left.points[a], g.left.points[b]),
                float(dx[a, b]), 2.0 * bound, "X",
            )
    return None


def _closure(weights):
    """Floyd–Warshall with next-hop table."""
    dist = weights.copy()
    n = dist.shape[0]
    hop = np.where(np.isfinite(dist), np.arange(n)[None, :], -1)
    for k in range(n):
        via = dist[:, k, None] + dist[None, k, :]
        better = via < dist - TOL
        dist = np.where(better, via, dist)
        hop = np.where(better, hop[:, k][:, None], hop)
    return dist, hop


def upper_bound_feasibility(g1: GlueMetric, g2: GlueMetric, bound: float):
    """Look for one glue within ``bound`` on every pair close under g1 or g2.

    Pairs with ``g1 <= bound`` or ``g2 <= bound`` become edges of weight
    ``bound`` between the two spaces; the shortest-path closure is a valid glue
    exactly when it leaves ``d_X`` and ``d_Y`` unchanged. Returns that glue, or
    an :class:`ObstructionCertificate`.
    """
    _same_sides(g1, g2)
    if bound <= 0:
        raise ValueError("bound must be positive")
    X, Y = g1.left, g1.right
    nx, ny = len(X), len(Y)
    required = (g1.cross <= bound + TOL) | (g2.cross <= bound + TOL)
    weights = np.full((nx + ny, nx + ny), np.inf)
    weights[:nx, :nx] = X.dist
    weights[nx:, nx:] = Y.dist
    block = np.where(required, float(bound), np.inf)
    if not required.any():
        # one long edge keeps the closure finite without shortening anything
        block[0, 0] = max(X.diameter, Y.diameter) + bound
    weights[:nx, nx:] = block
    weights[nx:, :nx] = block.T
    closure, hop = _closure(weights)

    shrunk_x = closure[:nx, :nx] < X.dist - TOL
    shrunk_y = closure[nx:, nx:] < Y.dist - TOL
    if not shrunk_x.any() and not shrunk_y.any():
        return GlueMetric(X, Y, closure[:nx, nx:])

    cert = _nearest_pair_certificate(g1, g2, float(bound)) or _triangle_certificate(
        required, g1, float(bound)
    )
    if cert is not None:
        return cert
    if shrunk_x.any():
        u, v = np.argwhere(shrunk_x)[0]
        lhs, side = X.dist[u, v], "X"
    else:
        u, v = np.argwhere(shrunk_y)[0] + nx
        lhs, side = Y.dist[u - nx, v - nx], "Y"

    def label(node):
        return ("X", X.points[node]) if node < nx else ("Y", Y.points[node - nx])

    path = [label(u)]
    node = u
    while node != v:
        node = hop[node, v]
        path.append(label(node))
    return ObstructionCertificate("cycle", tuple(path), float(lhs), float(closure[u, v]), side)


@dataclass(frozen=True)
class CloseMatching:
    size: int
    pairs: tuple

    def to_dict(self):
        return {"size": self.size, "pairs": [list(p) for p in self.pairs]}


def close_pair_matching(g: GlueMetric, bound: float) -> CloseMatching:
    """Maximum matching among pairs at cross distance ``<= bound``."""
    pairs = maximum_matching(g.cross <= bound + TOL)
    labelled = tuple((g.left.points[u], g.right.points[v]) for u, v in pairs)
    return CloseMatching(len(labelled), labelled)


@dataclass(frozen=True)
class MaximalityReport:
    constant: float
    h_half: float
    slack: float
    max_violation: float
    holds: bool
    checked_rows: int
    profile: DominationProfile

    def to_dict(self):
        return {
            "constant": self.constant,
            "h_half": self.h_half,
            "slack": self.slack,
            "max_violation": self.max_violation,
            "holds": self.holds,
            "checked_rows": self.checked_rows,
            "probes": list(self.profile.radii),
            "profile": [_finite_or_none(v) for v in self.profile.row()],
        }


def maximality_inequality_check(f: PartialMap, g: GlueMetric, radii=None, epsilon: float = 1.0) -> MaximalityReport:
    """``g >= d_f - (C/2 + h(C/2))`` on every pair whose X point is in the support.

    ``h`` is the domination profile from ``d_f`` to ``g`` and ``C`` the
    constant used for ``d_f``. For a total map this covers all pairs.
    """
    d_f = glue_from_map(f, epsilon)
    _same_sides(d_f, g)
    c = effective_constant(f, epsilon)
    h_half = float(profile_values(d_f, g, [c / 2])[0])
    rows = np.asarray(f._src)
    floor = d_f.cross[rows] - (c / 2 + h_half)
    diff = g.cross[rows] - floor
    slack = float(diff.min())
    return MaximalityReport(
        constant=c,
        h_half=h_half,
        slack=slack,
        max_violation=max(0.0, -slack),
        holds=slack >= -TOL,
        checked_rows=len(rows),
        profile=domination_profile(d_f, g, radii),
    )
