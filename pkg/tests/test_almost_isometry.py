import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from roe_calc import (
    CloseMapFailure,
    EmptySupportError,
    FiniteMetricSpace,
    GlueMetric,
    PartialMap,
    StructuralError,
    compose_maps,
    defect,
    effective_constant,
    extract_close_map,
    glue_from_map,
    identity_glue,
    near_identity_check,
    sandwich_check,
    shift_glue,
    validate_glue,
)
from roe_calc.catalog import (
    halfline,
    idem_glue,
    random_bounded_geometry,
    random_partial_map,
    random_self_glue,
    sparse_line,
    z2_grid,
    z_interval,
)

seeds = st.integers(0, 10_000)


def _idx_pairs(f):
    return [(f.domain.index(x), f.codomain.index(y)) for x, y in f.pairs]


def _shift(N, k):
    """``n -> n + k`` restricted to where it lands inside z_interval(N)."""
    X = z_interval(N)
    return PartialMap(X, X, tuple((n, n + k) for n in X.points if -N <= n + k <= N))


# PartialMap -------------------------------------------------------------------------

def test_partial_map_basics():
    X = z_interval(2)
    f = PartialMap(X, X, {1: 0, -1: 2})
    assert f.support == (-1, 1) and f(1) == 0 and not f.is_total
    with pytest.raises(EmptySupportError):
        PartialMap(X, X, ())
    with pytest.raises(StructuralError):
        PartialMap(X, X, ((0, 1), (0, 2)))
    with pytest.raises(ValueError):
        PartialMap(X, X, ((7, 1),))


# defect -----------------------------------------------------------------------------

def test_defect_examples():
    assert defect(PartialMap.identity(z_interval(5))).defect == 0
    two = FiniteMetricSpace(("a", "b"), [[0, 6], [6, 0]])
    rep = defect(PartialMap(two, two, {"a": "a", "b": "a"}))
    assert rep.defect == 6 and set(rep.witness) == {"a", "b"}
    single = defect(PartialMap(two, two, {"a": "b"}))
    assert single.defect == 0


@pytest.mark.parametrize("N", [5, 20])
def test_sparse_line_defect_matches_pair_scan(N):
    f = sparse_line(N).reflection
    d = f.domain.dist.tolist()
    rep = defect(f)
    assert rep.defect == oracles.defect(d, d, _idx_pairs(f))
    assert rep.defect == 1.0
    a, b = rep.witness
    da = f.domain.d(a, b)
    assert abs(f.codomain.d(f(a), f(b)) - da) == rep.defect


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), seeds)
def test_defect_matches_oracle(nx, ny, seed):
    X = random_bounded_geometry(nx, 3, seed)
    Y = random_bounded_geometry(ny, 3, seed + 1)
    f = random_partial_map(X, Y, seed)
    assert defect(f).defect == oracles.defect(X.dist.tolist(), Y.dist.tolist(), _idx_pairs(f))


# induced glue -----------------------------------------------------------------------------

def test_identity_glue_from_map():
    X = z_interval(5)
    g = glue_from_map(PartialMap.identity(X), epsilon=1.0)
    for i, x in enumerate(X.points):
        for j, y in enumerate(X.points):
            assert g.cross[i, j] == abs(x - y) + 0.5


def test_idem_glue_matches_brute_force_infimum():
    N = 7
    g = idem_glue(N)
    X = g.left
    for i, n in enumerate(X.points):
        for j, m in enumerate(X.points):
            expect = min(abs(n - k) + 0.5 + abs(k - m) for k in range(0, N + 1))
            assert g.cross[i, j] == expect
            if n <= 0 and m <= 0:
                assert g.cross[i, j] == abs(n) + abs(m) + 0.5


def test_sparse_line_glue_is_valid():
    f = sparse_line(12).reflection
    g = glue_from_map(f)
    assert validate_glue(g).ok
    assert oracles.glue_violations(f.domain.dist.tolist(), f.domain.dist.tolist(), g.cross.tolist()) == []


def test_explicit_constant_must_cover_defect():
    f = sparse_line(6).reflection
    with pytest.raises(ValueError):
        glue_from_map(f, constant=0.5)
    assert glue_from_map(f, constant=4).cross.min() >= 2


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), seeds, st.sampled_from([0.25, 1.0, 3.0]))
def test_glue_from_random_partial_map_is_valid(nx, ny, seed, eps):
    X = random_bounded_geometry(nx, 3, seed)
    Y = random_bounded_geometry(ny, 4, seed + 7)
    f = random_partial_map(X, Y, seed)
    g = glue_from_map(f, eps)
    c = effective_constant(f, eps)
    assert np.allclose(g.cross, oracles.induced_cross(X.dist.tolist(), Y.dist.tolist(), _idx_pairs(f), c))
    assert validate_glue(g).ok
    for x, y in f.pairs:
        assert g.d(x, y) <= c / 2 + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 7), seeds, st.floats(0.1, 5), st.floats(0.1, 5))
def test_epsilon_changes_glue_by_half_the_constant_gap(n, seed, e1, e2):
    X = random_bounded_geometry(n, 3, seed)
    f = random_partial_map(X, X, seed)
    diff = np.abs(glue_from_map(f, e1).cross - glue_from_map(f, e2).cross).max()
    bound = abs(effective_constant(f, e1) - effective_constant(f, e2)) / 2
    assert diff <= bound + 1e-9


# composition of maps ---------------------------------------------------------------------

def test_compose_maps_examples():
    X = z_interval(4)
    idx = PartialMap.identity(X)
    assert compose_maps(idx, idx) == idx
    back = compose_maps(_shift(4, 1), _shift(4, -1))
    assert all(back(x) == x for x in back.support)
    assert defect(back).defect == 0
    with pytest.raises(EmptySupportError):
        compose_maps(PartialMap(X, X, {0: 4}), PartialMap(X, X, {0: 0}))


def test_sparse_reflection_twice():
    f = sparse_line(8).reflection
    ff = compose_maps(f, f)
    d = f.domain.dist.tolist()
    assert defect(ff).defect == oracles.defect(d, d, _idx_pairs(ff)) <= 2 * defect(f).defect


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 7), seeds)
def test_defect_is_subadditive(n, seed):
    X = random_bounded_geometry(n, 3, seed)
    f = random_partial_map(X, X, seed, size=n)
    g = random_partial_map(X, X, seed + 1, size=n)
    gf = compose_maps(f, g)
    assert defect(gf).defect <= defect(f).defect + defect(g).defect + 1e-9


# sandwich -----------------------------------------------------------------------------------

def test_sandwich_identities_have_constant_gap():
    X = z_interval(6)
    rep = sandwich_check(PartialMap.identity(X), PartialMap.identity(X))
    assert rep.passed and rep.constant_gap and rep.lower_gap <= 0
    # |x - z| + 1 against |x - z| + 1/2 + 1/2
    assert rep.upper_gap == 0.0 and rep.inverse_defect == 0


def test_sandwich_shifts_and_sparse_line():
    N = 8
    rep = sandwich_check(_shift(N, 2), _shift(N, -2))
    assert rep.passed and rep.lower_gap <= 0
    f = sparse_line(10).reflection
    rep = sandwich_check(f, f)
    assert rep.passed and rep.bound == rep.constant_g
    assert rep.inverse_defect == 0


def test_sandwich_matches_pointwise_oracle():
    f = sparse_line(6).reflection
    rep = sandwich_check(f, f)
    d = f.domain.dist.tolist()
    pf = _idx_pairs(f)
    c = max(oracles.defect(d, d, pf), 1.0)
    df = oracles.induced_cross(d, d, pf, c)
    composed = oracles.minplus(df, df)
    direct = oracles.induced_cross(d, d, _idx_pairs(compose_maps(f, f)), 2 * c)
    gaps = [direct[i][j] - composed[i][j] for i in range(len(d)) for j in range(len(d))]
    assert rep.lower_gap == pytest.approx(max(-g for g in gaps))
    assert rep.upper_gap == pytest.approx(max(gaps))


# extracting maps --------------------------------------------------------------------------

@pytest.mark.parametrize("space", [z_interval(4), halfline(5), z2_grid(2), sparse_line(5).space])
def test_extract_from_dzero_is_identity(space):
    f = extract_close_map(identity_glue(space), 1)
    assert f == PartialMap.identity(space)


def test_extract_failure_and_idem_support():
    X = z_interval(3)
    far = GlueMetric(X, X, identity_glue(X).cross + 9)
    out = extract_close_map(far, 5)
    assert isinstance(out, CloseMapFailure) and not out and out.nearest == 10
    f = extract_close_map(idem_glue(6), 1)
    assert f.support == tuple(range(0, 7)) and all(f(x) == x for x in f.support)


def test_extract_ties_go_to_first_target():
    X = FiniteMetricSpace(("a",), [[0]])
    Y = FiniteMetricSpace(("p", "q"), [[0, 2], [2, 0]])
    f = extract_close_map(GlueMetric(X, Y, [[1, 1]]), 1)
    assert f("a") == "p"


# near identity ---------------------------------------------------------------------------

def test_near_identity_examples():
    X = z_interval(4)
    rep = near_identity_check(identity_glue(X))
    assert (rep.bound, rep.upper_slack, rep.lower_slack, rep.holds) == (1.0, 0.0, 2.0, True)
    rep = near_identity_check(shift_glue(identity_glue(X), 5))
    assert rep.bound == 6 and rep.holds


@pytest.mark.parametrize("N", [3, 6, 10])
def test_near_identity_bound_grows_for_idem(N):
    g = idem_glue(N)
    rep = near_identity_check(g)
    brute = min(abs(-N - k) + 0.5 + abs(k + N) for k in range(0, N + 1))
    assert rep.bound == brute == 2 * N + 0.5 and rep.holds


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 9), seeds, st.integers(1, 8))
def test_near_identity_on_bounded_diagonal_glues(n, seed, L):
    X = random_bounded_geometry(n, 3, seed)
    g = random_self_glue(X, seed, max_diag=L)
    assert validate_glue(g).ok
    rep = near_identity_check(g)
    assert rep.bound <= L and rep.holds
