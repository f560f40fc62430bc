"""Slow reference implementations in plain Python loops.

Nothing here uses the library's own algorithms; only plain attributes
(points, dist, cross) are read from library objects.
"""

import itertools
import math

TOL = 1e-9


def metric_violations(points, dist):
    """Every (kind, witness) found by scanning all pairs and triples."""
    n = len(points)
    out = []
    for i in range(n):
        if abs(dist[i][i]) > TOL:
            out.append(("diagonal", (points[i],)))
    for i in range(n):
        for j in range(i + 1, n):
            if abs(dist[i][j] - dist[j][i]) > TOL:
                out.append(("symmetry", (points[i], points[j])))
            if dist[i][j] <= TOL:
                out.append(("positivity", (points[i], points[j])))
    for i in range(n):
        for k in range(i + 1, n):
            for j in range(n):
                if j in (i, k):
                    continue
                if dist[i][k] > dist[i][j] + dist[j][k] + TOL:
                    out.append(("triangle", (points[i], points[j], points[k])))
    return out


def glue_violations(dx, dy, cross):
    """Violations of the four mixed conditions, as (kind, index triple)."""
    nx, ny = len(dx), len(dy)
    out = []
    for x in range(nx):
        for x2 in range(nx):
            for y in range(ny):
                if x < x2 and dx[x][x2] > cross[x][y] + cross[x2][y] + TOL:
                    out.append(("separation_X", (x, y, x2)))
                if x != x2 and cross[x][y] > dx[x][x2] + cross[x2][y] + TOL:
                    out.append(("detour_X", (x, x2, y)))
    for y in range(ny):
        for y2 in range(ny):
            for x in range(nx):
                if y < y2 and dy[y][y2] > cross[x][y] + cross[x][y2] + TOL:
                    out.append(("separation_Y", (y, x, y2)))
                if y != y2 and cross[x][y] > cross[x][y2] + dy[y2][y] + TOL:
                    out.append(("detour_Y", (x, y2, y)))
    return out


def minplus(a, b):
    rows, mid, cols = len(a), len(b), len(b[0]) if b else 0
    return [
        [min(a[i][k] + b[k][j] for k in range(mid)) for j in range(cols)]
        for i in range(rows)
    ]


def transpose(m):
    return [list(r) for r in zip(*m)]


def induced_cross(dx, dy, pairs_idx, c):
    """``min over support a of dX(x, a) + c/2 + dY(f a, y)``."""
    return [
        [min(dx[x][a] + c / 2 + dy[b][y] for a, b in pairs_idx) for y in range(len(dy))]
        for x in range(len(dx))
    ]


def defect(dx, dy, pairs_idx):
    best = 0.0
    for (a, fa), (b, fb) in itertools.combinations(pairs_idx, 2):
        best = max(best, abs(dy[fa][fb] - dx[a][b]))
    return best


def ball_growth(dist, radius):
    n = len(dist)
    return max(sum(1 for q in range(n) if dist[p][q] <= radius + TOL) for p in range(n))


def profile(g, gp, radius):
    best = -math.inf
    for i in range(len(g)):
        for j in range(len(g[0])):
            if g[i][j] <= radius + TOL:
                best = max(best, gp[i][j])
    return best


def dense_product(a, b):
    return [
        [sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))]
        for i in range(len(a))
    ]


def propagation(entries, cross):
    """``entries`` are (row, col) index pairs; ``cross`` indexed [col][row]."""
    return max((cross[c][r] for r, c in entries), default=0.0)


def isometries_bruteforce(dist):
    """All permutations preserving distances, by plain enumeration."""
    n = len(dist)
    found = []
    for perm in itertools.permutations(range(n)):
        if all(abs(dist[i][j] - dist[perm[i]][perm[j]]) <= TOL for i in range(n) for j in range(i + 1, n)):
            found.append(perm)
    return found


def max_bipartite_degree(pairs):
    left, right = {}, {}
    for u, v in pairs:
        left[u] = left.get(u, 0) + 1
        right[v] = right.get(v, 0) + 1
    return max(list(left.values()) + list(right.values()), default=0)


def matching_size(adj):
    """Maximum matching by augmenting paths (Kuhn's algorithm)."""
    n, m = len(adj), len(adj[0]) if adj else 0
    match_r = [-1] * m

    def augment(u, seen):
        for v in range(m):
            if adj[u][v] and not seen[v]:
                seen[v] = True
                if match_r[v] < 0 or augment(match_r[v], seen):
                    match_r[v] = u
                    return True
        return False

    return sum(augment(u, [False] * m) for u in range(n))
