"""Bipartite matchings and Δ-edge-colourings."""

import numpy as np
from scipy.sparse import csr_array
from scipy.sparse.csgraph import maximum_bipartite_matching


def max_degree(edges, n_left, n_right):
    if not edges:
        return 0
    left = np.bincount([u for u, _ in edges], minlength=n_left)
    right = np.bincount([v for _, v in edges], minlength=n_right)
    return int(max(left.max(), right.max()))


def edge_coloring(edges, n_left, n_right):
    """Split a simple bipartite graph into max-degree many matchings.

    Kőnig's alternating-path recolouring: an edge ``(u, v)`` whose smallest
    free colours ``a`` (at u) and ``b`` (at v) differ first swaps ``a``/``b``
    along the alternating path leaving ``v``, which never reaches ``u``.
    Edges are processed in sorted order, so the result is deterministic.

    Returns a list of matchings, each a sorted list of ``(u, v)`` pairs.
    """
    edges = sorted(set((int(u), int(v)) for u, v in edges))
    delta = max_degree(edges, n_left, n_right)
    at_u = [dict() for _ in range(n_left)]  # colour -> v
    at_v = [dict() for _ in range(n_right)]  # colour -> u

    def free(used):
        c = 0
        while c in used:
            c += 1
        return c

    for u, v in edges:
        a = free(at_u[u])
        b = free(at_v[v])
        if a in at_v[v]:
            # walk v -a- u1 -b- v1 -a- ... and swap a <-> b on it
            path = []
            side, node, c = "v", v, a
            while True:
                table = at_v if side == "v" else at_u
                nxt = table[node].get(c)
                if nxt is None:
                    break
                path.append((side, node, nxt, c))
                side = "u" if side == "v" else "v"
                node, c = nxt, (b if c == a else a)
            for side, node, nxt, c in path:
                pu, pv = (nxt, node) if side == "v" else (node, nxt)
                del at_u[pu][c]
                del at_v[pv][c]
            for side, node, nxt, c in path:
                pu, pv = (nxt, node) if side == "v" else (node, nxt)
                swapped = b if c == a else a
                at_u[pu][swapped] = pv
                at_v[pv][swapped] = pu
        at_u[u][a] = v
        at_v[v][a] = u

    classes = [[] for _ in range(delta)]
    for u in range(n_left):
        for c, v in at_u[u].items():
            classes[c].append((u, v))
    return [sorted(cls) for cls in classes if cls]


def maximum_matching(adjacency):
    """Maximum matching of a boolean ``(n_left, n_right)`` adjacency matrix.

    Returns sorted ``(u, v)`` pairs.
    """
    adjacency = np.asarray(adjacency, dtype=bool)
    if adjacency.size == 0 or not adjacency.any():
        return []
    graph = csr_array(adjacency.astype(np.int8))
    match = maximum_bipartite_matching(graph, perm_type="column")
    return [(u, int(v)) for u, v in enumerate(match) if v >= 0]
