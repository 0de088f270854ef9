"""Shortest-path metrics on bundle graphs.

BFS is the ground truth.  On coded diamonds there is also a closed-form
distance built from the top-level case split and three self-similarity maps
that identify a half of one branch with the diamond one level down.
"""
from __future__ import annotations

from collections import deque
from typing import Literal

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .dyadic import Dyadic
from .graphs import HALF, ONE, ZERO, BundleGraph, VertexCode

__all__ = [
    "DisconnectedGraphError",
    "bfs_all_pairs",
    "bfs_single_source",
    "closed_form_distance",
    "closed_form_matrix",
    "isometry_apply",
    "isometry_inverse",
    "in_part",
    "is_vertical_pair",
    "vertical_mask",
    "vertical_path_test",
]

Isometry = Literal["down", "up", "flip"]


class DisconnectedGraphError(ValueError):
    def __init__(self, pair: tuple[int, int]):
        super().__init__(f"graph is disconnected: no path between vertices {pair[0]} and {pair[1]}")
        self.pair = pair


def bfs_single_source(g: BundleGraph, source: int) -> np.ndarray:
    return np.asarray(g.bfs_from(source), dtype=np.int64)


def bfs_all_pairs(g: BundleGraph) -> np.ndarray:
    """All-pairs unweighted distances as an ``int64`` matrix in vertex order."""
    if g.n == 0:
        return np.zeros((0, 0), dtype=np.int64)
    e = np.asarray(g.edges, dtype=np.int64).reshape(-1, 2)
    data = np.ones(len(e), dtype=np.int8)
    adj = csr_matrix((data, (e[:, 0], e[:, 1])), shape=(g.n, g.n))
    dist = shortest_path(adj, method="D", directed=False, unweighted=True)
    bad = np.argwhere(np.isinf(dist))
    if len(bad):
        i, j = bad[0]
        raise DisconnectedGraphError((int(i), int(j)))
    return dist.astype(np.int64)


# ---------------------------------------------------------------------------
# self-similarity maps
# ---------------------------------------------------------------------------

def in_part(v: VertexCode, j: int, sign: int) -> bool:
    """Membership in the lower (``sign=-1``) or upper (``sign=+1``) half of branch ``j``.

    The branch midpoint ``({j}, 1/2)`` belongs to both halves; the bottom
    terminal belongs to every lower half and the top to every upper half.
    """
    if v.is_terminal:
        return v.r == (ZERO if sign < 0 else ONE)
    if v.first != j:
        return False
    return v.r <= HALF if sign < 0 else v.r >= HALF


def _shift_down(A: tuple[int, ...], j: int) -> tuple[int, ...]:
    return tuple(a - j for a in A[1:])


def isometry_apply(which: Isometry, v: VertexCode, k: int, j: int) -> VertexCode:
    """Map a vertex of one half of branch ``j`` at depth ``k`` to depth ``k - 1``.

    ``down`` and ``up`` send the lower and upper halves onto the whole
    diamond preserving orientation, ``flip`` sends the upper half upside down.
    """
    if k < 1:
        raise ValueError("depth must be at least 1")
    sign = -1 if which == "down" else 1
    if which not in ("down", "up", "flip"):
        raise ValueError(f"unknown isometry {which!r}")
    if not in_part(v, j, sign):
        half = "lower" if sign < 0 else "upper"
        raise ValueError(f"{v} is not in the {half} half of branch {j}")
    if v.is_terminal:
        return VertexCode((), ZERO) if which == "flip" else v
    A = _shift_down(v.A, j)
    if which == "down":
        r = v.r.double()
    elif which == "up":
        r = v.r.double() - 1
    else:
        r = (ONE - v.r).double()
    return VertexCode(A, r)


def isometry_inverse(which: Isometry, v: VertexCode, k: int, j: int) -> VertexCode:
    """Inverse of :func:`isometry_apply`: a depth ``k - 1`` vertex back into branch ``j`` at depth ``k``."""
    if which not in ("down", "up", "flip"):
        raise ValueError(f"unknown isometry {which!r}")
    if v.depth > k - 1:
        raise ValueError(f"{v} is deeper than k-1={k - 1}")
    mid = VertexCode((j,), HALF)
    if v.is_terminal:
        bottom = v.r == ZERO
        if which == "down":
            return v if bottom else mid
        if which == "up":
            return mid if bottom else v
        return VertexCode((), ONE) if bottom else mid
    A = (j,) + tuple(a + j for a in v.A)
    if which == "down":
        r = v.r.half()
    elif which == "up":
        r = (v.r + 1).half()
    else:
        r = ONE - v.r.half()
    return VertexCode(A, r)


# ---------------------------------------------------------------------------
# closed form
# ---------------------------------------------------------------------------

def _cf(x: VertexCode, y: VertexCode, k: int) -> Dyadic:
    # in units of the full height 2**k
    if x == y:
        return ZERO
    r, s = x.r, y.r
    if x.is_terminal or y.is_terminal:
        return abs(r - s)
    i, j = x.first, y.first
    if i != j:
        return min(2 - r - s, r + s)
    if (r - HALF) * (s - HALF) <= 0:
        # opposite halves of one branch meet only at its midpoint
        return abs(r - s)
    which = "down" if r < HALF else "up"
    sub = _cf(isometry_apply(which, x, k, j), isometry_apply(which, y, k, j), k - 1)
    return sub.half()


def closed_form_distance(x: VertexCode, y: VertexCode, k: int) -> int:
    """Graph distance between two coded vertices of the depth-``k`` diamond."""
    if x.depth > k or y.depth > k:
        raise ValueError(f"codes deeper than k={k}")
    return int(_cf(x, y, k).scale_pow2(k))


def closed_form_matrix(g: BundleGraph) -> np.ndarray:
    if g.codes is None:
        raise ValueError("closed-form distances need a coded diamond")
    k = g.depth
    codes = g.codes
    out = np.zeros((g.n, g.n), dtype=np.int64)
    for a in range(g.n):
        for b in range(a + 1, g.n):
            out[a, b] = out[b, a] = closed_form_distance(codes[a], codes[b], k)
    return out


# ---------------------------------------------------------------------------
# vertical pairs
# ---------------------------------------------------------------------------

def vertical_mask(g: BundleGraph, dm: np.ndarray) -> np.ndarray:
    """Boolean matrix of pairs joined by a geodesic that moves monotonically in height.

    In a bundle a pair is vertical exactly when its distance equals the
    difference of the two levels.
    """
    lev = np.asarray(g.levels, dtype=np.int64)
    return dm == np.abs(lev[:, None] - lev[None, :])


def is_vertical_pair(x: VertexCode, y: VertexCode, k: int) -> bool:
    return closed_form_distance(x, y, k) == abs(int((x.r - y.r).scale_pow2(k)))


def vertical_path_test(x: VertexCode, y: VertexCode, g: BundleGraph) -> bool:
    """Search for a path from ``x`` to ``y`` along which ``r`` strictly increases."""
    if g.codes is None:
        raise ValueError("vertical path test needs a coded diamond")
    if x == y:
        return True
    if x.r > y.r:
        x, y = y, x
    if x.r == y.r:
        return False
    index = g.code_index
    codes = g.codes
    start, goal = index[x], index[y]
    seen = {start}
    queue = deque([start])
    adj = g.adjacency
    while queue:
        u = queue.popleft()
        ru = codes[u].r
        for v in adj[u]:
            rv = codes[v].r
            if rv <= ru or rv > y.r or v in seen:
                continue
            if v == goal:
                return True
            seen.add(v)
            queue.append(v)
    return False
