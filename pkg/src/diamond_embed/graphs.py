"""Bundle graphs: the recursive edge-substitution product and the coded diamonds.

Two independent constructions of the truncated countably branching diamond
are provided.  ``build_recursive`` iterates the substitution product on a base
bundle, ``build_coded`` writes down the vertex set ``(A, r)`` directly.
``check_isomorphism`` ties them together.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Optional, Sequence

import networkx as nx

from .dyadic import Dyadic

__all__ = [
    "VertexCode",
    "BundleGraph",
    "BundleSpec",
    "NotABundleError",
    "NotIsomorphicError",
    "ZERO",
    "ONE",
    "HALF",
    "single_edge",
    "diamond_base",
    "laakso_base",
    "parasol_base",
    "base_graph",
    "oslash_product",
    "bundle_violation",
    "build_recursive",
    "build_coded",
    "admissible_sets",
    "up_down_edge",
    "check_isomorphism",
    "count_recursive",
    "enumerate_codes",
]

ZERO = Dyadic(0)
ONE = Dyadic(1)
HALF = Dyadic(1, 1)

FAMILIES = ("diamond", "laakso", "parasol", "custom")


class NotABundleError(ValueError):
    """Raised when a graph fails the equal-length bottom-top path property."""

    def __init__(self, message: str, paths: tuple[list[int], list[int]] | None = None):
        super().__init__(message)
        self.paths = paths


class NotIsomorphicError(ValueError):
    def __init__(self, message: str, witness: dict | None = None):
        super().__init__(message)
        self.witness = witness or {}


@dataclass(frozen=True)
class VertexCode:
    """Coded diamond vertex ``(A, r)`` with ``r`` in level ``|A|``."""

    A: tuple[int, ...]
    r: Dyadic

    def __post_init__(self):
        if not isinstance(self.A, tuple):
            object.__setattr__(self, "A", tuple(self.A))
        if not isinstance(self.r, Dyadic):
            object.__setattr__(self, "r", Dyadic._coerce(self.r))
        A = self.A
        if any(a < 1 for a in A) or any(b <= a for a, b in zip(A, A[1:])):
            raise ValueError(f"A must be strictly increasing positive integers, got {A}")
        if self.r is None or not self.r.in_level(len(A)):
            raise ValueError(f"r={self.r} is not in level {len(A)}")

    @property
    def depth(self) -> int:
        return len(self.A)

    @property
    def is_terminal(self) -> bool:
        return not self.A

    @property
    def first(self) -> int:
        """``min(A)``; 0 for the terminals."""
        return self.A[0] if self.A else 0

    def sigma(self) -> tuple[int, ...]:
        """Binary digits of ``r``, one per element of ``A``."""
        return self.r.bits(len(self.A)) if self.A else ()

    def restrict(self, m: int) -> tuple[int, ...]:
        return self.A[:m]

    def admissible(self, w: int) -> bool:
        return _admissible(self.A, w)

    def __str__(self) -> str:
        return "({" + ",".join(map(str, self.A)) + "}," + str(self.r) + ")"


def _admissible(A: Sequence[int], w: int) -> bool:
    prev = 0
    for a in A:
        if not 1 <= a - prev <= w:
            return False
        prev = a
    return True


def admissible_sets(k: int, w: int) -> Iterator[tuple[int, ...]]:
    """All sets with at most ``k`` elements, first element and gaps at most ``w``.

    Ordered by size, then lexicographically.
    """
    yield ()
    level = [()]
    for _ in range(k):
        nxt = []
        for A in level:
            last = A[-1] if A else 0
            for j in range(1, w + 1):
                nxt.append(A + (last + j,))
        yield from nxt
        level = nxt


@dataclass(frozen=True, eq=False)
class BundleGraph:
    """Finite bundle with terminals ``bottom`` and ``top``.

    ``edges`` holds sorted index pairs ``(i, j)`` with ``i < j``.  ``codes`` is
    set for coded diamonds.  ``origins[i]`` records how vertex ``i`` was created
    by the substitution product: ``(u, v, j)`` means the ``j``-th internal
    vertex of the base substituted into the edge oriented ``u -> v``.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    bottom: int
    top: int
    height: int
    family: str = "custom"
    depth: int = 0
    branching: int = 0
    codes: Optional[tuple[VertexCode, ...]] = None
    origins: Optional[tuple[Optional[tuple[int, int, int]], ...]] = None
    names: Optional[tuple[str, ...]] = field(default=None, repr=False)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    @cached_property
    def code_index(self) -> dict[VertexCode, int]:
        if self.codes is None:
            raise ValueError("graph carries no vertex codes")
        return {c: i for i, c in enumerate(self.codes)}

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edge_set

    def bfs_from(self, source: int) -> list[int]:
        dist = [-1] * self.n
        dist[source] = 0
        queue = deque([source])
        adj = self.adjacency
        while queue:
            u = queue.popleft()
            du = dist[u] + 1
            for v in adj[u]:
                if dist[v] < 0:
                    dist[v] = du
                    queue.append(v)
        return dist

    @cached_property
    def levels(self) -> tuple[int, ...]:
        """Distance of every vertex from the bottom terminal."""
        return tuple(self.bfs_from(self.bottom))

    def label(self, i: int) -> str:
        if self.codes is not None:
            return str(self.codes[i])
        if self.names is not None:
            return self.names[i]
        return str(i)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        for i in range(self.n):
            term = "b" if i == self.bottom else "t" if i == self.top else ""
            g.add_node(i, term=term)
        g.add_edges_from(self.edges)
        return g

    def __repr__(self) -> str:
        return (
            f"BundleGraph(family={self.family!r}, depth={self.depth}, branching={self.branching}, "
            f"n={self.n}, edges={len(self.edges)}, height={self.height})"
        )


def _make_edges(pairs) -> tuple[tuple[int, int], ...]:
    out = set()
    for i, j in pairs:
        if i == j:
            raise ValueError(f"loop at vertex {i}")
        out.add((i, j) if i < j else (j, i))
    return tuple(sorted(out))


def single_edge() -> BundleGraph:
    """The two-vertex bundle, used as the zeroth power of every base."""
    return BundleGraph(n=2, edges=((0, 1),), bottom=0, top=1, height=1, depth=0)


def diamond_base(w: int) -> BundleGraph:
    """``K_{2,w}``: bottom 0, top 1, midpoints ``2..w+1``."""
    _check_width(w, 2)
    edges = [(0, 1 + j) for j in range(1, w + 1)] + [(1 + j, 1) for j in range(1, w + 1)]
    return BundleGraph(n=w + 2, edges=_make_edges(edges), bottom=0, top=1, height=2,
                       family="diamond", depth=1, branching=w)


def laakso_base(w: int) -> BundleGraph:
    """Height-4 Laakso bundle: a fan of ``w`` midpoints between two hub vertices."""
    _check_width(w, 2)
    lower, upper = 2, 3
    fan = range(4, 4 + w)
    edges = [(0, lower), (upper, 1)] + [(lower, f) for f in fan] + [(f, upper) for f in fan]
    return BundleGraph(n=4 + w, edges=_make_edges(edges), bottom=0, top=1, height=4,
                       family="laakso", depth=1, branching=w)


def parasol_base(w: int) -> BundleGraph:
    """Height-3 parasol: handle edge from the bottom, then a fan up to the tip."""
    _check_width(w, 2)
    handle = 2
    fan = range(3, 3 + w)
    edges = [(0, handle)] + [(handle, f) for f in fan] + [(f, 1) for f in fan]
    return BundleGraph(n=3 + w, edges=_make_edges(edges), bottom=0, top=1, height=3,
                       family="parasol", depth=1, branching=w)


def _check_width(w: int, minimum: int):
    if not isinstance(w, int) or w < minimum:
        raise ValueError(f"branching must be an integer >= {minimum}, got {w!r}")


def base_graph(family: str, w: int) -> BundleGraph:
    try:
        return {"diamond": diamond_base, "laakso": laakso_base, "parasol": parasol_base}[family](w)
    except KeyError:
        raise ValueError(f"no built-in base for family {family!r}") from None


@dataclass(frozen=True)
class BundleSpec:
    family: str
    depth: int
    branching: int
    base: Optional[BundleGraph] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if not isinstance(self.depth, int) or self.depth < 0:
            raise ValueError(f"depth must be a non-negative integer, got {self.depth!r}")
        _check_width(self.branching, 2)
        if self.family == "custom":
            if self.base is None:
                raise ValueError("custom family needs a base graph")
            msg = bundle_violation(self.base)
            if msg:
                raise NotABundleError(msg)

    def base_graph(self) -> BundleGraph:
        return self.base if self.family == "custom" else base_graph(self.family, self.branching)


# ---------------------------------------------------------------------------
# bundle property
# ---------------------------------------------------------------------------

def _simple_paths(g: BundleGraph, budget: int) -> Iterator[list[int]]:
    adj = g.adjacency
    target = g.top
    path = [g.bottom]
    on_path = {g.bottom}
    stack = [iter(adj[g.bottom])]
    found = 0
    steps = 0
    step_cap = budget * max(4, g.n)
    while stack:
        steps += 1
        if steps > step_cap:
            return
        nxt = next(stack[-1], None)
        if nxt is None:
            stack.pop()
            on_path.discard(path.pop())
            continue
        if nxt in on_path:
            continue
        if nxt == target:
            found += 1
            yield path + [target]
            if found >= budget:
                return
            continue
        path.append(nxt)
        on_path.add(nxt)
        stack.append(iter(adj[nxt]))


def bundle_violation(g: BundleGraph, budget: int = 10_000) -> str | None:
    """Return a diagnostic if ``g`` is not a bundle, else ``None``.

    Simple bottom-top paths are enumerated up to ``budget``; the first pair of
    unequal length is reported.  Past the budget only the necessary condition
    ``d(b, x) + d(x, t) = h`` is checked.
    """
    from_bottom = g.bfs_from(g.bottom)
    unreachable = [i for i, d in enumerate(from_bottom) if d < 0]
    if unreachable:
        return f"disconnected: vertex {g.label(unreachable[0])} unreachable from bottom"
    if g.bottom == g.top:
        return "bottom and top coincide"
    first: list[int] | None = None
    for p in _simple_paths(g, budget):
        if first is None:
            first = p
        elif len(p) != len(first):
            return (
                f"simple bottom-top paths of unequal length: "
                f"{[g.label(i) for i in first]} (length {len(first) - 1}) vs "
                f"{[g.label(i) for i in p]} (length {len(p) - 1})"
            )
    h = from_bottom[g.top]
    if first is not None and len(first) - 1 != h:
        return f"path length {len(first) - 1} differs from terminal distance {h}"
    from_top = g.bfs_from(g.top)
    for i in range(g.n):
        if from_bottom[i] + from_top[i] != h:
            return (
                f"vertex {g.label(i)} has d(bottom, v) + d(v, top) = "
                f"{from_bottom[i] + from_top[i]} != height {h}"
            )
    if g.height != h:
        return f"declared height {g.height} differs from terminal distance {h}"
    return None


def _require_bundle(g: BundleGraph, name: str):
    msg = bundle_violation(g)
    if msg:
        raise NotABundleError(f"{name} is not a bundle: {msg}")


# ---------------------------------------------------------------------------
# substitution product
# ---------------------------------------------------------------------------

def oslash_product(H: BundleGraph, G: BundleGraph, *, validate: bool = True) -> BundleGraph:
    """Replace every edge of ``H`` by a copy of ``G``.

    Edges of ``H`` are oriented from the endpoint nearer the bottom terminal
    to the one nearer the top; ``G``'s bottom is glued to the tail.  The old
    vertices keep their indices; new vertices follow in edge order.
    """
    if validate:
        _require_bundle(H, "left factor")
        _require_bundle(G, "right factor")
    lev = H.levels
    internal = [i for i in range(G.n) if i not in (G.bottom, G.top)]
    pos = {g: idx for idx, g in enumerate(internal)}
    m = len(internal)
    edges: list[tuple[int, int]] = []
    origins: list = list(H.origins) if H.origins is not None else [None] * H.n
    n = H.n
    for e_idx, (a, b) in enumerate(H.edges):
        u, v = (a, b) if (lev[a], a) <= (lev[b], b) else (b, a)
        base = H.n + e_idx * m

        def vid(x: int) -> int:
            if x == G.bottom:
                return u
            if x == G.top:
                return v
            return base + pos[x]

        for x, y in G.edges:
            edges.append((vid(x), vid(y)))
        for j, _ in enumerate(internal, start=1):
            origins.append((u, v, j))
        n += m
    out = BundleGraph(
        n=n,
        edges=_make_edges(edges),
        bottom=H.bottom,
        top=H.top,
        height=H.height * G.height,
        family=G.family if H.depth == 0 or H.family == G.family else "custom",
        depth=H.depth + G.depth if G.depth else H.depth,
        branching=G.branching or H.branching,
        origins=tuple(origins),
    )
    return out


def build_recursive(spec: BundleSpec) -> BundleGraph:
    """``base`` substituted into itself ``depth`` times, starting from one edge."""
    base = spec.base_graph()
    _require_bundle(base, "base")
    g = single_edge()
    for _ in range(spec.depth):
        g = oslash_product(g, base, validate=False)
    return BundleGraph(
        n=g.n, edges=g.edges, bottom=g.bottom, top=g.top, height=g.height,
        family=spec.family, depth=spec.depth, branching=spec.branching,
        origins=g.origins,
    )


# ---------------------------------------------------------------------------
# coded diamonds
# ---------------------------------------------------------------------------

def _maximal_neighbours(B: tuple[int, ...], s: Dyadic) -> tuple[VertexCode, VertexCode]:
    """(up, down) neighbours of a maximal-level code ``(B, s)``."""
    k = len(B)
    sigma = s.bits(k)
    step = Dyadic(1, k)
    i_minus = max((i for i in range(1, k) if sigma[i - 1] == 1), default=0)
    i_plus = max((i for i in range(1, k) if sigma[i - 1] == 0), default=0)
    down = VertexCode(B[:i_minus], s - step) if i_minus else VertexCode((), ZERO)
    up = VertexCode(B[:i_plus], s + step) if i_plus else VertexCode((), ONE)
    return up, down


def up_down_edge(v: VertexCode, k: int) -> tuple[VertexCode, VertexCode]:
    """The unique depth-``k-1`` edge ``(up, down)`` whose midpoint is ``v``."""
    if k < 1 or v.depth != k:
        raise ValueError(f"{v} is not a maximal-level code at depth {k}")
    return _maximal_neighbours(v.A, v.r)


def build_coded(spec: BundleSpec) -> BundleGraph:
    """The coded diamond: admissible codes ``(A, r)`` with ``|A| <= depth``."""
    if spec.family != "diamond":
        raise ValueError(f"the coding only describes diamonds, not {spec.family!r}")
    k, w = spec.depth, spec.branching
    codes: list[VertexCode] = [VertexCode((), ZERO), VertexCode((), ONE)]
    for A in admissible_sets(k, w):
        if not A:
            continue
        m = len(A)
        for num in range(1, 1 << m, 2):
            codes.append(VertexCode(A, Dyadic(num, m)))
    index = {c: i for i, c in enumerate(codes)}
    if k == 0:
        edges = [(0, 1)]
    else:
        edges = []
        for i, c in enumerate(codes):
            if c.depth == k:
                up, down = _maximal_neighbours(c.A, c.r)
                edges.append((i, index[up]))
                edges.append((i, index[down]))
    return BundleGraph(
        n=len(codes), edges=_make_edges(edges), bottom=0, top=1, height=1 << k,
        family="diamond", depth=k, branching=w, codes=tuple(codes),
    )


# ---------------------------------------------------------------------------
# isomorphism
# ---------------------------------------------------------------------------

def _recipe_codes(g: BundleGraph) -> list[VertexCode] | None:
    """Code every vertex of a recursively built diamond by following its origins."""
    if g.origins is None or g.family != "diamond":
        return None
    phi: list[Optional[VertexCode]] = [None] * g.n
    phi[g.bottom] = VertexCode((), ZERO)
    phi[g.top] = VertexCode((), ONE)
    for i, origin in enumerate(g.origins):
        if origin is None:
            continue
        u, v, j = origin
        a, b = phi[u], phi[v]
        if a is None or b is None:
            return None
        B = a if a.depth >= b.depth else b
        last = B.A[-1] if B.A else 0
        try:
            phi[i] = VertexCode(B.A + (last + j,), (a.r + b.r).half())
        except ValueError:
            return None
    if any(p is None for p in phi):
        return None
    return phi  # type: ignore[return-value]


def _verify_mapping(g1: BundleGraph, g2: BundleGraph, mapping: Sequence[int]) -> bool:
    if len(set(mapping)) != g1.n or g1.n != g2.n or len(g1.edges) != len(g2.edges):
        return False
    if mapping[g1.bottom] != g2.bottom or mapping[g1.top] != g2.top:
        return False
    return all(g2.has_edge(mapping[i], mapping[j]) for i, j in g1.edges)


def _witness(g1: BundleGraph, g2: BundleGraph) -> dict | None:
    if g1.n != g2.n:
        return {"reason": "vertex count", "left": g1.n, "right": g2.n}
    if len(g1.edges) != len(g2.edges):
        return {"reason": "edge count", "left": len(g1.edges), "right": len(g2.edges)}
    d1 = sorted(len(a) for a in g1.adjacency)
    d2 = sorted(len(a) for a in g2.adjacency)
    if d1 != d2:
        first = next(i for i, (x, y) in enumerate(zip(d1, d2)) if x != y)
        return {"reason": "degree sequence", "position": first, "left": d1[first], "right": d2[first]}
    t1 = (len(g1.adjacency[g1.bottom]), len(g1.adjacency[g1.top]))
    t2 = (len(g2.adjacency[g2.bottom]), len(g2.adjacency[g2.top]))
    if t1 != t2:
        return {"reason": "terminal degrees", "left": t1, "right": t2}
    return None


def check_isomorphism(g1: BundleGraph, g2: BundleGraph) -> dict[int, int]:
    """Terminal-preserving isomorphism from ``g1`` onto ``g2`` as an index map.

    A recursively built diamond paired with a coded one is matched by coding
    each substituted vertex from its parent edge; anything else falls back to
    a VF2 search.  Raises :class:`NotIsomorphicError` with a witness.
    """
    for left, right, flip in ((g1, g2, False), (g2, g1, True)):
        if left.origins is not None and right.codes is not None:
            phi = _recipe_codes(left)
            if phi is None:
                continue
            index = right.code_index
            if all(c in index for c in phi):
                mapping = [index[c] for c in phi]
                if _verify_mapping(left, right, mapping):
                    if flip:
                        inv = [0] * len(mapping)
                        for i, m in enumerate(mapping):
                            inv[m] = i
                        mapping = inv
                    return dict(enumerate(mapping))

    witness = _witness(g1, g2)
    if witness:
        raise NotIsomorphicError(f"not isomorphic: {witness['reason']} differs", witness)
    matcher = nx.isomorphism.GraphMatcher(
        g1.to_networkx(), g2.to_networkx(),
        node_match=lambda a, b: a["term"] == b["term"],
    )
    for m in matcher.isomorphisms_iter():
        return dict(sorted(m.items()))
    raise NotIsomorphicError(
        "not isomorphic: no terminal-preserving bijection preserves adjacency",
        {"reason": "exhaustive search"},
    )


def count_recursive(k: int, w: int) -> tuple[int, int]:
    """Vertex and edge counts of the depth-``k`` diamond from the size recursion."""
    v, e = 2, 1
    for _ in range(k):
        v, e = v + w * e, 2 * w * e
    return v, e


def enumerate_codes(k: int, w: int) -> Iterator[VertexCode]:
    """Admissible codes in the order used by :func:`build_coded`."""
    yield VertexCode((), ZERO)
    yield VertexCode((), ONE)
    for A in itertools.islice(admissible_sets(k, w), 1, None):
        m = len(A)
        for num in range(1, 1 << m, 2):
            yield VertexCode(A, Dyadic(num, m))
