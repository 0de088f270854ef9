"""Transfer of an embedding of the binary diamond to the wide diamond in ``Lp([0,1], Y)``.

Elements of ``Lp([0,1], Y)`` are modelled as step functions of finitely many
fair bits.  A step function stores the bits it depends on and a table that
gives, for every assignment, an index into a shared palette of ``Y``-vectors.
The palette is the image of the top-level base embedding, so every value of
every step function is ``phi(rho)`` for a concrete binary-diamond vertex
``rho``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .distortion import Norm, SparseVector, evaluate, norm_powered
from .graphs import HALF, ONE, ZERO, BundleGraph, BundleSpec, VertexCode, build_coded
from .metric import bfs_all_pairs, isometry_apply, isometry_inverse

__all__ = [
    "BaseEmbedding",
    "StepFunction",
    "TransferNode",
    "TransferredEmbedding",
    "UncertifiedBaseError",
    "TooManyBitsError",
    "SUBDIAMONDS",
    "MAX_JOINT_BITS",
    "frechet_base",
    "certify",
    "restrict_to_subdiamond",
    "transfer",
    "lp_distance",
    "lp_distance_powered",
    "bits_used",
]

MAX_JOINT_BITS = 24

# (branch of the binary diamond, half): left = branch 1, right = branch 2
SUBDIAMONDS = {"l+": (1, "up"), "r+": (2, "up"), "l-": (1, "down"), "r-": (2, "down")}


class UncertifiedBaseError(ValueError):
    pass


class TooManyBitsError(ValueError):
    pass


@dataclass(eq=False)
class BaseEmbedding:
    """Map from the vertices of the depth-``k`` binary diamond into a normed space.

    ``origin[i]`` is the index, in the top-level binary diamond, of the vertex
    whose image ``images[i]`` is; it equals ``i`` until the map is restricted.
    """

    graph: BundleGraph
    images: list[SparseVector]
    norm: Norm
    origin: list[int]
    C: Optional[Fraction] = None

    @property
    def depth(self) -> int:
        return self.graph.depth

    def image_of(self, v: VertexCode) -> SparseVector:
        return self.images[self.graph.code_index[v]]


def frechet_base(k: int) -> BaseEmbedding:
    """``v -> (d(v, u))_u`` on the depth-``k`` binary diamond, isometric in the sup norm."""
    if k < 1:
        raise ValueError("k must be at least 1")
    g = build_coded(BundleSpec("diamond", k, 2))
    dm = bfs_all_pairs(g)
    images = [SparseVector({u: int(dm[v, u]) for u in range(g.n)}) for v in range(g.n)]
    return BaseEmbedding(g, images, Norm("sup"), list(range(g.n)), C=Fraction(1))


def certify(base: BaseEmbedding) -> Fraction:
    """Check ``||phi(x) - phi(y)|| <= d(x, y)`` on all pairs and return ``C = 1/colipschitz``.

    Raises :class:`UncertifiedBaseError` if the map expands some pair or
    collapses two vertices, or if the norm cannot be compared exactly.
    """
    if not base.norm.exact:
        raise UncertifiedBaseError(f"norm {base.norm} cannot be certified exactly")
    dm = bfs_all_pairs(base.graph)
    rep = evaluate(base.images, dm, base.norm)
    if not rep.lipschitz_at_most(1):
        i, j = rep.lipschitz_pair
        raise UncertifiedBaseError(
            f"base expands the pair {base.graph.label(i)}, {base.graph.label(j)} "
            f"(ratio {rep.lipschitz:.6g} > 1)"
        )
    if rep.colipschitz_powered == 0:
        raise UncertifiedBaseError("base is not injective")
    q = int(base.norm.q)
    c_q = rep.colipschitz_powered
    if q == 1:
        C = 1 / c_q
    else:
        # the q-th root is only rational if both parts are perfect powers
        num, den = _iroot(c_q.numerator, q), _iroot(c_q.denominator, q)
        C = Fraction(den, num) if num and den else Fraction(1 / rep.colipschitz).limit_denominator(10**12)
    base.C = C
    return C


def _iroot(n: int, q: int) -> Optional[int]:
    r = round(n ** (1.0 / q))
    for c in (r - 1, r, r + 1):
        if c >= 0 and c**q == n:
            return c
    return None


def restrict_to_subdiamond(phi: BaseEmbedding, which: str) -> BaseEmbedding:
    """Restrict ``phi`` to one of the four depth-``k-1`` subdiamonds and relabel.

    The subdiamond is identified with the binary diamond one level down by
    the map that keeps bottom, top, left and right.  Unit edges are kept, so
    distances need no rescaling.
    """
    if which not in SUBDIAMONDS:
        raise ValueError(f"unknown subdiamond {which!r}; expected one of {sorted(SUBDIAMONDS)}")
    k = phi.depth
    if k < 2:
        raise ValueError("only diamonds of depth >= 2 have proper subdiamonds")
    j, half = SUBDIAMONDS[which]
    sub = build_coded(BundleSpec("diamond", k - 1, 2))
    index = phi.graph.code_index
    images, origin = [], []
    for c in sub.codes:
        try:
            i = index[isometry_inverse(half, c, k, j)]
        except (KeyError, ValueError) as exc:
            raise ValueError(f"cannot place {c} inside subdiamond {which}: {exc}") from None
        images.append(phi.images[i])
        origin.append(phi.origin[i])
    return BaseEmbedding(sub, images, phi.norm, origin, C=phi.C)


# ---------------------------------------------------------------------------
# step functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StepFunction:
    """Value ``palette[table[a]]`` on the atom ``a``; bit ``m`` of ``a`` is the bit ``deps[m]``."""

    deps: tuple[int, ...]
    table: np.ndarray
    palette: Sequence[SparseVector] = field(repr=False)

    def __post_init__(self):
        if len(self.table) != 1 << len(self.deps):
            raise ValueError("table must list every assignment of the dependency bits")

    @classmethod
    def constant(cls, index: int, palette) -> "StepFunction":
        return cls((), np.array([index], dtype=np.int32), palette)

    def same_as(self, other: "StepFunction") -> bool:
        return self.deps == other.deps and np.array_equal(self.table, other.table)

    def value_indices(self) -> dict[int, Fraction]:
        """Palette index -> measure of the set where the function takes that value."""
        idx, counts = np.unique(self.table, return_counts=True)
        total = len(self.table)
        return {int(i): Fraction(int(c), total) for i, c in zip(idx, counts)}

    def values(self) -> dict[SparseVector, Fraction]:
        out: dict[SparseVector, Fraction] = {}
        for i, m in self.value_indices().items():
            v = self.palette[i]
            out[v] = out.get(v, 0) + m
        return out

    def at(self, assignment: dict[int, int]) -> int:
        a = sum(assignment[b] << m for m, b in enumerate(self.deps))
        return int(self.table[a])

    def expand(self, deps: Sequence[int]) -> np.ndarray:
        """The table re-indexed over a superset ``deps`` of the dependency bits."""
        pos = {b: m for m, b in enumerate(deps)}
        atoms = np.arange(1 << len(deps), dtype=np.int64)
        idx = np.zeros_like(atoms)
        for m, b in enumerate(self.deps):
            idx |= ((atoms >> pos[b]) & 1) << m
        return self.table[idx]


def _select(bit: int, f0: StepFunction, f1: StepFunction) -> StepFunction:
    """``f0`` where ``bit`` is 0, ``f1`` where it is 1."""
    if f0.same_as(f1):
        return f0
    deps = tuple(sorted(set(f0.deps) | set(f1.deps) | {bit}))
    atoms = np.arange(1 << len(deps), dtype=np.int64)
    b = (atoms >> deps.index(bit)) & 1
    table = np.where(b == 1, f1.expand(deps), f0.expand(deps)).astype(np.int32)
    return StepFunction(deps, table, f0.palette)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class TransferNode:
    """One level of the recursive construction.

    ``selectors[j-1]`` is the bit that chooses between left and right for
    branch ``j``; ``children`` are the four transferred restrictions.
    """

    depth: int
    base: BaseEmbedding
    selectors: tuple[int, ...]
    children: dict[str, "TransferNode"]
    images: dict[VertexCode, StepFunction]


class _Bits:
    def __init__(self):
        self.count = 0

    def take(self, n: int) -> tuple[int, ...]:
        out = tuple(range(self.count, self.count + n))
        self.count += n
        return out


def _build(phi: BaseEmbedding, w: int, bits: _Bits, palette) -> TransferNode:
    k = phi.depth
    g = build_coded(BundleSpec("diamond", k, w))
    b_idx = phi.origin[phi.graph.code_index[VertexCode((), ZERO)]]
    t_idx = phi.origin[phi.graph.code_index[VertexCode((), ONE)]]
    images: dict[VertexCode, StepFunction] = {
        g.codes[0]: StepFunction.constant(b_idx, palette),
        g.codes[1]: StepFunction.constant(t_idx, palette),
    }
    if k == 1:
        sel = bits.take(w)
        left = phi.origin[phi.graph.code_index[VertexCode((1,), HALF)]]
        right = phi.origin[phi.graph.code_index[VertexCode((2,), HALF)]]
        for c in g.codes[2:]:
            images[c] = StepFunction((sel[c.first - 1],), np.array([left, right], dtype=np.int32), palette)
        return TransferNode(1, phi, sel, {}, images)
    children = {name: _build(restrict_to_subdiamond(phi, name), w, bits, palette) for name in SUBDIAMONDS}
    sel = bits.take(w)
    for c in g.codes[2:]:
        j = c.first
        if c.r >= HALF:
            x = isometry_apply("up", c, k, j)
            f0, f1 = children["l+"].images[x], children["r+"].images[x]
        else:
            x = isometry_apply("down", c, k, j)
            f0, f1 = children["l-"].images[x], children["r-"].images[x]
        images[c] = _select(sel[j - 1], f0, f1)
    return TransferNode(k, phi, sel, children, images)


def bits_used(k: int, w: int) -> int:
    """Size of the bit universe: ``g(1) = w``, ``g(k+1) = 4 g(k) + w``."""
    g = w
    for _ in range(k - 1):
        g = 4 * g + w
    return g


@dataclass(eq=False)
class TransferredEmbedding:
    graph: BundleGraph
    functions: list[StepFunction]
    palette: list[SparseVector]
    base: BaseEmbedding
    root: TransferNode
    n_bits: int
    _pal_cache: dict = field(default_factory=dict, repr=False)

    def palette_powered(self, a: int, b: int, p) -> Fraction | float:
        key = (min(a, b), max(a, b), p)
        val = self._pal_cache.get(key)
        if val is None:
            nm = self.base.norm
            diff = self.palette[a] - self.palette[b]
            y = norm_powered(diff, nm)
            if nm.kind == "sup":
                y = y**p if isinstance(p, int) else float(y) ** float(p)
            elif nm.q != p:
                raise ValueError("a p-norm base can only be measured in the same p")
            val = self._pal_cache[key] = y
        return val

    def lp_powered(self, i: int, j: int, p) -> Fraction | float:
        return lp_distance_powered(self.functions[i], self.functions[j], p, self.palette_powered)

    def pairwise_powered(self, p) -> tuple[np.ndarray, int]:
        """Integer matrix ``N`` and denominator ``den`` with ``||f_i - f_j||_p^p = N[i, j] / den``."""
        n = self.graph.n
        vals = {}
        den = 1
        for i in range(n):
            for j in range(i + 1, n):
                v = Fraction(self.lp_powered(i, j, p))
                vals[i, j] = v
                den = math.lcm(den, v.denominator)
        big = any(abs(v.numerator) * (den // v.denominator) >= 1 << 62 for v in vals.values())
        N = np.zeros((n, n), dtype=object if big else np.int64)
        for (i, j), v in vals.items():
            N[i, j] = N[j, i] = v.numerator * (den // v.denominator)
        return N, den

    def provenance_violations(self) -> list[tuple[int, int]]:
        """Pairs ``(vertex, palette index)`` where a value sits at the wrong height."""
        top = self.base.graph
        height = [int(c.r.scale_pow2(top.depth)) for c in top.codes]
        k = self.graph.depth
        bad = []
        for i, f in enumerate(self.functions):
            h = int(self.graph.codes[i].r.scale_pow2(k))
            for idx in set(int(t) for t in f.table):
                if height[idx] != h:
                    bad.append((i, idx))
        return bad


def transfer(phi: BaseEmbedding, w: int, p=None) -> TransferredEmbedding:
    """Step-function images of every vertex of the depth-``k`` diamond of width ``w``.

    ``p`` is accepted for symmetry with the distance functions; the
    construction does not depend on it.
    """
    if w < 2:
        raise ValueError("branching must be at least 2")
    if p is not None and Fraction(p) < 1:
        raise ValueError("p must be >= 1")
    if phi.C is None:
        certify(phi)
    palette = phi.images if phi.origin == list(range(phi.graph.n)) else None
    if palette is None:
        raise UncertifiedBaseError("transfer needs an unrestricted base embedding")
    bits = _Bits()
    root = _build(phi, w, bits, palette)
    g = build_coded(BundleSpec("diamond", phi.depth, w))
    functions = [root.images[c] for c in g.codes]
    return TransferredEmbedding(g, functions, palette, phi, root, bits.count)


def lp_distance_powered(
    f: StepFunction,
    g: StepFunction,
    p,
    palette_powered: Callable[[int, int, object], Fraction | float] | None = None,
) -> Fraction | float:
    """``||f - g||_p^p`` summed over the atoms of the joint refinement."""
    deps = tuple(sorted(set(f.deps) | set(g.deps)))
    if len(deps) > MAX_JOINT_BITS:
        raise TooManyBitsError(f"{len(deps)} joint bits exceed the limit of {MAX_JOINT_BITS}; reduce k")
    if palette_powered is None:
        palette_powered = _default_powered(f.palette)
    a, b = f.expand(deps), g.expand(deps)
    P = max(int(a.max()), int(b.max())) + 1
    keys, counts = np.unique(a.astype(np.int64) * P + b, return_counts=True)
    total = 0
    for key, cnt in zip(keys.tolist(), counts.tolist()):
        x, y = divmod(key, P)
        if x != y:
            total += cnt * palette_powered(x, y, p)
    if isinstance(total, float):
        return total / (1 << len(deps))
    return Fraction(total) / (1 << len(deps))


def _default_powered(palette):
    def fn(a, b, p):
        y = norm_powered(palette[a] - palette[b], "sup")
        return y**p if isinstance(p, int) else float(y) ** float(p)

    return fn


def lp_distance(f: StepFunction, g: StepFunction, p, palette_powered=None) -> float:
    """Float value of the ``Lp`` distance; comparisons should use the powered form."""
    val = lp_distance_powered(f, g, p, palette_powered)
    return float(val) ** (1.0 / float(p))


def pointwise_index(node: TransferNode, x: VertexCode, assignment: dict[int, int]) -> int:
    """Palette index of the value at one point of the bit space, by direct recursion."""
    k = node.depth
    if x.is_terminal:
        idx = node.base.graph.code_index[x]
        return node.base.origin[idx]
    j = x.first
    side = "r" if assignment[node.selectors[j - 1]] else "l"
    if k == 1:
        idx = node.base.graph.code_index[VertexCode((1 if side == "l" else 2,), HALF)]
        return node.base.origin[idx]
    if x.r >= HALF:
        return pointwise_index(node.children[side + "+"], isometry_apply("up", x, k, j), assignment)
    return pointwise_index(node.children[side + "-"], isometry_apply("down", x, k, j), assignment)


def full_expansion_powered(emb: TransferredEmbedding, i: int, j: int, p) -> Fraction:
    """``||f_i - f_j||_p^p`` over every assignment of the whole bit universe."""
    if emb.n_bits > 20:
        raise TooManyBitsError("full expansion is only meant for small instances")
    x, y = emb.graph.codes[i], emb.graph.codes[j]
    total = 0
    for bits in itertools.product((0, 1), repeat=emb.n_bits):
        u = dict(enumerate(bits))
        a, b = pointwise_index(emb.root, x, u), pointwise_index(emb.root, y, u)
        if a != b:
            total += emb.palette_powered(a, b, p)
    return Fraction(total) / (1 << emb.n_bits)
