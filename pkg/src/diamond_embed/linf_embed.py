"""Tree embedding of coded diamonds into a sup-norm space.

A vertex ``(A, r)`` goes to ``sum over prefixes D of A of c_k(|D|, r) * y_D``
where ``y_D`` are unit vectors indexed by the nodes of a coordinate tree and
``c_k`` is a small integer coefficient family defined by halving recursion.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Literal, Sequence

import numpy as np

from .distortion import SparseVector
from .dyadic import Dyadic, dyadic_level
from .graphs import HALF, ONE, ZERO, BundleGraph, VertexCode, admissible_sets

__all__ = [
    "CoefficientTable",
    "GoodTree",
    "coefficients",
    "psi",
    "psi_all",
    "psi_matrix",
    "functional_coordinate",
    "lp_parameter",
]


@lru_cache(maxsize=None)
def _coef(k: int, i: int, r: Dyadic) -> int:
    if k == 1:
        if i == 0:
            return int(r.double())
        if i == 1 and r == HALF:
            return 1
        raise ValueError(f"c_1({i}, {r}) is undefined")
    if i == 0:
        return int(r.scale_pow2(k))
    if r <= HALF:
        return _coef(k - 1, i - 1, r.double())
    return _coef(k - 1, i - 1, (ONE - r).double())


class CoefficientTable:
    """The coefficients ``c_k(i, r)`` for ``0 <= i <= k``.

    ``r`` ranges over dyadics whose level ``m`` satisfies ``i <= m <= k``;
    for ``i = 0`` the endpoints 0 and 1 are allowed too.
    """

    def __init__(self, k: int):
        if k < 1:
            raise ValueError("coefficients start at k = 1")
        self.k = k

    def _check(self, i: int, r: Dyadic):
        try:
            m = dyadic_level(r)
        except ValueError:
            raise ValueError(f"r={r} outside [0, 1]") from None
        if not (0 <= i <= self.k and i <= m <= self.k):
            raise ValueError(f"c_{self.k}({i}, {r}) is outside the table")

    def __call__(self, i: int, r) -> int:
        r = Dyadic._coerce(r) if not isinstance(r, Dyadic) else r
        if r is None:
            raise ValueError("r must be dyadic")
        self._check(i, r)
        return _coef(self.k, i, r)

    def items(self) -> Iterable[tuple[int, Dyadic, int]]:
        """All ``(i, r, c_k(i, r))`` in the table, sorted by ``i`` then ``r``."""
        for i in range(self.k + 1):
            rs = [ZERO, ONE] if i == 0 else []
            for m in range(max(i, 1), self.k + 1):
                rs.extend(Dyadic(num, m) for num in range(1, 1 << m, 2))
            for r in sorted(rs):
                yield i, r, _coef(self.k, i, r)


def coefficients(k: int) -> CoefficientTable:
    return CoefficientTable(k)


class GoodTree:
    """Coordinate tree on admissible sets.

    Nodes are ordered by ``max(A)`` (0 for the empty set), ties broken
    lexicographically.  With ``mode="injective"`` every node gets its own
    coordinate; ``mode="max"`` puts ``A`` on coordinate ``max(A)`` instead,
    so distinct nodes share unit vectors.
    """

    def __init__(self, k: int, w: int, mode: Literal["injective", "max"] = "injective"):
        if mode not in ("injective", "max"):
            raise ValueError(f"unknown tree mode {mode!r}")
        self.k, self.w, self.mode = k, w, mode
        self.nodes: tuple[tuple[int, ...], ...] = tuple(
            sorted(admissible_sets(k, w), key=lambda A: (A[-1] if A else 0, A))
        )
        if mode == "injective":
            self.coord = {A: i for i, A in enumerate(self.nodes)}
        else:
            self.coord = {A: (A[-1] if A else 0) for A in self.nodes}

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, A) -> bool:
        return tuple(A) in self.coord

    @property
    def dimension(self) -> int:
        return len(set(self.coord.values()))

    def key(self, A: Sequence[int]) -> int:
        try:
            return self.coord[tuple(A)]
        except KeyError:
            raise KeyError(f"tree has no node {set(A) or '{}'}") from None


def psi(k: int, v: VertexCode, tree: GoodTree, table: CoefficientTable | None = None) -> SparseVector:
    if v.depth > k:
        raise ValueError(f"{v} is deeper than k={k}")
    table = table or coefficients(k)
    out: dict[int, int] = {}
    for m in range(v.depth + 1):
        key = tree.key(v.A[:m])
        c = table(m, v.r)
        out[key] = out.get(key, 0) + c
    return SparseVector(out)


def psi_all(g: BundleGraph, tree: GoodTree | None = None) -> list[SparseVector]:
    """Images of every vertex of a coded diamond, in vertex order."""
    if g.codes is None:
        raise ValueError("psi needs a coded diamond")
    k = g.depth
    if k == 0:
        # one edge: b -> 0, t -> y_empty
        return [SparseVector({0: int(c.r)}) for c in g.codes]
    tree = tree or GoodTree(k, g.branching)
    table = coefficients(k)
    return [psi(k, c, tree, table) for c in g.codes]


def psi_matrix(g: BundleGraph, tree: GoodTree | None = None) -> np.ndarray:
    """Dense integer image matrix, one row per vertex, one column per tree coordinate."""
    tree = tree or GoodTree(max(g.depth, 1), g.branching)
    imgs = psi_all(g, tree)
    M = np.zeros((g.n, max(tree.coord.values()) + 1), dtype=np.int64)
    for i, v in enumerate(imgs):
        for key, val in v.items():
            M[i, key] = int(val)
    return M


def functional_coordinate(v: VertexCode, k: int, tree: GoodTree | None = None) -> int:
    """The coordinate of the image along ``y_empty``; equals ``r * 2**k``."""
    if k == 0:
        return int(v.r)
    tree = tree or GoodTree(k, max([2, *(b - a for a, b in zip((0,) + v.A, v.A))]))
    return int(psi(k, v, tree)[tree.key(())])


def lp_parameter(k: int, eps) -> int:
    """Smallest integer ``p >= 1`` with ``(1 + eps/3)**p >= 2k + 2``, decided exactly."""
    e = Fraction(str(eps)) if isinstance(eps, float) else Fraction(eps)
    if e <= 0:
        raise ValueError("eps must be positive")
    base, target = 1 + e / 3, 2 * k + 2
    guess = max(1, math.ceil(math.log(target) / math.log(float(base))) - 2)
    while guess > 1 and base ** (guess - 1) >= target:
        guess -= 1
    while base**guess < target:
        guess += 1
    return guess
