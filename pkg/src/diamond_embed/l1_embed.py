"""Embedding of coded diamonds into L1 through events in a Bernoulli product space.

There is one fair sign ``eps_D`` per nonempty admissible set ``D``.  Vertex
``(A, r)`` is sent to ``2**k`` times the indicator of an event ``S(A, r)`` of
probability ``r``, built as a disjoint union of cylinders.  All measures are
exact dyadics; nothing is sampled.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dyadic import Dyadic
from .graphs import HALF, ONE, ZERO, BundleGraph, VertexCode
from .metric import isometry_apply

__all__ = [
    "CylinderEvent",
    "EventSet",
    "OverlapError",
    "EMPTY",
    "FULL",
    "build_T",
    "build_S",
    "measure",
    "symmetric_difference_measure",
    "intersection_measure",
    "is_subset",
    "l1_embedding_distance",
    "l1_closed_form",
    "l1_distance_matrix",
]

Var = tuple[int, ...]


@dataclass(frozen=True)
class CylinderEvent:
    """``{eps_v = sign_v for every constrained v}``; sorted ``(var, sign)`` pairs."""

    constraints: tuple[tuple[Var, int], ...]

    def __post_init__(self):
        seen = {}
        for var, sign in self.constraints:
            if sign not in (1, -1):
                raise ValueError(f"sign must be +1 or -1, got {sign}")
            if seen.setdefault(var, sign) != sign:
                raise ValueError(f"variable {var} constrained to both signs")
        object.__setattr__(self, "constraints", tuple(sorted(seen.items())))

    @classmethod
    def of(cls, mapping: Mapping[Var, int]) -> "CylinderEvent":
        return cls(tuple(mapping.items()))

    @property
    def variables(self) -> frozenset[Var]:
        return frozenset(v for v, _ in self.constraints)

    def measure(self) -> Dyadic:
        return Dyadic(1, len(self.constraints))

    def as_dict(self) -> dict[Var, int]:
        return dict(self.constraints)

    def disjoint_from(self, other: "CylinderEvent") -> bool:
        mine = self.as_dict()
        return any(mine.get(v, s) != s for v, s in other.constraints)

    def __str__(self) -> str:
        if not self.constraints:
            return "Omega"
        return " & ".join(
            "eps{" + ",".join(map(str, v)) + "}=" + ("+1" if s > 0 else "-1") for v, s in self.constraints
        )


class OverlapError(ValueError):
    pass


class EventSet:
    """Finite union of pairwise-disjoint cylinders.

    Disjointness is checked on construction: every two cylinders must give
    some shared variable opposite signs.
    """

    __slots__ = ("cylinders",)

    def __init__(self, cylinders: Iterable[CylinderEvent] = ()):
        cyl = tuple(cylinders)
        for a, b in combinations(cyl, 2):
            if not a.disjoint_from(b):
                raise OverlapError(f"cylinders overlap: [{a}] and [{b}]")
        self.cylinders = cyl

    @property
    def variables(self) -> frozenset[Var]:
        out: set[Var] = set()
        for c in self.cylinders:
            out |= c.variables
        return frozenset(out)

    def measure(self) -> Dyadic:
        return sum((c.measure() for c in self.cylinders), ZERO)

    def is_empty(self) -> bool:
        return not self.cylinders

    def __len__(self) -> int:
        return len(self.cylinders)

    def __repr__(self) -> str:
        if not self.cylinders:
            return "EventSet(EMPTY)"
        return "EventSet(" + " | ".join(f"[{c}]" for c in self.cylinders) + ")"

    def indicator(self, variables: Sequence[Var]) -> np.ndarray:
        """Membership of each atom over ``variables``; atom ``a`` sets bit ``m`` of ``a`` to mean ``+1``."""
        pos = {v: m for m, v in enumerate(variables)}
        atoms = np.arange(1 << len(variables), dtype=np.int64)
        hit = np.zeros(len(atoms), dtype=bool)
        for c in self.cylinders:
            ok = np.ones(len(atoms), dtype=bool)
            for var, sign in c.constraints:
                bit = (atoms >> pos[var]) & 1
                ok &= bit == (1 if sign > 0 else 0)
            hit |= ok
        return hit


EMPTY = EventSet()
FULL = EventSet([CylinderEvent(())])


def measure(S: EventSet) -> Dyadic:
    return S.measure()


def _digits(A: Sequence[int], r: Dyadic) -> tuple[int, ...]:
    if not 0 < r < 1:
        raise ValueError(f"r={r} must lie strictly between 0 and 1")
    return r.bits(len(A))


def build_T(k: int, A: Sequence[int], r: Dyadic, i: int) -> CylinderEvent:
    """``{eps_{A|i} = +1}`` intersected with sign conditions on the shorter prefixes.

    ``eps_{A|m}`` must be ``-1`` where the ``m``-th binary digit of ``r`` is 1
    and ``+1`` where it is 0.
    """
    A = tuple(A)
    if len(A) > k:
        raise ValueError(f"|A| = {len(A)} exceeds k = {k}")
    sigma = _digits(A, r)
    if not 1 <= i <= len(A) or sigma[i - 1] != 1:
        raise ValueError(f"digit {i} of {r} is not 1")
    cons = {A[:i]: 1}
    for m in range(1, i):
        cons[A[:m]] = -1 if sigma[m - 1] else 1
    return CylinderEvent.of(cons)


def build_S(k: int, v: VertexCode | tuple[Sequence[int], Dyadic]) -> EventSet:
    """Disjoint union of ``build_T`` over the digits of ``r`` equal to 1.

    Also accepts a raw ``(A, r)`` whose ``r`` has fewer binary digits than
    ``|A|``; trailing prefixes then carry no constraint.
    """
    A, r = (v.A, v.r) if isinstance(v, VertexCode) else (tuple(v[0]), v[1])
    if not A:
        if r == ZERO:
            return EMPTY
        if r == ONE:
            return FULL
        raise ValueError(f"terminal label must be 0 or 1, got {r}")
    sigma = _digits(A, r)
    return EventSet(build_T(k, A, r, i) for i in range(1, len(A) + 1) if sigma[i - 1])


def _joint(S1: EventSet, S2: EventSet) -> tuple[np.ndarray, np.ndarray, int]:
    variables = sorted(S1.variables | S2.variables)
    return S1.indicator(variables), S2.indicator(variables), len(variables)


def symmetric_difference_measure(S1: EventSet, S2: EventSet) -> Dyadic:
    """``P(S1 xor S2)`` by enumerating every atom over the variables either set mentions."""
    a, b, n = _joint(S1, S2)
    return Dyadic(int(np.count_nonzero(a ^ b)), n)


def intersection_measure(S1: EventSet, S2: EventSet) -> Dyadic:
    a, b, n = _joint(S1, S2)
    return Dyadic(int(np.count_nonzero(a & b)), n)


def is_subset(S1: EventSet, S2: EventSet) -> bool:
    a, b, _ = _joint(S1, S2)
    return not np.any(a & ~b)


def l1_embedding_distance(k: int, x: VertexCode, y: VertexCode) -> Dyadic:
    """``2**k * P(S(x) xor S(y))`` by atom enumeration."""
    return symmetric_difference_measure(build_S(k, x), build_S(k, y)).scale_pow2(k)


def _delta(x: VertexCode, y: VertexCode, k: int) -> Dyadic:
    if x == y:
        return ZERO
    r, s = x.r, y.r
    if x.is_terminal or y.is_terminal:
        return abs(r - s)
    if x.first != y.first:
        # events built on disjoint variable sets are independent
        return r + s - 2 * r * s
    if (r - HALF) * (s - HALF) <= 0:
        return abs(r - s)
    # both sit under eps_{j} = -1 (upper half) or eps_{j} = +1 (lower half)
    which = "down" if r < HALF else "up"
    j = x.first
    return _delta(isometry_apply(which, x, k, j), isometry_apply(which, y, k, j), k - 1).half()


def l1_closed_form(k: int, x: VertexCode, y: VertexCode) -> Dyadic:
    """Same value as :func:`l1_embedding_distance` without enumerating atoms."""
    return _delta(x, y, k).scale_pow2(k)


def l1_distance_matrix(g: BundleGraph, method: str = "closed") -> np.ndarray:
    """Object matrix of exact embedded distances ``2**k * P(S(x) xor S(y))``."""
    if g.codes is None:
        raise ValueError("the L1 embedding needs a coded diamond")
    k = g.depth
    if method == "closed":
        fn = lambda a, b: l1_closed_form(k, a, b)  # noqa: E731
    elif method == "atoms":
        events = {c: build_S(k, c) for c in g.codes}
        fn = lambda a, b: symmetric_difference_measure(events[a], events[b]).scale_pow2(k)  # noqa: E731
    else:
        raise ValueError(f"unknown method {method!r}")
    out = np.full((g.n, g.n), ZERO, dtype=object)
    codes = g.codes
    for i in range(g.n):
        for j in range(i + 1, g.n):
            out[i, j] = out[j, i] = fn(codes[i], codes[j])
    return out
