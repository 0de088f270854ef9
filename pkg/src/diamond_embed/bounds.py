"""Lower-bound side: approximate barycenters, level extraction and the growth recursion.

Membership predicates work on exact rationals.  Floats passed in are
converted with :class:`fractions.Fraction`, which is exact, so every answer
is decided without rounding; fractional exponents ``p`` use a float screen
backed by a 60-digit re-evaluation near the boundary.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import mpmath
import numpy as np

from .distortion import DistortionReport, Norm, SparseVector, evaluate
from .graphs import BundleGraph, BundleSpec, build_coded, build_recursive
from .metric import bfs_all_pairs

__all__ = [
    "ModulusSpec",
    "LowerBoundCurve",
    "Lemma51Result",
    "Restriction",
    "bar_membership",
    "mid_membership",
    "check_lemma51",
    "compute_rho",
    "self_improve_restrict",
    "lower_bound_curve",
    "grid_curve",
]

Vec = Union[SparseVector, Sequence]


# ---------------------------------------------------------------------------
# exact norm comparisons
# ---------------------------------------------------------------------------

def _as_fracs(v: Vec, keys: Sequence) -> list[Fraction]:
    if isinstance(v, SparseVector):
        return [Fraction(v[k]) for k in keys]
    return [Fraction(x) for x in v]


def _integerise(vecs: list[list[Fraction]]) -> list[list[int]]:
    den = 1
    for v in vecs:
        for x in v:
            den = math.lcm(den, x.denominator)
    return [[int(x * den) for x in v] for v in vecs]


def _leq(v: Sequence[int], w: Sequence[int], c: Fraction, nm: Norm) -> bool:
    """Decide ``||v|| <= c ||w||`` for integer vectors."""
    if nm.kind == "sup":
        lhs = max((abs(x) for x in v), default=0)
        rhs = max((abs(x) for x in w), default=0)
        return lhs * c.denominator <= c.numerator * rhs
    p = nm.p
    if p.denominator == 1:
        pi = int(p)
        lhs = sum(abs(x) ** pi for x in v)
        rhs = sum(abs(x) ** pi for x in w)
        return lhs * c.denominator**pi <= c.numerator**pi * rhs
    pf = float(p)
    lhs_f = math.fsum(abs(x) ** pf for x in v)
    rhs_f = float(c) ** pf * math.fsum(abs(x) ** pf for x in w)
    scale = max(lhs_f, rhs_f, 1e-300)
    if abs(lhs_f - rhs_f) > 1e-9 * scale:
        return lhs_f <= rhs_f
    with mpmath.workdps(60):
        mp = mpmath.mpf(p.numerator) / p.denominator
        lhs = mpmath.fsum(mpmath.mpf(abs(x)) ** mp for x in v)
        rhs = (mpmath.mpf(c.numerator) / c.denominator) ** mp * mpmath.fsum(mpmath.mpf(abs(x)) ** mp for x in w)
        return lhs <= rhs


def _prepare(x: Vec, y: Vec, z: Vec):
    keys: list = []
    if any(isinstance(v, SparseVector) for v in (x, y, z)):
        seen = set()
        for v in (x, y, z):
            for k in (v if isinstance(v, SparseVector) else range(len(v))):
                if k not in seen:
                    seen.add(k)
                    keys.append(k)
        vecs = [_as_fracs(v, keys) if isinstance(v, SparseVector) else
                [Fraction(v[k]) if isinstance(k, int) and k < len(v) else Fraction(0) for k in keys]
                for v in (x, y, z)]
    else:
        vecs = [_as_fracs(v, ()) for v in (x, y, z)]
        if len({len(v) for v in vecs}) != 1:
            raise ValueError("vectors must have equal length")
    return _integerise(vecs)


def _diff(a: Sequence[int], b: Sequence[int]) -> list[int]:
    return [p - q for p, q in zip(a, b)]


def bar_membership(x: Vec, y: Vec, z: Vec, lam, delta, norm="p:2") -> bool:
    """``max{||x-z||/lam, ||z-y||/(1-lam)} <= (1+delta) ||x-y||``, decided exactly."""
    lam, delta = Fraction(lam), Fraction(delta)
    if not 0 < lam < 1:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    if delta <= 0:
        raise ValueError("delta must be positive")
    nm = Norm.parse(norm)
    X, Y, Z = _prepare(x, y, z)
    xy = _diff(X, Y)
    return _leq(_diff(X, Z), xy, (1 + delta) * lam, nm) and _leq(_diff(Z, Y), xy, (1 + delta) * (1 - lam), nm)


def mid_membership(x: Vec, y: Vec, z: Vec, delta, norm="p:2") -> bool:
    """``2 max{||x-z||, ||z-y||} <= (1+delta) ||x-y||``."""
    delta = Fraction(delta)
    nm = Norm.parse(norm)
    X, Y, Z = _prepare(x, y, z)
    xy = _diff(X, Y)
    c = 1 + delta
    return _leq([2 * t for t in _diff(X, Z)], xy, c, nm) and _leq([2 * t for t in _diff(Z, Y)], xy, c, nm)


# ---------------------------------------------------------------------------
# randomized check of the barycenter/midpoint inclusion
# ---------------------------------------------------------------------------

@dataclass
class Lemma51Result:
    dim: int
    p: str
    samples: int
    seed: int
    violations: int
    bar_hits: int
    examples: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "dim": self.dim, "p": self.p, "samples": self.samples, "seed": self.seed,
            "violations": self.violations, "bar_hits": self.bar_hits,
            "examples": self.examples,
        }


_SHARD = 1000
_SCALE = 1 << 16
_RES = 10


def _shard(args) -> tuple[int, int, list]:
    dim, p_text, count, seed_seq = args
    nm = Norm.parse(p_text)
    rng = np.random.default_rng(seed_seq)
    violations = hits = 0
    examples = []
    unit = 1 << _RES
    pf = 2.0 if nm.kind == "sup" else float(nm.p)
    for _ in range(count):
        x = rng.integers(-_SCALE, _SCALE + 1, size=dim)
        if not x.any():
            x[0] = 1
        u = rng.integers(-_SCALE, _SCALE + 1, size=dim)
        a = int(rng.integers(1, unit))
        b = int(rng.integers(1, unit))
        m = max(a, unit - a)
        # aim z at the barycenter 0 of -lam x and (1-lam) x, with a spread
        # comparable to the slack delta * min(lam, 1-lam) * ||x||
        nx = float(np.sum(np.abs(x).astype(float) ** pf) ** (1 / pf))
        nu = float(np.sum(np.abs(u).astype(float) ** pf) ** (1 / pf)) or 1.0
        spread = b * min(a, unit - a) / unit**2
        theta = round(rng.uniform(-1.5, 1.5) * spread * unit**2)
        s = round(rng.uniform(0, 1.5) * spread * nx / nu * unit**2)
        xs, us = [int(t) for t in x], [int(t) for t in u]
        # everything scaled by unit**3: lam = a/unit, delta = b/unit, theta and s over unit**2
        z = [theta * unit * p + s * unit * q for p, q in zip(xs, us)]
        left = [-a * unit * unit * p for p in xs]
        right = [(unit - a) * unit * unit * p for p in xs]
        span = [-unit**3 * p for p in xs]
        c = Fraction(unit + b, unit)
        in_bar = _leq(_diff(left, z), span, c * Fraction(a, unit), nm) and \
            _leq(_diff(z, right), span, c * Fraction(unit - a, unit), nm)
        if not in_bar:
            continue
        hits += 1
        lo = [-m * unit * unit * p for p in xs]
        hi = [m * unit * unit * p for p in xs]
        wide = _diff(lo, hi)
        in_mid = _leq([2 * t for t in _diff(lo, z)], wide, c, nm) and _leq([2 * t for t in _diff(z, hi)], wide, c, nm)
        if not in_mid:
            violations += 1
            if len(examples) < 5:
                examples.append({
                    "x": xs, "z": [f"{t}/{unit**3}" for t in z],
                    "lambda": f"{a}/{unit}", "delta": f"{b}/{unit}",
                })
    return violations, hits, examples


def check_lemma51(dim: int, p, samples: int, seed: int = 0, threads: int = 1) -> Lemma51Result:
    """Count sampled ``z`` in ``Bar_lam(-lam x, (1-lam) x, delta)`` but outside ``Mid(-mu x, mu x, delta)``.

    ``mu = max(lam, 1-lam)``.  Samples come in shards of fixed size whose
    seeds are spawned from ``seed``, so the outcome does not depend on
    ``threads``.
    """
    if dim < 2:
        raise ValueError("dim must be at least 2")
    if samples < 1:
        raise ValueError("samples must be positive")
    nm = Norm.parse(p if isinstance(p, (str, Norm)) else f"p:{p}")
    p_text = str(nm)
    children = np.random.SeedSequence(seed).spawn((samples + _SHARD - 1) // _SHARD)
    jobs = []
    left = samples
    for child in children:
        n = min(_SHARD, left)
        left -= n
        jobs.append((dim, p_text, n, child))
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(_shard, jobs))
    else:
        parts = [_shard(j) for j in jobs]
    ex_all: list = []
    for _, _, e in parts:
        ex_all.extend(e)
    return Lemma51Result(
        dim=dim, p=p_text, samples=samples, seed=seed,
        violations=sum(v for v, _, _ in parts),
        bar_hits=sum(h for _, h, _ in parts),
        examples=ex_all[:5],
    )


# ---------------------------------------------------------------------------
# rho, restriction
# ---------------------------------------------------------------------------

def compute_rho(base: BundleGraph, min_multiplicity: int = 3) -> tuple[int, int]:
    """Level ``l`` with the most vertices (at least ``min_multiplicity``) and ``rho = max(l, h - l)``.

    Ties go to the smallest level.
    """
    levels = base.levels
    h = levels[base.top]
    counts: dict[int, int] = {}
    for lv in levels:
        counts[lv] = counts.get(lv, 0) + 1
    best = max(counts.items(), key=lambda kv: (kv[1], -kv[0]))
    if best[1] < min_multiplicity:
        raise ValueError(
            f"no level holds {min_multiplicity} or more vertices (largest has {best[1]}); widen the base"
        )
    ell = best[0]
    return ell, max(ell, h - ell)


@dataclass
class Restriction:
    graph: BundleGraph
    indices: list[int]
    scale: int
    dm: np.ndarray

    def images(self, full: Sequence) -> list:
        return [full[i] for i in self.indices]

    def submatrix(self, M: np.ndarray) -> np.ndarray:
        idx = np.asarray(self.indices)
        return M[np.ix_(idx, idx)]


def self_improve_restrict(g: BundleGraph) -> Restriction:
    """Locate the depth ``k-1`` graph inside the depth ``k`` one.

    Coded diamonds keep the codes with ``|A| <= k-1``; recursively built
    graphs keep their first ``|V(G_{k-1})|`` vertices.  Distances in the
    bigger graph are ``scale = h(G_1)`` times those of the smaller one.
    """
    if g.depth < 1:
        raise ValueError("nothing to restrict at depth 0")
    if g.codes is not None:
        small = build_coded(BundleSpec("diamond", g.depth - 1, g.branching))
        index = g.code_index
        try:
            indices = [index[c] for c in small.codes]
        except KeyError as exc:
            raise ValueError(f"code {exc} missing from the larger graph") from None
        scale = 2
    elif g.origins is not None and g.family in ("diamond", "laakso", "parasol"):
        spec = BundleSpec(g.family, g.depth - 1, g.branching)
        small = build_recursive(spec)
        indices = list(range(small.n))
        scale = spec.base_graph().height
    else:
        raise ValueError("cannot identify the smaller graph inside this one")
    dm_big = bfs_all_pairs(g)
    dm_small = bfs_all_pairs(small)
    idx = np.asarray(indices)
    if not np.array_equal(dm_big[np.ix_(idx, idx)], scale * dm_small):
        raise ValueError("the identified subset is not a scaled copy of the smaller graph")
    return Restriction(small, indices, scale, dm_small)


def restricted_report(g: BundleGraph, images: Sequence[SparseVector], norm) -> tuple[DistortionReport, DistortionReport]:
    """Reports for a map on ``g`` and for its restriction to the smaller graph."""
    res = self_improve_restrict(g)
    full = evaluate(images, bfs_all_pairs(g), norm)
    part = evaluate(res.images(images), res.dm * res.scale, norm)
    return full, part


# ---------------------------------------------------------------------------
# growth curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModulusSpec:
    """A lower modulus ``t -> delta(t)`` on ``(0, 1)``.

    ``power``: ``gamma * t**p``.  ``lp``: ``(1 + t**p)**(1/p) - 1``.
    ``table``: piecewise linear through ``points`` (sorted ``(t, value)``),
    constant beyond the last point.
    """

    kind: str
    p: float = 2.0
    gamma: float = 1.0
    points: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in ("power", "lp", "table"):
            raise ValueError(f"unknown modulus kind {self.kind!r}")
        if self.kind == "table":
            ts = [t for t, _ in self.points]
            vs = [v for _, v in self.points]
            if len(ts) < 2 or any(b <= a for a, b in zip(ts, ts[1:])):
                raise ValueError("table needs at least two points with increasing t")
            if any(b < a for a, b in zip(vs, vs[1:])) or vs[0] < 0:
                raise ValueError("modulus table must be non-negative and nondecreasing")
        elif self.p <= 1 and self.kind == "power":
            raise ValueError("power type needs p > 1")

    def __call__(self, t):
        if self.kind == "power":
            return self.gamma * np.power(t, self.p)
        if self.kind == "lp":
            return np.power(1 + np.power(t, self.p), 1 / self.p) - 1
        ts = np.array([a for a, _ in self.points])
        vs = np.array([b for _, b in self.points])
        return np.interp(t, ts, vs)


@dataclass
class LowerBoundCurve:
    p: float
    gamma: float
    rho: float
    K: float
    values: list[float]
    floors: list[float]

    @property
    def ks(self) -> list[int]:
        return list(range(1, len(self.values) + 1))

    def rows(self) -> list[tuple[int, float, float]]:
        return list(zip(self.ks, self.values, self.floors))


def _step(prev: float, F: Callable[[float], float], hi: float, rtol: float) -> float:
    lo = prev
    while F(hi) < prev:
        hi = prev + 2 * (hi - prev)
        if hi > 1e300:
            raise ArithmeticError("bracket expansion diverged")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if F(mid) >= prev:
            hi = mid
        else:
            lo = mid
    return hi


def lower_bound_curve(p: float, gamma: float, rho: float, k_max: int, c1: float = 1.0,
                      modulus: Optional[ModulusSpec] = None, rtol: float = 1e-12) -> LowerBoundCurve:
    """``C_k`` = least ``C >= C_{k-1}`` with ``C (1 - delta(1/(9 rho C))/5) >= C_{k-1}``.

    With the power modulus the answer lies in ``[C_{k-1}, C_{k-1} + K C_{k-1}^{1-p}]``,
    ``K = gamma / (5 (9 rho)^p)``; other moduli widen the bracket by doubling.
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    if gamma <= 0 or rho < 1 or c1 < 1 or k_max < 1:
        raise ValueError("need gamma > 0, rho >= 1, c1 >= 1, k_max >= 1")
    mod = modulus or ModulusSpec("power", p=p, gamma=gamma)
    K = gamma / (5 * (9 * rho) ** p)

    def F(C: float) -> float:
        return C * (1 - float(mod(1 / (9 * rho * C))) / 5)

    values = [float(c1)]
    for _ in range(2, k_max + 1):
        prev = values[-1]
        values.append(_step(prev, F, prev + K * prev ** (1 - p), rtol))
    floors = [(K * (k - 1)) ** (1 / p) for k in range(1, k_max + 1)]
    return LowerBoundCurve(p, gamma, rho, K, values, floors)


def grid_curve(p: float, gamma: float, rho: float, k_max: int, c1: float = 1.0,
               points: int = 10_001) -> list[float]:
    """Same recursion solved by two nested grid scans instead of bisection."""
    K = gamma / (5 * (9 * rho) ** p)

    def F(C):
        return C * (1 - gamma * (1 / (9 * rho * C)) ** p / 5)

    out = [float(c1)]
    for _ in range(2, k_max + 1):
        prev = out[-1]
        lo, hi = prev, prev + K * prev ** (1 - p)
        for _stage in range(3):
            grid = np.linspace(lo, hi, points)
            ok = np.nonzero(F(grid) >= prev)[0]
            first = int(ok[0])
            lo, hi = grid[max(first - 1, 0)], grid[first]
        out.append(float(hi))
    return out
