"""Lipschitz and co-Lipschitz constants of vertex maps, computed exactly.

Norm comparisons are done on ``q``-th powers, where ``q = 1`` for the sup
norm and ``q = p`` for ``p``-norms, so for integer ``p`` every inequality
is decided on integers.  Roots only appear as floats in the report.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Any, Hashable, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .dyadic import Dyadic, to_dyadic

__all__ = [
    "SparseVector",
    "Norm",
    "DistortionReport",
    "MissingImageError",
    "norm",
    "norm_powered",
    "evaluate",
    "evaluate_powered",
    "as_rational",
]

Scalar = Union[int, Dyadic, Fraction]


def as_rational(x) -> Scalar:
    """Normalise an exact number: ints stay ints, dyadic fractions become :class:`Dyadic`."""
    if isinstance(x, bool):
        return int(x)
    if isinstance(x, (int, Dyadic)):
        return x
    if isinstance(x, Fraction):
        d = Dyadic._coerce(x)
        return d if d is not None else x
    if isinstance(x, Rational):
        return as_rational(Fraction(x.numerator, x.denominator))
    if isinstance(x, Mapping):
        if "exp" in x:
            return to_dyadic(x)
        return as_rational(Fraction(x["num"], x["den"]))
    raise TypeError(f"{x!r} is not an exact rational")


class SparseVector(Mapping):
    """Finitely supported vector with exact rational entries; zeros are dropped."""

    __slots__ = ("_d", "_hash")

    def __init__(self, entries: Mapping[Hashable, Any] | Iterable[tuple[Hashable, Any]] = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        d = {}
        for key, val in items:
            v = as_rational(val)
            if v != 0:
                d[key] = v
        self._d = d
        self._hash = None

    def __getitem__(self, key):
        return self._d.get(key, 0)

    def __contains__(self, key) -> bool:
        return key in self._d

    def __iter__(self):
        return iter(self._d)

    def __len__(self) -> int:
        return len(self._d)

    def support(self) -> frozenset:
        return frozenset(self._d)

    def __eq__(self, other) -> bool:
        if isinstance(other, SparseVector):
            return self._d == other._d
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._d.items()))
        return self._hash

    def __add__(self, other: "SparseVector") -> "SparseVector":
        out = dict(self._d)
        for k, v in other._d.items():
            out[k] = out.get(k, 0) + v
        return SparseVector(out)

    def __sub__(self, other: "SparseVector") -> "SparseVector":
        out = dict(self._d)
        for k, v in other._d.items():
            out[k] = out.get(k, 0) - v
        return SparseVector(out)

    def __neg__(self) -> "SparseVector":
        return SparseVector({k: -v for k, v in self._d.items()})

    def scale(self, c) -> "SparseVector":
        c = as_rational(c)
        return SparseVector({k: c * v for k, v in self._d.items()})

    def __repr__(self) -> str:
        inner = ", ".join(f"{k!r}: {v}" for k, v in self._d.items())
        return f"SparseVector({{{inner}}})"

    def to_json(self) -> dict:
        out = {}
        for k, v in sorted(self._d.items(), key=lambda kv: str(kv[0])):
            if isinstance(v, Fraction):
                out[str(k)] = {"num": v.numerator, "den": v.denominator}
            else:
                d = to_dyadic(v)
                out[str(k)] = {"num": d.num, "exp": d.exp}
        return out

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "SparseVector":
        return cls({k: as_rational(v) for k, v in data.items()})


@dataclass(frozen=True)
class Norm:
    """``sup`` or a ``p``-norm; ``p`` is kept as a Fraction so that ``p:1.5`` is exact."""

    kind: str
    p: Optional[Fraction] = None

    def __post_init__(self):
        if self.kind == "sup":
            return
        if self.kind != "p" or self.p is None:
            raise ValueError(f"bad norm {self.kind!r}")
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")

    @classmethod
    def parse(cls, text: Union[str, "Norm"]) -> "Norm":
        if isinstance(text, Norm):
            return text
        t = text.strip().lower()
        if t in ("sup", "linf", "inf", "c0"):
            return cls("sup")
        if t in ("l1", "one"):
            return cls("p", Fraction(1))
        if t.startswith("p:"):
            return cls.lp(t[2:])
        raise ValueError(f"unknown norm {text!r}; use sup, l1 or p:P")

    @classmethod
    def lp(cls, p) -> "Norm":
        try:
            fp = Fraction(str(p)) if not isinstance(p, (int, Fraction)) else Fraction(p)
        except ValueError:
            raise ValueError(f"bad exponent {p!r}") from None
        return cls("p", fp)

    @property
    def q(self) -> Fraction:
        """Exponent under which comparisons are carried out."""
        return Fraction(1) if self.kind == "sup" else self.p

    @property
    def exact(self) -> bool:
        return self.kind == "sup" or self.p.denominator == 1

    def __str__(self) -> str:
        if self.kind == "sup":
            return "sup"
        if self.p == 1:
            return "l1"
        return f"p:{self.p}" if self.p.denominator == 1 else f"p:{float(self.p)}"


def norm_powered(v: SparseVector, which) -> Scalar | float:
    """``||v||**q`` with ``q`` as in :attr:`Norm.q`, exact whenever ``q`` is an integer."""
    nm = Norm.parse(which)
    vals = [abs(x) for x in v.values()]
    if nm.kind == "sup":
        return max(vals, default=0)
    if nm.exact:
        p = int(nm.p)
        return sum((x**p for x in vals), 0)
    pf = float(nm.p)
    return math.fsum(float(x) ** pf for x in vals)


def norm(v: SparseVector, which) -> Scalar | float:
    """The norm itself: exact for sup and l1, a float root otherwise."""
    nm = Norm.parse(which)
    pw = norm_powered(v, nm)
    if nm.q == 1:
        return pw
    return float(pw) ** (1.0 / float(nm.q))


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

class MissingImageError(KeyError):
    pass


@dataclass
class DistortionReport:
    """Extremes of ``||f(x) - f(y)|| / d(x, y)`` over all pairs of distinct vertices.

    ``*_powered`` fields hold exact ``q``-th powers of the ratios when the
    norm allows it; floats are their ``q``-th roots.
    """

    norm: str
    q: Fraction
    lipschitz: float
    colipschitz: float
    distortion: float
    lipschitz_powered: Optional[Fraction]
    colipschitz_powered: Optional[Fraction]
    lipschitz_pair: tuple[int, int]
    colipschitz_pair: tuple[int, int]
    pairs: int
    max_support: Optional[int] = None
    classes: dict[str, dict[str, Any]] = field(default_factory=dict)
    labels: Optional[Sequence[str]] = field(default=None, repr=False)

    @property
    def exact(self) -> bool:
        return self.lipschitz_powered is not None

    @property
    def distortion_powered(self) -> Optional[Fraction]:
        if not self.exact:
            return None
        if self.colipschitz_powered == 0:
            return None
        return self.lipschitz_powered / self.colipschitz_powered

    def _bound_q(self, bound) -> Fraction:
        b = Fraction(str(bound)) if isinstance(bound, float) else Fraction(bound)
        q = self.q
        if q.denominator != 1:
            raise ValueError("exact comparison needs an integer exponent")
        return b ** int(q)

    def distortion_at_most(self, bound) -> bool:
        """Decide ``distortion <= bound`` exactly when possible."""
        if not self.exact:
            return self.distortion <= float(bound)
        if self.colipschitz_powered == 0:
            return False
        return self.lipschitz_powered <= self._bound_q(bound) * self.colipschitz_powered

    def lipschitz_at_most(self, bound) -> bool:
        if not self.exact:
            return self.lipschitz <= float(bound)
        return self.lipschitz_powered <= self._bound_q(bound)

    def colipschitz_at_least(self, bound) -> bool:
        if not self.exact:
            return self.colipschitz >= float(bound)
        return self.colipschitz_powered >= self._bound_q(bound)

    def to_json(self) -> dict:
        def frac(x):
            return None if x is None else {"num": x.numerator, "den": x.denominator}

        def pair(p):
            i, j = p
            out = {"i": int(i), "j": int(j)}
            if self.labels is not None:
                out["i_label"], out["j_label"] = self.labels[i], self.labels[j]
            return out

        classes = {}
        for name, c in sorted(self.classes.items()):
            classes[name] = {
                "pairs": c["pairs"],
                "max": c["max"],
                "min": c["min"],
                "max_powered": frac(c.get("max_powered")),
                "min_powered": frac(c.get("min_powered")),
                "max_pair": pair(c["max_pair"]) if c["pairs"] else None,
                "min_pair": pair(c["min_pair"]) if c["pairs"] else None,
            }
        return {
            "norm": self.norm,
            "q": str(self.q),
            "pairs": self.pairs,
            "lipschitz": self.lipschitz,
            "colipschitz": self.colipschitz,
            "distortion": self.distortion,
            "lipschitz_powered": frac(self.lipschitz_powered),
            "colipschitz_powered": frac(self.colipschitz_powered),
            "distortion_powered": frac(self.distortion_powered),
            "lipschitz_pair": pair(self.lipschitz_pair),
            "colipschitz_pair": pair(self.colipschitz_pair),
            "max_support": self.max_support,
            "classes": classes,
        }


def _dense(images: Sequence[SparseVector]) -> tuple[np.ndarray, int]:
    """Integer matrix ``M`` and denominator ``den`` with ``images[i] == M[i] / den``."""
    keys: dict = {}
    den = 1
    for v in images:
        for k, x in v.items():
            keys.setdefault(k, len(keys))
            if not isinstance(x, int):
                den = math.lcm(den, x.denominator)
    n, dim = len(images), max(len(keys), 1)
    big = False
    rows = []
    for v in images:
        row = [0] * dim
        for k, x in v.items():
            val = x * den
            row[keys[k]] = int(val)
        rows.append(row)
    top = max((abs(x) for row in rows for x in row), default=0)
    if top >= 1 << 62:
        big = True
    M = np.array(rows, dtype=object if big else np.int64).reshape(n, dim)
    return M, den


def _powered_rows(M: np.ndarray, nm: Norm) -> Iterable[tuple[int, np.ndarray]]:
    """Yield ``(i, ||M[i] - M[j]||**q for j > i)`` as int or float arrays."""
    n, dim = M.shape
    exact = nm.exact
    p = int(nm.p) if nm.kind == "p" and exact else None
    if M.dtype != object and len(M):
        spread = int(M.max()) - int(M.min())
        if p is not None and p > 1 and spread and (spread ** p) * dim >= 1 << 62:
            M = M.astype(object)
    for i in range(n - 1):
        diff = np.abs(M[i + 1:] - M[i])
        if nm.kind == "sup":
            out = diff.max(axis=1)
        elif exact:
            out = (diff ** p).sum(axis=1) if p > 1 else diff.sum(axis=1)
        else:
            out = (diff.astype(float) ** float(nm.p)).sum(axis=1)
        yield i, out


def evaluate(
    images: Union[Sequence[SparseVector], Mapping[int, SparseVector]],
    dm: np.ndarray,
    which="sup",
    *,
    vertical: Optional[np.ndarray] = None,
    labels: Optional[Sequence[str]] = None,
) -> DistortionReport:
    """Distortion of the map ``i -> images[i]`` against the distance matrix ``dm``."""
    n = dm.shape[0]
    if isinstance(images, Mapping):
        missing = [i for i in range(n) if i not in images]
        if missing:
            raise MissingImageError(f"vertex {missing[0]} has no image")
        images = [images[i] for i in range(n)]
    elif len(images) != n:
        raise MissingImageError(f"{n} vertices but {len(images)} images")
    nm = Norm.parse(which)
    M, den = _dense(list(images))
    rep = _reduce(_powered_rows(M, nm), dm, nm.q, Fraction(den) ** int(nm.q) if nm.exact else None, den,
                  exact=nm.exact, vertical=vertical, labels=labels, norm_name=str(nm))
    rep.max_support = max((len(v) for v in images), default=0)
    return rep


def evaluate_powered(
    powered: np.ndarray,
    dm: np.ndarray,
    q,
    *,
    den: int = 1,
    norm_name: str = "",
    vertical: Optional[np.ndarray] = None,
    labels: Optional[Sequence[str]] = None,
) -> DistortionReport:
    """Report from a matrix of embedded ``q``-th powers ``powered / den``.

    Used when embedded distances come from somewhere other than a vector
    difference, e.g. event measures or step-function norms.
    """
    qf = Fraction(q)
    exact = qf.denominator == 1 and powered.dtype.kind in "iuO"
    n = dm.shape[0]
    rows = ((i, powered[i, i + 1:]) for i in range(n - 1))
    return _reduce(rows, dm, qf, Fraction(den) if exact else None, den, exact=exact,
                   vertical=vertical, labels=labels, norm_name=norm_name or f"q={qf}")


def _reduce(rows, dm, q: Fraction, den_q, den, *, exact, vertical, labels, norm_name) -> DistortionReport:
    n = dm.shape[0]
    qi = int(q) if q.denominator == 1 else None
    qf = float(q)
    dm_q = dm.astype(float) ** qf
    # float screening, then exact confirmation among near-ties
    cand_hi: list[tuple[float, int, int]] = []
    cand_lo: list[tuple[float, int, int]] = []
    classes = {"vertical": _ClassAcc(), "nonvertical": _ClassAcc()} if vertical is not None else {}
    hi = -math.inf
    lo = math.inf
    pairs = 0
    row_cache: dict[int, np.ndarray] = {}
    for i, out in rows:
        if len(out) == 0:
            continue
        d = dm_q[i, i + 1:]
        if np.any(d == 0):
            raise ValueError(f"distinct vertices at distance 0 in row {i}")
        ratio = np.asarray(out, dtype=float) / d
        if den_q is None:
            ratio = ratio / (float(den) ** qf)
        pairs += len(ratio)
        rmax, rmin = ratio.max(), ratio.min()
        if rmax >= hi * (1 - 1e-9):
            hi = max(hi, rmax)
            for j in np.nonzero(ratio >= hi * (1 - 1e-9))[0]:
                cand_hi.append((ratio[j], i, i + 1 + j))
        if rmin <= lo * (1 + 1e-9):
            lo = min(lo, rmin)
            for j in np.nonzero(ratio <= lo * (1 + 1e-9))[0]:
                cand_lo.append((ratio[j], i, i + 1 + j))
        if classes:
            vm = vertical[i, i + 1:]
            for name, mask in (("vertical", vm), ("nonvertical", ~vm)):
                if mask.any():
                    classes[name].add(ratio, mask, i)
        if exact:
            row_cache[i] = out
    if pairs == 0:
        raise ValueError("need at least two vertices")

    cache: dict[tuple[int, int], Fraction] = {}

    def exact_ratio(i, j):
        key = (int(row_cache[i][j - i - 1]), int(dm[i, j]))
        val = cache.get(key)
        if val is None:
            val = cache[key] = Fraction(key[0]) / (den_q * key[1] ** qi)
        return val

    if exact:
        hi_pair = max(((i, j) for r, i, j in cand_hi if r >= hi * (1 - 1e-9)), key=lambda ij: exact_ratio(*ij))
        lo_pair = min(((i, j) for r, i, j in cand_lo if r <= lo * (1 + 1e-9)), key=lambda ij: exact_ratio(*ij))
        L_q, c_q = exact_ratio(*hi_pair), exact_ratio(*lo_pair)
        L, c = _root(L_q, qf), _root(c_q, qf)
    else:
        hi_pair = next((i, j) for r, i, j in cand_hi if r == hi)
        lo_pair = next((i, j) for r, i, j in cand_lo if r == lo)
        L_q = c_q = None
        L, c = hi ** (1 / qf), lo ** (1 / qf)
    cls_out = {}
    for name, acc in classes.items():
        info = acc.result(qf)
        if exact and acc.pairs:
            info["max_powered"] = exact_ratio(*acc.max_pair)
            info["min_powered"] = exact_ratio(*acc.min_pair)
            info["max"] = _root(info["max_powered"], qf)
            info["min"] = _root(info["min_powered"], qf)
        cls_out[name] = info
    return DistortionReport(
        norm=norm_name, q=q, lipschitz=L, colipschitz=c,
        distortion=(L / c) if c > 0 else math.inf,
        lipschitz_powered=L_q, colipschitz_powered=c_q,
        lipschitz_pair=(int(hi_pair[0]), int(hi_pair[1])),
        colipschitz_pair=(int(lo_pair[0]), int(lo_pair[1])),
        pairs=pairs, classes=cls_out, labels=labels,
    )


def _root(x: Fraction, q: float) -> float:
    return float(x) if q == 1 else float(x) ** (1.0 / q)


class _ClassAcc:
    __slots__ = ("pairs", "max", "min", "max_pair", "min_pair")

    def __init__(self):
        self.pairs = 0
        self.max = -math.inf
        self.min = math.inf
        self.max_pair = self.min_pair = None

    def add(self, ratio: np.ndarray, mask: np.ndarray, i: int):
        idx = np.nonzero(mask)[0]
        sub = ratio[idx]
        self.pairs += len(idx)
        a, b = int(sub.argmax()), int(sub.argmin())
        if sub[a] > self.max:
            self.max, self.max_pair = float(sub[a]), (i, i + 1 + int(idx[a]))
        if sub[b] < self.min:
            self.min, self.min_pair = float(sub[b]), (i, i + 1 + int(idx[b]))

    def result(self, q: float) -> dict:
        if not self.pairs:
            return {"pairs": 0, "max": None, "min": None, "max_pair": None, "min_pair": None}
        return {
            "pairs": self.pairs,
            "max": self.max ** (1 / q),
            "min": self.min ** (1 / q),
            "max_pair": self.max_pair,
            "min_pair": self.min_pair,
        }
