"""Exact dyadic rationals ``num / 2**exp``.

Every vertex label, probability and measure handled by the package is of this
form, so a dedicated type avoids the gcd work that :class:`fractions.Fraction`
does on every operation.
"""
from __future__ import annotations

import numbers
from fractions import Fraction
from typing import Union

__all__ = ["Dyadic", "to_dyadic", "dyadic_level"]

_Number = Union[int, "Dyadic"]


def _canonical(num: int, exp: int) -> tuple[int, int]:
    if num == 0:
        return 0, 0
    if exp < 0:
        return num << -exp, 0
    if exp:
        # strip common powers of two
        tz = (num & -num).bit_length() - 1
        shift = min(tz, exp)
        num >>= shift
        exp -= shift
    return num, exp


class Dyadic:
    """Value ``num / 2**exp`` kept in canonical form.

    Canonical means ``exp >= 0`` and ``num`` odd whenever ``exp > 0``; zero is
    ``(0, 0)``.  Equality is value equality, also against ints and Fractions.
    """

    __slots__ = ("num", "exp")

    def __init__(self, num: int = 0, exp: int = 0):
        n, e = _canonical(int(num), int(exp))
        object.__setattr__(self, "num", n)
        object.__setattr__(self, "exp", e)

    def __setattr__(self, name, value):
        raise AttributeError("Dyadic is immutable")

    @classmethod
    def _raw(cls, num: int, exp: int) -> "Dyadic":
        self = object.__new__(cls)
        n, e = _canonical(num, exp)
        object.__setattr__(self, "num", n)
        object.__setattr__(self, "exp", e)
        return self

    # -- conversions -------------------------------------------------------
    @property
    def numerator(self) -> int:
        return self.num

    @property
    def denominator(self) -> int:
        return 1 << self.exp

    def to_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.exp)

    def __float__(self) -> float:
        return self.num / (1 << self.exp)

    def __int__(self) -> int:
        if self.exp:
            raise ValueError(f"{self} is not an integer")
        return self.num

    def __repr__(self) -> str:
        return f"Dyadic({self.num}, {self.exp})"

    def __str__(self) -> str:
        return str(self.num) if self.exp == 0 else f"{self.num}/2^{self.exp}"

    def __reduce__(self):
        return (Dyadic, (self.num, self.exp))

    # -- binary expansion ---------------------------------------------------
    def bits(self, length: int | None = None) -> tuple[int, ...]:
        """Binary digits ``sigma_1..sigma_length`` of a value in ``[0, 1)``."""
        if not 0 <= self < 1:
            raise ValueError(f"binary digits need a value in [0, 1), got {self}")
        n = self.exp if length is None else length
        if self.exp > n:
            raise ValueError(f"{self} needs {self.exp} binary digits, only {n} allowed")
        scaled = self.num << (n - self.exp)
        return tuple((scaled >> (n - i)) & 1 for i in range(1, n + 1))

    def in_level(self, k: int) -> bool:
        """Membership in ``{1/2^k, 3/2^k, ..., (2^k-1)/2^k}``; level 0 is ``{0, 1}``."""
        if k == 0:
            return self.exp == 0 and self.num in (0, 1)
        return self.exp == k and 0 < self.num < (1 << k)

    # -- arithmetic ---------------------------------------------------------
    @staticmethod
    def _coerce(other):
        if isinstance(other, Dyadic):
            return other
        if isinstance(other, numbers.Integral):
            # covers numpy integers as well
            return Dyadic._raw(int(other), 0)
        if isinstance(other, Fraction):
            d = other.denominator
            if d & (d - 1) == 0:
                return Dyadic._raw(other.numerator, d.bit_length() - 1)
        return None

    def _align(self, other: "Dyadic") -> tuple[int, int, int]:
        e = max(self.exp, other.exp)
        return self.num << (e - self.exp), other.num << (e - other.exp), e

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, numbers.Rational):
                return self.to_fraction() + other
            return NotImplemented if not isinstance(other, float) else float(self) + other
        a, b, e = self._align(o)
        return Dyadic._raw(a + b, e)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, numbers.Rational):
                return self.to_fraction() - other
            return NotImplemented if not isinstance(other, float) else float(self) - other
        a, b, e = self._align(o)
        return Dyadic._raw(a - b, e)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, numbers.Rational):
                return other - self.to_fraction()
            return NotImplemented if not isinstance(other, float) else other - float(self)
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, numbers.Rational):
                return self.to_fraction() * other
            return NotImplemented if not isinstance(other, float) else float(self) * other
        return Dyadic._raw(self.num * o.num, self.exp + o.exp)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is not None and o.num != 0 and o.num & (o.num - 1) == 0 and o.num > 0:
            # division by a power of two stays dyadic
            shift = o.num.bit_length() - 1
            return Dyadic._raw(self.num << o.exp, self.exp + shift)
        if isinstance(other, numbers.Rational):
            return self.to_fraction() / Fraction(other)
        if isinstance(other, float):
            return float(self) / other
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, numbers.Rational):
            return Fraction(other) / self.to_fraction()
        if isinstance(other, float):
            return other / float(self)
        return NotImplemented

    def __neg__(self) -> "Dyadic":
        return Dyadic._raw(-self.num, self.exp)

    def __pos__(self) -> "Dyadic":
        return self

    def __abs__(self) -> "Dyadic":
        return self if self.num >= 0 else -self

    def __pow__(self, n: int) -> "Dyadic":
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        return Dyadic._raw(self.num**n, self.exp * n)

    def half(self) -> "Dyadic":
        return Dyadic._raw(self.num, self.exp + 1)

    def double(self) -> "Dyadic":
        return Dyadic._raw(self.num, self.exp - 1)

    def scale_pow2(self, k: int) -> "Dyadic":
        """Multiply by ``2**k`` (``k`` may be negative)."""
        return Dyadic._raw(self.num, self.exp - k)

    # -- comparisons ----------------------------------------------------------
    def _cmp(self, other) -> int | None:
        o = self._coerce(other)
        if o is None:
            if isinstance(other, numbers.Rational):
                f, g = self.to_fraction(), Fraction(other)
            elif isinstance(other, float):
                f, g = float(self), other
            else:
                return None
            return (f > g) - (f < g)
        a, b, _ = self._align(o)
        return (a > b) - (a < b)

    def __eq__(self, other):
        if isinstance(other, Dyadic):
            return self.num == other.num and self.exp == other.exp
        c = self._cmp(other)
        return NotImplemented if c is None else c == 0

    def __lt__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c < 0

    def __le__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c <= 0

    def __gt__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c > 0

    def __ge__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c >= 0

    def __hash__(self) -> int:
        if self.exp == 0:
            return hash(self.num)
        return hash(Fraction(self.num, 1 << self.exp))

    def __bool__(self) -> bool:
        return self.num != 0


numbers.Rational.register(Dyadic)


def to_dyadic(value) -> Dyadic:
    """Convert an int, Fraction, Dyadic or ``{"num", "exp"}`` mapping."""
    if isinstance(value, Dyadic):
        return value
    if isinstance(value, dict):
        return Dyadic(value["num"], value["exp"])
    d = Dyadic._coerce(value)
    if d is None:
        raise ValueError(f"{value!r} is not a dyadic rational")
    return d


def dyadic_level(r: Dyadic) -> int:
    """The ``m`` with ``r`` in level ``m`` (0 for the endpoints 0 and 1)."""
    if r.exp == 0:
        if r.num not in (0, 1):
            raise ValueError(f"{r} is outside [0, 1]")
        return 0
    if not 0 < r < 1:
        raise ValueError(f"{r} is outside [0, 1]")
    return r.exp
